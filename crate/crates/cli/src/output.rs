//! CSV and manifest emission. Everything is written from one thread after all
//! points have finished.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use pom_qsd::{fit_esd_slope, CoeffState, SlopeFit};

use crate::config::{Output, RunConfig};
use crate::runner::{AuditReport, PointFailure, PointResult, RouteTaken};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("i/o error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv error at {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, OutputError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Csv {
    path: PathBuf,
    w: csv::Writer<fs::File>,
}

impl Csv {
    fn create(path: PathBuf, header: &[String]) -> Result<Self> {
        let w = csv::Writer::from_path(&path).map_err(|source| OutputError::Csv {
            path: path.clone(),
            source,
        })?;
        let mut c = Self { path, w };
        c.row(header)?;
        Ok(c)
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|source| OutputError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(io_err(&self.path))
    }
}

fn f(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

#[derive(Serialize)]
struct PointManifest<'a> {
    index: usize,
    directory: String,
    assignments: &'a [(String, f64)],
    status: &'a str,
    error: Option<String>,
    route: Option<RouteTaken>,
    singular_times: Vec<f64>,
    coeffs_valid_until: Option<f64>,
    n_aborted: Option<usize>,
    audit: Option<&'a AuditReport>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    workers: usize,
    wall_time_s: f64,
    config: &'a RunConfig,
    points: Vec<PointManifest<'a>>,
    esd_fit: Option<FitManifest>,
}

#[derive(Serialize)]
struct FitManifest {
    parameter: String,
    beta: Option<f64>,
    r_squared: Option<f64>,
    n_points: usize,
    note: Option<String>,
}

pub struct RunRecord<'a> {
    pub config: &'a RunConfig,
    pub results: &'a [std::result::Result<PointResult, PointFailure>],
    pub workers: usize,
    pub wall_time_s: f64,
}

fn point_dir(index: usize) -> String {
    format!("point_{index:03}")
}

pub fn write_all(dir: &Path, rec: &RunRecord) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cfg = rec.config;
    let mut points = Vec::new();
    for r in rec.results {
        match r {
            Ok(res) => {
                let sub = dir.join(point_dir(res.point.index));
                fs::create_dir_all(&sub).map_err(io_err(&sub))?;
                write_point(&sub, cfg, res)?;
                let tr = &res.coeffs;
                points.push(PointManifest {
                    index: res.point.index,
                    directory: point_dir(res.point.index),
                    assignments: &res.point.assignments,
                    status: if res.audit.as_ref().is_some_and(|a| a.failed) { "audit_failed" } else { "ok" },
                    error: None,
                    route: res.states.as_ref().map(|s| s.route),
                    singular_times: tr.singular_times(),
                    coeffs_valid_until: tr.first_unusable().map(|k| tr.time(k)),
                    n_aborted: res.states.as_ref().map(|s| s.n_aborted),
                    audit: res.audit.as_ref(),
                });
            }
            Err(e) => points.push(PointManifest {
                index: e.point.index,
                directory: point_dir(e.point.index),
                assignments: &e.point.assignments,
                status: "failed",
                error: Some(e.error.to_string()),
                route: None,
                singular_times: Vec::new(),
                coeffs_valid_until: None,
                n_aborted: None,
                audit: None,
            }),
        }
    }
    if !cfg.sweep.is_empty() {
        write_summary(&dir.join("summary.csv"), cfg, rec.results)?;
    }
    let esd_fit = esd_fit(cfg, rec.results);
    if let Some(FitManifest {
        beta: Some(beta),
        r_squared: Some(r2),
        n_points,
        parameter,
        ..
    }) = &esd_fit
    {
        let mut c = Csv::create(dir.join("esd_fit.csv"), &["parameter", "beta", "r_squared", "n_points"].map(String::from))?;
        c.row([parameter.clone(), f(*beta), f(*r2), n_points.to_string()])?;
        c.finish()?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        workers: rec.workers,
        wall_time_s: rec.wall_time_s,
        config: cfg,
        points,
        esd_fit,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&path))
}

fn write_point(dir: &Path, cfg: &RunConfig, res: &PointResult) -> Result<()> {
    if cfg.outputs.contains(&Output::Coeffs) {
        write_coeffs(&dir.join("coeffs.csv"), res)?;
    }
    let Some(s) = &res.states else { return Ok(()) };
    if cfg.outputs.contains(&Output::Observables) {
        let mut header: Vec<String> = ["t", "n_o", "n_m", "n_e", "trace", "purity", "min_eigenvalue"]
            .map(String::from)
            .to_vec();
        if s.probe.is_some() {
            header.extend(["probe_n_m".into(), "probe_stderr".into()]);
        }
        let mut c = Csv::create(dir.join("observables.csv"), &header)?;
        for (i, rho) in s.states.iter().enumerate() {
            let mut row = vec![f(s.times[i])];
            row.extend(s.occupations[i].map(f));
            row.extend([f(rho.trace()), f(rho.purity()), f(s.min_eigenvalues[i])]);
            if let Some((m, e)) = &s.probe {
                row.extend([f(m[i]), f(e[i])]);
            }
            c.row(&row)?;
        }
        c.finish()?;
    }
    if let Some((om, me)) = &res.negativity {
        let mut c = Csv::create(dir.join("negativity.csv"), &["t", "n_om", "n_me"].map(String::from))?;
        for i in 0..om.times.len() {
            c.row([f(om.times[i]), f(om.values[i]), f(me.values[i])])?;
        }
        c.finish()?;
    }
    if cfg.outputs.contains(&Output::Rho) {
        let mut c = Csv::create(dir.join("rho.csv"), &["t", "row", "col", "re", "im"].map(String::from))?;
        for (t, rho) in s.times.iter().zip(&s.states) {
            let m = rho.matrix();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    c.row([f(*t), i.to_string(), j.to_string(), f(m[(i, j)].re), f(m[(i, j)].im)])?;
                }
            }
        }
        c.finish()?;
    }
    Ok(())
}

fn write_coeffs(path: &Path, res: &PointResult) -> Result<()> {
    let tr = &res.coeffs;
    let n_f = match CoeffState::zero(tr.case()) {
        CoeffState::Weak(_) => 3,
        CoeffState::Strong(_) => 7,
    };
    let mut header = vec!["t".to_string(), "valid".to_string()];
    for j in 1..=n_f {
        header.push(format!("re_f{j}"));
        header.push(format!("im_f{j}"));
    }
    let mut c = Csv::create(path.to_path_buf(), &header)?;
    for k in 0..=tr.n_steps() {
        let mut row = vec![f(tr.time(k)), u8::from(tr.is_usable(k)).to_string()];
        let vals: Vec<_> = match tr.state(k) {
            Some(CoeffState::Weak(w)) => w.f.to_vec(),
            Some(CoeffState::Strong(s)) => s.f.iter().copied().chain([s.f7]).collect(),
            None => Vec::new(),
        };
        for j in 0..n_f {
            match vals.get(j) {
                Some(z) => row.extend([f(z.re), f(z.im)]),
                None => row.extend([String::new(), String::new()]),
            }
        }
        c.row(&row)?;
    }
    c.finish()
}

fn write_summary(
    path: &Path,
    cfg: &RunConfig,
    results: &[std::result::Result<PointResult, PointFailure>],
) -> Result<()> {
    let mut header = vec!["point".to_string()];
    header.extend(cfg.sweep.iter().map(|a| a.parameter.clone()));
    header.extend(
        [
            "status",
            "n_singular",
            "coeffs_valid_until",
            "max_n_om",
            "max_n_me",
            "final_n_om",
            "final_n_me",
            "esd_om",
            "esd_me",
            "audit_drift",
        ]
        .map(String::from),
    );
    let mut c = Csv::create(path.to_path_buf(), &header)?;
    for r in results {
        let (point, status) = match r {
            Ok(res) => (&res.point, if res.audit.as_ref().is_some_and(|a| a.failed) { "audit_failed" } else { "ok" }),
            Err(e) => (&e.point, "failed"),
        };
        let mut row = vec![point.index.to_string()];
        row.extend(point.assignments.iter().map(|(_, v)| v.to_string()));
        row.push(status.into());
        match r {
            Ok(res) => {
                let tr = &res.coeffs;
                row.push(tr.singular_steps().len().to_string());
                row.push(opt(tr.first_unusable().map(|k| tr.time(k))));
                match &res.negativity {
                    Some((om, me)) => row.extend([
                        f(om.max()),
                        f(me.max()),
                        f(*om.values.last().unwrap_or(&0.0)),
                        f(*me.values.last().unwrap_or(&0.0)),
                        opt(om.esd_time),
                        opt(me.esd_time),
                    ]),
                    None => row.extend(std::iter::repeat_n(String::new(), 6)),
                }
                row.push(opt(res.audit.as_ref().map(|a| a.relative_drift)));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 9)),
        }
        c.row(&row)?;
    }
    c.finish()
}

/// Through-origin fit of the N_me ESD time against a single swept parameter.
fn esd_fit(cfg: &RunConfig, results: &[std::result::Result<PointResult, PointFailure>]) -> Option<FitManifest> {
    if cfg.sweep.len() != 1 || !cfg.outputs.contains(&Output::Negativity) {
        return None;
    }
    let parameter = cfg.sweep[0].parameter.clone();
    let pts: Vec<(f64, f64)> = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .filter_map(|res| {
            let (_, me) = res.negativity.as_ref()?;
            Some((res.point.assignments[0].1, me.esd_time?))
        })
        .collect();
    let n_points = pts.len();
    Some(match fit_esd_slope(&pts) {
        Ok(SlopeFit { beta, r_squared, .. }) => FitManifest {
            parameter,
            beta: Some(beta),
            r_squared: Some(r_squared),
            n_points,
            note: None,
        },
        Err(e) => FitManifest {
            parameter,
            beta: None,
            r_squared: None,
            n_points,
            note: Some(e.to_string()),
        },
    })
}
