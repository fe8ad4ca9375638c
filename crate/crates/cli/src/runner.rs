//! Executes one sweep point: coefficients, state evolution, negativities and
//! the optional truncation audit.

use rayon::prelude::*;
use serde::Serialize;

use pom_qsd::{
    ensemble_density, entanglement_series, integrate_coeffs, integrate_meq_on_trace, Bipartition,
    CoeffTrace, Coupling, DensityMatrix, EnsembleSettings, EntanglementSeries, EsdCriterion, Mode,
    ModelParams, QsdSystem,
};

use crate::config::{Output, RunConfig, SolverKind, SweepPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteTaken {
    ExactMeq,
    TrajectoryEnsemble,
}

pub struct StateSeries {
    pub route: RouteTaken,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Occupations of the optical, mechanical and electrical modes per sample.
    pub occupations: Vec<[f64; 3]>,
    pub min_eigenvalues: Vec<f64>,
    /// Ensemble estimate of `⟨b†b⟩` and its standard error (trajectory route).
    pub probe: Option<(Vec<f64>, Vec<f64>)>,
    pub n_aborted: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub dims: [usize; 3],
    pub max_abs_drift: f64,
    pub relative_drift: f64,
    pub warned: bool,
    pub failed: bool,
}

pub struct PointResult {
    pub point: SweepPoint,
    pub coeffs: CoeffTrace,
    pub states: Option<StateSeries>,
    pub negativity: Option<(EntanglementSeries, EntanglementSeries)>,
    pub audit: Option<AuditReport>,
}

pub struct PointFailure {
    pub point: SweepPoint,
    pub error: pom_qsd::Error,
}

pub fn run_all(cfg: &RunConfig) -> Vec<Result<PointResult, PointFailure>> {
    cfg.expand()
        .into_par_iter()
        .map(|point| run_point(cfg, &point).map_err(|error| PointFailure { point, error }))
        .collect()
}

pub fn run_point(cfg: &RunConfig, point: &SweepPoint) -> pom_qsd::Result<PointResult> {
    let p = &point.params;
    let coeffs = integrate_coeffs(p.case, p, cfg.t_max, cfg.dt)?;
    let mut out = PointResult {
        point: point.clone(),
        coeffs,
        states: None,
        negativity: None,
        audit: None,
    };
    if !cfg.needs_states() {
        return Ok(out);
    }
    let states = evolve(cfg, p, &out.coeffs)?;
    if cfg.outputs.contains(&Output::Negativity) {
        let c = EsdCriterion::default();
        out.negativity = Some((
            entanglement_series(&states.states, &Bipartition::om(), &c)?,
            entanglement_series(&states.states, &Bipartition::me(), &c)?,
        ));
    }
    if cfg.audit.enabled {
        let mut big = p.clone();
        big.dims = p.dims.map(|d| d + 1);
        let coarse = &states.occupations;
        let fine = evolve(cfg, &big, &out.coeffs)?.occupations;
        let max_abs_drift = coarse
            .iter()
            .zip(&fine)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
            .fold(0.0, f64::max);
        let scale = fine.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
        let relative_drift = if scale > 0.0 { max_abs_drift / scale } else { 0.0 };
        out.audit = Some(AuditReport {
            dims: big.dims,
            max_abs_drift,
            relative_drift,
            warned: relative_drift > cfg.audit.warn_above,
            failed: relative_drift > cfg.audit.fail_above,
        });
    }
    out.states = Some(states);
    Ok(out)
}

fn evolve(cfg: &RunConfig, p: &ModelParams, coeffs: &CoeffTrace) -> pom_qsd::Result<StateSeries> {
    let sys = QsdSystem::new(p)?;
    let space = &sys.ops.space;
    let numbers = [Mode::Optical, Mode::Mechanical, Mode::Electrical].map(|m| space.number(m));
    let occupations =
        |rhos: &[DensityMatrix]| -> Vec<[f64; 3]> { rhos.iter().map(|r| numbers.each_ref().map(|n| r.expectation(n))).collect() };

    let exact = cfg.solver.kind == SolverKind::Master && p.case == Coupling::WeakRwa;
    if exact {
        let rho0 = DensityMatrix::fock(space, cfg.initial_state)?;
        let s = integrate_meq_on_trace(&sys.ops, coeffs, &rho0, cfg.sample_stride)?;
        return Ok(StateSeries {
            route: RouteTaken::ExactMeq,
            occupations: occupations(&s.states),
            times: s.times,
            states: s.states,
            min_eigenvalues: s.min_eigenvalues,
            probe: None,
            n_aborted: 0,
        });
    }

    let psi0 = space.basis(cfg.initial_state)?;
    let settings = EnsembleSettings {
        n_traj: cfg.solver.n_traj,
        sample_stride: cfg.sample_stride,
        base_seed: cfg.seed,
        ..EnsembleSettings::default()
    };
    let r = ensemble_density(&sys, &psi0, coeffs, &settings)?;
    let mut min_eigenvalues = Vec::with_capacity(r.rho.len());
    for rho in &r.rho {
        rho.check_invariants()?;
        min_eigenvalues.push(rho.min_eigenvalue());
    }
    Ok(StateSeries {
        route: RouteTaken::TrajectoryEnsemble,
        occupations: occupations(&r.rho),
        times: r.times,
        states: r.rho,
        min_eigenvalues,
        probe: Some((r.probe_mean, r.probe_stderr)),
        n_aborted: r.n_aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn exact_and_ensemble_routes_agree_roughly() {
        let base = "t_max = 2.0\nseed = 3\n[model]\ngamma_env = 5.0\n";
        let meq = parse_config(base).unwrap();
        let traj = parse_config(&format!("{base}[solver]\nkind = \"trajectories\"\nn_traj = 400\n")).unwrap();
        let a = run_point(&meq, &meq.expand()[0]).unwrap();
        let b = run_point(&traj, &traj.expand()[0]).unwrap();
        let (sa, sb) = (a.states.unwrap(), b.states.unwrap());
        assert_eq!(sa.route, RouteTaken::ExactMeq);
        assert_eq!(sb.route, RouteTaken::TrajectoryEnsemble);
        let d = pom_qsd::trace_distance(sa.states.last().unwrap(), sb.states.last().unwrap()).unwrap();
        assert!(d < 0.1, "trace distance {d}");
    }

    #[test]
    fn coeff_only_runs_skip_states() {
        let c = parse_config("t_max = 1.0\noutputs = [\"coeffs\"]").unwrap();
        let r = run_point(&c, &c.expand()[0]).unwrap();
        assert!(r.states.is_none() && r.negativity.is_none());
        assert_eq!(r.coeffs.n_steps(), 1000);
    }

    #[test]
    fn audit_reports_small_drift_for_weak_case() {
        let c = parse_config("t_max = 2.0\n[audit]\nenabled = true\n").unwrap();
        let r = run_point(&c, &c.expand()[0]).unwrap();
        let a = r.audit.unwrap();
        assert_eq!(a.dims, [4, 4, 4]);
        // The excitation-conserving dynamics from |101⟩ never reaches level 3.
        assert!(a.relative_drift < 1e-10, "{a:?}");
        assert!(!a.warned);
    }
}
