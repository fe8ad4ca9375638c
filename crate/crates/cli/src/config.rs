//! Run configuration: TOML parsing, defaults, validation and sweep expansion.

use serde::{Deserialize, Serialize};

use pom_qsd::{Coupling, ModelParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Model parameters a sweep may vary.
pub const SWEEPABLE: [&str; 9] = [
    "omega_o",
    "omega_m",
    "omega_e",
    "delta_o",
    "g_om",
    "g_me",
    "gamma_env",
    "omega_env",
    "coupling_gamma",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Coeffs,
    Observables,
    Negativity,
    Rho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Explicit master equation (Case I); Case II falls back to trajectories.
    Master,
    Trajectories,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solver {
    pub kind: SolverKind,
    /// Ensemble size whenever trajectories are used.
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
}

fn default_n_traj() -> usize {
    1000
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            kind: SolverKind::Master,
            n_traj: default_n_traj(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Truncation check: rerun with every mode one level larger and compare
/// occupations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Audit {
    pub enabled: bool,
    /// Relative drift that triggers a warning.
    #[serde(default = "default_warn")]
    pub warn_above: f64,
    /// Relative drift that fails the run.
    #[serde(default = "default_fail")]
    pub fail_above: f64,
}

fn default_warn() -> f64 {
    0.01
}

fn default_fail() -> f64 {
    0.05
}

impl Audit {
    fn for_case(case: Coupling) -> Self {
        Self {
            enabled: case == Coupling::StrongFull,
            warn_above: default_warn(),
            fail_above: default_fail(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum InitialState {
    Occupation([usize; 3]),
    Named(String),
}

impl InitialState {
    fn resolve(&self) -> Result<[usize; 3], ConfigError> {
        match self {
            InitialState::Occupation(o) => Ok(*o),
            InitialState::Named(s) if s == "vacuum" => Ok([0, 0, 0]),
            InitialState::Named(s) => {
                let digits: Vec<usize> = s.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
                if digits.len() == 3 && s.chars().count() == 3 {
                    Ok([digits[0], digits[1], digits[2]])
                } else {
                    Err(invalid(
                        "initial_state",
                        format!("expected [n_o, n_m, n_e], \"vacuum\" or a three-digit label like \"101\", got {s:?}"),
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    omega_o: Option<f64>,
    omega_m: Option<f64>,
    omega_e: Option<f64>,
    delta_o: Option<f64>,
    g_om: Option<f64>,
    g_me: Option<f64>,
    gamma_env: Option<f64>,
    omega_env: Option<f64>,
    coupling_gamma: Option<f64>,
    dims: Option<[usize; 3]>,
    case: Option<Coupling>,
}

impl RawModel {
    fn resolve(&self) -> ModelParams {
        let case = self.case.unwrap_or(Coupling::WeakRwa);
        let d = ModelParams::with_case(case);
        ModelParams {
            omega_o: self.omega_o.unwrap_or(d.omega_o),
            omega_m: self.omega_m.unwrap_or(d.omega_m),
            omega_e: self.omega_e.unwrap_or(d.omega_e),
            delta_o: self.delta_o.or(d.delta_o),
            g_om: self.g_om.unwrap_or(d.g_om),
            g_me: self.g_me.unwrap_or(d.g_me),
            gamma_env: self.gamma_env.unwrap_or(d.gamma_env),
            omega_env: self.omega_env.unwrap_or(d.omega_env),
            coupling_gamma: self.coupling_gamma.unwrap_or(d.coupling_gamma),
            dims: self.dims.unwrap_or(d.dims),
            case,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    #[serde(default)]
    model: RawModel,
    initial_state: Option<InitialState>,
    solver: Option<Solver>,
    dt: Option<f64>,
    t_max: Option<f64>,
    sample_stride: Option<usize>,
    outputs: Option<Vec<Output>>,
    seed: Option<u64>,
    #[serde(default)]
    sweep: Vec<SweepAxis>,
    audit: Option<Audit>,
}

/// Fully resolved configuration; also the form recorded in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub dt: f64,
    pub t_max: f64,
    pub sample_stride: usize,
    pub initial_state: [usize; 3],
    pub outputs: Vec<Output>,
    pub model: ModelParams,
    pub solver: Solver,
    pub audit: Audit,
    pub sweep: Vec<SweepAxis>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("empty config is valid")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let model = raw.model.resolve();
    let cfg = RunConfig {
        name: raw.name.unwrap_or_else(|| "run".into()),
        seed: raw.seed.unwrap_or(0),
        dt: raw.dt.unwrap_or(1e-3),
        t_max: raw.t_max.unwrap_or(50.0),
        sample_stride: raw.sample_stride.unwrap_or(50),
        initial_state: match &raw.initial_state {
            Some(s) => s.resolve()?,
            None => [1, 0, 1],
        },
        outputs: raw
            .outputs
            .unwrap_or_else(|| vec![Output::Coeffs, Output::Observables, Output::Negativity]),
        audit: raw.audit.unwrap_or_else(|| Audit::for_case(model.case)),
        model,
        solver: raw.solver.unwrap_or_default(),
        sweep: raw.sweep,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn model_error(prefix: &str, e: pom_qsd::Error) -> ConfigError {
    match e {
        pom_qsd::Error::InvalidParameter { name, reason } => invalid(format!("{prefix}.{name}"), reason),
        other => invalid(prefix, other.to_string()),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(invalid("t_max", format!("must be > 0, got {}", self.t_max)));
        }
        if self.t_max < self.dt {
            return Err(invalid("t_max", "must cover at least one step of dt"));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride", "must be >= 1"));
        }
        if self.solver.n_traj == 0 {
            return Err(invalid("solver.n_traj", "must be >= 1"));
        }
        if self.outputs.is_empty() {
            return Err(invalid("outputs", "at least one output is required"));
        }
        if !(self.audit.warn_above > 0.0 && self.audit.warn_above <= self.audit.fail_above) {
            return Err(invalid("audit", "need 0 < warn_above <= fail_above"));
        }
        self.model.validate().map_err(|e| model_error("model", e))?;
        for (mode, (&n, &d)) in self.initial_state.iter().zip(&self.model.dims).enumerate() {
            if n >= d {
                return Err(invalid(
                    "initial_state",
                    format!("occupation {n} of mode {mode} exceeds truncation dim {d}"),
                ));
            }
        }
        for (i, axis) in self.sweep.iter().enumerate() {
            if !SWEEPABLE.contains(&axis.parameter.as_str()) {
                return Err(invalid(
                    format!("sweep[{i}].parameter"),
                    format!("{:?} is not a model parameter (one of {})", axis.parameter, SWEEPABLE.join(", ")),
                ));
            }
            if axis.values.is_empty() {
                return Err(invalid(format!("sweep[{i}].values"), "must list at least one value"));
            }
            if self.sweep[..i].iter().any(|a| a.parameter == axis.parameter) {
                return Err(invalid(format!("sweep[{i}].parameter"), "parameter swept twice"));
            }
        }
        for p in self.expand() {
            p.params.validate().map_err(|e| model_error("sweep", e))?;
        }
        Ok(())
    }

    pub fn needs_states(&self) -> bool {
        self.outputs.iter().any(|o| *o != Output::Coeffs)
    }

    /// Cartesian product over the listed sweep values, first axis outermost.
    pub fn expand(&self) -> Vec<SweepPoint> {
        let mut points = vec![SweepPoint {
            index: 0,
            assignments: Vec::new(),
            params: self.model.clone(),
        }];
        for axis in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        set_param(&mut q.params, &axis.parameter, v);
                        q.assignments.push((axis.parameter.clone(), v));
                        q
                    })
                })
                .collect();
        }
        for (i, p) in points.iter_mut().enumerate() {
            p.index = i;
        }
        points
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, f64)>,
    pub params: ModelParams,
}

fn set_param(p: &mut ModelParams, name: &str, v: f64) {
    match name {
        "omega_o" => p.omega_o = v,
        "omega_m" => p.omega_m = v,
        "omega_e" => p.omega_e = v,
        "delta_o" => p.delta_o = Some(v),
        "g_om" => p.g_om = v,
        "g_me" => p.g_me = v,
        "gamma_env" => p.gamma_env = v,
        "omega_env" => p.omega_env = v,
        "coupling_gamma" => p.coupling_gamma = v,
        _ => unreachable!("sweep parameters are validated"),
    }
}
