//! Linear non-Markovian QSD trajectories and their ensemble average.
//!
//! A trajectory obeys `∂ψ = (−iH + z*_t L − L†Ō(t))ψ` with the noise held at
//! its step-start value inside each RK4 step and `Ō` interpolated from the
//! shared coefficient trace. The state is renormalised after every step; the
//! accumulated log-norm is kept because the linear equation encodes the
//! trajectory weight in it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::coeffs::CoeffTrace;
use crate::error::{Error, Result};
use crate::hilbert::{Mode, OperatorMatrix};
use crate::master::DensityMatrix;
use crate::model::{ModelParams, SystemOperators};
use crate::noise::{sample_ou_path, NoisePath};
use crate::ode::{Rk4, Stage};
use crate::sparse::{CsrMatrix, LinearCombination};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense reference right-hand side `(−iH + z* L − L†Ō)ψ`.
pub fn qsd_rhs(
    psi: &DVector<C64>,
    z_star: C64,
    obar: &OperatorMatrix,
    h: &OperatorMatrix,
    l: &OperatorMatrix,
) -> Result<DVector<C64>> {
    let n = psi.len();
    for op in [obar, h, l] {
        if op.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: op.dim(),
            });
        }
    }
    let gen = h.matrix() * C64::new(0.0, -1.0) + l.matrix() * z_star - l.matrix().adjoint() * obar.matrix();
    Ok(gen * psi)
}

/// Sparse propagator for one parameter set, shared by all trajectories.
#[derive(Clone, Debug)]
pub struct QsdSystem {
    pub params: ModelParams,
    pub ops: SystemOperators,
    /// Components `[−iH, −L†op₁, …, −L†opₘ]` of the drift generator.
    drift: LinearCombination,
    lindblad: CsrMatrix,
}

impl QsdSystem {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let ops = SystemOperators::new(p)?;
        let ldag = ops.lindblad.dagger();
        let mut comps = vec![ops.hamiltonian.scale(C64::new(0.0, -1.0))];
        comps.extend(ops.obar_basis.iter().map(|op| -&(&ldag * op)));
        Ok(Self {
            params: p.clone(),
            drift: LinearCombination::new(&comps),
            lindblad: CsrMatrix::from_dense(&ops.lindblad),
            ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    pub fn n_obar(&self) -> usize {
        self.ops.obar_basis.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub psi: DVector<C64>,
    pub norm_log: f64,
}

/// Samples of one trajectory at every `stride`-th grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<TrajectoryState>,
}

fn check_grids(sys: &QsdSystem, coeffs: &CoeffTrace, noise: &NoisePath, dt: f64) -> Result<usize> {
    if coeffs.case() != sys.params.case {
        return Err(Error::InvalidParameter {
            name: "coeffs",
            reason: "coefficient trace was built for the other coupling case".into(),
        });
    }
    for (name, other) in [("coeffs.dt", coeffs.dt()), ("noise.dt", noise.dt)] {
        if (other - dt).abs() > 1e-12 * dt {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("grid step {other} differs from dt = {dt}"),
            });
        }
    }
    let n = coeffs.n_steps();
    if noise.len() < n + 1 {
        return Err(Error::TooFew {
            what: "noise samples",
            needed: n + 1,
            got: noise.len(),
        });
    }
    if let Some(k) = coeffs.first_unusable() {
        return Err(Error::Singular { time: coeffs.time(k) });
    }
    Ok(n)
}

fn check_initial(sys: &QsdSystem, psi0: &DVector<C64>) -> Result<()> {
    if psi0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: psi0.len(),
        });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter {
            name: "psi0",
            reason: format!("must be normalised, norm = {norm}"),
        });
    }
    Ok(())
}

/// Propagate one trajectory over the whole coefficient grid.
pub fn run_trajectory(
    sys: &QsdSystem,
    psi0: &DVector<C64>,
    coeffs: &CoeffTrace,
    noise: &NoisePath,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    check_initial(sys, psi0)?;
    let n_steps = check_grids(sys, coeffs, noise, dt)?;
    let stride = stride.max(1);
    let mut times = Vec::with_capacity(n_steps / stride + 1);
    let mut states = Vec::with_capacity(n_steps / stride + 1);
    propagate(sys, psi0, coeffs, noise, dt, n_steps, |k, psi, norm_log| {
        if k % stride == 0 {
            times.push(coeffs.time(k));
            states.push(TrajectoryState {
                psi: DVector::from_column_slice(psi),
                norm_log,
            });
        }
    })?;
    Ok(TrajectoryRecord { times, states })
}

/// Core loop; `visit(k, ψ̂_k, log‖ψ_k‖)` is called for `k = 0..=n_steps`.
fn propagate(
    sys: &QsdSystem,
    psi0: &DVector<C64>,
    coeffs: &CoeffTrace,
    noise: &NoisePath,
    dt: f64,
    n_steps: usize,
    mut visit: impl FnMut(usize, &[C64], f64),
) -> Result<()> {
    let n = sys.dim();
    let m = sys.n_obar();
    let mut psi = psi0.as_slice().to_vec();
    let mut rk = Rk4::new(n);
    let mut weights = vec![ZERO; m + 1];
    weights[0] = C64::new(1.0, 0.0);
    let nnz = sys.drift.nnz();
    // Assembled generators at the three RK4 stages; the end of one step is
    // the start of the next.
    let mut gen_start = vec![ZERO; nnz];
    let mut gen_mid = vec![ZERO; nnz];
    let mut gen_end = vec![ZERO; nnz];
    coeffs.obar_stage(0, Stage::Start, &mut weights[1..]);
    sys.drift.assemble(&weights, &mut gen_start);

    let mut norm_log = 0.0;
    visit(0, &psi, norm_log);
    for k in 0..n_steps {
        coeffs.obar_stage(k, Stage::Mid, &mut weights[1..]);
        sys.drift.assemble(&weights, &mut gen_mid);
        coeffs.obar_stage(k, Stage::End, &mut weights[1..]);
        sys.drift.assemble(&weights, &mut gen_end);
        let z = noise.z_star(k);

        rk.step(&mut psi, dt, |stage, y, dy| {
            let g = match stage {
                Stage::Start => &gen_start,
                Stage::Mid => &gen_mid,
                Stage::End => &gen_end,
            };
            sys.drift.mul_vec(g, y, dy);
            sys.lindblad.mul_vec_add(z, y, dy);
        });

        let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NonFinite("trajectory norm"));
        }
        let inv = 1.0 / norm;
        psi.iter_mut().for_each(|c| *c *= inv);
        norm_log += norm.ln();
        std::mem::swap(&mut gen_start, &mut gen_end);
        visit(k + 1, &psi, norm_log);
    }
    Ok(())
}

/// How normalised trajectory projectors are combined into `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `ρ = Σ ‖ψ‖² ψ̂ψ̂† / Σ ‖ψ‖²` — the unbiased average of the linear equation.
    Linear,
    /// `ρ = mean(ψ̂ψ̂†)`, ignoring trajectory weights.
    Normalized,
}

#[derive(Clone, Debug)]
pub struct EnsembleSettings {
    pub n_traj: usize,
    pub sample_stride: usize,
    pub base_seed: u64,
    pub normalization: Normalization,
    /// Trajectories per parallel work unit.
    pub block_size: usize,
    /// Mode whose occupation serves as convergence probe.
    pub probe: Mode,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            n_traj: 1000,
            sample_stride: 50,
            base_seed: 0,
            normalization: Normalization::Linear,
            block_size: 32,
            probe: Mode::Mechanical,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub rho: Vec<DensityMatrix>,
    pub n_traj: usize,
    pub n_aborted: usize,
    /// Ensemble estimate of the probe occupation and its standard error.
    pub probe_mean: Vec<f64>,
    pub probe_stderr: Vec<f64>,
}

/// Per-sample running sums for one block of trajectories.
struct Accum {
    rho: Vec<DMatrix<C64>>,
    /// Σw, Σw x, Σw², Σw² x, Σw² x² for the probe `x`.
    probe: Vec<[f64; 5]>,
    n_ok: usize,
    n_aborted: usize,
}

impl Accum {
    fn new(n_samples: usize, dim: usize) -> Self {
        Self {
            rho: vec![DMatrix::zeros(dim, dim); n_samples],
            probe: vec![[0.0; 5]; n_samples],
            n_ok: 0,
            n_aborted: 0,
        }
    }

    fn merge(&mut self, other: Accum) {
        for (a, b) in self.rho.iter_mut().zip(other.rho) {
            *a += b;
        }
        for (a, b) in self.probe.iter_mut().zip(other.probe) {
            for i in 0..5 {
                a[i] += b[i];
            }
        }
        self.n_ok += other.n_ok;
        self.n_aborted += other.n_aborted;
    }
}

/// Noise path of trajectory `idx` of an ensemble.
pub fn trajectory_noise(
    sys: &QsdSystem,
    settings: &EnsembleSettings,
    idx: usize,
    dt: f64,
    n_steps: usize,
) -> Result<NoisePath> {
    sample_ou_path(&sys.params, dt, n_steps, settings.base_seed.wrapping_add(idx as u64))
}

/// Ensemble average over `settings.n_traj` trajectories, seeded from
/// `base_seed` by trajectory index (see [`trajectory_noise`]).
///
/// Trajectories are grouped in fixed blocks; blocks are evaluated in
/// parallel and merged in index order, so the result does not depend on the
/// number of worker threads.
pub fn ensemble_density(
    sys: &QsdSystem,
    psi0: &DVector<C64>,
    coeffs: &CoeffTrace,
    settings: &EnsembleSettings,
) -> Result<EnsembleResult> {
    if settings.n_traj == 0 {
        return Err(Error::InvalidParameter {
            name: "n_traj",
            reason: "must be >= 1".into(),
        });
    }
    check_initial(sys, psi0)?;
    let dt = coeffs.dt();
    let n_steps = coeffs.n_steps();
    let stride = settings.sample_stride.max(1);
    let n_samples = n_steps / stride + 1;
    let dim = sys.dim();
    let probe_diag: Vec<f64> = (0..dim)
        .map(|i| sys.ops.space.occupations(i)[settings.probe.slot()] as f64)
        .collect();

    let block = settings.block_size.max(1);
    let n_blocks = settings.n_traj.div_ceil(block);
    let wave = rayon::current_num_threads().max(1);

    let run_block = |b: usize| -> Result<Accum> {
        let mut acc = Accum::new(n_samples, dim);
        let mut col = DVector::zeros(dim);
        for idx in b * block..((b + 1) * block).min(settings.n_traj) {
            let noise = trajectory_noise(sys, settings, idx, dt, n_steps)?;
            let result = propagate(sys, psi0, coeffs, &noise, dt, n_steps, |k, psi, norm_log| {
                if k % stride != 0 {
                    return;
                }
                let s = k / stride;
                let w = match settings.normalization {
                    Normalization::Linear => (2.0 * norm_log).exp(),
                    Normalization::Normalized => 1.0,
                };
                col.copy_from_slice(psi);
                acc.rho[s].gerc(C64::new(w, 0.0), &col, &col, C64::new(1.0, 0.0));
                let x: f64 = psi.iter().zip(&probe_diag).map(|(c, n)| c.norm_sqr() * n).sum();
                let pr = &mut acc.probe[s];
                pr[0] += w;
                pr[1] += w * x;
                pr[2] += w * w;
                pr[3] += w * w * x;
                pr[4] += w * w * x * x;
            });
            match result {
                Ok(()) => acc.n_ok += 1,
                Err(Error::Singular { .. }) | Err(Error::NonFinite(_)) => acc.n_aborted += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(acc)
    };

    // The coefficient trace is shared, so a singular window aborts every
    // trajectory; no need to run them to find out.
    if coeffs.first_unusable().is_some() {
        return Err(Error::TooManyAborted {
            aborted: settings.n_traj,
            total: settings.n_traj,
        });
    }

    let mut total = Accum::new(n_samples, dim);
    for start in (0..n_blocks).step_by(wave) {
        let parts: Vec<Result<Accum>> = (start..(start + wave).min(n_blocks))
            .into_par_iter()
            .map(run_block)
            .collect();
        for part in parts {
            total.merge(part?);
        }
    }

    if total.n_aborted * 100 > settings.n_traj {
        return Err(Error::TooManyAborted {
            aborted: total.n_aborted,
            total: settings.n_traj,
        });
    }

    let times: Vec<f64> = (0..n_samples).map(|s| coeffs.time(s * stride)).collect();
    let mut rho = Vec::with_capacity(n_samples);
    let mut probe_mean = Vec::with_capacity(n_samples);
    let mut probe_stderr = Vec::with_capacity(n_samples);
    for (s, (m, pr)) in total.rho.into_iter().zip(&total.probe).enumerate() {
        let [sw, swx, sw2, sw2x, sw2x2] = *pr;
        if !(sw > 0.0) || !sw.is_finite() {
            return Err(Error::NonFinite("ensemble weights"));
        }
        let mean = swx / sw;
        let var_num = (sw2x2 - 2.0 * mean * sw2x + mean * mean * sw2).max(0.0);
        probe_mean.push(mean);
        probe_stderr.push(var_num.sqrt() / sw);
        let m = m / C64::new(sw, 0.0);
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        rho.push(DensityMatrix::new(herm, sys.ops.space.dims().to_vec(), times[s])?);
    }
    Ok(EnsembleResult {
        times,
        rho,
        n_traj: settings.n_traj,
        n_aborted: total.n_aborted,
        probe_mean,
        probe_stderr,
    })
}
