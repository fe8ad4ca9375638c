//! Density matrices and the rotating-wave master equation
//!
//! ```text
//! ∂ρ = −i[H, ρ] + [b, ρŌ†] + [Ōρ, b†],   Ō = F₁b + F₂a + F₃c.
//! ```
//!
//! For the full-coupling Hamiltonian the reduced state is reconstructed
//! from a trajectory ensemble instead; the result says which route was used.

use nalgebra::{DMatrix, DVector};

use crate::coeffs::{integrate_coeffs, CoeffTrace, WeakCoeffs};
use crate::error::{Error, Result};
use crate::hilbert::{FockSpace, OperatorMatrix};
use crate::model::{Coupling, ModelParams, SystemOperators};
use crate::ode::{Rk4, Stage};
use crate::sparse::{CsrMatrix, LinearCombination};
use crate::trajectory::{ensemble_density, EnsembleSettings, QsdSystem};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-6;

/// A density matrix on a product of subsystems with dimensions `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<C64>,
    dims: Vec<usize>,
    pub time: f64,
}

impl DensityMatrix {
    pub fn new(data: DMatrix<C64>, dims: Vec<usize>, time: f64) -> Result<Self> {
        let n: usize = dims.iter().product();
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        if data.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: data.nrows(),
            });
        }
        Ok(Self { data, dims, time })
    }

    pub fn from_pure(psi: &DVector<C64>, dims: Vec<usize>, time: f64) -> Result<Self> {
        Self::new(psi * psi.adjoint(), dims, time)
    }

    /// `|n_O, n_M, n_E⟩⟨n_O, n_M, n_E|`.
    pub fn fock(space: &FockSpace, occ: [usize; 3]) -> Result<Self> {
        Self::from_pure(&space.basis(occ)?, space.dims().to_vec(), 0.0)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `Re tr(ρA)`.
    pub fn expectation(&self, op: &OperatorMatrix) -> f64 {
        let a = op.matrix();
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[(i, k)] * a[(k, i)];
            }
        }
        acc.re
    }

    /// Fail if trace, Hermiticity or positivity are outside tolerance.
    pub fn check_invariants(&self) -> Result<()> {
        let checks = [
            ("trace", (self.trace() - 1.0).abs(), TRACE_TOL),
            ("hermiticity", self.hermiticity_error(), HERMITICITY_TOL),
            ("positivity", (-self.min_eigenvalue()).max(0.0), POSITIVITY_TOL),
        ];
        for (what, value, tol) in checks {
            if !(value <= tol) {
                return Err(Error::InvariantViolation {
                    what,
                    value,
                    tol,
                    time: self.time,
                });
            }
        }
        Ok(())
    }
}

fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// Dense reference right-hand side, term by term.
pub fn meq_rhs_case1(rho: &DMatrix<C64>, c: &WeakCoeffs, ops: &SystemOperators) -> Result<DMatrix<C64>> {
    if ops.obar_basis.len() != 3 {
        return Err(Error::InvalidParameter {
            name: "case",
            reason: "explicit master equation needs the rotating-wave ansatz".into(),
        });
    }
    if !c.f.iter().all(|z| z.is_finite()) {
        return Err(Error::NonFinite("master-equation coefficients"));
    }
    let h = ops.hamiltonian.matrix();
    let b = ops.lindblad.matrix();
    let bd = b.adjoint();
    let mut obar = DMatrix::zeros(rho.nrows(), rho.ncols());
    for (f, op) in c.f.iter().zip(&ops.obar_basis) {
        obar += op.matrix() * *f;
    }
    let obar_d = obar.adjoint();
    let mi = C64::new(0.0, -1.0);
    let unitary = (h * rho - rho * h) * mi;
    let left = b * rho * &obar_d - rho * &obar_d * b;
    let right = &obar * rho * &bd - &bd * &obar * rho;
    Ok(unitary + left + right)
}

/// Sparse evaluation of the same right-hand side as `G + G†` with
/// `G = (−iH − b†Ō)ρ + Ōρb†`, valid for Hermitian `ρ`.
struct MeqKernel {
    n: usize,
    /// `[−iH, −b†b, −b†a, −b†c]`
    drift: LinearCombination,
    /// `[b, a, c]`
    obar: LinearCombination,
    b: CsrMatrix,
    tmp: Vec<C64>,
}

impl MeqKernel {
    fn new(ops: &SystemOperators) -> Self {
        let bd = ops.lindblad.dagger();
        let mut comps = vec![ops.hamiltonian.scale(C64::new(0.0, -1.0))];
        comps.extend(ops.obar_basis.iter().map(|op| -&(&bd * op)));
        let n = ops.dim();
        Self {
            n,
            drift: LinearCombination::new(&comps),
            obar: LinearCombination::new(&ops.obar_basis),
            b: CsrMatrix::from_dense(&ops.lindblad),
            tmp: vec![ZERO; n * n],
        }
    }

    fn eval(&mut self, drift: &[C64], obar: &[C64], rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        self.drift.mul_mat(drift, rho, n, out);
        self.obar.mul_mat(obar, rho, n, &mut self.tmp);
        self.b.add_mul_right_adjoint(&self.tmp, out);
        for j in 0..n {
            for i in 0..=j {
                let a = out[i + j * n];
                let b = out[j + i * n];
                out[i + j * n] = a + b.conj();
                out[j + i * n] = b + a.conj();
            }
        }
    }
}

/// Which computation produced a [`MeqSeries`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ExactMeq,
    TrajectoryEnsemble { n_traj: usize, base_seed: u64 },
}

#[derive(Clone, Debug)]
pub struct MeqSeries {
    pub route: Route,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub min_eigenvalues: Vec<f64>,
}

/// Integrate the explicit master equation on a precomputed coefficient grid,
/// sampling every `stride`-th step.
pub fn integrate_meq_on_trace(
    ops: &SystemOperators,
    coeffs: &CoeffTrace,
    rho0: &DensityMatrix,
    stride: usize,
) -> Result<MeqSeries> {
    if coeffs.case() != Coupling::WeakRwa || ops.obar_basis.len() != 3 {
        return Err(Error::InvalidParameter {
            name: "case",
            reason: "explicit master equation needs the rotating-wave ansatz".into(),
        });
    }
    if rho0.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: rho0.dim(),
        });
    }
    rho0.check_invariants()?;
    if let Some(k) = coeffs.first_unusable() {
        return Err(Error::Singular { time: coeffs.time(k) });
    }
    let n = ops.dim();
    let dt = coeffs.dt();
    let stride = stride.max(1);
    let mut kernel = MeqKernel::new(ops);
    let mut rho = rho0.matrix().as_slice().to_vec();
    let mut rk = Rk4::new(n * n);
    let dims = rho0.dims().to_vec();

    let nnz_d = kernel.drift.nnz();
    let nnz_o = kernel.obar.nnz();
    let mut w = [C64::new(1.0, 0.0), ZERO, ZERO, ZERO];
    let mut stage_vals = [
        (vec![ZERO; nnz_d], vec![ZERO; nnz_o]),
        (vec![ZERO; nnz_d], vec![ZERO; nnz_o]),
        (vec![ZERO; nnz_d], vec![ZERO; nnz_o]),
    ];

    let mut series = MeqSeries {
        route: Route::ExactMeq,
        times: Vec::new(),
        states: Vec::new(),
        min_eigenvalues: Vec::new(),
    };
    let record = |k: usize, rho: &[C64], series: &mut MeqSeries| -> Result<()> {
        let state = DensityMatrix::new(DMatrix::from_column_slice(n, n, rho), dims.clone(), coeffs.time(k))?;
        state.check_invariants()?;
        series.min_eigenvalues.push(state.min_eigenvalue());
        series.times.push(state.time);
        series.states.push(state);
        Ok(())
    };
    record(0, &rho, &mut series)?;

    for k in 0..coeffs.n_steps() {
        for (slot, stage) in [Stage::Start, Stage::Mid, Stage::End].into_iter().enumerate() {
            coeffs.obar_stage(k, stage, &mut w[1..]);
            kernel.drift.assemble(&w, &mut stage_vals[slot].0);
            kernel.obar.assemble(&w[1..], &mut stage_vals[slot].1);
        }
        rk.step(&mut rho, dt, |stage, y, dy| {
            let (d, o) = match stage {
                Stage::Start => &stage_vals[0],
                Stage::Mid => &stage_vals[1],
                Stage::End => &stage_vals[2],
            };
            kernel.eval(d, o, y, dy);
        });
        if (k + 1) % stride == 0 {
            if !rho.iter().all(|z| z.is_finite()) {
                return Err(Error::NonFinite("density matrix"));
            }
            record(k + 1, &rho, &mut series)?;
        }
    }
    Ok(series)
}

/// Reduced dynamics from `rho0` up to `t_max`.
///
/// Rotating-wave parameters use the explicit master equation. For the full
/// coupling the state is reconstructed from a trajectory ensemble configured
/// by `ensemble` (its stride is overridden by `stride`); `rho0` must then be
/// pure.
pub fn integrate_meq(
    p: &ModelParams,
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
    stride: usize,
    ensemble: &EnsembleSettings,
) -> Result<MeqSeries> {
    let coeffs = integrate_coeffs(p.case, p, t_max, dt)?;
    match p.case {
        Coupling::WeakRwa => {
            let ops = SystemOperators::new(p)?;
            integrate_meq_on_trace(&ops, &coeffs, rho0, stride)
        }
        Coupling::StrongFull => {
            rho0.check_invariants()?;
            let psi0 = dominant_pure_state(rho0)?;
            let sys = QsdSystem::new(p)?;
            let settings = EnsembleSettings {
                sample_stride: stride,
                ..ensemble.clone()
            };
            let res = ensemble_density(&sys, &psi0, &coeffs, &settings)?;
            let min_eigenvalues = res.rho.iter().map(DensityMatrix::min_eigenvalue).collect();
            Ok(MeqSeries {
                route: Route::TrajectoryEnsemble {
                    n_traj: settings.n_traj,
                    base_seed: settings.base_seed,
                },
                times: res.times,
                states: res.rho,
                min_eigenvalues,
            })
        }
    }
}

/// The state vector of a pure density matrix.
fn dominant_pure_state(rho: &DensityMatrix) -> Result<DVector<C64>> {
    if (rho.purity() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter {
            name: "rho0",
            reason: format!("trajectory route needs a pure state, purity = {}", rho.purity()),
        });
    }
    let herm = (rho.matrix() + rho.matrix().adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let (imax, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::Eigen)?;
    let v = eig.eigenvectors.column(imax).into_owned();
    Ok(&v / C64::new(v.norm(), 0.0))
}
