//! Brute-force reference: the system plus an explicitly discretised bath.
//!
//! The rotating-wave Hamiltonian together with `Σ ω_k d_k†d_k + Σ g_k (b d_k† + b† d_k)`
//! is quadratic and excitation conserving, so a two-excitation product
//! `A†B†|0⟩` evolves exactly by propagating the single-particle amplitudes
//! `u(t) = e^{−iht}u(0)`. The reduced system state follows by sorting the
//! bath into zero-, one- and two-excitation sectors.

use nalgebra::{DMatrix, DVector};
use pom_qsd::{spectral_density, DensityMatrix, FockSpace, Mode, ModelParams, OperatorMatrix, C64};

pub struct DiscreteBath {
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl DiscreteBath {
    /// `n` equally spaced modes on `[Ω − w γ, Ω + w γ]` (cell midpoints) with
    /// `g_k² = J(ω_k) Δω`.
    pub fn lorentzian(p: &ModelParams, n: usize, half_width_in_gamma: f64) -> Self {
        let lo = p.omega_env - half_width_in_gamma * p.gamma_env;
        let dw = 2.0 * half_width_in_gamma * p.gamma_env / n as f64;
        let omegas: Vec<f64> = (0..n).map(|k| lo + (k as f64 + 0.5) * dw).collect();
        let couplings = omegas.iter().map(|&w| (spectral_density(w, p) * dw).sqrt()).collect();
        Self { omegas, couplings }
    }

    /// `Σ g_k² e^{−iω_k τ}`, the discrete analogue of the bath correlation.
    pub fn correlation(&self, tau: f64) -> C64 {
        self.omegas
            .iter()
            .zip(&self.couplings)
            .map(|(&w, &g)| C64::from_polar(g * g, -w * tau))
            .sum()
    }
}

/// Single-particle Hamiltonian on modes `[a, b, c, d_1 … d_N]`.
fn single_particle_h(p: &ModelParams, bath: &DiscreteBath) -> DMatrix<f64> {
    let n = 3 + bath.omegas.len();
    let mut h = DMatrix::zeros(n, n);
    h[(0, 0)] = -p.omega_o;
    h[(1, 1)] = p.omega_m;
    h[(2, 2)] = p.omega_e;
    h[(0, 1)] = -p.g_om;
    h[(1, 0)] = -p.g_om;
    h[(1, 2)] = -p.g_me;
    h[(2, 1)] = -p.g_me;
    for (k, (&w, &g)) in bath.omegas.iter().zip(&bath.couplings).enumerate() {
        h[(3 + k, 3 + k)] = w;
        h[(1, 3 + k)] = g;
        h[(3 + k, 1)] = g;
    }
    h
}

/// Exact reduced states at `times` for the initial state `e_i† e_j† |0⟩`
/// with `i ≠ j` among the system modes.
pub fn reduced_states(
    p: &ModelParams,
    bath: &DiscreteBath,
    first: Mode,
    second: Mode,
    times: &[f64],
) -> Vec<DensityMatrix> {
    assert_ne!(first, second);
    let space = FockSpace::new(p.dims).unwrap();
    let h = single_particle_h(p, bath);
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let vacuum = space.basis([0, 0, 0]).unwrap();
    let raise: Vec<OperatorMatrix> = Mode::ALL.iter().map(|&m| space.lowering(m).dagger()).collect();

    times
        .iter()
        .map(|&t| {
            let phases = DVector::from_fn(n, |i, _| C64::from_polar(1.0, -eig.eigenvalues[i] * t));
            let u_t = &v * DMatrix::from_diagonal(&phases) * v.adjoint();
            let u = u_t.column(first.slot()).into_owned();
            let w = u_t.column(second.slot()).into_owned();

            let creator = |amp: &DVector<C64>| {
                let mut op = OperatorMatrix::zeros(space.dim());
                for m in 0..3 {
                    op = &op + &raise[m].scale(amp[m]);
                }
                op
            };
            let (a_s, b_s) = (creator(&u), creator(&w));
            let alpha = a_s.apply(&vacuum).unwrap();
            let beta = b_s.apply(&vacuum).unwrap();
            let phi2 = a_s.apply(&beta).unwrap();

            let ub = u.rows(3, n - 3);
            let wb = w.rows(3, n - 3);
            let (nu, nw) = (ub.norm_squared(), wb.norm_squared());
            let overlap = ub.dotc(&wb); // Σ ū_k w_k
            let p0 = nu * nw + overlap.norm_sqr();

            // Σ_k (w_k α + u_k β)(w_k α + u_k β)†
            let mut rho = &phi2 * phi2.adjoint();
            rho += &alpha * alpha.adjoint() * C64::new(nw, 0.0);
            rho += &beta * beta.adjoint() * C64::new(nu, 0.0);
            rho += &alpha * beta.adjoint() * overlap;
            rho += &beta * alpha.adjoint() * overlap.conj();
            rho += &vacuum * vacuum.adjoint() * C64::new(p0, 0.0);
            DensityMatrix::new(rho, p.dims.to_vec(), t).unwrap()
        })
        .collect()
}
