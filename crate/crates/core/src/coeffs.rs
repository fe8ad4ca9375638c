//! Coefficient functions of the noise-free `Ō` operator.
//!
//! Both ansätze close into small autonomous ODE systems starting from zero
//! (`Ō(0) = 0`). They are integrated once per parameter set on the shared
//! time grid and reused read-only by every trajectory and by the master
//! equation.

use crate::error::{Error, Result};
use crate::hilbert::OperatorMatrix;
use crate::model::{Coupling, ModelParams, SystemOperators};
use crate::ode::{hermite_mid, rk4_step_array, Stage};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// `Ō = F₁ b + F₂ a + F₃ c`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeakCoeffs {
    pub f: [C64; 3],
}

/// `Ō = F₁ b + F₂ b† + F₃ a + F₄ a† + F₅ c + F₆ c†`, plus the auxiliary `F̃₇`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StrongCoeffs {
    pub f: [C64; 6],
    pub f7: C64,
}

impl StrongCoeffs {
    fn to_array(self) -> [C64; 7] {
        let f = self.f;
        [f[0], f[1], f[2], f[3], f[4], f[5], self.f7]
    }

    fn from_array(y: &[C64; 7]) -> Self {
        Self {
            f: [y[0], y[1], y[2], y[3], y[4], y[5]],
            f7: y[6],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoeffState {
    Weak(WeakCoeffs),
    Strong(StrongCoeffs),
}

impl CoeffState {
    pub fn zero(case: Coupling) -> Self {
        match case {
            Coupling::WeakRwa => CoeffState::Weak(WeakCoeffs::default()),
            Coupling::StrongFull => CoeffState::Strong(StrongCoeffs::default()),
        }
    }

    /// Coefficients of `Ō` in the operator order of [`SystemOperators::obar_basis`].
    pub fn obar_coeffs(&self) -> &[C64] {
        match self {
            CoeffState::Weak(w) => &w.f,
            CoeffState::Strong(s) => &s.f,
        }
    }

    pub fn f1(&self) -> C64 {
        self.obar_coeffs()[0]
    }

    pub fn max_abs(&self) -> f64 {
        let extra = match self {
            CoeffState::Strong(s) => s.f7.norm(),
            CoeffState::Weak(_) => 0.0,
        };
        self.obar_coeffs().iter().map(|z| z.norm()).fold(extra, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        let extra = match self {
            CoeffState::Strong(s) => s.f7.is_finite(),
            CoeffState::Weak(_) => true,
        };
        extra && self.obar_coeffs().iter().all(|z| z.is_finite())
    }
}

pub fn coeff_rhs_case1(s: &WeakCoeffs, p: &ModelParams) -> WeakCoeffs {
    let [f1, f2, f3] = s.f;
    let g = C64::new(p.gamma_env, p.omega_env);
    WeakCoeffs {
        f: [
            p.alpha0() - (g - I * p.omega_m) * f1 - I * p.g_om * f2 - I * p.g_me * f3 + f1 * f1,
            -(g + I * p.detuning_o()) * f2 - I * p.g_om * f1 + f1 * f2,
            -(g - I * p.omega_e) * f3 - I * p.g_me * f1 + f1 * f3,
        ],
    }
}

pub fn coeff_rhs_case2(s: &StrongCoeffs, p: &ModelParams) -> StrongCoeffs {
    let [f1, f2, f3, f4, f5, f6] = s.f;
    let f7 = s.f7;
    let g = C64::new(p.gamma_env, p.omega_env);
    let (gom, gme) = (p.g_om, p.g_me);
    let (wm, we, d) = (p.omega_m, p.omega_e, p.detuning_o());
    let shared = -I * gom * f3 + I * gom * f4 - I * gme * f5 + I * gme * f6;
    let drive_om = -I * gom * f1 + I * gom * f2;
    let drive_me = -I * gme * f1 + I * gme * f2;
    StrongCoeffs {
        f: [
            p.alpha0() - (g - I * wm) * f1 + shared + f1 * f1,
            -(g + I * wm) * f2 + shared + f1 * f2 - f7,
            -(g + I * d) * f3 + drive_om + f1 * f3,
            -(g - I * d) * f4 + drive_om + f1 * f4,
            -(g - I * we) * f5 + drive_me + f1 * f5,
            -(g + I * we) * f6 + drive_me + f1 * f6,
        ],
        f7: p.alpha0() * f2 - 2.0 * g * f7 + f1 * f7,
    }
}

/// How coefficient blow-ups are detected.
///
/// Near resonant bath frequencies `|F₁|` develops sharp quasi-periodic
/// spikes; an excursion above `spike_threshold` is recorded as one singular
/// time (at its peak). A state that is non-finite or exceeds
/// `blowup_threshold` ends the trace: later grid points are invalid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularityPolicy {
    pub spike_threshold: f64,
    pub blowup_threshold: f64,
    /// Grid points on either side of a singular time excluded from use.
    pub guard_steps: usize,
}

impl Default for SingularityPolicy {
    fn default() -> Self {
        Self {
            spike_threshold: 10.0,
            blowup_threshold: 1e6,
            guard_steps: 5,
        }
    }
}

/// Coefficients on the grid `t_k = k·dt`, stored flat together with their
/// time derivatives (used for Hermite interpolation at RK4 midpoints).
#[derive(Clone, Debug)]
pub struct CoeffTrace {
    case: Coupling,
    dt: f64,
    n_steps: usize,
    width: usize,
    values: Vec<C64>,
    derivs: Vec<C64>,
    singular_steps: Vec<usize>,
    policy: SingularityPolicy,
}

impl CoeffTrace {
    pub fn case(&self) -> Coupling {
        self.case
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Number of leading grid points holding finite, bounded states.
    pub fn valid_len(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn blew_up(&self) -> bool {
        self.valid_len() < self.n_steps + 1
    }

    pub fn policy(&self) -> SingularityPolicy {
        self.policy
    }

    pub fn singular_steps(&self) -> &[usize] {
        &self.singular_steps
    }

    pub fn singular_times(&self) -> Vec<f64> {
        self.singular_steps.iter().map(|&k| self.time(k)).collect()
    }

    pub fn n_obar(&self) -> usize {
        match self.case {
            Coupling::WeakRwa => 3,
            Coupling::StrongFull => 6,
        }
    }

    pub fn state(&self, k: usize) -> Option<CoeffState> {
        if k >= self.valid_len() {
            return None;
        }
        let v = &self.values[k * self.width..(k + 1) * self.width];
        Some(match self.case {
            Coupling::WeakRwa => CoeffState::Weak(WeakCoeffs { f: [v[0], v[1], v[2]] }),
            Coupling::StrongFull => CoeffState::Strong(StrongCoeffs::from_array(&std::array::from_fn(|i| v[i]))),
        })
    }

    pub fn f1(&self, k: usize) -> Option<C64> {
        (k < self.valid_len()).then(|| self.values[k * self.width])
    }

    /// Whether grid point `k` may feed state integration.
    pub fn is_usable(&self, k: usize) -> bool {
        k < self.valid_len() && !self.near_singular(k)
    }

    fn near_singular(&self, k: usize) -> bool {
        let g = self.policy.guard_steps;
        self.singular_steps.iter().any(|&s| k + g >= s && k <= s + g)
    }

    /// First grid point (if any, up to `n_steps`) that may not be used.
    pub fn first_unusable(&self) -> Option<usize> {
        let g = self.policy.guard_steps;
        let from_spikes = self.singular_steps.first().map(|&s| s.saturating_sub(g));
        let from_blowup = self.blew_up().then(|| self.valid_len());
        match (from_spikes, from_blowup) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// `Ō` coefficients for the RK4 stage of step `k → k+1`.
    pub fn obar_stage(&self, k: usize, stage: Stage, out: &mut [C64]) {
        let n = self.n_obar();
        let w = self.width;
        match stage {
            Stage::Start => out[..n].copy_from_slice(&self.values[k * w..k * w + n]),
            Stage::End => out[..n].copy_from_slice(&self.values[(k + 1) * w..(k + 1) * w + n]),
            Stage::Mid => {
                for (j, o) in out[..n].iter_mut().enumerate() {
                    *o = hermite_mid(
                        self.values[k * w + j],
                        self.values[(k + 1) * w + j],
                        self.derivs[k * w + j],
                        self.derivs[(k + 1) * w + j],
                        self.dt,
                    );
                }
            }
        }
    }
}

fn check_grid(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be > 0, got {dt}"),
        });
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_max",
            reason: format!("must be > 0, got {t_max}"),
        });
    }
    Ok((t_max / dt).round().max(1.0) as usize)
}

pub fn integrate_coeffs(case: Coupling, p: &ModelParams, t_max: f64, dt: f64) -> Result<CoeffTrace> {
    integrate_coeffs_with(case, p, t_max, dt, SingularityPolicy::default())
}

pub fn integrate_coeffs_with(
    case: Coupling,
    p: &ModelParams,
    t_max: f64,
    dt: f64,
    policy: SingularityPolicy,
) -> Result<CoeffTrace> {
    p.validate()?;
    let n_steps = check_grid(t_max, dt)?;
    match case {
        Coupling::WeakRwa => Ok(run(case, n_steps, dt, policy, |y: &[C64; 3]| {
            coeff_rhs_case1(&WeakCoeffs { f: *y }, p).f
        })),
        Coupling::StrongFull => Ok(run(case, n_steps, dt, policy, |y: &[C64; 7]| {
            coeff_rhs_case2(&StrongCoeffs::from_array(y), p).to_array()
        })),
    }
}

fn run<const N: usize>(
    case: Coupling,
    n_steps: usize,
    dt: f64,
    policy: SingularityPolicy,
    f: impl Fn(&[C64; N]) -> [C64; N],
) -> CoeffTrace {
    let mut values = Vec::with_capacity((n_steps + 1) * N);
    let mut derivs = Vec::with_capacity((n_steps + 1) * N);
    let mut singular_steps = Vec::new();

    let mut y = [ZERO; N];
    values.extend_from_slice(&y);
    derivs.extend_from_slice(&f(&y));

    // Current spike excursion: (step of peak, peak |F₁|).
    let mut excursion: Option<(usize, f64)> = None;
    for k in 1..=n_steps {
        let next = rk4_step_array(&y, dt, |_, s| f(s));
        let finite = next.iter().all(|z| z.is_finite());
        let big = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !finite || big > policy.blowup_threshold {
            // The trace ends at the last good point, which closes any open spike.
            let last = k - 1;
            match excursion {
                Some((peak, _)) if peak == last => singular_steps.push(peak),
                Some((peak, _)) => {
                    singular_steps.push(peak);
                    singular_steps.push(last);
                }
                None => singular_steps.push(last),
            }
            excursion = None;
            break;
        }
        y = next;
        values.extend_from_slice(&y);
        derivs.extend_from_slice(&f(&y));

        let a = y[0].norm();
        if a > policy.spike_threshold {
            match &mut excursion {
                Some((peak, h)) if a > *h => {
                    *peak = k;
                    *h = a;
                }
                Some(_) => {}
                None => excursion = Some((k, a)),
            }
        } else if let Some((peak, _)) = excursion.take() {
            singular_steps.push(peak);
        }
    }
    if let Some((peak, _)) = excursion {
        singular_steps.push(peak);
    }
    singular_steps.dedup();

    CoeffTrace {
        case,
        dt,
        n_steps,
        width: N,
        values,
        derivs,
        singular_steps,
        policy,
    }
}

/// Assemble `Ō` from a coefficient state and the basis `ops` of
/// [`SystemOperators::obar_basis`].
pub fn obar_operator(state: &CoeffState, ops: &SystemOperators) -> Result<OperatorMatrix> {
    let coeffs = state.obar_coeffs();
    if coeffs.len() != ops.obar_basis.len() {
        return Err(Error::DimensionMismatch {
            expected: ops.obar_basis.len(),
            found: coeffs.len(),
        });
    }
    if !state.is_finite() || state.max_abs() > SingularityPolicy::default().blowup_threshold {
        return Err(Error::NonFinite("O-bar coefficients"));
    }
    let mut out = OperatorMatrix::zeros(ops.dim());
    for (c, op) in coeffs.iter().zip(&ops.obar_basis) {
        if *c != ZERO {
            out = &out + &op.scale(*c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_params(gamma: f64, omega: f64, case: Coupling) -> ModelParams {
        ModelParams {
            gamma_env: gamma,
            omega_env: omega,
            ..ModelParams::with_case(case)
        }
    }

    #[test]
    fn zero_state_slopes() {
        let p = fig_params(0.5, 1.0, Coupling::WeakRwa);
        let d = coeff_rhs_case1(&WeakCoeffs::default(), &p);
        assert_eq!(d.f, [C64::new(p.alpha0(), 0.0), ZERO, ZERO]);
        let d = coeff_rhs_case2(&StrongCoeffs::default(), &p);
        assert_eq!(d.f[0], C64::new(p.alpha0(), 0.0));
        assert!(d.f[1..].iter().all(|z| *z == ZERO) && d.f7 == ZERO);
    }

    #[test]
    fn decoupled_fixed_point_solves_quadratic() {
        // g = 0 and Ω = ω_m: F₁* = (γ − √(γ² − 2Γγ)) / 2 for γ > 2Γ.
        let p = ModelParams {
            g_om: 0.0,
            g_me: 0.0,
            gamma_env: 5.0,
            omega_env: 1.0,
            ..ModelParams::default()
        };
        let root = 0.5 * (p.gamma_env - (p.gamma_env.powi(2) - 4.0 * p.alpha0()).sqrt());
        let tr = integrate_coeffs(Coupling::WeakRwa, &p, 10.0, 1e-3).unwrap();
        let f1 = tr.f1(tr.n_steps()).unwrap();
        assert!((f1 - C64::new(root, 0.0)).norm() < 1e-9, "{f1}");
        let residual = p.alpha0() - p.gamma_env * f1 + f1 * f1;
        assert!(residual.norm() < 1e-8);
    }

    #[test]
    fn short_time_slope() {
        let p = fig_params(0.5, 0.0, Coupling::WeakRwa);
        let dt = 1e-4;
        let tr = integrate_coeffs(Coupling::WeakRwa, &p, 10.0 * dt, dt).unwrap();
        let f1 = tr.f1(1).unwrap();
        // Second-order term is −½(γ + iΩ − iω_m)(Γγ/2)t².
        let c2 = C64::new(p.gamma_env, p.omega_env - p.omega_m).norm() * p.alpha0();
        assert!((f1 - C64::new(p.alpha0() * dt, 0.0)).norm() <= c2 * dt * dt);
    }

    #[test]
    fn no_bath_means_no_coefficients() {
        for case in [Coupling::WeakRwa, Coupling::StrongFull] {
            let p = ModelParams {
                coupling_gamma: 0.0,
                ..fig_params(0.5, 1.0, case)
            };
            let tr = integrate_coeffs(case, &p, 5.0, 1e-2).unwrap();
            for k in 0..=tr.n_steps() {
                assert_eq!(tr.state(k).unwrap().max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn strong_case_cross_terms_stay_zero_without_coupling() {
        let p = ModelParams {
            g_om: 0.0,
            g_me: 0.0,
            ..fig_params(0.5, 1.6, Coupling::StrongFull)
        };
        let tr = integrate_coeffs(Coupling::StrongFull, &p, 20.0, 1e-2).unwrap();
        for k in 0..=tr.n_steps() {
            let CoeffState::Strong(s) = tr.state(k).unwrap() else { unreachable!() };
            assert!(s.f[2..].iter().all(|z| *z == ZERO));
        }
    }

    #[test]
    fn strong_case_matches_weak_case_when_counter_rotating_terms_are_removed() {
        let p = fig_params(0.5, 1.8, Coupling::StrongFull);
        let dt = 1e-3;
        let weak = integrate_coeffs(Coupling::WeakRwa, &p, 10.0, dt).unwrap();
        let mut y = [ZERO; 7];
        for k in 0..weak.n_steps() {
            y = rk4_step_array(&y, dt, |_, s| {
                let mut d = coeff_rhs_case2(&StrongCoeffs::from_array(s), &p).to_array();
                for i in [1, 3, 5, 6] {
                    d[i] = ZERO;
                }
                d
            });
            let CoeffState::Weak(w) = weak.state(k + 1).unwrap() else { unreachable!() };
            for (a, b) in [(0, 0), (2, 1), (4, 2)] {
                assert!((y[a] - w.f[b]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let p = fig_params(0.5, 0.7, Coupling::WeakRwa);
        let at = |dt: f64| {
            let tr = integrate_coeffs(Coupling::WeakRwa, &p, 4.0, dt).unwrap();
            tr.f1(tr.n_steps()).unwrap()
        };
        let (a, b, c) = (at(0.04), at(0.02), at(0.01));
        let ratio = (a - b).norm() / (b - c).norm();
        assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
    }

    #[test]
    fn quiet_parameters_have_no_singularities() {
        for omega in [0.0, 1.8] {
            let p = fig_params(0.5, omega, Coupling::WeakRwa);
            let tr = integrate_coeffs(Coupling::WeakRwa, &p, 40.0, 1e-3).unwrap();
            assert!(tr.singular_steps().is_empty());
            assert_eq!(tr.first_unusable(), None);
            assert!(tr.f1(tr.n_steps()).unwrap().norm() < 1.0);
        }
    }

    #[test]
    fn resonant_bath_produces_recurring_spikes() {
        let p = fig_params(0.5, 1.0, Coupling::WeakRwa);
        let tr = integrate_coeffs(Coupling::WeakRwa, &p, 40.0, 1e-3).unwrap();
        let ts = tr.singular_times();
        assert!(ts.len() >= 3, "{ts:?}");
        let gaps: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(gaps.iter().all(|g| (g - mean).abs() < 0.2 * mean), "{gaps:?}");
        let first = tr.singular_steps()[0];
        assert!(!tr.is_usable(first + 5) && tr.is_usable(first + 6));
        assert_eq!(tr.first_unusable(), Some(first - 5));
    }

    #[test]
    fn hard_blowup_truncates_the_trace() {
        let p = fig_params(0.5, 1.0, Coupling::StrongFull);
        let tr = integrate_coeffs(Coupling::StrongFull, &p, 60.0, 1e-3).unwrap();
        assert!(tr.blew_up());
        assert!(tr.state(tr.valid_len()).is_none());
        assert!(!tr.singular_steps().is_empty());
        assert!(tr.first_unusable().unwrap() < tr.valid_len());
    }

    #[test]
    fn obar_from_states() {
        let p = ModelParams::default();
        let ops = SystemOperators::new(&p).unwrap();
        let unit = CoeffState::Weak(WeakCoeffs {
            f: [C64::new(1.0, 0.0), ZERO, ZERO],
        });
        assert_eq!(obar_operator(&unit, &ops).unwrap(), *ops.space.b());
        let zero = CoeffState::zero(Coupling::WeakRwa);
        assert_eq!(obar_operator(&zero, &ops).unwrap().max_abs(), 0.0);
        let bad = CoeffState::Weak(WeakCoeffs {
            f: [C64::new(f64::NAN, 0.0), ZERO, ZERO],
        });
        assert!(obar_operator(&bad, &ops).is_err());
        let tr = integrate_coeffs(Coupling::WeakRwa, &p, 1.0, 0.1).unwrap();
        assert_eq!(obar_operator(&tr.state(0).unwrap(), &ops).unwrap().max_abs(), 0.0);
    }
}
