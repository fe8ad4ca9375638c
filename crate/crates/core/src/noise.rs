//! Exact discrete sampling of the complex Ornstein–Uhlenbeck noise `z*_t`.
//!
//! The process is stationary with `M[z_t] = 0`, `M[z_t z_s] = 0` and
//! `M[z_t z*_s] = α(t,s)`. On a uniform grid the exponential recursion
//!
//! ```text
//! z*_{k+1} = e^{−(γ − iΩ)dt} z*_k + √((Γγ/2)(1 − e^{−2γdt})) ξ_k
//! ```
//!
//! reproduces these statistics exactly for every pair of grid points.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{correlation_alpha, ModelParams};
use crate::C64;

/// One realisation of `z*_t` on `t_i = i·dt`, `i = 0..=n_steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    pub dt: f64,
    pub values: Vec<C64>,
    pub seed: u64,
}

impl NoisePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.time(i)).collect()
    }

    /// `z*` at grid point `i`.
    #[inline]
    pub fn z_star(&self, i: usize) -> C64 {
        self.values[i]
    }
}

/// Standard complex normal: independent real and imaginary parts of variance ½.
fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn sample_ou_path(p: &ModelParams, dt: f64, n_steps: usize, seed: u64) -> Result<NoisePath> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be > 0, got {dt}"),
        });
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: "must be >= 1".into(),
        });
    }
    let var = p.alpha0();
    let decay = C64::new(-p.gamma_env * dt, p.omega_env * dt).exp();
    let kick = (var * (1.0 - (-2.0 * p.gamma_env * dt).exp())).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut z = complex_normal(&mut rng) * var.sqrt();
    values.push(z);
    for _ in 0..n_steps {
        z = decay * z + complex_normal(&mut rng) * kick;
        values.push(z);
    }
    Ok(NoisePath { dt, values, seed })
}

#[derive(Clone, Debug)]
pub struct LagStat {
    pub lag: f64,
    pub lag_steps: usize,
    /// Estimate of `M[z_{t+τ} z*_t]`.
    pub empirical: C64,
    pub analytic: C64,
    /// Standard errors of the real and imaginary parts.
    pub stderr: (f64, f64),
    /// Estimate of the pseudo-correlation `M[z_{t+τ} z_t]` (should vanish).
    pub pseudo: C64,
    pub pseudo_stderr: (f64, f64),
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct NoiseStatsReport {
    pub n_paths: usize,
    /// Largest |mean(z_t)| in units of its standard error, over all grid points.
    pub max_mean_z_sigmas: f64,
    pub lags: Vec<LagStat>,
    pub threshold_sigmas: f64,
}

impl NoiseStatsReport {
    pub fn passed(&self) -> bool {
        self.max_mean_z_sigmas <= self.threshold_sigmas && self.lags.iter().all(|l| l.pass)
    }
}

pub const MIN_VALIDATION_PATHS: usize = 10_000;

/// Mean and standard error of the real and imaginary parts of `xs`.
fn complex_mean_stderr(xs: impl Iterator<Item = C64> + Clone) -> (C64, (f64, f64)) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().fold(C64::new(0.0, 0.0), |a, x| a + x) / n;
    let (sr, si) = xs.fold((0.0, 0.0), |(sr, si), x| {
        let d = x - mean;
        (sr + d.re * d.re, si + d.im * d.im)
    });
    let se = |s: f64| (s / (n - 1.0) / n).sqrt();
    (mean, (se(sr), se(si)))
}

fn within(d: C64, se: (f64, f64), k: f64) -> bool {
    d.re.abs() <= k * se.0 && d.im.abs() <= k * se.1
}

/// Compare path statistics with the analytic kernel at the given lags.
///
/// Each path contributes one sample per lag, taken against its first grid
/// point, so the samples are independent across paths.
pub fn validate_noise_stats(paths: &[NoisePath], p: &ModelParams, lags: &[f64]) -> Result<NoiseStatsReport> {
    if paths.len() < MIN_VALIDATION_PATHS {
        return Err(Error::TooFew {
            what: "noise paths",
            needed: MIN_VALIDATION_PATHS,
            got: paths.len(),
        });
    }
    let threshold = 4.0;
    let dt = paths[0].dt;
    let len = paths.iter().map(NoisePath::len).min().unwrap_or(0);

    let mut max_mean_z_sigmas: f64 = 0.0;
    for i in 0..len {
        let (m, se) = complex_mean_stderr(paths.iter().map(|q| q.values[i].conj()));
        max_mean_z_sigmas = max_mean_z_sigmas.max(m.re.abs() / se.0).max(m.im.abs() / se.1);
    }

    let mut stats = Vec::with_capacity(lags.len());
    for &lag in lags {
        let k = (lag / dt).round() as usize;
        if k >= len {
            return Err(Error::InvalidParameter {
                name: "lags",
                reason: format!("lag {lag} exceeds path length"),
            });
        }
        let (empirical, stderr) = complex_mean_stderr(paths.iter().map(|q| q.values[k].conj() * q.values[0]));
        let (pseudo, pseudo_stderr) =
            complex_mean_stderr(paths.iter().map(|q| q.values[k].conj() * q.values[0].conj()));
        let tau = k as f64 * dt;
        let analytic = correlation_alpha(tau, 0.0, p);
        let pass = within(empirical - analytic, stderr, threshold) && within(pseudo, pseudo_stderr, threshold);
        stats.push(LagStat {
            lag: tau,
            lag_steps: k,
            empirical,
            analytic,
            stderr,
            pseudo,
            pseudo_stderr,
            pass,
        });
    }
    Ok(NoiseStatsReport {
        n_paths: paths.len(),
        max_mean_z_sigmas,
        lags: stats,
        threshold_sigmas: threshold,
    })
}
