//! Physical parameters, system Hamiltonians and bath functions.
//!
//! Frequencies are in units of `ω_m` and the zero-point length `x_zpf` is
//! absorbed into the couplings, so `x̂ = b + b†`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{displacement_x, FockSpace, OperatorMatrix};
use crate::C64;

/// Which system Hamiltonian (and matching `O`-operator ansatz) is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Rotating-wave hopping couplings; conserves total excitation number.
    WeakRwa,
    /// Full `(a + a†)(b + b†)` and `(b + b†)(c + c†)` couplings.
    StrongFull,
}

impl Coupling {
    pub fn default_dims(self) -> [usize; 3] {
        match self {
            Coupling::WeakRwa => [3, 3, 3],
            Coupling::StrongFull => [5, 5, 5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_o: f64,
    pub omega_m: f64,
    pub omega_e: f64,
    /// Optical detuning entering the coefficient equations; `None` means `ω_o`.
    pub delta_o: Option<f64>,
    pub g_om: f64,
    pub g_me: f64,
    /// Spectral width `γ` of the Lorentzian bath (inverse memory time).
    pub gamma_env: f64,
    /// Central frequency `Ω` of the bath.
    pub omega_env: f64,
    /// Global system–bath strength `Γ`.
    pub coupling_gamma: f64,
    pub dims: [usize; 3],
    pub case: Coupling,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega_o: 1.0,
            omega_m: 1.0,
            omega_e: 1.0,
            delta_o: None,
            g_om: 0.1,
            g_me: 0.1,
            gamma_env: 0.5,
            omega_env: 0.0,
            coupling_gamma: 1.0,
            dims: Coupling::WeakRwa.default_dims(),
            case: Coupling::WeakRwa,
        }
    }
}

impl ModelParams {
    pub fn with_case(case: Coupling) -> Self {
        Self {
            dims: case.default_dims(),
            case,
            ..Self::default()
        }
    }

    pub fn detuning_o(&self) -> f64 {
        self.delta_o.unwrap_or(self.omega_o)
    }

    /// Equal-time bath correlation `Γγ/2`.
    pub fn alpha0(&self) -> f64 {
        0.5 * self.coupling_gamma * self.gamma_env
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("omega_o", self.omega_o),
            ("omega_m", self.omega_m),
            ("omega_e", self.omega_e),
            ("g_om", self.g_om),
            ("g_me", self.g_me),
            ("gamma_env", self.gamma_env),
            ("omega_env", self.omega_env),
            ("coupling_gamma", self.coupling_gamma),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if let Some(d) = self.delta_o {
            if !d.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "delta_o",
                    reason: format!("must be finite, got {d}"),
                });
            }
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: format!("every truncation must be >= 2, got {d}"),
            });
        }
        Ok(())
    }

    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::new(self.dims)
    }
}

fn bare_part(p: &ModelParams, s: &FockSpace) -> OperatorMatrix {
    use crate::hilbert::Mode::*;
    let h = &(&s.number(Optical) * -p.omega_o) + &(&s.number(Mechanical) * p.omega_m);
    &h + &(&s.number(Electrical) * p.omega_e)
}

/// `H = −ω_o a†a + ω_m b†b + ω_e c†c − g_om(ab† + a†b) − g_me(bc† + b†c)`.
pub fn hamiltonian_case1(p: &ModelParams) -> Result<OperatorMatrix> {
    let s = p.space()?;
    let (a, b, c) = (s.a(), s.b(), s.c());
    let hop_om = &(a * &b.dagger()) + &(&a.dagger() * b);
    let hop_me = &(b * &c.dagger()) + &(&b.dagger() * c);
    let h = &bare_part(p, &s) - &(&hop_om * p.g_om);
    Ok(&h - &(&hop_me * p.g_me))
}

/// `H = −ω_o a†a + ω_m b†b + ω_e c†c − g_om(a + a†)x̂ − g_me x̂(c + c†)`.
pub fn hamiltonian_case2(p: &ModelParams) -> Result<OperatorMatrix> {
    let s = p.space()?;
    let x = displacement_x(s.b(), 1.0);
    let qa = s.a() + &s.a().dagger();
    let qc = s.c() + &s.c().dagger();
    let h = &bare_part(p, &s) - &(&(&qa * &x) * p.g_om);
    Ok(&h - &(&(&x * &qc) * p.g_me))
}

pub fn hamiltonian(p: &ModelParams) -> Result<OperatorMatrix> {
    match p.case {
        Coupling::WeakRwa => hamiltonian_case1(p),
        Coupling::StrongFull => hamiltonian_case2(p),
    }
}

/// The bath couples to the mechanical mode: `L = b`.
pub fn lindblad_operator(p: &ModelParams) -> Result<OperatorMatrix> {
    Ok(p.space()?.b().clone())
}

/// Lorentzian `J(ω) = Γγ² / (2π ((ω − Ω)² + γ²))`.
pub fn spectral_density(omega: f64, p: &ModelParams) -> f64 {
    let g = p.gamma_env;
    let d = omega - p.omega_env;
    p.coupling_gamma * g * g / (2.0 * PI * (d * d + g * g))
}

/// Ornstein–Uhlenbeck kernel `α(t,s) = (Γγ/2) exp(−γ|t−s| − iΩ(t−s))`.
pub fn correlation_alpha(t: f64, s: f64, p: &ModelParams) -> C64 {
    let tau = t - s;
    let mag = p.alpha0() * (-p.gamma_env * tau.abs()).exp();
    C64::from_polar(mag, -p.omega_env * tau)
}

/// Everything the propagators need, built once per parameter set.
#[derive(Clone, Debug)]
pub struct SystemOperators {
    pub space: FockSpace,
    pub hamiltonian: OperatorMatrix,
    pub lindblad: OperatorMatrix,
    /// Operators multiplying the `Ō` coefficients, in coefficient order:
    /// `[b, a, c]` (rotating-wave) or `[b, b†, a, a†, c, c†]` (full).
    pub obar_basis: Vec<OperatorMatrix>,
}

impl SystemOperators {
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        let space = p.space()?;
        let hamiltonian = hamiltonian(p)?;
        let lindblad = space.b().clone();
        let (a, b, c) = (space.a(), space.b(), space.c());
        let obar_basis = match p.case {
            Coupling::WeakRwa => vec![b.clone(), a.clone(), c.clone()],
            Coupling::StrongFull => vec![
                b.clone(),
                b.dagger(),
                a.clone(),
                a.dagger(),
                c.clone(),
                c.dagger(),
            ],
        };
        Ok(Self {
            space,
            hamiltonian,
            lindblad,
            obar_basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}
