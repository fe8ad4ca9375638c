//! Non-Markovian open-system dynamics of a piezoelectric optomechanical
//! system: an optical cavity (`a`), a mechanical oscillator (`b`) and an LC
//! circuit (`c`), with the mechanical mode coupled to a Lorentzian bath.
//!
//! Two routes to the reduced state are provided and cross-checked:
//!
//! * quantum-state-diffusion trajectories driven by exact Ornstein–Uhlenbeck
//!   noise ([`trajectory`]), averaged into a density matrix;
//! * the exact time-local master equation of the rotating-wave model
//!   ([`master`]).
//!
//! Both consume the noise-free `Ō` operator whose coefficient functions are
//! integrated once per parameter set in [`coeffs`]. Pairwise entanglement is
//! measured with the negativity in [`entangle`].
//!
//! All quantities are in units of the mechanical frequency `ω_m`.

pub mod coeffs;
pub mod entangle;
pub mod error;
pub mod hilbert;
pub mod master;
pub mod model;
pub mod noise;
pub mod ode;
pub mod sparse;
pub mod trajectory;

pub use coeffs::{
    coeff_rhs_case1, coeff_rhs_case2, integrate_coeffs, integrate_coeffs_with, obar_operator,
    CoeffState, CoeffTrace, SingularityPolicy, StrongCoeffs, WeakCoeffs,
};
pub use entangle::{
    entanglement_series, fit_esd_slope, negativity, negativity_trace_norm, partial_trace, partial_transpose,
    Bipartition, EntanglementSeries, EsdCriterion, SlopeFit,
};
pub use error::{Error, Result};
pub use hilbert::{annihilation, displacement_x, embed, FockSpace, Mode, ModeSpec, OperatorMatrix};
pub use master::{
    integrate_meq, integrate_meq_on_trace, meq_rhs_case1, trace_distance, DensityMatrix,
    MeqSeries, Route,
};
pub use model::{
    correlation_alpha, hamiltonian, hamiltonian_case1, hamiltonian_case2, lindblad_operator,
    spectral_density, Coupling, ModelParams, SystemOperators,
};
pub use noise::{sample_ou_path, validate_noise_stats, NoisePath, NoiseStatsReport};
pub use trajectory::{
    ensemble_density, qsd_rhs, run_trajectory, EnsembleResult, EnsembleSettings, Normalization,
    QsdSystem, TrajectoryRecord, TrajectoryState,
};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
