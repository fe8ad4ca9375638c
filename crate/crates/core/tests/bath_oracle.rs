mod support;

use pom_qsd::*;
use support::bath::{reduced_states, DiscreteBath};

#[test]
fn discrete_bath_reproduces_the_kernel_at_short_lags() {
    let p = ModelParams {
        gamma_env: 1.0,
        ..ModelParams::default()
    };
    let bath = DiscreteBath::lorentzian(&p, 600, 40.0);
    for tau in [0.5, 1.0, 2.0] {
        let want = correlation_alpha(tau, 0.0, &p);
        assert!((bath.correlation(tau) - want).norm() < 2e-2 * p.alpha0(), "tau {tau}");
    }
}

#[test]
fn oracle_states_are_normalised_and_hermitian() {
    let p = ModelParams {
        gamma_env: 1.0,
        ..ModelParams::default()
    };
    let bath = DiscreteBath::lorentzian(&p, 60, 8.0);
    for r in reduced_states(&p, &bath, Mode::Optical, Mode::Electrical, &[0.0, 3.0, 11.0]) {
        assert!((r.trace() - 1.0).abs() < 1e-12, "{}", r.trace());
        assert!(r.hermiticity_error() < 1e-13);
        assert!(r.min_eigenvalue() > -1e-12);
    }
}

#[test]
fn without_coupling_the_oracle_is_the_closed_system() {
    let p = ModelParams {
        coupling_gamma: 0.0,
        g_om: 0.25,
        ..ModelParams::default()
    };
    let bath = DiscreteBath::lorentzian(&p, 20, 8.0);
    let times = [0.0, 2.0, 7.5];
    let oracle = reduced_states(&p, &bath, Mode::Optical, Mode::Electrical, &times);
    let meq = integrate_meq(&p, &DensityMatrix::fock(&p.space().unwrap(), [1, 0, 1]).unwrap(), 7.5, 1e-3, 500, &EnsembleSettings::default()).unwrap();
    for (o, t) in oracle.iter().zip(times) {
        let m = meq.states.iter().find(|s| (s.time - t).abs() < 1e-9).unwrap();
        assert!(trace_distance(o, m).unwrap() < 1e-8);
    }
}
