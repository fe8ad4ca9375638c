use nalgebra::DMatrix;
use pom_qsd::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_complex(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<C64> {
    DMatrix::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn random_state(rng: &mut ChaCha8Rng, dims: [usize; 2], rank: usize) -> DensityMatrix {
    let n = dims[0] * dims[1];
    let a = random_complex(rng, n, rank);
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr, dims.to_vec(), 0.0).unwrap()
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    random_complex(rng, d, d).qr().q()
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negativity_formulas_agree(seed in any::<u64>(), d0 in 2usize..5, d1 in 2usize..5, rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_state(&mut rng, [d0, d1], rank);
        for side in 0..2 {
            let a = negativity(&r, side).unwrap();
            let b = negativity_trace_norm(&r, side).unwrap();
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            prop_assert!(a >= -1e-12);
        }
    }

    #[test]
    fn negativity_does_not_depend_on_transposed_side(seed in any::<u64>(), d0 in 2usize..5, d1 in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_state(&mut rng, [d0, d1], 2);
        let (a, b) = (negativity(&r, 0).unwrap(), negativity(&r, 1).unwrap());
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn negativity_is_local_unitary_invariant(seed in any::<u64>(), d0 in 2usize..4, d1 in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_state(&mut rng, [d0, d1], 1);
        let u = kron(&random_unitary(&mut rng, d0), &random_unitary(&mut rng, d1));
        let rotated = DensityMatrix::new(&u * r.matrix() * u.adjoint(), vec![d0, d1], 0.0).unwrap();
        let (a, b) = (negativity(&r, 0).unwrap(), negativity(&rotated, 0).unwrap());
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn separable_mixtures_have_zero_negativity(seed in any::<u64>(), terms in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d0, d1) = (3, 3);
        let mut m = DMatrix::zeros(d0 * d1, d0 * d1);
        for _ in 0..terms {
            let a = random_complex(&mut rng, d0, 1);
            let b = random_complex(&mut rng, d1, 1);
            let pa = &a * a.adjoint() / C64::from(a.norm_squared());
            let pb = &b * b.adjoint() / C64::from(b.norm_squared());
            m += kron(&pa, &pb) * C64::from(rng.random::<f64>() + 0.1);
        }
        let tr = m.trace();
        let r = DensityMatrix::new(m / tr, vec![d0, d1], 0.0).unwrap();
        prop_assert!(negativity(&r, 0).unwrap() < 1e-10);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), d0 in 1usize..5, d1 in 1usize..5, side in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_complex(&mut rng, d0 * d1, d0 * d1);
        let twice = partial_transpose(&partial_transpose(&m, [d0, d1], side).unwrap(), [d0, d1], side).unwrap();
        prop_assert_eq!(twice, m.clone());
        // Transposing both sides is the full transpose.
        let both = partial_transpose(&partial_transpose(&m, [d0, d1], 0).unwrap(), [d0, d1], 1).unwrap();
        prop_assert_eq!(both, m.transpose());
    }

    #[test]
    fn hamiltonians_are_hermitian(
        w in prop::array::uniform3(0.0f64..3.0),
        g in prop::array::uniform2(0.0f64..0.5),
        strong in any::<bool>(),
    ) {
        let case = if strong { Coupling::StrongFull } else { Coupling::WeakRwa };
        let p = ModelParams {
            omega_o: w[0],
            omega_m: w[1],
            omega_e: w[2],
            g_om: g[0],
            g_me: g[1],
            dims: [3, 4, 2],
            ..ModelParams::with_case(case)
        };
        let h = hamiltonian(&p).unwrap();
        let m = h.matrix();
        prop_assert!((m - m.adjoint()).camax() < 1e-14);
    }

    #[test]
    fn partial_trace_preserves_trace_and_hermiticity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_complex(&mut rng, 27, 3);
        let m = &a * a.adjoint();
        let tr = m.trace();
        let r = DensityMatrix::new(m / tr, vec![3, 3, 3], 0.0).unwrap();
        for mode in [Mode::Optical, Mode::Mechanical, Mode::Electrical] {
            let red = partial_trace(&r, mode).unwrap();
            prop_assert!((red.trace() - 1.0).abs() < 1e-12);
            prop_assert!(red.hermiticity_error() < 1e-14);
            prop_assert!(red.min_eigenvalue() > -1e-12);
        }
    }
}

/// Maps the real line onto (−π/2, π/2) through `ω = Ω + γ tan θ`, which
/// turns the Lorentzian into a constant; composite Simpson on the angle.
fn lorentzian_integral(p: &ModelParams, n: usize) -> f64 {
    let (a, b) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let h = (b - a) / n as f64;
    let f = |th: f64| {
        let c = th.cos();
        if c.abs() < 1e-300 {
            // Limit of J(ω) dω/dθ at the endpoints.
            return p.coupling_gamma * p.gamma_env / (2.0 * std::f64::consts::PI);
        }
        let w = p.omega_env + p.gamma_env * th.tan();
        spectral_density(w, p) * p.gamma_env / (c * c)
    };
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn spectral_density_integrates_to_equal_time_correlation() {
    for (gamma, omega, big) in [(0.5, 0.0, 1.0), (5.0, 1.8, 1.0), (0.1, 1.0, 2.5)] {
        let p = ModelParams {
            gamma_env: gamma,
            omega_env: omega,
            coupling_gamma: big,
            ..ModelParams::default()
        };
        let integral = lorentzian_integral(&p, 2000);
        assert!((integral - p.alpha0()).abs() < 1e-12 * p.alpha0().max(1.0), "{integral} vs {}", p.alpha0());
    }
}

/// `α(τ) = ∫ J(ω) e^{−iωτ} dω`, evaluated by brute-force midpoint quadrature
/// on a window wide enough that the neglected tails are below 1e-4 · α₀.
#[test]
fn correlation_is_fourier_transform_of_spectral_density() {
    for (gamma, omega) in [(0.5, 0.0), (1.0, 1.8), (2.0, 1.0)] {
        let p = ModelParams {
            gamma_env: gamma,
            omega_env: omega,
            ..ModelParams::default()
        };
        let half = 8000.0 * gamma;
        let dw = gamma / 100.0;
        let n = (2.0 * half / dw) as usize;
        let taus: Vec<f64> = (-10..=10).map(|i| 0.5 * i as f64 / gamma).collect();
        let mut worst: f64 = 0.0;
        for &tau in &taus {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let w = omega - half + (k as f64 + 0.5) * dw;
                acc += C64::from_polar(spectral_density(w, &p) * dw, -w * tau);
            }
            let exact = correlation_alpha(tau, 0.0, &p);
            worst = worst.max((acc - exact).norm() / p.alpha0());
        }
        assert!(worst < 1e-3, "γ={gamma} Ω={omega}: relative error {worst}");
    }
}
