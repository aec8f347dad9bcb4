use phonon_core::fft::{coords, C64};
use phonon_core::lattice::{energy_pairing, NormalMode};
use phonon_core::multiscale::MacroField;
use phonon_core::wigner::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mode(n: usize, rng: &mut ChaCha8Rng) -> NormalMode {
    let psi: Vec<C64> = (0..n * n * n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    NormalMode::from_real_space(n, &psi).unwrap()
}

fn random_gaussian(rng: &mut ChaCha8Rng) -> XAtom {
    XAtom::Gaussian {
        amplitude: C64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5)),
        center: std::array::from_fn(|_| rng.gen_range(-0.4..0.4)),
        width: rng.gen_range(0.2..0.6),
        modulation: std::array::from_fn(|_| rng.gen_range(-2i32..=2) as f64),
    }
}

fn random_trig(rng: &mut ChaCha8Rng, terms: usize, reach: i32) -> KAtom {
    KAtom::Trig {
        coeffs: (0..terms)
            .map(|_| {
                (
                    std::array::from_fn(|_| rng.gen_range(-reach..=reach)),
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect(),
    }
}

fn random_symbol(rng: &mut ChaCha8Rng) -> AdmissibleTestFunction {
    let terms = (0..rng.gen_range(1..=3))
        .map(|_| Term {
            x: random_gaussian(rng),
            k: random_trig(rng, 3, 2),
            q: QAtom::Constant {
                value: C64::new(rng.gen_range(0.5..1.5), 0.0),
            },
        })
        .collect();
    AdmissibleTestFunction::new(terms).unwrap()
}

fn spectral() -> PairingOptions {
    PairingOptions {
        method: PairingMethod::Spectral,
        drop_tol: 0.0,
    }
}

#[test]
fn marginal_identity_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    let n = 32;
    for _ in 0..20 {
        let mode = random_mode(n, &mut rng);
        let f = random_gaussian(&mut rng);
        let e = energy_pairing(&mode, |x| f.value(x));
        let r = wigner_pair(&mode, &AdmissibleTestFunction::from_x(f), 8).unwrap();
        let err = (r.value - e).norm();
        assert!(
            err <= 1e-8 * e.norm() + r.truncation_error_bound,
            "{err} vs {}",
            r.truncation_error_bound
        );
    }
}

#[test]
fn marginal_identity_holds_on_spectral_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 12;
    let mode = random_mode(n, &mut rng);
    let f = random_gaussian(&mut rng);
    let e = energy_pairing(&mode, |x| f.value(x));
    let r = wigner_pair_with(&mode, &AdmissibleTestFunction::from_x(f), 6, spectral()).unwrap();
    assert!((r.value - e).norm() <= 1e-10 * e.norm() + r.truncation_error_bound);
}

#[test]
fn wide_gaussians_approach_total_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 16;
    let mode = random_mode(n, &mut rng);
    let mass = mode.mass();
    let mut last = f64::INFINITY;
    for w in [0.5f64, 0.75, 1.0, 1.5] {
        let f = XAtom::Gaussian {
            amplitude: C64::new(w.powi(-3), 0.0),
            center: [0.0; 3],
            width: w,
            modulation: [0.0; 3],
        };
        let r = wigner_pair(&mode, &AdmissibleTestFunction::from_x(f), 4).unwrap();
        let err = (r.value - mass).norm() / mass;
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-2);
}

#[test]
fn exact_oracle_agrees_with_truncated_pairing() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let n = 16;
    for _ in 0..3 {
        let mode = random_mode(n, &mut rng);
        let a = random_symbol(&mut rng);
        let exact = wigner_pair_exact(&mode, &a).unwrap();
        let r = wigner_pair(&mode, &a, 8).unwrap();
        let err = (exact - r.value).norm();
        assert!(
            err <= r.truncation_error_bound + 1e-9 * exact.norm(),
            "{err} > {}",
            r.truncation_error_bound
        );
    }
}

#[test]
fn oracle_delta_example() {
    let n = 8;
    let mut psi = vec![C64::default(); n * n * n];
    psi[0] = C64::new(1.0, 0.0);
    let mode = NormalMode::from_real_space(n, &psi).unwrap();
    let f = XAtom::gaussian([0.1, 0.0, -0.2], 0.3);
    let g = KAtom::Trig {
        coeffs: vec![
            ([0, 0, 0], C64::new(0.7, 0.1)),
            ([1, 0, 0], C64::new(0.3, 0.0)),
        ],
    };
    let a = AdmissibleTestFunction::new(vec![Term {
        x: f.clone(),
        k: g,
        q: QAtom::one(),
    }])
    .unwrap();
    // ∫ g = constant coefficient
    let expect = f.value([0.0; 3]).conj() * C64::new(0.7, -0.1);
    let got = wigner_pair_exact(&mode, &a).unwrap();
    assert!((got - expect).norm() < 1e-12);
}

#[test]
fn oracle_is_additive_over_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8;
    let mode = random_mode(n, &mut rng);
    let a = random_symbol(&mut rng);
    let b = random_symbol(&mut rng);
    let sum = wigner_pair_exact(&mode, &a.clone().plus(b.clone())).unwrap();
    let parts = wigner_pair_exact(&mode, &a).unwrap() + wigner_pair_exact(&mode, &b).unwrap();
    assert!((sum - parts).norm() <= 1e-12 * sum.norm());
}

#[test]
fn real_space_and_spectral_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 10;
    for _ in 0..4 {
        let mode = random_mode(n, &mut rng);
        let a = random_symbol(&mut rng);
        let x = wigner_pair(&mode, &a, 5).unwrap();
        let y = wigner_pair_with(&mode, &a, 5, spectral()).unwrap();
        assert!((x.value - y.value).norm() <= 1e-10 * x.value.norm().max(1.0));
    }
}

#[test]
fn bump_symbols_match_oracle_up_to_quadrature() {
    // the half-grid sum and the 4N quadrature differ only by the k-quadrature
    // of a smooth non-trigonometric symbol
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 16;
    let mode = random_mode(n, &mut rng);
    let a = AdmissibleTestFunction::new(vec![Term {
        x: XAtom::gaussian([0.0; 3], 0.5),
        k: KAtom::Bump {
            amplitude: C64::new(1.0, 0.0),
            center: [0.0, 0.0, 0.0],
            radius: 0.12,
        },
        q: QAtom::Directional {
            r0: 1.0,
            y: DirectionFn::VonMises {
                axis: [1.0, 0.0, 0.0],
                kappa: 1.0,
                amplitude: 1.0,
            },
        },
    }])
    .unwrap();
    let exact = wigner_pair_exact(&mode, &a).unwrap();
    let r = wigner_pair(&mode, &a, 8).unwrap();
    assert!((exact - r.value).norm() <= 0.02 * exact.norm() + r.truncation_error_bound);
}

#[test]
fn p_max_and_oracle_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mode = random_mode(8, &mut rng);
    let a = AdmissibleTestFunction::from_x(XAtom::constant(1.0));
    assert!(matches!(
        wigner_pair(&mode, &a, 5),
        Err(phonon_core::Error::PMaxTooLarge { .. })
    ));
    let big = random_mode(26, &mut rng);
    assert!(matches!(
        wigner_pair_exact(&big, &a),
        Err(phonon_core::Error::OracleTooLarge(26))
    ));
}

#[test]
fn even_real_symbol_gives_real_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 16;
    let mode = random_mode(n, &mut rng);
    let a = AdmissibleTestFunction::new(vec![Term {
        x: XAtom::gaussian([0.0; 3], 0.3),
        k: KAtom::Trig {
            coeffs: vec![
                ([1, 0, 0], C64::new(0.5, 0.0)),
                ([-1, 0, 0], C64::new(0.5, 0.0)),
            ],
        },
        q: QAtom::one(),
    }])
    .unwrap();
    let r = wigner_pair(&mode, &a, 8).unwrap();
    let exact = wigner_pair_exact(&mode, &a).unwrap();
    assert!(r.value.im.abs() <= 1e-10 + r.truncation_error_bound);
    assert!(exact.im.abs() <= 1e-10 * exact.norm());
}

#[test]
fn l2_pairing_examples() {
    let m = 32;
    let w = 0.2f64;
    let g = |x: [f64; 3]| {
        let r2: f64 = x.iter().map(|v| (v - v.round()).powi(2)).sum();
        C64::new(
            (2.0 / (w * w)).powf(0.75) * (-std::f64::consts::PI * r2 / (w * w)).exp(),
            0.0,
        )
    };
    let phi = MacroField::from_fn(m, g).unwrap();
    let one = AdmissibleTestFunction::from_x(XAtom::constant(1.0));
    let r = l2_wigner_pair(&phi, &one, 1, 0).unwrap();
    assert!((r.value.re - phi.norm_sqr()).abs() < 1e-12);
    // marginal with a Gaussian in x
    let f = XAtom::gaussian([0.05, 0.0, 0.0], 0.3);
    let quad: C64 = phi
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let c = coords(i, m);
            let x = [
                c[0] as f64 / m as f64,
                c[1] as f64 / m as f64,
                c[2] as f64 / m as f64,
            ];
            f.value(x).conj() * z.norm_sqr()
        })
        .sum::<C64>()
        / (m as f64).powi(3);
    let r = l2_wigner_pair(&phi, &AdmissibleTestFunction::from_x(f), 1, 16).unwrap();
    assert!((r.value - quad).norm() <= 1e-8 + r.truncation_error_bound);
}

#[test]
fn l2_pairing_matches_gaussian_integral() {
    // φ = (2/w²)^{3/4} e^{−π|x|²/w²}, b = e^{−π|x−c|²/s²} e^{2πi p₀·x}:
    // ∫ conj(b)|φ|² is a product of 1D Gaussian integrals.
    let (m, w, s) = (64, 0.15f64, 0.25f64);
    let c = [0.05, -0.03, 0.0];
    let p0 = [1.0, 0.0, -1.0];
    let phi = MacroField::from_fn(m, |x| {
        let r2: f64 = x.iter().map(|v| (v - v.round()).powi(2)).sum();
        C64::new(
            (2.0 / (w * w)).powf(0.75) * (-std::f64::consts::PI * r2 / (w * w)).exp(),
            0.0,
        )
    })
    .unwrap();
    let b = XAtom::Gaussian {
        amplitude: C64::new(1.0, 0.0),
        center: c,
        width: s,
        modulation: p0,
    };
    let pi = std::f64::consts::PI;
    // 1D: ∫ (2/w²)^{1/2} e^{−2πx²/w²} e^{−π(x−c)²/s²} e^{−2πi p x} dx
    let mut expect = C64::new(1.0, 0.0);
    for nu in 0..3 {
        let a = 2.0 * pi / (w * w) + pi / (s * s);
        let bl = 2.0 * pi * c[nu] / (s * s);
        let cc = pi * c[nu] * c[nu] / (s * s);
        let beta = C64::new(bl, -2.0 * pi * p0[nu]);
        let v = (2.0f64 / (w * w)).sqrt() * (pi / a).sqrt() * (beta * beta / (4.0 * a) - cc).exp();
        expect *= v;
    }
    let r = l2_wigner_pair(&phi, &AdmissibleTestFunction::from_x(b), 1, 16).unwrap();
    assert!(
        (r.value - expect).norm() <= 1e-6,
        "{} vs {}",
        r.value,
        expect
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sesquilinear_in_psi(seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 8;
        let mode = random_mode(n, &mut rng);
        let a = random_symbol(&mut rng);
        let c = C64::new(re, im);
        let scaled = NormalMode::from_hat(n, mode.psi_hat_plus.iter().map(|z| z * c).collect()).unwrap();
        let x = wigner_pair(&mode, &a, 4).unwrap().value;
        let y = wigner_pair(&scaled, &a, 4).unwrap().value;
        prop_assert!((y - x * c.norm_sqr()).norm() <= 1e-10 * y.norm().max(1.0));
    }

    #[test]
    fn conjugate_linear_in_symbol(seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = random_mode(8, &mut rng);
        let f = random_gaussian(&mut rng);
        let c = C64::new(re, im);
        let scaled = match f.clone() {
            XAtom::Gaussian { amplitude, center, width, modulation } =>
                XAtom::Gaussian { amplitude: amplitude * c, center, width, modulation },
            _ => unreachable!(),
        };
        let x = wigner_pair(&mode, &AdmissibleTestFunction::from_x(f), 4).unwrap().value;
        let y = wigner_pair(&mode, &AdmissibleTestFunction::from_x(scaled), 4).unwrap().value;
        prop_assert!((y - x * c.conj()).norm() <= 1e-10 * y.norm().max(1.0));
    }

    #[test]
    fn nonnegative_symbol_gives_nonnegative_pairing(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = random_mode(12, &mut rng);
        let w = rng.gen_range(0.15..0.5);
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.4..0.4));
        // |f|² of a real Gaussian is a Gaussian of width w/√2
        let f = XAtom::gaussian(c, w / 2f64.sqrt());
        let r = wigner_pair(&mode, &AdmissibleTestFunction::from_x(f), 6).unwrap();
        prop_assert!(r.value.re >= -r.truncation_error_bound);
        prop_assert!(r.value.im.abs() <= 1e-10 * r.value.norm() + r.truncation_error_bound);
    }
}
