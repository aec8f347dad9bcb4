use std::f64::consts::PI;

use phonon_core::dispersion::*;
use phonon_core::lattice::CouplingStencil;
use proptest::prelude::*;

fn nn() -> DispersionModel {
    DispersionModel::nearest_neighbor()
}

fn torus_point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-0.5f64..0.5)
}

fn away_from_origin() -> impl Strategy<Value = [f64; 3]> {
    torus_point().prop_filter("k != 0", |k| k.iter().map(|x| x * x).sum::<f64>() > 1e-4)
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn nn_omega_values() {
    let d = nn();
    assert_eq!(d.omega([0.0; 3]), 0.0);
    assert!((d.omega([0.5, 0.0, 0.0]) - 2.0).abs() < 1e-14);
    assert!((d.omega([0.5; 3]) - 12f64.sqrt()).abs() < 1e-14);
}

#[test]
fn nn_certifies_with_isotropic_sound_speed() {
    let cert = nn().certify_acoustic(32);
    assert!(cert.passed, "{:?}", cert.failures);
    let speed = cert.sound_speed_isotropic.unwrap();
    assert!((speed - 1.0).abs() < 1e-12);
    let a0 = nn().compute_a0();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 4.0 * PI * PI } else { 0.0 };
            assert!((a0.a0[i][j] - want).abs() < 1e-12);
        }
    }
    let q = [0.3, -1.2, 0.4];
    assert!((a0.omega0(q) - 2.0 * PI * norm(q)).abs() < 1e-12);
}

#[test]
fn shifted_stencil_fails_at_origin() {
    let mut e = CouplingStencil::nearest_neighbor().entries().to_vec();
    e.iter_mut()
        .filter(|(g, _)| *g == [0, 0, 0])
        .for_each(|(_, a)| *a = 7.0);
    let cert = DispersionModel::new(CouplingStencil::new(e).unwrap()).certify_acoustic(16);
    assert!(!cert.passed);
    assert!(cert
        .failures
        .iter()
        .any(|f| matches!(f, CertificateFailure::LambdaAtOrigin(_))));
}

#[test]
fn one_axis_stencil_has_singular_a0() {
    let s = CouplingStencil::new(vec![
        ([0, 0, 0], 2.0),
        ([1, 0, 0], -1.0),
        ([-1, 0, 0], -1.0),
    ])
    .unwrap();
    let cert = DispersionModel::new(s).certify_acoustic(16);
    assert!(!cert.passed);
    assert!(cert
        .failures
        .iter()
        .any(|f| matches!(f, CertificateFailure::A0NotPositive(_))));
}

#[test]
fn zero_stencil_has_zero_a0() {
    let s = CouplingStencil::new(vec![([0, 0, 0], 0.0)]).unwrap();
    let d = DispersionModel::new(s);
    assert!(d.compute_a0().a0.iter().flatten().all(|x| *x == 0.0));
    assert!(!d.certify_acoustic(8).passed);
}

#[test]
fn a0_matches_finite_differences_of_lambda() {
    let d = nn();
    let h = 1e-3;
    let a0 = d.compute_a0().a0;
    for i in 0..3 {
        for j in 0..3 {
            let at = |si: f64, sj: f64| {
                let mut k = [0.0; 3];
                k[i] += si * h;
                k[j] += sj * h;
                d.lambda(k)
            };
            let fd = if i == j {
                let mut kp = [0.0; 3];
                kp[i] = h;
                let km = [-kp[0], -kp[1], -kp[2]];
                (d.lambda(kp) - 2.0 * d.lambda([0.0; 3]) + d.lambda(km)) / (h * h)
            } else {
                (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
            };
            let want = 0.5 * fd;
            let scale = a0[i][i].abs();
            assert!(
                (a0[i][j] - want).abs() <= 1e-5 * scale,
                "{i}{j}: {} vs {want}",
                a0[i][j]
            );
        }
    }
}

#[test]
fn group_velocity_examples() {
    let d = nn();
    let v = d.group_velocity([0.25, 0.0, 0.0]).unwrap();
    assert!((v[0] - 0.5f64.sqrt()).abs() < 1e-14 && v[1] == 0.0 && v[2] == 0.0);
    assert!(matches!(
        d.group_velocity([0.0; 3]),
        Err(phonon_core::Error::SingularAtOrigin)
    ));
}

#[test]
fn max_group_speed_is_one_near_origin() {
    let d = nn();
    let sup = |r: usize| {
        (1..r * r * r)
            .map(|i| phonon_core::fft::kpoint(i, r))
            .map(|k| norm(d.group_velocity(k).unwrap()))
            .fold(0.0, f64::max)
    };
    // the grid point closest to 0 has speed cos(π/r)
    let coarse = sup(16);
    let fine = sup(128);
    assert!(fine <= 1.0 + 1e-3 && fine >= coarse);
    assert!(fine > 0.999);
}

#[test]
fn lemma_constants_stable_under_doubling() {
    let r = verify_lemma_bounds(&nn(), &[4000, 8000], &[1.0 / 32.0, 1.0 / 64.0], 7);
    assert!(r.stable(0.05), "{:#?}", r.constants);
    for name in ["C1", "C2", "C3", "C4", "C5"] {
        assert!(r.constant(name).is_some(), "{name} missing");
    }
}

#[test]
fn c5_degenerate_and_parallel_cases() {
    let d = nn();
    let ac = d.compute_a0();
    assert_eq!(
        omega_vs_omega0_difference(&d, 0.02, [1.0, 2.0, -1.0], [0.0; 3]),
        0.0
    );
    let q = [0.4, 0.1, -0.3];
    let p = [0.8, 0.2, -0.6];
    let lhs = omega0_second_difference(&ac, q, p);
    assert!(lhs.is_finite() && lhs <= 1e-9 * norm(p));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn omega_is_even(k in torus_point()) {
        let d = nn();
        let m = [-k[0], -k[1], -k[2]];
        prop_assert!((d.omega(k) - d.omega(m)).abs() <= 1e-14);
        prop_assert!(d.lambda(k) >= 0.0);
    }

    #[test]
    fn group_velocity_is_odd(k in away_from_origin()) {
        let d = nn();
        let a = d.group_velocity(k).unwrap();
        let b = d.group_velocity([-k[0], -k[1], -k[2]]).unwrap();
        for i in 0..3 {
            prop_assert!((a[i] + b[i]).abs() <= 1e-13);
        }
        prop_assert!(norm(a) <= 1.0 + 1e-12);
    }

    #[test]
    fn derivatives_match_central_differences(k in torus_point()) {
        let d = nn();
        let h = 1e-4;
        let g = d.grad_lambda(k);
        let hs = d.hess_lambda(k);
        let gscale = norm(g).max(1.0);
        for i in 0..3 {
            let mut kp = k;
            let mut km = k;
            kp[i] += h;
            km[i] -= h;
            let fd = (d.lambda(kp) - d.lambda(km)) / (2.0 * h);
            prop_assert!((g[i] - fd).abs() <= 1e-6 * gscale);
            let gp = d.grad_lambda(kp);
            let gm = d.grad_lambda(km);
            for j in 0..3 {
                let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                prop_assert!((hs[i][j] - fd2).abs() <= 1e-6 * 8.0 * PI * PI);
            }
        }
    }
}
