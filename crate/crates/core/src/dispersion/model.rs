use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{flat, kpoint, wrap, Fft3, C64};
use crate::lattice::CouplingStencil;

const TWO_PI: f64 = 2.0 * PI;

/// `λ = α̂`, `ω = √λ` and analytic derivatives of the cosine sum.
#[derive(Clone, Debug)]
pub struct DispersionModel {
    stencil: CouplingStencil,
    scale: f64,
}

impl DispersionModel {
    pub fn new(stencil: CouplingStencil) -> Self {
        let scale = stencil
            .entries()
            .iter()
            .map(|(_, a)| a.abs())
            .sum::<f64>()
            .max(1.0);
        Self { stencil, scale }
    }

    pub fn nearest_neighbor() -> Self {
        Self::new(CouplingStencil::nearest_neighbor())
    }

    pub fn stencil(&self) -> &CouplingStencil {
        &self.stencil
    }

    /// Tolerance below which negative λ is treated as round-off.
    pub fn tol(&self) -> f64 {
        1e-12 * self.scale
    }

    pub fn lambda(&self, k: [f64; 3]) -> f64 {
        self.stencil
            .entries()
            .iter()
            .map(|(g, a)| a * (TWO_PI * dot_i(g, &k)).cos())
            .sum()
    }

    /// `ω(k)` with tiny negative λ clamped to zero.
    pub fn omega(&self, k: [f64; 3]) -> f64 {
        self.lambda(k).max(0.0).sqrt()
    }

    pub fn eval_omega(&self, k: [f64; 3]) -> Result<f64> {
        let l = self.lambda(k);
        if l < -self.tol() {
            return Err(Error::Unstable { k, value: l });
        }
        Ok(l.max(0.0).sqrt())
    }

    pub fn grad_lambda(&self, k: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (o, a) in self.stencil.entries() {
            let s = -TWO_PI * a * (TWO_PI * dot_i(o, &k)).sin();
            for nu in 0..3 {
                g[nu] += s * o[nu] as f64;
            }
        }
        g
    }

    pub fn hess_lambda(&self, k: [f64; 3]) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (o, a) in self.stencil.entries() {
            let c = -TWO_PI * TWO_PI * a * (TWO_PI * dot_i(o, &k)).cos();
            for nu in 0..3 {
                for mu in 0..3 {
                    h[nu][mu] += c * (o[nu] * o[mu]) as f64;
                }
            }
        }
        h
    }

    /// `∇ω = ∇λ / (2ω)`; refused at ω = 0.
    pub fn grad_omega(&self, k: [f64; 3]) -> Result<[f64; 3]> {
        let w = self.omega(k);
        if w == 0.0 {
            return Err(Error::SingularAtOrigin);
        }
        let g = self.grad_lambda(k);
        Ok([g[0] / (2.0 * w), g[1] / (2.0 * w), g[2] / (2.0 * w)])
    }

    /// `D²ω = D²λ/(2ω) - ∇λ∇λᵀ/(4ω³)`.
    pub fn hess_omega(&self, k: [f64; 3]) -> Result<[[f64; 3]; 3]> {
        let w = self.omega(k);
        if w == 0.0 {
            return Err(Error::SingularAtOrigin);
        }
        let g = self.grad_lambda(k);
        let h = self.hess_lambda(k);
        let mut out = [[0.0; 3]; 3];
        for nu in 0..3 {
            for mu in 0..3 {
                out[nu][mu] = h[nu][mu] / (2.0 * w) - g[nu] * g[mu] / (4.0 * w * w * w);
            }
        }
        Ok(out)
    }

    /// Macroscopic group velocity `∇ω(k)/(2π)`.
    pub fn group_velocity(&self, k: [f64; 3]) -> Result<[f64; 3]> {
        if k.iter().all(|c| (c - c.round()).abs() == 0.0) {
            return Err(Error::SingularAtOrigin);
        }
        let g = self.grad_omega(k)?;
        Ok([g[0] / TWO_PI, g[1] / TWO_PI, g[2] / TWO_PI])
    }

    /// λ on the dual grid `k_j = j/n`, as the DFT of the stencil.
    pub fn lambda_grid(&self, n: usize) -> Result<Vec<f64>> {
        self.stencil.check_fits(n)?;
        let mut a = vec![C64::default(); n * n * n];
        for (g, v) in self.stencil.entries() {
            a[flat(
                [
                    wrap(g[0] as i64, n),
                    wrap(g[1] as i64, n),
                    wrap(g[2] as i64, n),
                ],
                n,
            )] += v;
        }
        Fft3::new(n).forward(&mut a);
        Ok(a.into_iter().map(|z| z.re).collect())
    }

    /// ω on the dual grid; errors if any λ is below −tol.
    pub fn omega_grid(&self, n: usize) -> Result<Vec<f64>> {
        let tol = self.tol();
        self.lambda_grid(n)?
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                if l < -tol {
                    Err(Error::Unstable {
                        k: kpoint(i, n),
                        value: l,
                    })
                } else {
                    Ok(l.max(0.0).sqrt())
                }
            })
            .collect()
    }

    /// `(A₀)_{νμ} = -(2π)²/2 Σ_γ α(γ) γ_ν γ_μ`.
    pub fn compute_a0(&self) -> AcousticData {
        let mut a = [[0.0; 3]; 3];
        for (g, v) in self.stencil.entries() {
            for nu in 0..3 {
                for mu in 0..3 {
                    a[nu][mu] -= 0.5 * TWO_PI * TWO_PI * v * (g[nu] * g[mu]) as f64;
                }
            }
        }
        AcousticData { a0: a }
    }

    /// Checks the regular-acoustic conditions on a `resolution^3` grid.
    pub fn certify_acoustic(&self, resolution: usize) -> AcousticCertificate {
        let tol = self.tol();
        let lambda0 = self.lambda([0.0; 3]);
        let grad0 = self.grad_lambda([0.0; 3]);
        let acoustic = self.compute_a0();
        let min_eig = acoustic.min_eigenvalue();
        let mut failures = Vec::new();
        if lambda0.abs() > tol {
            failures.push(CertificateFailure::LambdaAtOrigin(lambda0));
        }
        let gnorm = norm(grad0);
        if gnorm > tol {
            failures.push(CertificateFailure::GradientAtOrigin(gnorm));
        }
        if min_eig <= tol {
            failures.push(CertificateFailure::A0NotPositive(min_eig));
        }
        let r = resolution.max(2);
        let mut min_lambda = f64::INFINITY;
        let mut min_k = [0.0; 3];
        match self.lambda_grid(r) {
            Ok(grid) => {
                for (i, l) in grid.iter().enumerate().skip(1) {
                    if *l < min_lambda {
                        min_lambda = *l;
                        min_k = kpoint(i, r);
                    }
                }
            }
            Err(_) => {
                // stencil wider than the grid: evaluate directly
                for i in 1..r * r * r {
                    let k = kpoint(i, r);
                    let l = self.lambda(k);
                    if l < min_lambda {
                        min_lambda = l;
                        min_k = k;
                    }
                }
            }
        }
        if min_lambda <= tol {
            failures.push(CertificateFailure::NotPositiveAwayFromOrigin {
                k: min_k,
                lambda: min_lambda,
            });
        }
        AcousticCertificate {
            passed: failures.is_empty(),
            failures,
            lambda_at_origin: lambda0,
            a0: acoustic.a0,
            a0_min_eigenvalue: min_eig,
            min_lambda_off_origin: min_lambda,
            argmin_k: min_k,
            grid_resolution: r,
            sound_speed_isotropic: acoustic.isotropic_speed(),
        }
    }
}

#[inline]
fn dot_i(g: &[i32; 3], k: &[f64; 3]) -> f64 {
    g[0] as f64 * k[0] + g[1] as f64 * k[1] + g[2] as f64 * k[2]
}

#[inline]
pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `A₀ = ½ D²λ(0)` and `ω₀(q) = √(q·A₀q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcousticData {
    pub a0: [[f64; 3]; 3],
}

impl AcousticData {
    pub fn omega0(&self, q: [f64; 3]) -> f64 {
        let aq = self.apply(q);
        (q[0] * aq[0] + q[1] * aq[1] + q[2] * aq[2]).max(0.0).sqrt()
    }

    pub fn apply(&self, q: [f64; 3]) -> [f64; 3] {
        let a = &self.a0;
        [
            a[0][0] * q[0] + a[0][1] * q[1] + a[0][2] * q[2],
            a[1][0] * q[0] + a[1][1] * q[1] + a[1][2] * q[2],
            a[2][0] * q[0] + a[2][1] * q[1] + a[2][2] * q[2],
        ]
    }

    /// `∇ω₀(q)/(2π) = A₀q / (2π ω₀(q))`.
    pub fn velocity(&self, q: [f64; 3]) -> Result<[f64; 3]> {
        let w = self.omega0(q);
        if w == 0.0 {
            return Err(Error::SingularAtOrigin);
        }
        let aq = self.apply(q);
        Ok([
            aq[0] / (TWO_PI * w),
            aq[1] / (TWO_PI * w),
            aq[2] / (TWO_PI * w),
        ])
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let m = Matrix3::from_fn(|i, j| self.a0[i][j]);
        let e = SymmetricEigen::new(m).eigenvalues;
        let mut v = [e[0], e[1], e[2]];
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `Some(c)` when `A₀ = (2πc)² I`, so that `ω₀(q) = 2πc|q|`.
    pub fn isotropic_speed(&self) -> Option<f64> {
        let d = self.a0[0][0];
        let m = Matrix3::from_fn(|i, j| self.a0[i][j]) - Matrix3::identity() * d;
        (d > 0.0 && m.norm() <= 1e-12 * d).then(|| d.sqrt() / TWO_PI)
    }

    pub fn to_vector(q: [f64; 3]) -> Vector3<f64> {
        Vector3::new(q[0], q[1], q[2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CertificateFailure {
    LambdaAtOrigin(f64),
    GradientAtOrigin(f64),
    A0NotPositive(f64),
    NotPositiveAwayFromOrigin { k: [f64; 3], lambda: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcousticCertificate {
    pub passed: bool,
    pub failures: Vec<CertificateFailure>,
    pub lambda_at_origin: f64,
    pub a0: [[f64; 3]; 3],
    pub a0_min_eigenvalue: f64,
    pub min_lambda_off_origin: f64,
    pub argmin_k: [f64; 3],
    pub grid_resolution: usize,
    /// `c` with `ω₀(q) = 2πc|q|` when A₀ is isotropic.
    pub sound_speed_isotropic: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nn_values() {
        let d = DispersionModel::nearest_neighbor();
        assert_eq!(d.omega([0.0; 3]), 0.0);
        assert!((d.omega([0.5, 0.0, 0.0]) - 2.0).abs() < 1e-14);
        assert!((d.omega([0.5, 0.5, 0.5]) - 12f64.sqrt()).abs() < 1e-14);
        let v = d.group_velocity([0.25, 0.0, 0.0]).unwrap();
        assert!((v[0] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
        assert!(d.group_velocity([0.0; 3]).is_err());
    }

    #[test]
    fn nn_a0_is_isotropic() {
        let d = DispersionModel::nearest_neighbor();
        let a = d.compute_a0();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { TWO_PI * TWO_PI } else { 0.0 };
                assert!((a.a0[i][j] - want).abs() < 1e-12);
            }
        }
        assert!((a.isotropic_speed().unwrap() - 1.0).abs() < 1e-14);
        assert!((a.omega0([0.3, -0.4, 0.0]) - TWO_PI * 0.5).abs() < 1e-13);
    }

    #[test]
    fn a0_matches_finite_differences() {
        let d = DispersionModel::nearest_neighbor();
        let a = d.compute_a0();
        let h = 1e-3;
        for nu in 0..3 {
            for mu in 0..3 {
                let mut e1 = [0.0; 3];
                let mut e2 = [0.0; 3];
                e1[nu] = h;
                e2[mu] = h;
                let f = |s1: f64, s2: f64| {
                    d.lambda([
                        s1 * e1[0] + s2 * e2[0],
                        s1 * e1[1] + s2 * e2[1],
                        s1 * e1[2] + s2 * e2[2],
                    ])
                };
                let fd = if nu == mu {
                    (f(1.0, 0.0) + f(-1.0, 0.0) - 2.0 * f(0.0, 0.0)) / (h * h)
                } else {
                    (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h * h)
                };
                let want = 0.5 * fd;
                let scale = a.a0[0][0];
                assert!((a.a0[nu][mu] - want).abs() <= 1e-5 * scale, "{nu}{mu}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let d = DispersionModel::nearest_neighbor();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-4;
        for _ in 0..1000 {
            let k = [
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ];
            let g = d.grad_lambda(k);
            let hs = d.hess_lambda(k);
            let gscale = norm(g).max(1.0);
            for nu in 0..3 {
                let mut kp = k;
                let mut km = k;
                kp[nu] += h;
                km[nu] -= h;
                let fd = (d.lambda(kp) - d.lambda(km)) / (2.0 * h);
                assert!((fd - g[nu]).abs() <= 1e-6 * gscale);
                let gp = d.grad_lambda(kp);
                let gm = d.grad_lambda(km);
                for mu in 0..3 {
                    let fd2 = (gp[mu] - gm[mu]) / (2.0 * h);
                    assert!((fd2 - hs[nu][mu]).abs() <= 1e-6 * 4.0 * TWO_PI * TWO_PI);
                }
            }
        }
    }

    #[test]
    fn omega_is_even() {
        let d = DispersionModel::nearest_neighbor();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let k = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let a = d.omega(k);
            let b = d.omega([-k[0], -k[1], -k[2]]);
            assert!((a - b).abs() <= 1e-14 * a.max(1.0));
            let v = d.group_velocity(k).unwrap();
            let w = d.group_velocity([-k[0], -k[1], -k[2]]).unwrap();
            for i in 0..3 {
                assert!((v[i] + w[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_matches_pointwise() {
        let d = DispersionModel::nearest_neighbor();
        let n = 8;
        let g = d.omega_grid(n).unwrap();
        for (i, w) in g.iter().enumerate() {
            assert!((w - d.omega(kpoint(i, n))).abs() < 1e-12);
        }
    }

    #[test]
    fn certification() {
        let nn = DispersionModel::nearest_neighbor();
        let c = nn.certify_acoustic(32);
        assert!(c.passed, "{:?}", c.failures);
        assert!((c.sound_speed_isotropic.unwrap() - 1.0).abs() < 1e-12);

        let mut e: Vec<_> = nn.stencil().entries().to_vec();
        e.iter_mut().find(|(g, _)| *g == [0, 0, 0]).unwrap().1 = 7.0;
        let shifted = DispersionModel::new(CouplingStencil::new(e).unwrap());
        let c = shifted.certify_acoustic(16);
        assert!(!c.passed);
        assert!(c
            .failures
            .iter()
            .any(|f| matches!(f, CertificateFailure::LambdaAtOrigin(_))));

        let one_axis = CouplingStencil::new(vec![
            ([0, 0, 0], 2.0),
            ([1, 0, 0], -1.0),
            ([-1, 0, 0], -1.0),
        ])
        .unwrap();
        let c = DispersionModel::new(one_axis).certify_acoustic(16);
        assert!(!c.passed);
        assert!(c
            .failures
            .iter()
            .any(|f| matches!(f, CertificateFailure::A0NotPositive(_))));

        let zero = DispersionModel::new(CouplingStencil::new(vec![]).unwrap());
        assert_eq!(zero.compute_a0().a0, [[0.0; 3]; 3]);
        assert!(!zero.certify_acoustic(8).passed);
    }

    #[test]
    fn unstable_stencil_rejected() {
        let s = CouplingStencil::new(vec![([0, 0, 0], -1.0)]).unwrap();
        let d = DispersionModel::new(s);
        assert!(d.eval_omega([0.1, 0.0, 0.0]).is_err());
        assert!(d.omega_grid(4).is_err());
    }
}
