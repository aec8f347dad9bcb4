//! Closed-form solutions of the three limit equations and their comparison
//! with the lattice dynamics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::{AcousticData, DispersionModel};
use crate::error::{Error, Result};
use crate::fft::{coords, kpoint, C64};
use crate::lattice::{evolve_spectral, NormalMode};
use crate::multiscale::{split_three_scale, LabelKind, MacroField};
use crate::wigner::{
    l2_wigner_pair_with, wigner_pair_with, AdmissibleTestFunction, PairingOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub x: [f64; 3],
    /// Wave number `k ∈ T³∖{0}` or direction `q̂ ∈ S²`.
    pub label: [f64; 3],
    pub weight: f64,
}

/// A finite sum of weighted point masses on (x, label) space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleMeasure {
    kind: LabelKind,
    particles: Vec<Particle>,
}

fn torus(k: [f64; 3]) -> [f64; 3] {
    k.map(|v| v - v.round())
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl ParticleMeasure {
    pub fn new(kind: LabelKind, particles: Vec<Particle>) -> Result<Self> {
        for p in &particles {
            if !(p.weight >= 0.0) || p.x.iter().chain(&p.label).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("bad particle {p:?}")));
            }
            match kind {
                LabelKind::Wavenumber => {
                    if norm(torus(p.label)) == 0.0 {
                        return Err(Error::SingularAtOrigin);
                    }
                }
                LabelKind::Direction => {
                    let r = norm(p.label);
                    if (r - 1.0).abs() > 1e-12 {
                        return Err(Error::NonUnitLabel(r));
                    }
                }
            }
        }
        Ok(Self { kind, particles })
    }

    pub fn empty(kind: LabelKind) -> Self {
        Self {
            kind,
            particles: Vec::new(),
        }
    }

    /// `density(x) dx ⊗ δ_label`, sampled at the `m³` points `j/m`, `j` signed.
    pub fn from_density(
        kind: LabelKind,
        label: [f64; 3],
        m: usize,
        density: impl Fn([f64; 3]) -> f64,
    ) -> Result<Self> {
        let w = 1.0 / (m as f64).powi(3);
        let particles = (0..m * m * m)
            .map(|i| {
                let c = coords(i, m);
                let x = [
                    c[0] as f64 / m as f64,
                    c[1] as f64 / m as f64,
                    c[2] as f64 / m as f64,
                ];
                Particle {
                    x,
                    label,
                    weight: density(x) * w,
                }
            })
            .filter(|p| p.weight > 0.0)
            .collect();
        Self::new(kind, particles)
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn mass(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let m = self.mass();
        let mut c = [0.0; 3];
        for p in &self.particles {
            for (ci, xi) in c.iter_mut().zip(p.x) {
                *ci += p.weight * xi / m;
            }
        }
        c
    }

    /// `∫ conj(b(x, k, k/|k|)) dμ` for wave-number labels and
    /// `∫ conj(b(x, 0, q̂)) dμ` for directions, with `b` the radial limit.
    pub fn pair(&self, a: &AdmissibleTestFunction) -> C64 {
        self.particles
            .iter()
            .map(|p| {
                let v = match self.kind {
                    LabelKind::Wavenumber => {
                        let k = torus(p.label);
                        let r = norm(k);
                        a.radial_limit(p.x, k, [k[0] / r, k[1] / r, k[2] / r])
                    }
                    LabelKind::Direction => a.radial_limit(p.x, [0.0; 3], p.label),
                };
                v.conj() * p.weight
            })
            .sum()
    }

    fn shifted(&self, v: impl Fn([f64; 3]) -> Result<[f64; 3]>, t: f64) -> Result<Self> {
        let particles = self
            .particles
            .iter()
            .map(|p| {
                let u = v(p.label)?;
                Ok(Particle {
                    x: [p.x[0] + t * u[0], p.x[1] + t * u[1], p.x[2] + t * u[2]],
                    ..*p
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: self.kind,
            particles,
        })
    }
}

/// `x ↦ x + t∇ω(k)/(2π)`.
pub fn push_mu(
    measure: &ParticleMeasure,
    disp: &DispersionModel,
    t: f64,
) -> Result<ParticleMeasure> {
    if measure.kind != LabelKind::Wavenumber {
        return Err(Error::InvalidParameter(
            "push_mu needs wave-number labels".into(),
        ));
    }
    measure.shifted(|k| disp.group_velocity(k), t)
}

/// `x ↦ x + t A₀q̂ / (2π ω₀(q̂))`.
pub fn push_muh(
    measure: &ParticleMeasure,
    acoustic: &AcousticData,
    t: f64,
) -> Result<ParticleMeasure> {
    if measure.kind != LabelKind::Direction {
        return Err(Error::InvalidParameter(
            "push_muh needs direction labels".into(),
        ));
    }
    measure.shifted(|q| acoustic.velocity(q), t)
}

/// `φ̂_t(q) = e^{−itω₀(q)} φ̂₀(q)`.
pub fn evolve_phi(phi: &MacroField, acoustic: &AcousticData, t: f64) -> MacroField {
    phi.evolve(acoustic, t)
}

/// `max_q |φ̂(t+dt) − 2φ̂(t) + φ̂(t−dt)|/dt² + ω₀(q)² φ̂(t)|`, the residual of
/// `∂²_t φ = div((2π)^{-2} A₀ ∇φ)` in Fourier variables.
pub fn wave_residual(phi: &MacroField, acoustic: &AcousticData, t: f64, dt: f64) -> f64 {
    let a = evolve_phi(phi, acoustic, t - dt);
    let b = evolve_phi(phi, acoustic, t);
    let c = evolve_phi(phi, acoustic, t + dt);
    let m = phi.m();
    (0..m * m * m)
        .map(|i| {
            let q = coords(i, m);
            let w = acoustic.omega0([q[0] as f64, q[1] as f64, q[2] as f64]);
            let d2 = (c.hat()[i] - 2.0 * b.hat()[i] + a.hat()[i]) / (dt * dt);
            (d2 + b.hat()[i] * w * w).norm()
        })
        .fold(0.0, f64::max)
}

/// The triple of limit objects of an initial-data family.
#[derive(Clone, Debug)]
pub struct KnownLimit {
    pub mu: ParticleMeasure,
    pub muh: ParticleMeasure,
    pub phi0: MacroField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub n: usize,
    pub t: f64,
    pub lhs: C64,
    pub rhs: C64,
    pub rhs_mu: C64,
    pub rhs_muh: C64,
    pub rhs_phi: C64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub truncation_error_bound: f64,
    /// `|Σ parts − full| / |full|` of the three-scale split, when requested.
    pub split_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
}

impl LimitTable {
    /// Whether `abs_error` never increases along the rows.
    pub fn monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].abs_error <= w[0].abs_error)
    }

    pub fn last(&self) -> Option<&LimitRow> {
        self.rows.last()
    }
}

/// Compares `⟨a, W^ε[ψ_{t/ε}]⟩` with the limit prediction
/// `⟨a, μ_t⟩ + ⟨a, μ^H_t⟩ + ⟨a₀, W¹[φ_t]⟩` for each `N`. The prediction does
/// not depend on `N` and is evaluated once.
#[allow(clippy::too_many_arguments)]
pub fn verify_limit(
    family: impl Fn(usize) -> Result<NormalMode>,
    limit: &KnownLimit,
    disp: &DispersionModel,
    a: &AdmissibleTestFunction,
    t: f64,
    n_list: &[usize],
    rho: Option<f64>,
    p_max: usize,
    opts: PairingOptions,
) -> Result<LimitTable> {
    let acoustic = disp.compute_a0();
    let rhs_mu = push_mu(&limit.mu, disp, t)?.pair(a);
    let rhs_muh = push_muh(&limit.muh, &acoustic, t)?.pair(a);
    let phi_t = evolve_phi(&limit.phi0, &acoustic, t);
    let rhs_phi = if phi_t.norm_sqr() == 0.0 {
        Default::default()
    } else {
        l2_wigner_pair_with(&phi_t, a, 1, p_max.min(phi_t.m() / 2), opts)?
    };
    let rhs = rhs_mu + rhs_muh + rhs_phi.value;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mode = family(n)?;
        let evolved = evolve_spectral(&mode, disp, t * n as f64)?;
        let lhs = wigner_pair_with(&evolved, a, p_max, opts)?;
        let split_residual = match rho {
            Some(r) => Some(
                split_three_scale(&mode, disp, a, r, &limit.phi0, t, p_max, opts)?
                    .identity_residual(),
            ),
            None => None,
        };
        let abs_error = (lhs.value - rhs).norm();
        rows.push(LimitRow {
            n,
            t,
            lhs: lhs.value,
            rhs,
            rhs_mu,
            rhs_muh,
            rhs_phi: rhs_phi.value,
            abs_error,
            rel_error: abs_error / rhs.norm(),
            truncation_error_bound: lhs.truncation_error_bound + rhs_phi.truncation_error_bound,
            split_residual,
        });
    }
    Ok(LimitTable { rows })
}

/// Energy centroid of `|ψ₊(γ)|²` in macroscopic units. Each axis is
/// measured in a frame centred on the circular mean of the density, so a
/// packet straddling a box face is not split in two. The result lies within
/// half a box of the circular mean.
pub fn energy_centroid(mode: &NormalMode) -> [f64; 3] {
    let n = mode.n;
    let eps = mode.eps;
    let psi = mode.psi_plus();
    let mut c = [0.0; 3];
    for (ax, out) in c.iter_mut().enumerate() {
        let mut phase = C64::default();
        for (i, z) in psi.iter().enumerate() {
            let x = coords(i, n)[ax] as f64 * eps;
            phase += C64::from_polar(z.norm_sqr(), 2.0 * PI * x);
        }
        let centre = phase.arg() / (2.0 * PI);
        let (mut m, mut first) = (0.0, 0.0);
        for (i, z) in psi.iter().enumerate() {
            let x = coords(i, n)[ax] as f64 * eps;
            let w = z.norm_sqr();
            m += w;
            first += w * wrap_unit(x - centre);
        }
        *out = centre + first / m;
    }
    c
}

/// `x` reduced to `[−½, ½)`.
fn wrap_unit(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

/// `(centroid at t/ε − centroid at 0) / t`. The path is followed in steps
/// short enough that no step moves the centroid by half a box, so crossing a
/// box face does not alias the displacement.
pub fn centroid_velocity(mode: &NormalMode, disp: &DispersionModel, t: f64) -> Result<[f64; 3]> {
    let n = mode.n;
    let vmax = (1..n * n * n)
        .map(|i| disp.group_velocity(kpoint(i, n)).map(norm))
        .try_fold(0.0f64, |a, v| v.map(|v| a.max(v)))?;
    let steps = ((t.abs() * vmax / 0.25).ceil() as usize).max(1);
    let mut prev = energy_centroid(mode);
    let mut moved = [0.0; 3];
    for s in 1..=steps {
        let ts = t * s as f64 / steps as f64;
        let c = energy_centroid(&evolve_spectral(mode, disp, ts / mode.eps)?);
        for ax in 0..3 {
            moved[ax] += wrap_unit(c[ax] - prev[ax]);
        }
        prev = c;
    }
    Ok(moved.map(|d| d / t))
}

/// Speed of sound along `q̂` in macroscopic units.
pub fn sound_speed(acoustic: &AcousticData, qh: [f64; 3]) -> Result<f64> {
    Ok(norm(acoustic.velocity(qh)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(kind: LabelKind, x: [f64; 3], label: [f64; 3]) -> ParticleMeasure {
        ParticleMeasure::new(
            kind,
            vec![Particle {
                x,
                label,
                weight: 1.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn push_mu_examples() {
        let d = DispersionModel::nearest_neighbor();
        let m = one(LabelKind::Wavenumber, [0.0; 3], [0.25, 0.0, 0.0]);
        assert_eq!(push_mu(&m, &d, 0.0).unwrap(), m);
        let p = push_mu(&m, &d, 2.0).unwrap();
        assert!((p.particles()[0].x[0] - 2f64.sqrt()).abs() < 1e-12);
        let a = push_mu(&push_mu(&m, &d, 0.3).unwrap(), &d, 0.9).unwrap();
        let b = push_mu(&m, &d, 1.2).unwrap();
        assert!((a.particles()[0].x[0] - b.particles()[0].x[0]).abs() < 1e-15);
        assert!(ParticleMeasure::new(
            LabelKind::Wavenumber,
            vec![Particle {
                x: [0.0; 3],
                label: [1.0, 0.0, 0.0],
                weight: 1.0
            }]
        )
        .is_err());
    }

    #[test]
    fn push_muh_examples() {
        let ac = DispersionModel::nearest_neighbor().compute_a0();
        let m = one(LabelKind::Direction, [0.0; 3], [1.0, 0.0, 0.0]);
        let p = push_muh(&m, &ac, 2.0).unwrap();
        assert!((p.particles()[0].x[0] - 2.0).abs() < 1e-12);
        assert_eq!(push_muh(&m, &ac, 0.0).unwrap(), m);
        assert!(matches!(
            ParticleMeasure::new(
                LabelKind::Direction,
                vec![Particle {
                    x: [0.0; 3],
                    label: [2.0, 0.0, 0.0],
                    weight: 1.0
                }]
            ),
            Err(Error::NonUnitLabel(_))
        ));
    }

    #[test]
    fn evolve_phi_is_unitary_and_solves_wave_equation() {
        let ac = DispersionModel::nearest_neighbor().compute_a0();
        let phi = MacroField::from_fn(16, |x| {
            C64::new((-30.0 * (x[0] * x[0] + x[1] * x[1])).exp(), x[2])
        })
        .unwrap();
        let p = evolve_phi(&phi, &ac, 10.0);
        assert!((p.norm_sqr() - phi.norm_sqr()).abs() <= 1e-12 * phi.norm_sqr());
        assert_eq!(evolve_phi(&phi, &ac, 0.0).hat(), phi.hat());
        let r1 = wave_residual(&phi, &ac, 0.3, 1e-3);
        let r2 = wave_residual(&phi, &ac, 0.3, 5e-4);
        assert!(r2 < r1 / 3.0, "{r1} {r2}");
    }
}
