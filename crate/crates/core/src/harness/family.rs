//! Initial-data families whose limit triple `(μ₀, μ^H₀, φ₀)` is known in
//! closed form.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::fft::{coords, C64};
use crate::lattice::{from_normal_mode, LatticeState, NormalMode};
use crate::multiscale::{LabelKind, MacroField};
use crate::transport::{KnownLimit, ParticleMeasure};

/// Macroscopic resolution of the particle representation of `|g|² dx`.
const PARTICLE_GRID: usize = 48;

/// Periodized `L²`-normalized Gaussian `g(x) = (2/w²)^{3/4} e^{−π|x−c|²/w²}`
/// on the unit torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub center: [f64; 3],
    pub width: f64,
}

impl Envelope {
    pub fn new(center: [f64; 3], width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 0.4) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "envelope width {width} must lie in (0, 0.4]"
            )));
        }
        Ok(Self { center, width })
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let w2 = self.width * self.width;
        let axis = |i: usize| -> f64 {
            let d = x[i] - self.center[i];
            let d = d - d.round();
            (-3..=3)
                .map(|m| (-std::f64::consts::PI * (d + m as f64).powi(2) / w2).exp())
                .sum()
        };
        (2.0 / w2).powf(0.75) * axis(0) * axis(1) * axis(2)
    }

    /// `∫_{|x−c|>R} |g|²` on ℝ³: `|g|²` is a normal density with per-axis
    /// variance `w²/(4π)`, so the tail is a χ²₃ survival function.
    pub fn tail_mass(&self, radius: f64) -> f64 {
        let var = self.width * self.width / (4.0 * std::f64::consts::PI);
        let chi = ChiSquared::new(3.0).expect("three degrees of freedom");
        1.0 - chi.cdf(radius * radius / var)
    }

    fn sample(&self, n: usize, phase: impl Fn([i64; 3]) -> C64) -> Vec<C64> {
        let eps = 1.0 / n as f64;
        let amp = eps.powf(1.5);
        (0..n * n * n)
            .map(|i| {
                let g = coords(i, n);
                let x = [g[0] as f64 * eps, g[1] as f64 * eps, g[2] as f64 * eps];
                phase(g) * (amp * self.value(x))
            })
            .collect()
    }
}

fn plane_wave(k: [f64; 3]) -> impl Fn([i64; 3]) -> C64 {
    move |g| {
        let s = k[0] * g[0] as f64 + k[1] * g[1] as f64 + k[2] * g[2] as f64;
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI * s)
    }
}

fn unit(v: [f64; 3]) -> Result<[f64; 3]> {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "direction {v:?} is not normalizable"
        )));
    }
    Ok(v.map(|c| c / r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub family: InitialFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialFamily {
    /// `u(0) = 1`, all other displacements and all velocities zero.
    PointSource,
    /// `ψ₊(γ) = i ε^{3/2} g(εγ)`.
    Macroscopic { envelope: Envelope },
    /// `ψ₊(γ) = ε^{3/2} g(εγ) e^{2πi k₀·γ}` with fixed `k₀ ≠ 0`.
    Packet { k0: [f64; 3], envelope: Envelope },
    /// `ψ₊(γ) = ε^{3/2} g(εγ) e^{2πi ε^β e·γ}` with `0 < β < 1`.
    Mesoscopic {
        direction: [f64; 3],
        exponent: f64,
        envelope: Envelope,
    },
    /// `Σ √wᵢ ψᵢ` of families with disjoint spectral supports.
    Mixture { components: Vec<MixtureComponent> },
}

impl InitialFamily {
    pub fn macroscopic() -> Self {
        InitialFamily::Macroscopic {
            envelope: Envelope {
                center: [0.25, 0.0, 0.0],
                width: 0.15,
            },
        }
    }

    pub fn packet(k0: [f64; 3]) -> Self {
        InitialFamily::Packet {
            k0,
            envelope: Envelope {
                center: [-0.175, 0.0, 0.0],
                width: 0.15,
            },
        }
    }

    pub fn mesoscopic() -> Self {
        InitialFamily::Mesoscopic {
            direction: [1.0, 0.0, 0.0],
            exponent: 0.5,
            envelope: Envelope {
                center: [-0.25, 0.0, 0.0],
                width: 0.2,
            },
        }
    }

    pub fn three_way_mixture(weights: [f64; 3]) -> Self {
        InitialFamily::Mixture {
            components: vec![
                MixtureComponent {
                    weight: weights[0],
                    family: Self::macroscopic(),
                },
                MixtureComponent {
                    weight: weights[1],
                    family: Self::packet([0.25, 0.0, 0.0]),
                },
                MixtureComponent {
                    weight: weights[2],
                    family: Self::mesoscopic(),
                },
            ],
        }
    }

    /// Families by CLI name with default parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "point_source" | "point" => Ok(InitialFamily::PointSource),
            "macroscopic" | "macro" => Ok(Self::macroscopic()),
            "packet" => Ok(Self::packet([0.25, 0.0, 0.0])),
            "mesoscopic" | "meso" => Ok(Self::mesoscopic()),
            "mixture" => Ok(Self::three_way_mixture([1.0 / 3.0; 3])),
            _ => Err(Error::Unknown {
                kind: "family",
                name: name.to_string(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialFamily::PointSource => "point_source",
            InitialFamily::Macroscopic { .. } => "macroscopic",
            InitialFamily::Packet { .. } => "packet",
            InitialFamily::Mesoscopic { .. } => "mesoscopic",
            InitialFamily::Mixture { .. } => "mixture",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialFamily::PointSource => Ok(()),
            InitialFamily::Macroscopic { envelope } => {
                Envelope::new(envelope.center, envelope.width).map(|_| ())
            }
            InitialFamily::Packet { k0, envelope } => {
                Envelope::new(envelope.center, envelope.width)?;
                if k0.iter().all(|c| (c - c.round()).abs() < 1e-12) {
                    return Err(Error::InvalidParameter(
                        "packet needs k0 != 0 on the torus".into(),
                    ));
                }
                Ok(())
            }
            InitialFamily::Mesoscopic {
                direction,
                exponent,
                envelope,
            } => {
                Envelope::new(envelope.center, envelope.width)?;
                unit(*direction)?;
                if !(*exponent > 0.0 && *exponent < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "mesoscale exponent {exponent} must lie in (0, 1)"
                    )));
                }
                Ok(())
            }
            InitialFamily::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidParameter("empty mixture".into()));
                }
                for c in components {
                    if !(c.weight >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "mixture weight {}",
                            c.weight
                        )));
                    }
                    if matches!(
                        c.family,
                        InitialFamily::Mixture { .. } | InitialFamily::PointSource
                    ) {
                        return Err(Error::InvalidParameter(
                            "mixture components must be envelope families".into(),
                        ));
                    }
                    c.family.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Real-space `ψ₊` before the `k = 0` gauge fix.
    fn psi(&self, n: usize) -> Result<Vec<C64>> {
        let eps = 1.0 / n as f64;
        Ok(match self {
            InitialFamily::PointSource => {
                return Err(Error::InvalidParameter(
                    "point source is built from (u, v)".into(),
                ))
            }
            InitialFamily::Macroscopic { envelope } => envelope.sample(n, |_| C64::i()),
            InitialFamily::Packet { k0, envelope } => envelope.sample(n, plane_wave(*k0)),
            InitialFamily::Mesoscopic {
                direction,
                exponent,
                envelope,
            } => {
                let e = unit(*direction)?;
                let s = eps.powf(*exponent);
                envelope.sample(n, plane_wave(e.map(|c| c * s)))
            }
            InitialFamily::Mixture { components } => {
                let mut out = vec![C64::default(); n * n * n];
                for c in components {
                    let w = c.weight.sqrt();
                    for (o, z) in out.iter_mut().zip(c.family.psi(n)?) {
                        *o += z * w;
                    }
                }
                out
            }
        })
    }

    /// Normal mode `ψ̂₊` at `N`. `Re ψ̂₊(0)` is set to zero so that the mode is
    /// the image of real fields.
    pub fn build_mode(&self, n: usize, disp: &DispersionModel) -> Result<NormalMode> {
        self.validate()?;
        if let InitialFamily::PointSource = self {
            return crate::lattice::to_normal_mode(&self.build_initial(n, disp)?, disp);
        }
        let mut mode = NormalMode::from_real_space(n, &self.psi(n)?)?;
        mode.psi_hat_plus[0].re = 0.0;
        Ok(mode)
    }

    /// Displacements and velocities at `N`.
    pub fn build_initial(&self, n: usize, disp: &DispersionModel) -> Result<LatticeState> {
        self.validate()?;
        match self {
            InitialFamily::PointSource => {
                let mut s = LatticeState::zeros(n)?;
                s.u[0] = 1.0;
                Ok(s)
            }
            _ => from_normal_mode(&self.build_mode(n, disp)?, disp),
        }
    }

    /// `φ₀` sampled on an `m³` macroscopic grid.
    pub fn phi0(&self, m: usize) -> Result<MacroField> {
        match self {
            InitialFamily::PointSource => Err(Error::NoKnownLimit(self.name().into())),
            InitialFamily::Macroscopic { envelope } => {
                MacroField::from_fn(m, |x| C64::new(0.0, envelope.value(x)))
            }
            InitialFamily::Packet { .. } | InitialFamily::Mesoscopic { .. } => {
                MacroField::from_values(m, vec![C64::default(); m * m * m])
            }
            InitialFamily::Mixture { components } => {
                let mut out = vec![C64::default(); m * m * m];
                for c in components {
                    let w = c.weight.sqrt();
                    for (o, z) in out.iter_mut().zip(c.family.phi0(m)?.values()) {
                        *o += z * w;
                    }
                }
                MacroField::from_values(m, out)
            }
        }
    }

    /// The limit triple, with `φ₀` on an `m³` grid.
    pub fn known_limit(&self, m: usize) -> Result<KnownLimit> {
        self.validate()?;
        let mut limit = KnownLimit {
            mu: ParticleMeasure::empty(LabelKind::Wavenumber),
            muh: ParticleMeasure::empty(LabelKind::Direction),
            phi0: self.phi0(m)?,
        };
        match self {
            InitialFamily::PointSource => return Err(Error::NoKnownLimit(self.name().into())),
            InitialFamily::Macroscopic { .. } => {}
            InitialFamily::Packet { k0, envelope } => {
                limit.mu = ParticleMeasure::from_density(
                    LabelKind::Wavenumber,
                    *k0,
                    PARTICLE_GRID,
                    |x| envelope.value(x).powi(2),
                )?;
            }
            InitialFamily::Mesoscopic {
                direction,
                envelope,
                ..
            } => {
                limit.muh = ParticleMeasure::from_density(
                    LabelKind::Direction,
                    unit(*direction)?,
                    PARTICLE_GRID,
                    |x| envelope.value(x).powi(2),
                )?;
            }
            InitialFamily::Mixture { components } => {
                let mut mu = Vec::new();
                let mut muh = Vec::new();
                for c in components {
                    let l = c.family.known_limit(m)?;
                    let scaled = |m: &ParticleMeasure| {
                        m.particles()
                            .iter()
                            .map(|p| crate::transport::Particle {
                                weight: p.weight * c.weight,
                                ..*p
                            })
                            .collect::<Vec<_>>()
                    };
                    mu.extend(scaled(&l.mu));
                    muh.extend(scaled(&l.muh));
                }
                limit.mu = ParticleMeasure::new(LabelKind::Wavenumber, mu)?;
                limit.muh = ParticleMeasure::new(LabelKind::Direction, muh)?;
            }
        }
        Ok(limit)
    }

    /// Declared tail profile: an upper bound for `Σ_{|εγ−c|>R} |ψ₊(γ)|²`.
    pub fn declared_tail(&self, radius: f64) -> Result<f64> {
        match self {
            InitialFamily::PointSource => Ok(0.0),
            InitialFamily::Macroscopic { envelope }
            | InitialFamily::Packet { envelope, .. }
            | InitialFamily::Mesoscopic { envelope, .. } => Ok(envelope.tail_mass(radius)),
            InitialFamily::Mixture { .. } => Err(Error::InvalidParameter(
                "tail profile is declared per mixture component".into(),
            )),
        }
    }

    fn center(&self) -> [f64; 3] {
        match self {
            InitialFamily::Macroscopic { envelope }
            | InitialFamily::Packet { envelope, .. }
            | InitialFamily::Mesoscopic { envelope, .. } => envelope.center,
            _ => [0.0; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailAudit {
    pub family: String,
    pub n: usize,
    pub mass: f64,
    pub radii: Vec<f64>,
    /// `Σ_{|εγ−c|>R} |ψ₊|² / ‖ψ₊‖²`, torus distance.
    pub measured: Vec<f64>,
    pub declared: Vec<f64>,
}

impl TailAudit {
    /// Measured tails within the declared profile plus `slack`.
    pub fn within(&self, slack: f64) -> bool {
        self.measured
            .iter()
            .zip(&self.declared)
            .all(|(m, d)| *m <= d * (1.0 + slack) + slack)
    }
}

/// Tightness audit of a family on the macroscopic scale.
pub fn tail_audit(
    family: &InitialFamily,
    n: usize,
    disp: &DispersionModel,
    radii: &[f64],
) -> Result<TailAudit> {
    let mode = family.build_mode(n, disp)?;
    let psi = mode.psi_plus();
    let c = family.center();
    let eps = mode.eps;
    let mass = mode.mass();
    let dist: Vec<f64> = (0..psi.len())
        .map(|i| {
            let g = coords(i, n);
            let d: [f64; 3] = std::array::from_fn(|a| {
                let v = g[a] as f64 * eps - c[a];
                v - v.round()
            });
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        })
        .collect();
    let measured = radii
        .iter()
        .map(|&r| {
            psi.iter()
                .zip(&dist)
                .filter(|(_, d)| **d > r)
                .map(|(z, _)| z.norm_sqr())
                .sum::<f64>()
                / mass
        })
        .collect();
    let declared = radii
        .iter()
        .map(|&r| family.declared_tail(r))
        .collect::<Result<_>>()?;
    Ok(TailAudit {
        family: family.name().into(),
        n,
        mass,
        radii: radii.to_vec(),
        measured,
        declared,
    })
}
