//! Admissible multiscale test functions `a(x,k,q) = Σ_i f_i(x) g_i(k) h_i(q)`.
//!
//! The x-atoms live on the unit macroscopic torus: a Gaussian atom stands for
//! its periodization, so its Fourier coefficients at integer `p` are the
//! closed-form Gaussian transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::C64;
use crate::multiscale::{cutoff, ramp};

const TWO_PI: f64 = 2.0 * PI;

/// Spatial atom `f(x)` on the unit torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XAtom {
    /// Periodization of `A·exp(−π|x−c|²/w²)·e^{2πi p₀·x}`.
    Gaussian {
        amplitude: C64,
        center: [f64; 3],
        width: f64,
        #[serde(default)]
        modulation: [f64; 3],
    },
    Constant {
        value: C64,
    },
    /// `Σ c_p e^{2πi p·x}`.
    Trig {
        coeffs: Vec<([i32; 3], C64)>,
    },
}

/// Per-axis factor `w e^{−πw²(p−p₀)²} e^{−2πi(p−p₀)c}` of a Gaussian atom.
#[inline]
fn gauss_coeff(p: f64, c: f64, w: f64, p0: f64) -> C64 {
    let d = p - p0;
    C64::from_polar(w * (-PI * w * w * d * d).exp(), -TWO_PI * d * c)
}

/// Periodized 1D factor `Σ_n e^{−π(x+n−c)²/w²} e^{2πi p₀ (x+n)}`.
fn gauss_periodic(x: f64, c: f64, w: f64, p0: f64) -> C64 {
    if w <= 1.0 {
        let r = (6.0 * w).ceil() as i64 + 2;
        let base = (x - c).round() as i64;
        (-r..=r)
            .map(|j| {
                let n = (j - base) as f64;
                let d = x + n - c;
                C64::from_polar((-PI * d * d / (w * w)).exp(), TWO_PI * p0 * (x + n))
            })
            .sum()
    } else {
        // dual sum over Fourier coefficients
        let r = (6.0 / w).ceil() as i64 + 2;
        let base = p0.round() as i64;
        (base - r..=base + r)
            .map(|p| gauss_coeff(p as f64, c, w, p0) * C64::from_polar(1.0, TWO_PI * p as f64 * x))
            .sum()
    }
}

/// `(Σ_{all p} e^{−πw²(p−p₀)²}, Σ_{|p|≤P} e^{−πw²(p−p₀)²})`.
fn gauss_axis_mass(w: f64, p0: f64, pmax: i64) -> (f64, f64) {
    let r = (8.0 / w).ceil() as i64 + 2;
    let base = p0.round() as i64;
    let lo = (base - r).min(-pmax);
    let hi = (base + r).max(pmax);
    let mut all = 0.0;
    let mut inside = 0.0;
    for p in lo..=hi {
        let d = p as f64 - p0;
        let v = (-PI * w * w * d * d).exp();
        all += v;
        if p.abs() <= pmax {
            inside += v;
        }
    }
    // terms beyond ±r are below e^{−64π}; bound them by a geometric tail
    (all + 2.0 * (-PI * 64.0).exp(), inside)
}

impl XAtom {
    pub fn gaussian(center: [f64; 3], width: f64) -> Self {
        XAtom::Gaussian {
            amplitude: C64::new(1.0, 0.0),
            center,
            width,
            modulation: [0.0; 3],
        }
    }

    pub fn constant(value: f64) -> Self {
        XAtom::Constant {
            value: C64::new(value, 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            XAtom::Gaussian {
                amplitude,
                center,
                width,
                modulation,
            } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::NotAdmissible(format!("gaussian width {width}")));
                }
                if !amplitude.is_finite() || center.iter().chain(modulation).any(|v| !v.is_finite())
                {
                    return Err(Error::NonFinite("gaussian atom"));
                }
            }
            XAtom::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::NonFinite("constant atom"));
                }
            }
            XAtom::Trig { coeffs } => {
                if coeffs.iter().any(|(_, c)| !c.is_finite()) {
                    return Err(Error::NonFinite("trig atom"));
                }
            }
        }
        Ok(())
    }

    /// Value of the (periodized) atom at `x`.
    pub fn value(&self, x: [f64; 3]) -> C64 {
        match self {
            XAtom::Gaussian {
                amplitude,
                center,
                width,
                modulation,
            } => {
                let mut v = *amplitude;
                for nu in 0..3 {
                    v *= gauss_periodic(x[nu], center[nu], *width, modulation[nu]);
                }
                v
            }
            XAtom::Constant { value } => *value,
            XAtom::Trig { coeffs } => coeffs
                .iter()
                .map(|(p, c)| {
                    c * C64::from_polar(
                        1.0,
                        TWO_PI * (p[0] as f64 * x[0] + p[1] as f64 * x[1] + p[2] as f64 * x[2]),
                    )
                })
                .sum(),
        }
    }

    /// Torus Fourier coefficient `f̂(p) = ∫ e^{−2πip·x} f(x) dx`.
    pub fn fourier(&self, p: [i64; 3]) -> C64 {
        match self {
            XAtom::Gaussian {
                amplitude,
                center,
                width,
                modulation,
            } => {
                let mut v = *amplitude;
                for nu in 0..3 {
                    v *= gauss_coeff(p[nu] as f64, center[nu], *width, modulation[nu]);
                }
                v
            }
            XAtom::Constant { value } => {
                if p == [0, 0, 0] {
                    *value
                } else {
                    C64::default()
                }
            }
            XAtom::Trig { coeffs } => coeffs
                .iter()
                .filter(|(q, _)| [q[0] as i64, q[1] as i64, q[2] as i64] == p)
                .map(|(_, c)| *c)
                .sum(),
        }
    }

    /// The truncated atom `Σ_{|p|∞≤P} f̂(p) e^{2πip·x}` written as a sum of
    /// products of one-dimensional factors.
    pub(crate) fn truncated_products(&self, pmax: usize) -> Vec<(C64, [AxisFactor; 3])> {
        let pm = pmax as i64;
        match self {
            XAtom::Gaussian {
                amplitude,
                center,
                width,
                modulation,
            } => vec![(
                *amplitude,
                std::array::from_fn(|nu| AxisFactor::Gauss {
                    c: center[nu],
                    w: *width,
                    p0: modulation[nu],
                    pmax: pm,
                }),
            )],
            XAtom::Constant { value } => vec![(*value, [AxisFactor::One; 3])],
            XAtom::Trig { coeffs } => coeffs
                .iter()
                .filter(|(p, _)| p.iter().all(|c| (*c as i64).abs() <= pm))
                .map(|(p, c)| (*c, std::array::from_fn(|nu| AxisFactor::Wave(p[nu] as i64))))
                .collect(),
        }
    }

    /// `Σ_{|p|∞ ≤ P} f̂(p) e^{2πip·x}`.
    pub fn truncated_value(&self, x: [f64; 3], pmax: usize) -> C64 {
        self.truncated_products(pmax)
            .iter()
            .map(|(amp, ax)| amp * ax[0].eval(x[0]) * ax[1].eval(x[1]) * ax[2].eval(x[2]))
            .sum()
    }

    /// `Σ_{|p|∞ > P} |f̂(p)|`.
    pub fn fourier_tail(&self, pmax: usize) -> f64 {
        let pm = pmax as i64;
        match self {
            XAtom::Gaussian {
                amplitude,
                width,
                modulation,
                ..
            } => {
                let mut all = 1.0;
                let mut inside = 1.0;
                for p0 in modulation {
                    let (a, i) = gauss_axis_mass(*width, *p0, pm);
                    all *= a;
                    inside *= i;
                }
                amplitude.norm() * width.powi(3) * (all - inside).max(0.0)
            }
            XAtom::Constant { .. } => 0.0,
            XAtom::Trig { coeffs } => coeffs
                .iter()
                .filter(|(p, _)| p.iter().any(|c| (*c as i64).abs() > pm))
                .map(|(_, c)| c.norm())
                .sum(),
        }
    }

    /// `Σ_p |f̂(p)|`, an upper bound for `sup |f|`.
    pub fn fourier_l1(&self) -> f64 {
        self.fourier_tail(0) + self.fourier([0, 0, 0]).norm()
    }
}

/// One-dimensional factor of a truncated x-atom.
#[derive(Clone, Copy, Debug)]
pub(crate) enum AxisFactor {
    One,
    Wave(i64),
    Gauss { c: f64, w: f64, p0: f64, pmax: i64 },
}

impl AxisFactor {
    pub(crate) fn eval(&self, x: f64) -> C64 {
        match *self {
            AxisFactor::One => C64::new(1.0, 0.0),
            AxisFactor::Wave(p) => C64::from_polar(1.0, TWO_PI * p as f64 * x),
            AxisFactor::Gauss { c, w, p0, pmax } => (-pmax..=pmax)
                .map(|p| {
                    gauss_coeff(p as f64, c, w, p0) * C64::from_polar(1.0, TWO_PI * p as f64 * x)
                })
                .sum(),
        }
    }
}

/// Wave-number atom `g(k)` on T³.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KAtom {
    Constant {
        value: C64,
    },
    /// `Σ c_n e^{2πi n·k}`.
    Trig {
        coeffs: Vec<([i32; 3], C64)>,
    },
    /// `A·f(|k−c|/r)` with the torus distance; supported in `|k−c| ≤ 2r`.
    Bump {
        amplitude: C64,
        center: [f64; 3],
        radius: f64,
    },
}

impl KAtom {
    pub fn one() -> Self {
        KAtom::Constant {
            value: C64::new(1.0, 0.0),
        }
    }

    pub fn value(&self, k: [f64; 3]) -> C64 {
        match self {
            KAtom::Constant { value } => *value,
            KAtom::Trig { coeffs } => coeffs
                .iter()
                .map(|(n, c)| {
                    c * C64::from_polar(
                        1.0,
                        TWO_PI * (n[0] as f64 * k[0] + n[1] as f64 * k[1] + n[2] as f64 * k[2]),
                    )
                })
                .sum(),
            KAtom::Bump {
                amplitude,
                center,
                radius,
            } => {
                let d: [f64; 3] = std::array::from_fn(|i| {
                    let x = k[i] - center[i];
                    x - x.round()
                });
                amplitude * cutoff((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() / radius)
            }
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            KAtom::Constant { value } => value.norm(),
            KAtom::Trig { coeffs } => coeffs.iter().map(|(_, c)| c.norm()).sum(),
            KAtom::Bump { amplitude, .. } => amplitude.norm(),
        }
    }

    /// Whether `g` vanishes identically on `|k|∞ ≥ 1/4`.
    pub fn vanishes_outside_quarter(&self) -> bool {
        match self {
            KAtom::Constant { value } => *value == C64::default(),
            KAtom::Trig { coeffs } => coeffs.iter().all(|(_, c)| *c == C64::default()),
            KAtom::Bump { center, radius, .. } => {
                center.iter().map(|c| c.abs()).fold(0.0, f64::max) + 2.0 * radius <= 0.25
            }
        }
    }

    pub fn is_trig(&self) -> bool {
        !matches!(self, KAtom::Bump { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            KAtom::Bump {
                amplitude,
                center,
                radius,
            } => {
                if !(radius.is_finite() && *radius > 0.0) || !amplitude.is_finite() {
                    return Err(Error::NotAdmissible(format!("bump radius {radius}")));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite("bump center"));
                }
            }
            KAtom::Constant { value } if !value.is_finite() => {
                return Err(Error::NonFinite("constant k atom"))
            }
            KAtom::Trig { coeffs } if coeffs.iter().any(|(_, c)| !c.is_finite()) => {
                return Err(Error::NonFinite("trig k atom"))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Smooth function on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectionFn {
    /// `c0 + c1·q̂ + q̂ᵀ c2 q̂`.
    Poly2 {
        c0: f64,
        c1: [f64; 3],
        c2: [[f64; 3]; 3],
    },
    /// `A·exp(κ(q̂·axis − 1))`.
    VonMises {
        axis: [f64; 3],
        kappa: f64,
        amplitude: f64,
    },
}

impl DirectionFn {
    pub fn value(&self, qh: [f64; 3]) -> f64 {
        match self {
            DirectionFn::Poly2 { c0, c1, c2 } => {
                let mut v = c0 + c1[0] * qh[0] + c1[1] * qh[1] + c1[2] * qh[2];
                for i in 0..3 {
                    for j in 0..3 {
                        v += qh[i] * c2[i][j] * qh[j];
                    }
                }
                v
            }
            DirectionFn::VonMises {
                axis,
                kappa,
                amplitude,
            } => {
                let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
                let c = (axis[0] * qh[0] + axis[1] * qh[1] + axis[2] * qh[2]) / n;
                amplitude * (kappa * (c - 1.0)).exp()
            }
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            DirectionFn::Poly2 { c0, c1, c2 } => {
                let n1 = (c1[0] * c1[0] + c1[1] * c1[1] + c1[2] * c1[2]).sqrt();
                let n2 = c2.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                c0.abs() + n1 + n2
            }
            DirectionFn::VonMises {
                kappa, amplitude, ..
            } => {
                amplitude.abs()
                    * if *kappa >= 0.0 {
                        1.0
                    } else {
                        (-2.0 * kappa).exp()
                    }
            }
        }
    }
}

/// Microscopic-scale atom `h(q)`: a constant, or `η(|q|) Y(q/|q|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QAtom {
    Constant { value: C64 },
    Directional { r0: f64, y: DirectionFn },
}

impl QAtom {
    pub fn one() -> Self {
        QAtom::Constant {
            value: C64::new(1.0, 0.0),
        }
    }

    pub fn value(&self, q: [f64; 3]) -> C64 {
        match self {
            QAtom::Constant { value } => *value,
            QAtom::Directional { r0, y } => {
                let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                let e = ramp(n, *r0);
                if e == 0.0 {
                    C64::default()
                } else {
                    C64::new(e * y.value([q[0] / n, q[1] / n, q[2] / n]), 0.0)
                }
            }
        }
    }

    /// `lim_{R→∞} h(R q̂)`.
    pub fn radial_limit(&self, qh: [f64; 3]) -> C64 {
        match self {
            QAtom::Constant { value } => *value,
            QAtom::Directional { y, .. } => C64::new(y.value(qh), 0.0),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            QAtom::Constant { value } => value.norm(),
            QAtom::Directional { y, .. } => y.sup_bound(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, QAtom::Constant { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub x: XAtom,
    pub k: KAtom,
    pub q: QAtom,
}

impl Term {
    /// `g(k) h(k/ε)`, the k-symbol seen by a lattice pairing at scale ε.
    pub fn k_symbol(&self, k: [f64; 3], eps: f64) -> C64 {
        let g = self.k.value(k);
        if g == C64::default() {
            return g;
        }
        g * self.q.value([k[0] / eps, k[1] / eps, k[2] / eps])
    }

    /// Trigonometric k-part and constant q-part.
    pub fn is_band_limited(&self) -> bool {
        self.k.is_trig() && self.q.is_constant()
    }

    pub fn k_sup(&self) -> f64 {
        self.k.sup_bound() * self.q.sup_bound()
    }
}

/// `a(x,k,q) = Σ_i f_i(x) g_i(k) h_i(q)`; admissibility is checked on
/// construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermList", into = "TermList")]
pub struct AdmissibleTestFunction {
    terms: Vec<Term>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermList {
    pub terms: Vec<Term>,
}

impl TryFrom<TermList> for AdmissibleTestFunction {
    type Error = Error;
    fn try_from(t: TermList) -> Result<Self> {
        Self::new(t.terms)
    }
}

impl From<AdmissibleTestFunction> for TermList {
    fn from(a: AdmissibleTestFunction) -> Self {
        TermList { terms: a.terms }
    }
}

impl AdmissibleTestFunction {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            t.x.validate()?;
            t.k.validate()?;
            if let QAtom::Directional { r0, .. } = &t.q {
                if !(r0.is_finite() && *r0 > 0.0) {
                    return Err(Error::NotAdmissible(format!("term {i}: r0 = {r0}")));
                }
                if !t.k.vanishes_outside_quarter() {
                    return Err(Error::NotAdmissible(format!(
                        "term {i}: q-dependent term needs g = 0 on |k|∞ ≥ 1/4"
                    )));
                }
            }
        }
        Ok(Self { terms })
    }

    /// `a_f(x,k,q) = f(x)`.
    pub fn from_x(f: XAtom) -> Self {
        Self::new(vec![Term {
            x: f,
            k: KAtom::one(),
            q: QAtom::one(),
        }])
        .expect("x-only symbol is admissible")
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, x: [f64; 3], k: [f64; 3], q: [f64; 3]) -> C64 {
        self.terms
            .iter()
            .map(|t| t.x.value(x) * t.k.value(k) * t.q.value(q))
            .sum()
    }

    /// `b(x,k,q̂) = Σ_i f_i(x) g_i(k) Y_i(q̂)`.
    pub fn radial_limit(&self, x: [f64; 3], k: [f64; 3], qh: [f64; 3]) -> C64 {
        self.terms
            .iter()
            .map(|t| t.x.value(x) * t.k.value(k) * t.q.radial_limit(qh))
            .sum()
    }

    /// True when every k-part is a trigonometric polynomial and every q-part
    /// is constant, so the symbol is band-limited in k.
    pub fn is_band_limited(&self) -> bool {
        self.terms.iter().all(Term::is_band_limited)
    }

    /// Sum of the two symbols.
    pub fn plus(mut self, other: Self) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// The continuum symbol `a₀(x,q) = a(x,0,q)` as a test function whose
    /// k-part is constant.
    pub fn at_k_zero(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    x: t.x.clone(),
                    k: KAtom::Constant {
                        value: t.k.value([0.0; 3]),
                    },
                    q: t.q.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_fourier_matches_quadrature() {
        let f = XAtom::Gaussian {
            amplitude: C64::new(0.7, 0.2),
            center: [0.1, -0.2, 0.3],
            width: 0.3,
            modulation: [2.0, 0.0, -1.5],
        };
        let m = 32;
        for p in [[0i64, 0, 0], [2, 1, -1], [1, 0, -2]] {
            let mut acc = C64::default();
            for i in 0..m * m * m {
                let c = crate::fft::coords(i, m);
                let x = [
                    c[0] as f64 / m as f64,
                    c[1] as f64 / m as f64,
                    c[2] as f64 / m as f64,
                ];
                let ph = -TWO_PI * (p[0] as f64 * x[0] + p[1] as f64 * x[1] + p[2] as f64 * x[2]);
                acc += f.value(x) * C64::from_polar(1.0, ph);
            }
            acc /= (m as f64).powi(3);
            assert!((acc - f.fourier(p)).norm() < 1e-10, "{p:?}");
        }
    }

    #[test]
    fn wide_gaussian_value_uses_dual_sum() {
        let f = XAtom::gaussian([0.2, 0.0, 0.0], 3.0);
        let g = XAtom::Gaussian {
            amplitude: C64::new(1.0, 0.0),
            center: [0.2, 0.0, 0.0],
            width: 3.0,
            modulation: [0.0; 3],
        };
        let x = [0.4, -0.1, 0.3];
        let direct: C64 = {
            let mut v = C64::new(1.0, 0.0);
            for (nu, xv) in x.iter().enumerate() {
                let c = if nu == 0 { 0.2 } else { 0.0 };
                let s: f64 = (-40..=40)
                    .map(|n| (-PI * (xv + n as f64 - c).powi(2) / 9.0).exp())
                    .sum();
                v *= s;
            }
            v
        };
        assert!((f.value(x) - direct).norm() < 1e-10 * direct.norm());
        assert_eq!(f, g);
        // truncation converges to the value
        assert!((f.truncated_value(x, 8) - f.value(x)).norm() < 1e-10 * direct.norm());
    }

    #[test]
    fn tail_bound_dominates_truncation() {
        let f = XAtom::gaussian([0.1, 0.0, 0.0], 0.25);
        for pm in [1usize, 2, 4, 6] {
            let x = [0.13, -0.31, 0.05];
            let err = (f.value(x) - f.truncated_value(x, pm)).norm();
            assert!(err <= f.fourier_tail(pm) * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn admissibility() {
        let dir = QAtom::Directional {
            r0: 2.0,
            y: DirectionFn::Poly2 {
                c0: 1.0,
                c1: [0.5, 0.0, 0.0],
                c2: [[0.0; 3]; 3],
            },
        };
        let bad = AdmissibleTestFunction::new(vec![Term {
            x: XAtom::constant(1.0),
            k: KAtom::one(),
            q: dir.clone(),
        }]);
        assert!(matches!(bad, Err(Error::NotAdmissible(_))));
        let good = AdmissibleTestFunction::new(vec![Term {
            x: XAtom::constant(1.0),
            k: KAtom::Bump {
                amplitude: C64::new(1.0, 0.0),
                center: [0.0; 3],
                radius: 0.1,
            },
            q: dir,
        }])
        .unwrap();
        // radial limit is attained exactly beyond r0
        let qh = [0.6, 0.8, 0.0];
        let a = good.eval([0.0; 3], [0.01, 0.0, 0.0], [3.0 * qh[0], 3.0 * qh[1], 0.0]);
        let b = good.radial_limit([0.0; 3], [0.01, 0.0, 0.0], qh);
        assert!((a - b).norm() < 1e-15);
        assert!(!good.is_band_limited());
        let json = serde_json::to_string(&good).unwrap();
        let back: AdmissibleTestFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, good);
    }
}
