use crate::dispersion::AcousticData;
use crate::error::{Error, Result};
use crate::fft::{coords, flat, wrap, Fft3, C64};
use crate::lattice::NormalMode;

/// A field on the unit macroscopic torus, sampled on `m³` points
/// `x_j = j/m`, together with its Fourier coefficients
/// `φ̂(q) = ∫ e^{−2πiq·x} φ(x) dx` for integer `|q|∞ ≤ m/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroField {
    m: usize,
    values: Vec<C64>,
    hat: Vec<C64>,
    norm_sqr: f64,
}

impl MacroField {
    pub fn from_values(m: usize, values: Vec<C64>) -> Result<Self> {
        check(m, values.len())?;
        let mut hat = values.clone();
        Fft3::new(m).forward(&mut hat);
        let s = 1.0 / (m as f64).powi(3);
        hat.iter_mut().for_each(|z| *z *= s);
        Ok(Self::assemble(m, values, hat))
    }

    pub fn from_hat(m: usize, hat: Vec<C64>) -> Result<Self> {
        check(m, hat.len())?;
        let mut values = hat.clone();
        Fft3::new(m).inverse_unnormalized(&mut values);
        Ok(Self::assemble(m, values, hat))
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(m: usize, f: impl Fn([f64; 3]) -> C64) -> Result<Self> {
        let values = (0..m * m * m)
            .map(|i| {
                let c = coords(i, m);
                f([
                    c[0] as f64 / m as f64,
                    c[1] as f64 / m as f64,
                    c[2] as f64 / m as f64,
                ])
            })
            .collect();
        Self::from_values(m, values)
    }

    /// Coefficients given as a function of the integer wave vector.
    pub fn from_hat_fn(m: usize, f: impl Fn([i64; 3]) -> C64) -> Result<Self> {
        let hat = (0..m * m * m).map(|i| f(coords(i, m))).collect();
        Self::from_hat(m, hat)
    }

    fn assemble(m: usize, values: Vec<C64>, hat: Vec<C64>) -> Self {
        let norm_sqr = crate::fft::norm_sqr(&hat);
        Self {
            m,
            values,
            hat,
            norm_sqr,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn hat(&self) -> &[C64] {
        &self.hat
    }

    /// `‖φ‖²_{L²} = Σ_q |φ̂(q)|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    pub fn hat_at(&self, q: [i64; 3]) -> C64 {
        let h = (self.m / 2) as i64;
        if q.iter().any(|&c| c < -h || c >= h) {
            return C64::default();
        }
        self.hat[flat(
            [wrap(q[0], self.m), wrap(q[1], self.m), wrap(q[2], self.m)],
            self.m,
        )]
    }

    /// The lattice field `ε^{3/2} φ(εγ)` with `ε = 1/m`.
    pub fn to_lattice(&self) -> Vec<C64> {
        let s = (self.m as f64).powf(-1.5);
        self.values.iter().map(|z| z * s).collect()
    }

    /// `φ̂_t(q) = e^{−itω₀(q)} φ̂(q)`.
    pub fn evolve(&self, acoustic: &AcousticData, t: f64) -> MacroField {
        let hat = self
            .hat
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let q = coords(i, self.m);
                let w = acoustic.omega0([q[0] as f64, q[1] as f64, q[2] as f64]);
                z * C64::from_polar(1.0, -t * w)
            })
            .collect();
        MacroField::from_hat(self.m, hat).expect("same grid")
    }

    /// `‖φ − ψ‖²` between fields on the same grid.
    pub fn dist_sqr(&self, other: &MacroField) -> Result<f64> {
        if self.m != other.m {
            return Err(Error::GridMismatch {
                expected: self.m.pow(3),
                got: other.m.pow(3),
            });
        }
        Ok(self
            .hat
            .iter()
            .zip(&other.hat)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum())
    }
}

fn check(m: usize, len: usize) -> Result<()> {
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::OddGrid(m));
    }
    if len != m * m * m {
        return Err(Error::GridMismatch {
            expected: m * m * m,
            got: len,
        });
    }
    Ok(())
}

/// `φ̂₀^ε(q) = ε^{3/2} ψ̂(εq)` on the window `|q|∞ ≤ N/2`, as a field on the
/// `N³` macro grid.
pub fn extract_phi0(mode: &NormalMode) -> MacroField {
    let s = mode.eps.powf(1.5);
    let hat = mode.psi_hat_plus.iter().map(|z| z * s).collect();
    MacroField::from_hat(mode.n, hat).expect("mode grid is valid")
}

/// Inverse of [`extract_phi0`]: the mode whose `ψ̂(εq)` equals `ε^{−3/2} φ̂(q)`.
pub fn embed_phi0(phi: &MacroField) -> NormalMode {
    let s = (phi.m() as f64).powf(1.5);
    let hat = phi.hat().iter().map(|z| z * s).collect();
    NormalMode::from_hat(phi.m(), hat).expect("macro grid is valid")
}

/// The lattice mode at `ε = 1/n` whose `ψ̂(εq)` is `ε^{−3/2} φ̂(q)` on the
/// window `|q|∞ < n/2`; coefficients of `φ` outside the window are dropped.
pub fn embed_phi0_at(phi: &MacroField, n: usize) -> Result<NormalMode> {
    let s = (n as f64).powf(1.5);
    let hat = (0..n * n * n)
        .map(|i| phi.hat_at(coords(i, n)) * s)
        .collect();
    NormalMode::from_hat(n, hat)
}

/// Mass of `φ̂` inside the ball `|q| ≤ radius`.
pub fn window_mass(phi: &MacroField, radius: f64) -> f64 {
    let m = phi.m();
    phi.hat()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let c = coords(*i, m);
            ((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) as f64).sqrt() <= radius
        })
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_matches_grid_norm() {
        let m = 8;
        let f = MacroField::from_fn(m, |x| C64::new((6.0 * x[0]).sin() + x[1], x[2])).unwrap();
        let grid: f64 = f.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / (m as f64).powi(3);
        assert!((grid - f.norm_sqr()).abs() < 1e-13 * grid);
        let g = MacroField::from_hat(m, f.hat().to_vec()).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn extraction_is_lossless_inside_window() {
        let n = 8;
        let hat: Vec<C64> = (0..n * n * n)
            .map(|i| C64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let mode = NormalMode::from_hat(n, hat).unwrap();
        let back = embed_phi0(&extract_phi0(&mode));
        for (a, b) in back.psi_hat_plus.iter().zip(&mode.psi_hat_plus) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
        assert!((extract_phi0(&mode).norm_sqr() - mode.mass()).abs() < 1e-9 * mode.mass());
    }
}
