//! Lattice states, normal modes and exact/approximate time evolution.

mod io;
mod stencil;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

pub use io::{read_snapshot, write_snapshot, write_snapshot_csv, SnapshotHeader};
pub use stencil::CouplingStencil;

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::fft::{coords, flat, wrap, Fft3, C64};

fn check_grid(n: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::OddGrid(n));
    }
    Ok(())
}

/// Real displacement/velocity fields on the periodic box `{-N/2..N/2-1}^3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    pub n: usize,
    pub eps: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl LatticeState {
    pub fn new(n: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_grid(n)?;
        let len = n * n * n;
        for f in [&u, &v] {
            if f.len() != len {
                return Err(Error::GridMismatch {
                    expected: len,
                    got: f.len(),
                });
            }
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("lattice state"));
        }
        Ok(Self {
            n,
            eps: 1.0 / n as f64,
            u,
            v,
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        let len = n * n * n;
        Self::new(n, vec![0.0; len], vec![0.0; len])
    }

    pub fn index(&self, g: [i64; 3]) -> usize {
        let n = self.n;
        flat([wrap(g[0], n), wrap(g[1], n), wrap(g[2], n)], n)
    }

    pub fn mean_u(&self) -> f64 {
        self.u.iter().sum::<f64>() / self.u.len() as f64
    }

    pub fn mean_v(&self) -> f64 {
        self.v.iter().sum::<f64>() / self.v.len() as f64
    }

    /// Exact evolution of `(u, v)` to time `t`: spectral evolution of the
    /// mode plus the decoupled mean displacement `ū(t) = ū(0) + t v̄`.
    pub fn evolve_exact(&self, disp: &DispersionModel, t: f64) -> Result<Self> {
        let mode = to_normal_mode(self, disp)?;
        let mut out = from_normal_mode(&evolve_spectral(&mode, disp, t)?, disp)?;
        let (mu, mv) = (self.mean_u(), self.mean_v());
        out.u.iter_mut().for_each(|x| *x += mu + t * mv);
        Ok(out)
    }
}

/// The mode field `ψ̂₊` on the dual grid `k_j = j/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMode {
    pub n: usize,
    pub eps: f64,
    pub psi_hat_plus: Vec<C64>,
}

impl NormalMode {
    pub fn from_hat(n: usize, psi_hat_plus: Vec<C64>) -> Result<Self> {
        check_grid(n)?;
        if psi_hat_plus.len() != n * n * n {
            return Err(Error::GridMismatch {
                expected: n * n * n,
                got: psi_hat_plus.len(),
            });
        }
        if psi_hat_plus.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("mode"));
        }
        Ok(Self {
            n,
            eps: 1.0 / n as f64,
            psi_hat_plus,
        })
    }

    /// Mode from its real-space field `ψ₊(γ)`.
    pub fn from_real_space(n: usize, psi: &[C64]) -> Result<Self> {
        Self::from_hat(n, dft(psi, n)?)
    }

    /// `ψ₊(γ)` in real space.
    pub fn psi_plus(&self) -> Vec<C64> {
        let mut x = self.psi_hat_plus.clone();
        Fft3::new(self.n).inverse(&mut x);
        x
    }

    /// `‖ψ₊‖²_{ℓ₂} = (1/N³) Σ_j |ψ̂₊(k_j)|²`.
    pub fn mass(&self) -> f64 {
        crate::fft::norm_sqr(&self.psi_hat_plus) / (self.n as f64).powi(3)
    }
}

/// `ψ̂(k_j) = Σ_γ e^{-2πi k_j·γ} ψ(γ)`.
pub fn dft(field: &[C64], n: usize) -> Result<Vec<C64>> {
    check_grid(n)?;
    if field.len() != n * n * n {
        return Err(Error::GridMismatch {
            expected: n * n * n,
            got: field.len(),
        });
    }
    if field.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("dft input"));
    }
    let mut x = field.to_vec();
    Fft3::new(n).forward(&mut x);
    Ok(x)
}

/// Inverse of [`dft`].
pub fn idft(hat: &[C64], n: usize) -> Result<Vec<C64>> {
    check_grid(n)?;
    if hat.len() != n * n * n {
        return Err(Error::GridMismatch {
            expected: n * n * n,
            got: hat.len(),
        });
    }
    let mut x = hat.to_vec();
    Fft3::new(n).inverse(&mut x);
    Ok(x)
}

/// `H = ½(Σ v² + Σ_γ u(γ) (α∗u)(γ))` with periodic wrap.
pub fn hamiltonian(state: &LatticeState, stencil: &CouplingStencil) -> Result<f64> {
    let au = stencil.apply(&state.u, state.n)?;
    let pot: f64 = state.u.iter().zip(&au).map(|(a, b)| a * b).sum();
    let kin: f64 = state.v.iter().map(|x| x * x).sum();
    Ok(0.5 * (kin + pot))
}

fn real_to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&r| C64::new(r, 0.0)).collect()
}

/// `ψ̂₊ = (ω û + i v̂)/√2`.
pub fn to_normal_mode(state: &LatticeState, disp: &DispersionModel) -> Result<NormalMode> {
    let n = state.n;
    let omega = disp.omega_grid(n)?;
    let fft = Fft3::new(n);
    let mut uh = real_to_complex(&state.u);
    let mut vh = real_to_complex(&state.v);
    fft.forward(&mut uh);
    fft.forward(&mut vh);
    let psi = omega
        .iter()
        .zip(uh.iter().zip(&vh))
        .map(|(w, (u, v))| (u * w + C64::i() * v) * FRAC_1_SQRT_2)
        .collect();
    NormalMode::from_hat(n, psi)
}

/// Index of `-k` for a wrapped flat index.
#[inline]
pub(crate) fn neg_index(idx: usize, n: usize) -> usize {
    let c = coords(idx, n);
    flat([wrap(-c[0], n), wrap(-c[1], n), wrap(-c[2], n)], n)
}

/// Inverse of [`to_normal_mode`] in the zero-mean gauge `û(0) = 0`.
pub fn from_normal_mode(mode: &NormalMode, disp: &DispersionModel) -> Result<LatticeState> {
    let n = mode.n;
    let omega = disp.omega_grid(n)?;
    let psi = &mode.psi_hat_plus;
    let scale = (mode.mass().sqrt() * (n as f64).powf(1.5)).max(1.0);
    if psi[0].re.abs() > 1e-9 * scale {
        return Err(Error::NonRealZeroMode(psi[0].re));
    }
    let mut uh = vec![C64::default(); psi.len()];
    let mut vh = vec![C64::default(); psi.len()];
    for i in 0..psi.len() {
        let p = psi[i];
        let m = psi[neg_index(i, n)].conj();
        vh[i] = -C64::i() * (p - m) * FRAC_1_SQRT_2;
        if i != 0 {
            if omega[i] == 0.0 {
                return Err(Error::DegenerateOmega(crate::fft::kpoint(i, n)));
            }
            uh[i] = (p + m) / (omega[i] * SQRT_2);
        }
    }
    let fft = Fft3::new(n);
    fft.inverse(&mut uh);
    fft.inverse(&mut vh);
    LatticeState::new(
        n,
        uh.iter().map(|z| z.re).collect(),
        vh.iter().map(|z| z.re).collect(),
    )
}

/// Largest imaginary part produced by mode inversion; a realness diagnostic.
pub fn inversion_imag_residual(mode: &NormalMode, disp: &DispersionModel) -> Result<f64> {
    let n = mode.n;
    let omega = disp.omega_grid(n)?;
    let psi = &mode.psi_hat_plus;
    let mut uh = vec![C64::default(); psi.len()];
    for i in 1..psi.len() {
        let m = psi[neg_index(i, n)].conj();
        uh[i] = (psi[i] + m) / (omega[i] * SQRT_2);
    }
    Fft3::new(n).inverse(&mut uh);
    Ok(uh.iter().map(|z| z.im.abs()).fold(0.0, f64::max))
}

/// `ψ̂₊(k, t) = e^{-iω(k)t} ψ̂₊(k, 0)`.
pub fn evolve_spectral(mode: &NormalMode, disp: &DispersionModel, t: f64) -> Result<NormalMode> {
    let omega = disp.omega_grid(mode.n)?;
    let psi = mode
        .psi_hat_plus
        .iter()
        .zip(&omega)
        .map(|(z, w)| z * C64::from_polar(1.0, -w * t))
        .collect();
    Ok(NormalMode {
        n: mode.n,
        eps: mode.eps,
        psi_hat_plus: psi,
    })
}

/// Kick-drift-kick leapfrog for `ü = -α∗u`.
pub fn evolve_leapfrog(
    state: &LatticeState,
    stencil: &CouplingStencil,
    dt: f64,
    steps: usize,
) -> Result<LatticeState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be positive"
        )));
    }
    let n = state.n;
    stencil.check_fits(n)?;
    let mut u = state.u.clone();
    let mut v = state.v.clone();
    let mut force = stencil.apply(&u, n)?;
    for step in 0..steps {
        for (vi, fi) in v.iter_mut().zip(&force) {
            *vi -= 0.5 * dt * fi;
        }
        for (ui, vi) in u.iter_mut().zip(&v) {
            *ui += dt * vi;
        }
        force = stencil.apply(&u, n)?;
        for (vi, fi) in v.iter_mut().zip(&force) {
            *vi -= 0.5 * dt * fi;
        }
        if !u.iter().all(|x| x.is_finite()) {
            return Err(Error::BlowUp(step + 1));
        }
    }
    LatticeState::new(n, u, v)
}

/// `⟨f, e^ε⟩ = Σ_γ conj(f(εγ)) |ψ₊(γ)|²`.
pub fn energy_pairing(mode: &NormalMode, f: impl Fn([f64; 3]) -> C64) -> C64 {
    let n = mode.n;
    let eps = mode.eps;
    mode.psi_plus()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let c = coords(i, n);
            let x = [c[0] as f64 * eps, c[1] as f64 * eps, c[2] as f64 * eps];
            f(x).conj() * z.norm_sqr()
        })
        .sum()
}
