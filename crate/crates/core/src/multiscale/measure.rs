use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::split::check_rho;
use super::{cutoff, extract_phi0, phi, MacroField};
use crate::error::{Error, Result};
use crate::fft::{coords, C64};
use crate::lattice::NormalMode;
use crate::wigner::engine::{correlate, cube_index, cube_points, HalfGrid, KWeights, Support};

/// Cell resolutions: Fejér x-cells and bump k-cells per axis, and the
/// cube-sphere resolution for direction cells (`6 n²` cells).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub x_cells: usize,
    pub k_cells: usize,
    pub dir_cells: usize,
    /// Relative mass the sparse engine may drop.
    #[serde(default = "default_drop")]
    pub drop_tol: f64,
}

fn default_drop() -> f64 {
    1e-14
}

impl Default for CellSpec {
    fn default() -> Self {
        Self {
            x_cells: 4,
            k_cells: 8,
            dir_cells: 5,
            drop_tol: default_drop(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Wavenumber,
    Direction,
}

/// Cell masses of a measure on (macro box) × (T³ or S²). Cell `(j, l)` is
/// stored at `j * labels.len() + l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureHistogram {
    pub kind: LabelKind,
    pub x_centers: Vec<[f64; 3]>,
    pub labels: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Imaginary parts of the cell pairings, a diagnostic only.
    pub imag: Vec<f64>,
    /// Per-cell bound from the sparse engine's dropped mass.
    pub cell_error_bound: f64,
}

impl MeasureHistogram {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sum over x-cells for each label cell.
    pub fn label_marginal(&self) -> Vec<f64> {
        let nl = self.labels.len();
        let mut out = vec![0.0; nl];
        for (i, w) in self.weights.iter().enumerate() {
            out[i % nl] += w;
        }
        out
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        let nl = self.labels.len();
        self.weights.chunks(nl).map(|c| c.iter().sum()).collect()
    }

    /// CSV rows `x1,x2,x3,l1,l2,l3,weight,imag`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x1,x2,x3,l1,l2,l3,weight,imag")?;
        let nl = self.labels.len();
        for (i, (wt, im)) in self.weights.iter().zip(&self.imag).enumerate() {
            let x = self.x_centers[i / nl];
            let l = self.labels[i % nl];
            writeln!(
                w,
                "{},{},{},{},{},{},{:e},{:e}",
                x[0], x[1], x[2], l[0], l[1], l[2], wt, im
            )?;
        }
        Ok(())
    }
}

/// Fejér partition of the unit torus: `n` cells per axis with centers
/// `−½ + (j+½)/n`, nonnegative, summing to one, with Fourier support
/// `|p| < n`.
#[derive(Clone, Copy, Debug)]
pub struct FejerCells {
    n: usize,
}

impl FejerCells {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one x-cell".into()));
        }
        Ok(Self { n })
    }

    pub fn p_max(&self) -> usize {
        self.n - 1
    }

    pub fn len(&self) -> usize {
        self.n.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn axis_center(&self, j: usize) -> f64 {
        -0.5 + (j as f64 + 0.5) / self.n as f64
    }

    pub fn center(&self, cell: usize) -> [f64; 3] {
        let n = self.n;
        [
            self.axis_center(cell / (n * n)),
            self.axis_center((cell / n) % n),
            self.axis_center(cell % n),
        ]
    }

    fn axis_coeff(&self, j: usize, p: i64) -> C64 {
        let n = self.n as f64;
        let a = p.unsigned_abs() as f64;
        if a >= n {
            return C64::default();
        }
        C64::from_polar(
            (1.0 - a / n) / n,
            -2.0 * PI * p as f64 * self.axis_center(j),
        )
    }

    /// Fourier coefficient of cell `j` at `p`.
    pub fn coeff(&self, cell: usize, p: [i64; 3]) -> C64 {
        let n = self.n;
        self.axis_coeff(cell / (n * n), p[0])
            * self.axis_coeff((cell / n) % n, p[1])
            * self.axis_coeff(cell % n, p[2])
    }

    pub fn value(&self, cell: usize, x: [f64; 3]) -> f64 {
        cube_points(self.p_max())
            .map(|p| {
                self.coeff(cell, p)
                    * C64::from_polar(
                        1.0,
                        2.0 * PI * (p[0] as f64 * x[0] + p[1] as f64 * x[1] + p[2] as f64 * x[2]),
                    )
            })
            .sum::<C64>()
            .re
    }
}

/// Smooth partition of the circle into `n` cells centered at `−½ + l/n`.
/// Each cell is 1 within a quarter spacing of its center and at most two
/// cells overlap.
#[derive(Clone, Copy, Debug)]
pub struct BumpCells {
    n: usize,
}

impl BumpCells {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(
                "need at least two k-cells per axis".into(),
            ));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn axis_center(&self, l: usize) -> f64 {
        -0.5 + l as f64 / self.n as f64
    }

    pub fn center(&self, cell: usize) -> [f64; 3] {
        let n = self.n;
        [
            self.axis_center(cell / (n * n)),
            self.axis_center((cell / n) % n),
            self.axis_center(cell % n),
        ]
    }

    /// Nonzero `(l, B_l(k))` along one axis.
    fn axis(&self, k: f64) -> [(usize, f64); 2] {
        let n = self.n as f64;
        let h = 1.0 / n;
        let pos = (k + 0.5) * n;
        let lo = pos.floor();
        let frac = pos - lo;
        let l0 = (lo as i64).rem_euclid(self.n as i64) as usize;
        let l1 = (l0 + 1) % self.n;
        let b = |d: f64| cutoff(d / (0.375 * h));
        let (w0, w1) = (b(frac * h), b((1.0 - frac) * h));
        let s = w0 + w1;
        [(l0, w0 / s), (l1, w1 / s)]
    }

    /// `B_l(k)` for the product cell `l`.
    pub fn value(&self, cell: usize, k: [f64; 3]) -> f64 {
        let n = self.n;
        let idx = [cell / (n * n), (cell / n) % n, cell % n];
        (0..3)
            .map(|ax| {
                self.axis(k[ax])
                    .iter()
                    .filter(|(l, _)| *l == idx[ax])
                    .map(|(_, w)| *w)
                    .sum::<f64>()
            })
            .product()
    }

    fn for_each(&self, k: [f64; 3], scale: f64, out: &mut Vec<(u32, C64)>) {
        let n = self.n;
        let a = self.axis(k[0]);
        let b = self.axis(k[1]);
        let c = self.axis(k[2]);
        for (l0, w0) in a {
            if w0 == 0.0 {
                continue;
            }
            for (l1, w1) in b {
                if w1 == 0.0 {
                    continue;
                }
                for (l2, w2) in c {
                    if w2 == 0.0 {
                        continue;
                    }
                    out.push((
                        ((l0 * n + l1) * n + l2) as u32,
                        C64::new(scale * w0 * w1 * w2, 0.0),
                    ));
                }
            }
        }
    }
}

/// Cube-sphere direction cells with soft von Mises weights, truncated below
/// `1e−4` of the largest and renormalized to a partition of unity.
#[derive(Clone, Debug)]
pub struct DirectionCells {
    centers: Vec<[f64; 3]>,
    kappa: f64,
    cut: f64,
}

impl DirectionCells {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "need at least one direction cell per face edge".into(),
            ));
        }
        let mut centers = Vec::with_capacity(6 * n * n);
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                for i in 0..n {
                    for j in 0..n {
                        let u = -1.0 + (2 * i + 1) as f64 / n as f64;
                        let v = -1.0 + (2 * j + 1) as f64 / n as f64;
                        let mut d = [0.0; 3];
                        d[axis] = sign;
                        d[(axis + 1) % 3] = u;
                        d[(axis + 2) % 3] = v;
                        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                        centers.push([d[0] / r, d[1] / r, d[2] / r]);
                    }
                }
            }
        }
        let theta = PI / (2.0 * n as f64);
        let kappa = 8.0 / (theta * theta);
        Ok(Self {
            centers,
            kappa,
            cut: 1e-4f64.ln() / kappa,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    /// Cells whose truncated weight at `q̂` is nonzero.
    pub fn weights(&self, qh: [f64; 3], out: &mut Vec<(u32, f64)>) {
        out.clear();
        let dots: Vec<f64> = self
            .centers
            .iter()
            .map(|c| c[0] * qh[0] + c[1] * qh[1] + c[2] * qh[2])
            .collect();
        let best = dots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (i, d) in dots.iter().enumerate() {
            let e = self.kappa * (d - best);
            if e >= self.kappa * self.cut {
                let w = e.exp();
                sum += w;
                out.push((i as u32, w));
            }
        }
        out.iter_mut().for_each(|(_, w)| *w /= sum);
    }

    /// Index of the cell whose center is closest to `q̂`.
    pub fn nearest(&self, qh: [f64; 3]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, c) in self.centers.iter().enumerate() {
            let d = c[0] * qh[0] + c[1] * qh[1] + c[2] * qh[2];
            if d > best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

fn pair_cells(d: &[C64], nk: usize, xcells: &FejerCells) -> (Vec<f64>, Vec<f64>) {
    let pm = xcells.p_max();
    let cube: Vec<[i64; 3]> = cube_points(pm).collect();
    let rows: Vec<Vec<C64>> = (0..xcells.len())
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![C64::default(); nk];
            for p in &cube {
                let c = xcells.coeff(j, *p).conj();
                if c == C64::default() {
                    continue;
                }
                let base = cube_index(*p, pm) * nk;
                for (l, z) in acc.iter_mut().enumerate() {
                    *z += c * d[base + l];
                }
            }
            acc
        })
        .collect();
    let flat: Vec<C64> = rows.into_iter().flatten().collect();
    (
        flat.iter().map(|z| z.re).collect(),
        flat.iter().map(|z| z.im).collect(),
    )
}

/// Histogram of the large-wave-number measure: cell `(j, l)` carries
/// `Re ⟨F_j(x) B_l(k) (1 − φ(k/ρ)²), W^ε[ψ]⟩`, with Fejér x-cells `F_j` and
/// bump k-cells `B_l`.
pub fn estimate_mu(mode: &NormalMode, rho: f64, cells: &CellSpec) -> Result<MeasureHistogram> {
    check_rho(rho)?;
    let xcells = FejerCells::new(cells.x_cells)?;
    let kcells = BumpCells::new(cells.k_cells)?;
    let n = mode.n;
    let pm = xcells.p_max();
    if pm > n / 2 {
        return Err(Error::PMaxTooLarge {
            p_max: pm,
            half: n / 2,
        });
    }
    let hg = HalfGrid::from_field(&mode.psi_plus(), n);
    let support = Support::build(&[&hg], cells.drop_tol);
    let nk = kcells.len();
    let weights = KWeights::build(&support, 1, pm, nk, |k, out| {
        let c = phi([k[0] / rho, k[1] / rho, k[2] / rho]);
        let h = 1.0 - c * c;
        if h > 0.0 {
            kcells.for_each(k, h, out);
        }
    });
    let d = correlate(&hg, &hg, &support, &weights, 1, pm);
    let (w, im) = pair_cells(&d, nk, &xcells);
    Ok(MeasureHistogram {
        kind: LabelKind::Wavenumber,
        x_centers: (0..xcells.len()).map(|j| xcells.center(j)).collect(),
        labels: (0..nk).map(|l| kcells.center(l)).collect(),
        weights: w,
        imag: im,
        cell_error_bound: support.drop_bound(0, 0),
    })
}

/// `ĝ(q) = (1 − φ(q/2M)) φ(εq/ρ) (φ̂₀^ε(q) − φ̂₀(q))` on the `N³` macro grid;
/// with `m_cut = None` the tail factor is omitted.
pub fn intermediate_field(
    mode: &NormalMode,
    rho: f64,
    m_cut: Option<f64>,
    phi0_ref: &MacroField,
) -> Result<MacroField> {
    check_rho(rho)?;
    if let Some(m) = m_cut {
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(format!("M = {m} must be positive")));
        }
    }
    let n = mode.n;
    let eps = mode.eps;
    let phi_eps = extract_phi0(mode);
    let hat = phi_eps
        .hat()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let q = coords(i, n);
            let qf = [q[0] as f64, q[1] as f64, q[2] as f64];
            let inner = phi([eps * qf[0] / rho, eps * qf[1] / rho, eps * qf[2] / rho]);
            let tail = match m_cut {
                Some(m) => 1.0 - phi([qf[0] / (2.0 * m), qf[1] / (2.0 * m), qf[2] / (2.0 * m)]),
                None => 1.0,
            };
            let w = inner * tail;
            if w == 0.0 {
                C64::default()
            } else {
                (z - phi0_ref.hat_at(q)) * w
            }
        })
        .collect();
    MacroField::from_hat(n, hat)
}

/// Histogram of the intermediate-scale measure: the field of
/// [`intermediate_field`] paired, at unit scale, against Fejér x-cells times
/// direction cells in `q̂`.
pub fn estimate_muh(
    mode: &NormalMode,
    rho: f64,
    m_cut: Option<f64>,
    phi0_ref: &MacroField,
    cells: &CellSpec,
) -> Result<MeasureHistogram> {
    if let Some(m) = m_cut {
        if m < 4.0 {
            return Err(Error::InvalidParameter(format!(
                "M = {m} must be at least 4"
            )));
        }
    }
    let g = intermediate_field(mode, rho, m_cut, phi0_ref)?;
    let xcells = FejerCells::new(cells.x_cells)?;
    let dirs = DirectionCells::new(cells.dir_cells)?;
    let n = g.m();
    let pm = xcells.p_max();
    if pm > n / 2 {
        return Err(Error::PMaxTooLarge {
            p_max: pm,
            half: n / 2,
        });
    }
    let nd = dirs.len();
    let x_centers = (0..xcells.len()).map(|j| xcells.center(j)).collect();
    if g.norm_sqr() == 0.0 {
        return Ok(MeasureHistogram {
            kind: LabelKind::Direction,
            x_centers,
            labels: dirs.centers().to_vec(),
            weights: vec![0.0; xcells.len() * nd],
            imag: vec![0.0; xcells.len() * nd],
            cell_error_bound: 0.0,
        });
    }
    let hg = HalfGrid::from_field(&g.to_lattice(), n);
    // the drop budget is relative to ‖ψ‖², the mass the histogram is
    // compared with, not to the (possibly round-off sized) mass of ĝ
    let tol = (cells.drop_tol * mode.mass() / g.norm_sqr()).min(1.0);
    let support = Support::build(&[&hg], tol);
    let nf = n as f64;
    let weights = KWeights::build(&support, 1, pm, nd, |k, out| {
        let q = [k[0] * nf, k[1] * nf, k[2] * nf];
        let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        if r == 0.0 {
            let w = 1.0 / nd as f64;
            out.extend((0..nd as u32).map(|i| (i, C64::new(w, 0.0))));
            return;
        }
        let mut buf = Vec::new();
        dirs.weights([q[0] / r, q[1] / r, q[2] / r], &mut buf);
        out.extend(buf.into_iter().map(|(i, w)| (i, C64::new(w, 0.0))));
    });
    let d = correlate(&hg, &hg, &support, &weights, 1, pm);
    let (w, im) = pair_cells(&d, nd, &xcells);
    Ok(MeasureHistogram {
        kind: LabelKind::Direction,
        x_centers,
        labels: dirs.centers().to_vec(),
        weights: w,
        imag: im,
        cell_error_bound: support.drop_bound(0, 0),
    })
}
