//! Caustics of the point-source solution and the ballistic energy density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DispersionModel;
use crate::error::{Error, Result};

/// A singular point of the flow in the plane `x₃ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausticPoint {
    pub k: [f64; 3],
    pub x: [f64; 2],
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `det D²ω(k)`, or NaN where ω vanishes.
pub fn hessian_det(disp: &DispersionModel, k: [f64; 3]) -> f64 {
    disp.hess_omega(k).map(|h| det3(&h)).unwrap_or(f64::NAN)
}

/// Zeros of `det D²ω` on the sub-tori `k₃ ∈ {0, ½}`, mapped to
/// `x = t ∇ω(k)/(2π)`. Sign changes are located on a `resolution²` grid and
/// refined by 40 bisection steps.
pub fn caustic_slice(disp: &DispersionModel, t: f64, resolution: usize) -> Vec<CausticPoint> {
    let r = resolution.max(4);
    let h = 1.0 / r as f64;
    let kc = |j: usize| -0.5 + j as f64 * h;
    let mut out = Vec::new();
    for k3 in [0.0, 0.5] {
        let det: Vec<f64> = (0..r * r)
            .into_par_iter()
            .map(|i| hessian_det(disp, [kc(i / r), kc(i % r), k3]))
            .collect();
        let det = &det;
        let edges: Vec<([f64; 3], [f64; 3], f64, f64)> = (0..r * r)
            .flat_map(|i| {
                let (a, b) = (i / r, i % r);
                let d0 = det[i];
                let k0 = [kc(a), kc(b), k3];
                let right = (((a + 1) % r) * r + b, [k0[0] + h, k0[1], k3]);
                let up = (a * r + (b + 1) % r, [k0[0], k0[1] + h, k3]);
                [right, up]
                    .into_iter()
                    .map(move |(j, k1)| (k0, k1, d0, det[j]))
            })
            .filter(|(_, _, d0, d1)| {
                d0.is_finite() && d1.is_finite() && (*d0 >= 0.0) != (*d1 >= 0.0)
            })
            .collect();
        let pts: Vec<CausticPoint> = edges
            .par_iter()
            .filter_map(|&(ka, kb, da, _)| {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let at = |s: f64| [ka[0] + s * (kb[0] - ka[0]), ka[1] + s * (kb[1] - ka[1]), k3];
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    let dm = hessian_det(disp, at(mid));
                    if !dm.is_finite() {
                        return None;
                    }
                    if (dm >= 0.0) == (da >= 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let k = at(0.5 * (lo + hi));
                let v = disp.group_velocity(k).ok()?;
                Some(CausticPoint {
                    k,
                    x: [t * v[0], t * v[1]],
                })
            })
            .collect();
        out.extend(pts);
    }
    out
}

/// Square histogram on `[-half_width, half_width]^d` with `cells^d` bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub dim: usize,
    pub half_width: f64,
    pub cells: usize,
    pub mass: Vec<f64>,
}

impl DensityHistogram {
    pub fn cell_width(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.cell_width()
    }

    fn bin(&self, x: f64) -> Option<usize> {
        let b = ((x + self.half_width) / self.cell_width()).floor();
        (b >= 0.0 && (b as usize) < self.cells).then_some(b as usize)
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Stratified estimate of `e(x,t) = t^{-3} ∫dk δ(x/t − ∇ω(k)/2π)`: the
/// pushforward of the uniform measure on T³ by `k ↦ t∇ω(k)/2π`, binned on a
/// `cells³` grid. Uses the midpoints of an `n³` k-grid (`n` even, so k = 0 is
/// never sampled).
pub fn ballistic_density(
    disp: &DispersionModel,
    t: f64,
    half_width: f64,
    cells: usize,
    samples_per_axis: usize,
) -> Result<DensityHistogram> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let n = samples_per_axis.max(2);
    let mut hist = DensityHistogram {
        dim: 3,
        half_width,
        cells,
        mass: vec![0.0; cells * cells * cells],
    };
    let w = 1.0 / (n as f64).powi(3);
    let kc = |j: usize| -0.5 + (j as f64 + 0.5) / n as f64;
    for a in 0..n {
        let bins: Vec<Option<usize>> = (0..n * n)
            .into_par_iter()
            .map(|i| {
                let v = disp.group_velocity([kc(a), kc(i / n), kc(i % n)]).ok()?;
                let b0 = hist.bin(t * v[0])?;
                let b1 = hist.bin(t * v[1])?;
                let b2 = hist.bin(t * v[2])?;
                Some((b0 * cells + b1) * cells + b2)
            })
            .collect();
        for b in bins {
            match b {
                Some(b) => hist.mass[b] += w,
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "half_width {half_width} does not contain the ballistic support"
                    )))
                }
            }
        }
    }
    Ok(hist)
}

/// Restriction of the ballistic density to the plane `x₃ = 0`, normalized to
/// unit mass. On the plane only `k₃ ∈ {0, ½}` contribute, each with Jacobian
/// weight `1/|∂v₃/∂k₃|`, so a 2D stratified sample suffices.
pub fn ballistic_plane_density(
    disp: &DispersionModel,
    t: f64,
    half_width: f64,
    cells: usize,
    samples_per_axis: usize,
) -> Result<DensityHistogram> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let n = samples_per_axis.max(2);
    let mut hist = DensityHistogram {
        dim: 2,
        half_width,
        cells,
        mass: vec![0.0; cells * cells],
    };
    let kc = |j: usize| -0.5 + (j as f64 + 0.5) / n as f64;
    for k3 in [0.0, 0.5] {
        let contrib: Vec<Option<(usize, f64)>> = (0..n * n)
            .into_par_iter()
            .map(|i| {
                let k = [kc(i / n), kc(i % n), k3];
                let v = disp.group_velocity(k).ok()?;
                let h = disp.hess_omega(k).ok()?;
                let jac = (h[2][2] / (2.0 * std::f64::consts::PI)).abs();
                if jac == 0.0 {
                    return None;
                }
                let b0 = hist.bin(t * v[0])?;
                let b1 = hist.bin(t * v[1])?;
                Some((b0 * cells + b1, 1.0 / jac))
            })
            .collect();
        for (b, w) in contrib.into_iter().flatten() {
            hist.mass[b] += w;
        }
    }
    let total = hist.total();
    if total > 0.0 {
        hist.mass.iter_mut().for_each(|m| *m /= total);
    }
    Ok(hist)
}

/// Fraction of the `top_fraction` highest cells of a plane density that lie
/// within `radius` cells (Chebyshev) of a cell containing a caustic point.
pub fn caustic_alignment(
    density: &[f64],
    cells: usize,
    cell_of: impl Fn([f64; 2]) -> Option<(usize, usize)>,
    caustics: &[CausticPoint],
    top_fraction: f64,
    radius: usize,
) -> f64 {
    let mut near = vec![false; cells * cells];
    for p in caustics {
        if let Some((a, b)) = cell_of(p.x) {
            let r = radius as i64;
            for da in -r..=r {
                for db in -r..=r {
                    let (x, y) = (a as i64 + da, b as i64 + db);
                    if x >= 0 && y >= 0 && (x as usize) < cells && (y as usize) < cells {
                        near[x as usize * cells + y as usize] = true;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..density.len()).collect();
    order.sort_by(|&i, &j| density[j].total_cmp(&density[i]).then(i.cmp(&j)));
    let top = ((density.len() as f64 * top_fraction).ceil() as usize).max(1);
    let hits = order[..top].iter().filter(|&&i| near[i]).count();
    hits as f64 / top as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caustics_scale_and_stay_in_ball() {
        let d = DispersionModel::nearest_neighbor();
        let a = caustic_slice(&d, 0.5, 256);
        let b = caustic_slice(&d, 1.0, 256);
        assert!(!a.is_empty());
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            assert!((2.0 * p.x[0] - q.x[0]).abs() < 1e-9);
            assert!((2.0 * p.x[1] - q.x[1]).abs() < 1e-9);
            assert!((q.x[0].powi(2) + q.x[1].powi(2)).sqrt() <= 1.0 + 1e-12);
            assert!(hessian_det(&d, p.k).abs() < 1e-6 * 1e3);
        }
    }

    #[test]
    fn caustics_have_square_symmetry() {
        let d = DispersionModel::nearest_neighbor();
        let pts = caustic_slice(&d, 1.0, 512);
        let near = |x: [f64; 2]| {
            pts.iter()
                .map(|p| (p.x[0] - x[0]).hypot(p.x[1] - x[1]))
                .fold(f64::INFINITY, f64::min)
        };
        for p in pts.iter().step_by(7) {
            let [a, b] = p.x;
            for img in [
                [b, a],
                [-a, b],
                [a, -b],
                [-b, -a],
                [-a, -b],
                [b, -a],
                [-b, a],
            ] {
                assert!(near(img) < 1e-9, "{:?} -> {:?}", p.x, img);
            }
        }
    }

    #[test]
    fn ballistic_density_mass_and_support() {
        let d = DispersionModel::nearest_neighbor();
        let t = 0.8;
        let h = ballistic_density(&d, t, 1.0, 40, 64).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
        for (i, m) in h.mass.iter().enumerate() {
            if *m > 0.0 {
                let c = [
                    h.center(i / 1600),
                    h.center((i / 40) % 40),
                    h.center(i % 40),
                ];
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                assert!(r <= 1.01 * t + 0.5 * 3f64.sqrt() * h.cell_width());
            }
        }
        assert!(ballistic_density(&d, 0.0, 1.0, 10, 8).is_err());
        assert!(ballistic_density(&d, t, 0.5, 10, 16).is_err());
    }

    #[test]
    fn plane_density_ridges_follow_caustics() {
        let d = DispersionModel::nearest_neighbor();
        let t = 0.95;
        let cells = 200;
        let h = ballistic_plane_density(&d, t, 1.0, cells, 1024).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
        let caus = caustic_slice(&d, t, 2048);
        let cell_of = |x: [f64; 2]| Some((h.bin(x[0])?, h.bin(x[1])?));
        let frac = caustic_alignment(&h.mass, cells, cell_of, &caus, 0.01, 2);
        assert!(frac >= 0.8, "alignment {frac}");
    }
}
