//! Half-grid correlation engine.
//!
//! A field on the `N³` box is zero-padded into a `(2N)³` box and transformed,
//! which gives `ψ̂` at `k = m/(2N)`. The shifts `k ± εp/2` then become integer
//! index shifts `±p`, and the k-average over the `2N` grid is exact for the
//! trigonometric part of the integrand.

use rayon::prelude::*;

use crate::fft::{coords, zero_pad, Fft3, C64};

/// `ψ̂` sampled on the `(2N)³` grid `k = m/(2N)`.
#[derive(Clone, Debug)]
pub struct HalfGrid {
    n: usize,
    data: Vec<C64>,
}

impl HalfGrid {
    /// From a real-space field on the `N³` box (wrapped storage).
    pub fn from_field(field: &[C64], n: usize) -> Self {
        let mut data = zero_pad(field, n);
        Fft3::new(2 * n).forward(&mut data);
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n2(&self) -> usize {
        2 * self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// `(2N)^{-3} Σ_m |Ψ(m)|²`, equal to the ℓ² norm of the field.
    pub fn norm_sqr(&self) -> f64 {
        crate::fft::norm_sqr(&self.data) / (self.n2() as f64).powi(3)
    }

    /// Multiplies `Ψ(m)` by `w(k_m)`.
    pub fn map_k(&mut self, w: impl Fn([f64; 3]) -> C64 + Sync) {
        let n2 = self.n2();
        self.data.par_iter_mut().enumerate().for_each(|(i, z)| {
            *z *= w(half_kpoint(i, n2));
        });
    }
}

/// Torus point of index `i` on the `n2` grid, in `[−½, ½)³`.
#[inline]
pub fn half_kpoint(i: usize, n2: usize) -> [f64; 3] {
    let c = coords(i, n2);
    let s = 1.0 / n2 as f64;
    [c[0] as f64 * s, c[1] as f64 * s, c[2] as f64 * s]
}

/// Grid points kept by the sparse engine: all `m` with `Σ_i |Ψ_i(m)|² ≥ τ`,
/// where `τ` is the largest power of two such that the discarded mass is at
/// most `drop_tol` times the total.
#[derive(Clone, Debug)]
pub struct Support {
    n2: usize,
    idx: Vec<u32>,
    mask: Vec<bool>,
    /// Per input field: `(‖Ψ_i‖, ‖Ψ_i restricted to the dropped set‖)`, both
    /// in the normalized ℓ² sense.
    norms: Vec<(f64, f64)>,
}

impl Support {
    pub fn build(fields: &[&HalfGrid], drop_tol: f64) -> Self {
        assert!(!fields.is_empty());
        let n2 = fields[0].n2();
        let len = n2 * n2 * n2;
        let w: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|i| fields.iter().map(|f| f.data[i].norm_sqr()).sum())
            .collect();
        let total: f64 = w.iter().sum();
        // mass per binary exponent bucket
        const OFF: i32 = 1100;
        let bucket = |v: f64| -> usize {
            if v == 0.0 {
                0
            } else {
                (v.log2().floor() as i32 + OFF).clamp(1, 2 * OFF) as usize
            }
        };
        let mut mass = vec![0.0f64; 2 * OFF as usize + 1];
        for &v in &w {
            mass[bucket(v)] += v;
        }
        let budget = drop_tol.max(0.0) * total;
        let mut cut = 0usize;
        let mut acc = 0.0;
        for (b, m) in mass.iter().enumerate() {
            if acc + m > budget {
                break;
            }
            acc += m;
            cut = b + 1;
        }
        // always drop exact zeros
        let cut = cut.max(1);
        let mask: Vec<bool> = w.iter().map(|&v| v > 0.0 && bucket(v) >= cut).collect();
        let idx: Vec<u32> = mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| i as u32)
            .collect();
        let vol = (len as f64).recip();
        let norms = fields
            .iter()
            .map(|f| {
                let (all, off) = f.data.iter().zip(&mask).fold((0.0, 0.0), |(a, o), (z, m)| {
                    let v = z.norm_sqr();
                    (a + v, if *m { o } else { o + v })
                });
                ((all * vol).sqrt(), (off * vol).sqrt())
            })
            .collect();
        Self {
            n2,
            idx,
            mask,
            norms,
        }
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    /// `(‖Ψ_i‖, ‖Ψ_i off the support‖)` for the i-th field given to `build`.
    pub fn norms(&self, field: usize) -> (f64, f64) {
        self.norms[field]
    }

    /// Bound on `(2N)^{-3} Σ |Ψ_a(k₋)||Ψ_b(k₊)|` over the pairs skipped
    /// because one end lies off the support.
    pub fn drop_bound(&self, a: usize, b: usize) -> f64 {
        let (na, da) = self.norms[a];
        let (nb, db) = self.norms[b];
        da * nb + na * db
    }
}

/// Per-k weights on the dilated set `{s + scale·p}`, stored row-compressed:
/// each grid point carries a short list of `(kernel, weight)` pairs. The
/// weight multiplies `conj(Ψ_a(k₋)) Ψ_b(k₊)` directly, so it is already the
/// conjugated symbol.
pub struct KWeights {
    nkernels: usize,
    /// Grid points with at least one nonzero weight.
    active: Vec<u32>,
    pos: Vec<u32>,
    offsets: Vec<u32>,
    entries: Vec<(u32, C64)>,
}

const ABSENT: u32 = u32::MAX;

impl KWeights {
    pub fn build(
        support: &Support,
        scale: i64,
        pmax: usize,
        nkernels: usize,
        eval: impl Fn([f64; 3], &mut Vec<(u32, C64)>) + Sync,
    ) -> Self {
        let n2 = support.n2;
        let len = n2 * n2 * n2;
        // dilate the support by the shift cube, one axis at a time
        let mut on = support.mask.clone();
        let stride = [n2 * n2, n2, 1];
        for st in stride {
            let prev = on.clone();
            for (i, v) in prev.iter().enumerate() {
                if !*v {
                    continue;
                }
                let c = (i / st) % n2;
                let base = i - c * st;
                for d in -(pmax as i64)..=pmax as i64 {
                    let j = (c as i64 + scale * d).rem_euclid(n2 as i64) as usize;
                    on[base + j * st] = true;
                }
            }
        }
        let dset: Vec<u32> = on
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(|(i, _)| i as u32)
            .collect();
        drop(on);
        let rows: Vec<Vec<(u32, C64)>> = dset
            .par_iter()
            .map_init(Vec::new, |buf, &i| {
                buf.clear();
                eval(half_kpoint(i as usize, n2), buf);
                buf.retain(|(_, w)| *w != C64::default());
                buf.clone()
            })
            .collect();
        let mut pos = vec![ABSENT; len];
        let mut offsets = Vec::with_capacity(dset.len() + 1);
        let mut entries = Vec::new();
        let mut active = Vec::new();
        offsets.push(0u32);
        for (&i, row) in dset.iter().zip(rows) {
            if row.is_empty() {
                continue;
            }
            pos[i as usize] = active.len() as u32;
            active.push(i);
            entries.extend(row);
            offsets.push(entries.len() as u32);
        }
        Self {
            nkernels,
            active,
            pos,
            offsets,
            entries,
        }
    }

    pub fn nkernels(&self) -> usize {
        self.nkernels
    }

    /// Number of grid points carrying a nonzero weight.
    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    #[inline]
    fn row(&self, k: usize) -> &[(u32, C64)] {
        let r = self.pos[k];
        if r == ABSENT {
            return &[];
        }
        let r = r as usize;
        &self.entries[self.offsets[r] as usize..self.offsets[r + 1] as usize]
    }
}

#[inline]
fn split(i: usize, n: usize) -> [usize; 3] {
    [i / (n * n), (i / n) % n, i % n]
}

/// Index of `p` in the cube `|p|∞ ≤ P`.
#[inline]
pub fn cube_index(p: [i64; 3], pmax: usize) -> usize {
    let w = 2 * pmax + 1;
    let q = pmax as i64;
    (((p[0] + q) as usize * w) + (p[1] + q) as usize) * w + (p[2] + q) as usize
}

pub fn cube_points(pmax: usize) -> impl Iterator<Item = [i64; 3]> {
    let q = pmax as i64;
    (-q..=q).flat_map(move |a| (-q..=q).flat_map(move |b| (-q..=q).map(move |c| [a, b, c])))
}

/// `D_j(p) = (2N)^{-3} Σ_k w_j(k) conj(Ψ_a(k − scale·p)) Ψ_b(k + scale·p)`
/// for every `|p|∞ ≤ P` and kernel `j`, laid out as `[cube_index · nk + j]`.
/// Only `k − scale·p` in the support and `k + scale·p` in the support enter.
pub fn correlate(
    a: &HalfGrid,
    b: &HalfGrid,
    support: &Support,
    weights: &KWeights,
    scale: i64,
    pmax: usize,
) -> Vec<C64> {
    let n2 = support.n2;
    let nk = weights.nkernels;
    let vol = (n2 as f64).powi(3).recip();
    let shift = |d: i64| -> Vec<usize> {
        (0..n2)
            .map(|i| (i as i64 + d).rem_euclid(n2 as i64) as usize)
            .collect()
    };
    // iterate over whichever of the support and the weight set is smaller
    let by_weight = weights.active.len() < support.idx.len();
    let pts: Vec<[u16; 3]> = if by_weight {
        &weights.active
    } else {
        &support.idx
    }
    .iter()
    .map(|&i| split(i as usize, n2).map(|c| c as u16))
    .collect();
    // (first, second) shift tables for each of the three axes, indexed by p
    let (f1, f2) = if by_weight {
        (-scale, scale)
    } else {
        (scale, 2 * scale)
    };
    let q = pmax as i64;
    let tables = |f: i64| -> Vec<Vec<usize>> { (-q..=q).map(|d| shift(f * d)).collect() };
    let (first, second) = (tables(f1), tables(f2));
    let w = 2 * pmax + 1;
    // the last axis is innermost so that consecutive shifts touch one row
    let planes: Vec<(usize, usize)> = (0..w).flat_map(|a| (0..w).map(move |b| (a, b))).collect();
    let rows: Vec<Vec<C64>> = planes
        .par_iter()
        .map(|&(a0, a1)| {
            let mut acc = vec![C64::default(); w * nk];
            let (u0, u1, v0, v1) = (&first[a0], &first[a1], &second[a0], &second[a1]);
            for (r, c) in pts.iter().enumerate() {
                let c = c.map(usize::from);
                let bu = (u0[c[0]] * n2 + u1[c[1]]) * n2;
                let bv = (v0[c[0]] * n2 + v1[c[1]]) * n2;
                if by_weight {
                    // u = k − scale·p, v = k + scale·p
                    let row = &weights.entries
                        [weights.offsets[r] as usize..weights.offsets[r + 1] as usize];
                    for t in 0..w {
                        let km = bu + first[t][c[2]];
                        if !support.mask[km] {
                            continue;
                        }
                        let kp = bv + second[t][c[2]];
                        if !support.mask[kp] {
                            continue;
                        }
                        let prod = a.data[km].conj() * b.data[kp];
                        let out = &mut acc[t * nk..(t + 1) * nk];
                        for (j, wt) in row {
                            out[*j as usize] += wt * prod;
                        }
                    }
                } else {
                    // s = k − scale·p, u = k, v = k + scale·p
                    let s = support.idx[r] as usize;
                    let left = a.data[s].conj();
                    for t in 0..w {
                        let kp = bv + second[t][c[2]];
                        if !support.mask[kp] {
                            continue;
                        }
                        let row = weights.row(bu + first[t][c[2]]);
                        if row.is_empty() {
                            continue;
                        }
                        let prod = left * b.data[kp];
                        let out = &mut acc[t * nk..(t + 1) * nk];
                        for (j, wt) in row {
                            out[*j as usize] += wt * prod;
                        }
                    }
                }
            }
            acc.iter_mut().for_each(|z| *z *= vol);
            acc
        })
        .collect();
    rows.into_iter().flatten().collect()
}
