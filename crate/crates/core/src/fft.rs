//! Cubic-grid FFT helpers.
//!
//! All grid fields in this crate use "wrapped" storage: the entry for lattice
//! site (or dual index) `j` lives at offset `j mod n` along each axis, and the
//! flat index is `(i0 * n + i1) * n + i2`. This matches the natural FFT order.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex64;

#[inline]
pub fn wrap(j: i64, n: usize) -> usize {
    j.rem_euclid(n as i64) as usize
}

/// Signed representative of a wrapped index, in `-n/2 ..= n/2 - 1`.
#[inline]
pub fn signed(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[inline]
pub fn flat(i: [usize; 3], n: usize) -> usize {
    (i[0] * n + i[1]) * n + i[2]
}

#[inline]
pub fn unflat(idx: usize, n: usize) -> [usize; 3] {
    [idx / (n * n), (idx / n) % n, idx % n]
}

/// Signed coordinates of a flat index.
#[inline]
pub fn coords(idx: usize, n: usize) -> [i64; 3] {
    let i = unflat(idx, n);
    [signed(i[0], n), signed(i[1], n), signed(i[2], n)]
}

/// Dual-grid point `k_j = j / n` (fundamental domain `[-1/2, 1/2)`).
#[inline]
pub fn kpoint(idx: usize, n: usize) -> [f64; 3] {
    let c = coords(idx, n);
    [
        c[0] as f64 / n as f64,
        c[1] as f64 / n as f64,
        c[2] as f64 / n as f64,
    ]
}

/// Unnormalized 3D DFT on an `n^3` grid.
pub struct Fft3 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `x̂(j) = Σ_γ e^{-2πi j·γ/n} x(γ)`.
    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, &self.fwd);
    }

    /// `x(γ) = Σ_j e^{2πi j·γ/n} x̂(j)`, without the `1/n^3` factor.
    pub fn inverse_unnormalized(&self, data: &mut [C64]) {
        self.apply(data, &self.inv);
    }

    /// Inverse including the `1/n^3` factor.
    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, &self.inv);
        let s = 1.0 / (self.n as f64).powi(3);
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn apply(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
        // contiguous axis
        fft.process_with_scratch(data, &mut scratch);
        let mut buf = vec![C64::default(); n * n];
        // middle axis, one slab at a time
        for i0 in 0..n {
            let slab = &mut data[i0 * n * n..(i0 + 1) * n * n];
            for i1 in 0..n {
                for i2 in 0..n {
                    buf[i2 * n + i1] = slab[i1 * n + i2];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for i1 in 0..n {
                for i2 in 0..n {
                    slab[i1 * n + i2] = buf[i2 * n + i1];
                }
            }
        }
        // outer axis, one i1-plane at a time
        for i1 in 0..n {
            for i0 in 0..n {
                let row = (i0 * n + i1) * n;
                for i2 in 0..n {
                    buf[i2 * n + i0] = data[row + i2];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for i0 in 0..n {
                let row = (i0 * n + i1) * n;
                for i2 in 0..n {
                    data[row + i2] = buf[i2 * n + i0];
                }
            }
        }
    }
}

/// Embed an `n^3` field into a zero-filled `(2n)^3` box, keeping each site at
/// its signed position (sites `-n/2 .. n/2-1` stay distinct modulo `2n`).
pub fn zero_pad(field: &[C64], n: usize) -> Vec<C64> {
    let m = 2 * n;
    let mut out = vec![C64::default(); m * m * m];
    for (idx, z) in field.iter().enumerate() {
        let c = coords(idx, n);
        out[flat([wrap(c[0], m), wrap(c[1], m), wrap(c[2], m)], m)] = *z;
    }
    out
}

pub fn norm_sqr(field: &[C64]) -> f64 {
    field.iter().map(|z| z.norm_sqr()).sum()
}
