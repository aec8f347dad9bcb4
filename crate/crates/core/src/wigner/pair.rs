use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{correlate, cube_index, cube_points, HalfGrid, KWeights, Support};
use super::symbol::{AdmissibleTestFunction, KAtom, QAtom, Term};
use crate::error::{Error, Result};
use crate::fft::{wrap, Fft3, C64};
use crate::lattice::NormalMode;
use crate::multiscale::MacroField;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub value: C64,
    /// Bound on `|value − Σ_{all p}|` from the x-Fourier tails beyond `p_max`
    /// plus the contribution of grid points dropped by the sparse engine.
    pub truncation_error_bound: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMethod {
    /// Real space when every k-part is a trigonometric polynomial and every
    /// q-part constant, half-grid spectral otherwise.
    #[default]
    Auto,
    RealSpace,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingOptions {
    pub method: PairingMethod,
    /// Relative mass the spectral engine may discard from `Ψ̂`.
    pub drop_tol: f64,
}

impl Default for PairingOptions {
    fn default() -> Self {
        Self {
            method: PairingMethod::Auto,
            drop_tol: 1e-20,
        }
    }
}

/// `⟨a, W^ε[ψ]⟩` truncated to `|p|∞ ≤ p_max`, with `ε = 1/N`.
pub fn wigner_pair(
    mode: &NormalMode,
    a: &AdmissibleTestFunction,
    p_max: usize,
) -> Result<PairingResult> {
    wigner_pair_with(mode, a, p_max, PairingOptions::default())
}

pub fn wigner_pair_with(
    mode: &NormalMode,
    a: &AdmissibleTestFunction,
    p_max: usize,
    opts: PairingOptions,
) -> Result<PairingResult> {
    let psi = mode.psi_plus();
    LatticePairing {
        psi: &psi,
        n: mode.n,
        scale: 1,
    }
    .pair(a, p_max, opts)
}

/// Discretized `∫dp dq conj(b̂(p,q)) conj(φ̂(q − s p/2)) φ̂(q + s p/2)` on the
/// unit torus, for a positive integer scale `s`. The k-parts of `b` are
/// frozen at `k = 0`. This equals the lattice pairing of the samples
/// `M^{-3/2} φ(γ/M)` at `ε = 1/M`.
pub fn l2_wigner_pair(
    phi: &MacroField,
    b: &AdmissibleTestFunction,
    scale: usize,
    p_max: usize,
) -> Result<PairingResult> {
    l2_wigner_pair_with(phi, b, scale, p_max, PairingOptions::default())
}

pub fn l2_wigner_pair_with(
    phi: &MacroField,
    b: &AdmissibleTestFunction,
    scale: usize,
    p_max: usize,
    opts: PairingOptions,
) -> Result<PairingResult> {
    if scale == 0 {
        return Err(Error::InvalidParameter(
            "scale must be a positive integer".into(),
        ));
    }
    let psi = phi.to_lattice();
    LatticePairing {
        psi: &psi,
        n: phi.m(),
        scale: scale as i64,
    }
    .pair(&b.at_k_zero(), p_max, opts)
}

struct LatticePairing<'a> {
    psi: &'a [C64],
    n: usize,
    scale: i64,
}

impl LatticePairing<'_> {
    fn eps(&self) -> f64 {
        1.0 / self.n as f64
    }

    fn pair(
        &self,
        a: &AdmissibleTestFunction,
        p_max: usize,
        opts: PairingOptions,
    ) -> Result<PairingResult> {
        let half = self.n / 2;
        if p_max * self.scale as usize > half {
            return Err(Error::PMaxTooLarge { p_max, half });
        }
        let norm: f64 = self.psi.iter().map(|z| z.norm_sqr()).sum();
        let tail: f64 = a
            .terms()
            .iter()
            .map(|t| t.k_sup() * t.x.fourier_tail(p_max))
            .sum::<f64>()
            * norm;
        let value = match opts.method {
            PairingMethod::RealSpace => {
                if !a.is_band_limited() {
                    return Err(Error::InvalidParameter(
                        "real-space pairing needs trigonometric k-parts and constant q-parts"
                            .into(),
                    ));
                }
                return Ok(PairingResult {
                    value: self.real_space(a.terms(), p_max),
                    truncation_error_bound: tail,
                });
            }
            PairingMethod::Spectral => self.spectral(a.terms(), p_max, opts.drop_tol),
            // band-limited terms in real space, the rest on the half grid
            PairingMethod::Auto => {
                let (band, rest): (Vec<Term>, Vec<Term>) =
                    a.terms().iter().cloned().partition(Term::is_band_limited);
                let (v, drop) = self.spectral(&rest, p_max, opts.drop_tol);
                (v + self.real_space(&band, p_max), drop)
            }
        };
        Ok(PairingResult {
            value: value.0,
            truncation_error_bound: tail + value.1,
        })
    }

    /// `Σ_n conj(c_n) Σ_γ ψ(γ) conj(ψ(γ+n)) conj(f_P(sε(γ + n/2)))` with both
    /// `γ` and `γ+n` inside the box.
    fn real_space(&self, terms: &[Term], p_max: usize) -> C64 {
        let n = self.n;
        let h = (n / 2) as i64;
        let x_of = |m: i64| self.scale as f64 * self.eps() * m as f64 / 2.0;
        let mut total = C64::default();
        for term in terms {
            let hq = match &term.q {
                QAtom::Constant { value } => *value,
                QAtom::Directional { .. } => unreachable!("checked band-limited"),
            };
            let coeffs: Vec<([i64; 3], C64)> = match &term.k {
                KAtom::Constant { value } => vec![([0, 0, 0], value * hq)],
                KAtom::Trig { coeffs } => coeffs
                    .iter()
                    .map(|(m, c)| ([m[0] as i64, m[1] as i64, m[2] as i64], c * hq))
                    .collect(),
                KAtom::Bump { .. } => unreachable!("checked band-limited"),
            };
            let reach = coeffs
                .iter()
                .flat_map(|(m, _)| m.iter().map(|v| v.abs()))
                .max()
                .unwrap_or(0);
            let lo = -(n as i64) - reach;
            let width = (2 * n as i64 + 2 * reach + 1) as usize;
            let products: Vec<(C64, [Vec<C64>; 3])> = term
                .x
                .truncated_products(p_max)
                .into_iter()
                .map(|(amp, ax)| {
                    (
                        amp.conj(),
                        std::array::from_fn(|nu| {
                            (0..width)
                                .map(|j| ax[nu].eval(x_of(lo + j as i64)).conj())
                                .collect()
                        }),
                    )
                })
                .collect();
            for (shift, c) in &coeffs {
                if shift.iter().any(|v| v.abs() >= n as i64) {
                    continue;
                }
                let range = |d: i64| (-h).max(-h - d)..h.min(h - d);
                let idx = |g: i64| wrap(g, n);
                let partial: Vec<C64> = range(shift[0])
                    .into_par_iter()
                    .map(|g0| {
                        let mut acc = C64::default();
                        let t0 = (2 * g0 + shift[0] - lo) as usize;
                        for g1 in range(shift[1]) {
                            let t1 = (2 * g1 + shift[1] - lo) as usize;
                            let row = (idx(g0) * n + idx(g1)) * n;
                            let row2 = (idx(g0 + shift[0]) * n + idx(g1 + shift[1])) * n;
                            for g2 in range(shift[2]) {
                                let t2 = (2 * g2 + shift[2] - lo) as usize;
                                let z = self.psi[row + idx(g2)]
                                    * self.psi[row2 + idx(g2 + shift[2])].conj();
                                if z == C64::default() {
                                    continue;
                                }
                                let f: C64 = products
                                    .iter()
                                    .map(|(amp, t)| amp * t[0][t0] * t[1][t1] * t[2][t2])
                                    .sum();
                                acc += z * f;
                            }
                        }
                        acc
                    })
                    .collect();
                total += c.conj() * partial.into_iter().sum::<C64>();
            }
        }
        total
    }

    /// Half-grid evaluation; returns the value and the sparse-drop bound.
    fn spectral(&self, terms: &[Term], p_max: usize, drop_tol: f64) -> (C64, f64) {
        if terms.is_empty() {
            return (C64::default(), 0.0);
        }
        let hg = HalfGrid::from_field(self.psi, self.n);
        let support = Support::build(&[&hg], drop_tol);
        let eps = self.eps();
        let weights = KWeights::build(
            &support,
            self.scale,
            p_max,
            terms.len(),
            term_weights(terms, eps),
        );
        let d = correlate(&hg, &hg, &support, &weights, self.scale, p_max);
        let drop = support.drop_bound(0, 0) * drop_factor(terms);
        (combine_terms(terms, &d, p_max), drop)
    }
}

/// One kernel per term: `conj(g_i(k) h_i(k/ε))`.
pub(crate) fn term_weights(
    terms: &[Term],
    eps: f64,
) -> impl Fn([f64; 3], &mut Vec<(u32, C64)>) + Sync + '_ {
    move |k, out| {
        for (j, t) in terms.iter().enumerate() {
            out.push((j as u32, t.k_symbol(k, eps).conj()));
        }
    }
}

/// `Σ_p Σ_i conj(f̂_i(p)) D_i(p)` for a correlation laid out by
/// [`correlate`].
pub(crate) fn combine_terms(terms: &[Term], d: &[C64], p_max: usize) -> C64 {
    let nk = terms.len();
    let mut value = C64::default();
    for p in cube_points(p_max) {
        let base = cube_index(p, p_max) * nk;
        for (j, t) in terms.iter().enumerate() {
            let fh = t.x.fourier(p);
            if fh != C64::default() {
                value += fh.conj() * d[base + j];
            }
        }
    }
    value
}

/// `Σ_i sup|G_i| Σ_p |f̂_i(p)|`, the factor multiplying a sparse-drop bound.
pub(crate) fn drop_factor(terms: &[Term]) -> f64 {
    terms.iter().map(|t| t.k_sup() * t.x.fourier_l1()).sum()
}

/// Reference value `Σ_{γ,γ'} conj(ψ(γ')) ψ(γ) Σ_i conj(f_i(ε(γ+γ')/2)) K_i(γ'−γ)`
/// with `K_i(m) = ∫dk e^{2πik·m} conj(g_i(k)h_i(k/ε))` by the midpoint rule on
/// a `4N` grid. Cost `O(N⁶)`.
pub fn wigner_pair_exact(mode: &NormalMode, a: &AdmissibleTestFunction) -> Result<C64> {
    let n = mode.n;
    if n > 24 {
        return Err(Error::OracleTooLarge(n));
    }
    let psi = mode.psi_plus();
    let eps = mode.eps;
    let h = (n / 2) as i64;
    // sums and differences of box points lie in [−N, N]
    let w = 2 * n + 1;
    let off = n as i64;
    let tidx = |v: [i64; 3]| {
        (((v[0] + off) as usize * w) + (v[1] + off) as usize) * w + (v[2] + off) as usize
    };
    let cells: Vec<[i64; 3]> = (-h..h)
        .flat_map(|a| (-h..h).flat_map(move |b| (-h..h).map(move |c| [a, b, c])))
        .collect();
    let mut total = C64::default();
    for term in a.terms() {
        let kern = k_kernel(term, n, eps);
        let mut ftab = vec![C64::default(); w * w * w];
        for (i, slot) in ftab.iter_mut().enumerate() {
            let s = [
                (i / (w * w)) as i64 - off,
                ((i / w) % w) as i64 - off,
                (i % w) as i64 - off,
            ];
            *slot = term
                .x
                .value([
                    eps * s[0] as f64 / 2.0,
                    eps * s[1] as f64 / 2.0,
                    eps * s[2] as f64 / 2.0,
                ])
                .conj();
        }
        let part: Vec<C64> = cells
            .par_iter()
            .map(|g| {
                let pg = psi[flat_signed(*g, n)];
                if pg == C64::default() {
                    return C64::default();
                }
                let mut acc = C64::default();
                for gp in &cells {
                    let q = psi[flat_signed(*gp, n)];
                    if q == C64::default() {
                        continue;
                    }
                    let s = [g[0] + gp[0], g[1] + gp[1], g[2] + gp[2]];
                    let d = [gp[0] - g[0], gp[1] - g[1], gp[2] - g[2]];
                    acc += q.conj() * ftab[tidx(s)] * kern[tidx(d)];
                }
                acc * pg
            })
            .collect();
        total += part.into_iter().sum::<C64>();
    }
    Ok(total)
}

fn flat_signed(g: [i64; 3], n: usize) -> usize {
    crate::fft::flat([wrap(g[0], n), wrap(g[1], n), wrap(g[2], n)], n)
}

/// `K(d) = ∫dk e^{2πik·d} conj(G(k))` for `|d|∞ ≤ N`, tabulated like the
/// oracle's midpoint table.
fn k_kernel(term: &Term, n: usize, eps: f64) -> Vec<C64> {
    let m = 4 * n;
    let mut g: Vec<C64> = (0..m * m * m)
        .map(|i| term.k_symbol(crate::fft::kpoint(i, m), eps).conj())
        .collect();
    Fft3::new(m).inverse(&mut g);
    let w = 2 * n + 1;
    let off = n as i64;
    (0..w * w * w)
        .map(|i| {
            let d = [
                (i / (w * w)) as i64 - off,
                ((i / w) % w) as i64 - off,
                (i % w) as i64 - off,
            ];
            g[crate::fft::flat([wrap(d[0], m), wrap(d[1], m), wrap(d[2], m)], m)]
        })
        .collect()
}
