use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{flat, wrap};

/// Finite symmetric coupling constants `α(γ)`.
///
/// Entries are kept sorted by offset so equality and serialization are
/// canonical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<([i32; 3], f64)>", into = "Vec<([i32; 3], f64)>")]
pub struct CouplingStencil {
    entries: Vec<([i32; 3], f64)>,
    support_radius: usize,
}

impl TryFrom<Vec<([i32; 3], f64)>> for CouplingStencil {
    type Error = Error;
    fn try_from(v: Vec<([i32; 3], f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CouplingStencil> for Vec<([i32; 3], f64)> {
    fn from(s: CouplingStencil) -> Self {
        s.entries
    }
}

impl CouplingStencil {
    pub fn new(entries: Vec<([i32; 3], f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (g, a) in entries {
            if !a.is_finite() {
                return Err(Error::NonFinite("stencil value"));
            }
            if map.insert(g, a).is_some() {
                return Err(Error::Parse(format!("duplicate stencil offset {g:?}")));
            }
        }
        for (g, a) in &map {
            match map.get(&[-g[0], -g[1], -g[2]]) {
                Some(b) if b == a => {}
                _ => return Err(Error::AsymmetricStencil(*g)),
            }
        }
        let support_radius = map
            .keys()
            .map(|g| {
                g.iter()
                    .map(|c| c.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0);
        Ok(Self {
            entries: map.into_iter().collect(),
            support_radius,
        })
    }

    /// `α(0) = 6`, `α(±e_ν) = -1`.
    pub fn nearest_neighbor() -> Self {
        let mut e = vec![([0, 0, 0], 6.0)];
        for nu in 0..3 {
            for s in [-1, 1] {
                let mut g = [0; 3];
                g[nu] = s;
                e.push((g, -1.0));
            }
        }
        Self::new(e).expect("nn stencil is symmetric")
    }

    /// A built-in name (`nn`) or a path to a stencil text file.
    pub fn from_name_or_path(spec: &str) -> Result<Self> {
        match spec {
            "nn" => Ok(Self::nearest_neighbor()),
            other => Self::load(other),
        }
    }

    pub fn entries(&self) -> &[([i32; 3], f64)] {
        &self.entries
    }

    pub fn support_radius(&self) -> usize {
        self.support_radius
    }

    pub fn check_fits(&self, n: usize) -> Result<()> {
        if 2 * self.support_radius >= n {
            return Err(Error::StencilTooLarge {
                radius: self.support_radius,
                n,
            });
        }
        Ok(())
    }

    /// Text format: one `γ1 γ2 γ3 value` per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 fields, got {}",
                    lineno + 1,
                    tok.len()
                )));
            }
            let bad = |e: String| Error::Parse(format!("line {}: {e}", lineno + 1));
            let mut g = [0i32; 3];
            for (c, t) in g.iter_mut().zip(&tok[..3]) {
                *c = t
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
            }
            let a: f64 = tok[3]
                .parse()
                .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            entries.push((g, a));
        }
        Self::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (g, a) in &self.entries {
            s.push_str(&format!("{} {} {} {:?}\n", g[0], g[1], g[2], a));
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Periodic convolution `(α∗u)(γ) = Σ_δ α(δ) u(γ-δ)` on an `n^3` box.
    pub fn apply(&self, u: &[f64], n: usize) -> Result<Vec<f64>> {
        self.check_fits(n)?;
        let mut out = vec![0.0; n * n * n];
        for (d, a) in &self.entries {
            let sh = [
                wrap(-d[0] as i64, n),
                wrap(-d[1] as i64, n),
                wrap(-d[2] as i64, n),
            ];
            for i0 in 0..n {
                let j0 = (i0 + sh[0]) % n;
                for i1 in 0..n {
                    let j1 = (i1 + sh[1]) % n;
                    let orow = flat([i0, i1, 0], n);
                    let irow = flat([j0, j1, 0], n);
                    let (lo, hi) = (n - sh[2], sh[2]);
                    // i2 + sh2 wraps once; split into two contiguous runs
                    for i2 in 0..lo {
                        out[orow + i2] += a * u[irow + i2 + hi];
                    }
                    for i2 in lo..n {
                        out[orow + i2] += a * u[irow + i2 - lo];
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nn_round_trips_through_text() {
        let s = CouplingStencil::nearest_neighbor();
        assert_eq!(s.entries().len(), 7);
        assert_eq!(s.support_radius(), 1);
        let t = CouplingStencil::parse(&s.to_text()).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn rejects_asymmetric() {
        let e = CouplingStencil::parse("0 0 0 2\n1 0 0 -1\n");
        assert!(matches!(e, Err(Error::AsymmetricStencil(_))));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(CouplingStencil::parse("0 0 2\n").is_err());
        assert!(CouplingStencil::parse("0 0 0 x\n").is_err());
        assert!(CouplingStencil::parse("0 0 0 1\n0 0 0 1\n").is_err());
    }

    #[test]
    fn apply_matches_direct_sum() {
        let n = 6;
        let s = CouplingStencil::nearest_neighbor();
        let u: Vec<f64> = (0..n * n * n)
            .map(|i| ((i * 7919) % 13) as f64 - 6.0)
            .collect();
        let au = s.apply(&u, n).unwrap();
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    let mut acc = 0.0;
                    for (d, a) in s.entries() {
                        let j = [
                            wrap(i0 as i64 - d[0] as i64, n),
                            wrap(i1 as i64 - d[1] as i64, n),
                            wrap(i2 as i64 - d[2] as i64, n),
                        ];
                        acc += a * u[flat(j, n)];
                    }
                    assert!((acc - au[flat([i0, i1, i2], n)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn too_large_for_box() {
        let s = CouplingStencil::nearest_neighbor();
        assert!(s.check_fits(2).is_err());
        assert!(s.check_fits(4).is_ok());
    }
}
