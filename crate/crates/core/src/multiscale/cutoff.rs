use serde::{Deserialize, Serialize};

/// Smooth cutoff `f(x) = h(2−|x|) / (h(2−|x|) + h(|x|−1))`, `h(s) = e^{−1/s}`
/// for `s > 0`: equal to 1 on `[−1, 1]`, 0 outside `(−2, 2)`, and strictly
/// decreasing on `[1, 2]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction;

#[inline]
fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl CutoffFunction {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        cutoff(x)
    }

    /// `φ(k) = f(|k|)`.
    #[inline]
    pub fn phi(&self, k: [f64; 3]) -> f64 {
        cutoff((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt())
    }
}

#[inline]
pub fn cutoff(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let p = h(2.0 - a);
    p / (p + h(a - 1.0))
}

/// `φ(k) = f(|k|)`.
#[inline]
pub fn phi(k: [f64; 3]) -> f64 {
    cutoff((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt())
}

/// Smooth ramp `η(s) = 1 − f(2s/r0)`: zero for `s ≤ r0/2`, one for `s ≥ r0`.
#[inline]
pub fn ramp(s: f64, r0: f64) -> f64 {
    1.0 - cutoff(2.0 * s / r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shape() {
        let f = CutoffFunction;
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(3.0), 0.0);
        assert_eq!(f.eval(-1.0), 1.0);
        assert_eq!(f.eval(2.0), 0.0);
        let m = f.eval(1.5);
        assert!(m > 0.0 && m < 1.0);
        assert!((m - 0.5).abs() < 1e-15);
        assert!((f.eval(1.41) - 0.68).abs() < 0.01);
        assert_eq!(ramp(0.4, 1.0), 0.0);
        assert_eq!(ramp(1.0, 1.0), 1.0);
    }

    proptest! {
        #[test]
        fn bounded_even_and_monotone(x in -3.0f64..3.0, d in 0.0f64..0.5) {
            let f = CutoffFunction;
            let v = f.eval(x);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, f.eval(-x));
            let a = x.abs();
            if a >= 1.0 && a + d <= 2.0 && d > 0.0 {
                prop_assert!(f.eval(a + d) < f.eval(a) || f.eval(a) == 0.0);
            }
        }
    }
}
