//! Log-domain arithmetic and small numeric helpers shared by the rest of the crate.
//!
//! Probabilities that underflow `f64` (the occupancy tails reach `e^-600` at desk
//! scale) are carried as natural logarithms. `-inf` encodes probability zero.

use std::sync::OnceLock;

/// Stable `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stable `ln(sum(exp(values)))`; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Accumulator for sums of signed terms given as `(sign, ln|term|)`.
///
/// Positive and negative parts are kept separately in log domain and combined once
/// at the end, so the only cancellation happens in [`SignedLogSum::finish`].
#[derive(Debug, Clone, Copy)]
pub struct SignedLogSum {
    pos: f64,
    neg: f64,
}

impl Default for SignedLogSum {
    fn default() -> Self {
        Self {
            pos: f64::NEG_INFINITY,
            neg: f64::NEG_INFINITY,
        }
    }
}

impl SignedLogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, negative: bool, log_abs: f64) {
        if negative {
            self.neg = log_add_exp(self.neg, log_abs);
        } else {
            self.pos = log_add_exp(self.pos, log_abs);
        }
    }

    /// Largest of the two partial sums, a proxy for the magnitude of the largest term.
    pub fn scale(&self) -> f64 {
        self.pos.max(self.neg)
    }

    /// Returns `(negative, ln|sum|)`.
    pub fn finish(&self) -> (bool, f64) {
        if self.neg == f64::NEG_INFINITY {
            return (false, self.pos);
        }
        if self.pos == f64::NEG_INFINITY {
            return (true, self.neg);
        }
        if self.pos >= self.neg {
            let d = self.neg - self.pos;
            (false, self.pos + (-d.exp()).ln_1p())
        } else {
            let d = self.pos - self.neg;
            (true, self.neg + (-d.exp()).ln_1p())
        }
    }
}

const LN_FACT_TABLE: usize = 256;

fn ln_fact_table() -> &'static [f64; LN_FACT_TABLE] {
    static TABLE: OnceLock<[f64; LN_FACT_TABLE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; LN_FACT_TABLE];
        for i in 1..LN_FACT_TABLE {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    })
}

/// `ln(n!)`: exact summation below 256, Stirling series with three correction terms above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACT_TABLE {
        return ln_fact_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `x ln x` with the convention `0 ln 0 = 0`.
fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary entropy in nats, `H2(0) = H2(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    -(xlogx(x) + xlogx(1.0 - x))
}

/// Binary KL divergence `D(a || b)` in nats.
pub fn binary_kl(a: f64, b: f64) -> f64 {
    let term = |x: f64, y: f64| {
        if x <= 0.0 {
            0.0
        } else if y <= 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    };
    term(a, b) + term(1.0 - a, 1.0 - b)
}

/// Bisection for an increasing `g` on `[lo, hi]` with `g(lo) <= 0 <= g(hi)`.
///
/// Stops once `|g(x)| <= tol` or the bracket can no longer be split in `f64`.
pub fn bisect_increasing<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.abs() <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Round to nearest integer with ties going up.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Slack applied before flooring or ceiling formula values that are integers in exact
/// arithmetic (`6 ln 100 / (1.5 ln 100)` must floor to 4, not 3).
pub const INTEGER_SNAP: f64 = 1e-9;

pub fn floor_snap(x: f64) -> f64 {
    (x + INTEGER_SNAP).floor()
}

pub fn ceil_snap(x: f64) -> f64 {
    (x - INTEGER_SNAP).ceil()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        let v = log_add_exp(0.3f64.ln(), 0.2f64.ln());
        assert!((v.exp() - 0.5).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, -1.0), -1.0);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn signed_sum_cancellation() {
        let mut s = SignedLogSum::new();
        s.add(false, 3.0f64.ln());
        s.add(true, 1.0f64.ln());
        let (neg, v) = s.finish();
        assert!(!neg);
        assert!((v.exp() - 2.0).abs() < 1e-14);
        let mut s = SignedLogSum::new();
        s.add(true, 3.0f64.ln());
        s.add(false, 1.0f64.ln());
        assert!(s.finish().0);
    }

    #[test]
    fn factorials_agree_across_the_table_boundary() {
        let exact: f64 = (1..=300u64).map(|i| (i as f64).ln()).sum();
        assert!((ln_factorial(300) - exact).abs() < 1e-10);
        let exact: f64 = (1..=255u64).map(|i| (i as f64).ln()).sum();
        assert!((ln_factorial(255) - exact).abs() < 1e-12);
        assert!((ln_binomial(10, 3).exp() - 120.0).abs() < 1e-9);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn entropy_and_kl() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(binary_kl(0.3, 0.3).abs() < 1e-15);
    }

    #[test]
    fn snapping() {
        let x = 6.0 * 100f64.ln() / (1.5 * 100f64.ln());
        assert_eq!(floor_snap(x), 4.0);
        assert_eq!(ceil_snap(3.0 + 1e-12), 3.0);
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(2.4), 2);
    }
}
