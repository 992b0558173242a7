//! Separation bounds. `J` always denotes the message count of the theorem statements;
//! the lower bounds (K2, K3 and the multiset K2 verifier) concern codebooks holding
//! `J/2` of those codewords.

use serde::{Deserialize, Serialize};

use super::{max_pairwise_intersection, Codebook};
use crate::error::{domain, Result};
use crate::numerics::{ceil_snap, floor_snap};

fn check_common(m: u32, alpha: f64) -> Result<()> {
    if m < 2 {
        return domain("M must be at least 2");
    }
    if !(alpha > 1.0) {
        return domain(format!("alpha = {alpha} must exceed 1"));
    }
    Ok(())
}

/// Upper bound on K1, `ceil(max(ln J / (c' ln M), e M^(2 - alpha + c')))`.
pub fn k1_upper_bound(m: u32, log_j: f64, alpha: f64, c_prime: f64) -> Result<u64> {
    check_common(m, alpha)?;
    if !(log_j >= 0.0) {
        return domain("need J >= 1");
    }
    if !(c_prime > 0.0) {
        return domain("c' must be positive");
    }
    let ln_m = (m as f64).ln();
    let a = log_j / (c_prime * ln_m);
    let b = std::f64::consts::E * ((2.0 - alpha + c_prime) * ln_m).exp();
    Ok(ceil_snap(a.max(b)) as u64)
}

/// Pigeonhole lower bound on K2, `floor(ln(J/2) / (alpha ln M))`, valid for
/// `2 <= J <= 2 M^(alpha M)`.
pub fn k2_lower_bound(m: u32, log_j: f64, alpha: f64) -> Result<u32> {
    check_common(m, alpha)?;
    let ln2 = std::f64::consts::LN_2;
    let ln_m = (m as f64).ln();
    if !(log_j >= ln2 - 1e-12) {
        return domain("K2 bound needs J >= 2");
    }
    if log_j > ln2 + alpha * m as f64 * ln_m + 1e-9 {
        return domain("K2 bound needs J <= 2 M^(alpha M)");
    }
    let v = floor_snap(((log_j - ln2).max(0.0)) / (alpha * ln_m));
    Ok((v as u32).min(m))
}

/// Plotkin-style lower bound on K3 (no multisets), `M^(2-alpha) - M/(J/2 - 1)`, under
/// the hypotheses `J > 2 M^alpha` and `alpha in (1, 2)`.
pub fn k3_lower_bound(m: u32, j: f64, alpha: f64) -> Result<f64> {
    check_common(m, alpha)?;
    if alpha >= 2.0 {
        return domain("K3 bound needs alpha < 2");
    }
    let inner = (m as f64).powf(alpha);
    if !(j > 2.0 * inner) {
        return domain(format!("K3 bound needs J > 2 M^alpha = {}", 2.0 * inner));
    }
    Ok(plotkin_value(m, j, alpha))
}

/// The same expression with only `J/2 >= 2` required.
///
/// For `J' = J/2` sets of size `M` over `M^alpha` molecules, convexity of the
/// molecule degree counts gives an average pairwise intersection of at least
/// `(J' M^(2-alpha) - M) / (J' - 1) >= M^(2-alpha) - M/(J' - 1)`, so the value
/// bounds the maximum intersection without the `J > 2 M^alpha` hypothesis.
pub fn k3_plotkin_average_bound(m: u32, j: f64, alpha: f64) -> Result<f64> {
    check_common(m, alpha)?;
    if alpha >= 2.0 {
        return domain("K3 bound needs alpha < 2");
    }
    if !(j / 2.0 >= 2.0) {
        return domain("need at least two codewords (J >= 4)");
    }
    Ok(plotkin_value(m, j, alpha))
}

fn plotkin_value(m: u32, j: f64, alpha: f64) -> f64 {
    let mf = m as f64;
    mf.powf(2.0 - alpha) - mf / (j / 2.0 - 1.0)
}

/// All three separation bounds at one parameter point. Bounds whose hypotheses fail
/// are absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationBounds {
    pub m: u32,
    pub log_j: f64,
    pub alpha: f64,
    pub c_prime: f64,
    pub k1_upper: u64,
    pub k2_lower: Option<u32>,
    pub k3_lower: Option<f64>,
}

pub fn separation_bounds(m: u32, log_j: f64, alpha: f64, c_prime: f64) -> Result<SeparationBounds> {
    let k1_upper = k1_upper_bound(m, log_j, alpha, c_prime)?;
    Ok(SeparationBounds {
        m,
        log_j,
        alpha,
        c_prime,
        k1_upper,
        k2_lower: k2_lower_bound(m, log_j, alpha).ok(),
        k3_lower: k3_lower_bound(m, log_j.exp(), alpha).ok(),
    })
}

/// Outcome of checking a codebook against the multiset K2 lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultisetK2Report {
    /// Message count `J = 2 * codewords`.
    pub j: f64,
    pub m: u32,
    pub alpha: f64,
    /// `s = ln ln J / ln M`.
    pub s: f64,
    /// First branch `M^(1+(s-alpha)/2) / (log2 M + 1)^2 - M/(J/2 - 1)`.
    pub branch_sum: f64,
    /// Second branch `M^(1+(s-alpha)/2) / (2 alpha (log2 M + 1))`.
    pub branch_bit: f64,
    pub bound: f64,
    pub max_intersection: u64,
    pub witness: (usize, usize),
    pub holds: bool,
    /// Whether `s <= 2 - alpha`, the range in which the bound is stated.
    pub s_in_stated_range: bool,
}

/// Exact max pairwise multiset intersection of `cb` against the binary-expansion
/// lower bound for multiset codebooks. Requires `J > 2 M^alpha (log2 M + 1)` and
/// `ln J > 1`.
pub fn verify_multiset_k2(cb: &Codebook) -> Result<MultisetK2Report> {
    let m = cb.m();
    let alpha = cb.scaling().alpha();
    let mf = m as f64;
    let j = 2.0 * cb.len() as f64;
    let log2m1 = mf.log2() + 1.0;
    if !(j > 2.0 * mf.powf(alpha) * log2m1) {
        return domain(format!(
            "multiset K2 bound needs J > 2 M^alpha (log2 M + 1) = {}",
            2.0 * mf.powf(alpha) * log2m1
        ));
    }
    let s = j.ln().ln() / mf.ln();
    if !(s > 0.0) {
        return domain("multiset K2 bound needs ln J > 1");
    }
    let head = mf.powf(1.0 + (s - alpha) / 2.0);
    let branch_sum = head / (log2m1 * log2m1) - mf / (j / 2.0 - 1.0);
    let branch_bit = head / (2.0 * alpha * log2m1);
    let bound = branch_sum.min(branch_bit);
    let best = max_pairwise_intersection(cb)?;
    Ok(MultisetK2Report {
        j,
        m,
        alpha,
        s,
        branch_sum,
        branch_bit,
        bound,
        max_intersection: best.value,
        witness: best.pair,
        holds: best.value as f64 >= bound,
        s_in_stated_range: s <= 2.0 - alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{Codebook, Codeword, Layout};
    use crate::scaling::{MessageSpec, ScalingParams};

    #[test]
    fn k1_examples() {
        let log_j = 100f64.powf(0.6);
        assert_eq!(k1_upper_bound(100, log_j, 1.5, 0.5).unwrap(), 272);
        let e = std::f64::consts::E;
        let want = (e * 100f64.powf(2.0 - 1.5 + 0.5)).ceil() as u64;
        assert_eq!(k1_upper_bound(100, 0.0, 1.5, 0.5).unwrap(), want);
        assert!(k1_upper_bound(100, 1.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn k1_with_c_prime_inverse_log_m() {
        let e2 = std::f64::consts::E.powi(2);
        let mut ratios = Vec::new();
        for (m, want) in [(100u32, 74u64), (1000, 234), (10000, 739)] {
            let c = 1.0 / (m as f64).ln();
            let k = k1_upper_bound(m, 0.0, 1.5, c).unwrap();
            assert_eq!(k, want);
            ratios.push(k as f64 / (m as f64).powf(0.5));
        }
        for r in ratios {
            assert!(r <= e2 + 0.02, "{r}");
        }
    }

    #[test]
    fn k2_examples() {
        let log_j = 2f64.ln() + 6.0 * 100f64.ln();
        assert_eq!(k2_lower_bound(100, log_j, 1.5).unwrap(), 4);
        assert_eq!(k2_lower_bound(100, 2f64.ln(), 1.5).unwrap(), 0);
        assert_eq!(k2_lower_bound(2, 10f64.ln(), 2.0).unwrap(), 1);
        assert!(k2_lower_bound(2, 100.0, 2.0).is_err());
        assert!(k2_lower_bound(2, 0.0, 2.0).is_err());
    }

    #[test]
    fn k3_examples() {
        let alpha = 16f64.ln() / 8f64.ln();
        assert!((k3_plotkin_average_bound(8, 18.0, alpha).unwrap() - 3.0).abs() < 1e-9);
        assert!(k3_lower_bound(8, 18.0, alpha).is_err());
        let v = k3_lower_bound(4, 65.0, 1.5).unwrap();
        assert!((v - (2.0 - 4.0 / 31.5)).abs() < 1e-12);
        let far = k3_lower_bound(8, 1e15, alpha).unwrap();
        assert!((far - 4.0).abs() < 1e-9);
        assert!(k3_lower_bound(4, 65.0, 2.5).is_err());
    }

    #[test]
    fn multiset_verifier_on_identical_codewords() {
        let s = ScalingParams::new(8, 16, 8, MessageSpec::Count { j: 600 }).unwrap();
        let cw = Codeword::from_molecules([0, 0, 1, 2, 3, 4, 5, 6]);
        let cb = Codebook::new(s, Layout::Unstructured, vec![cw; 300]).unwrap();
        let r = verify_multiset_k2(&cb).unwrap();
        assert_eq!(r.max_intersection, 8);
        assert!(r.holds);
        assert!(r.bound < 8.0);
    }

    #[test]
    fn multiset_verifier_checks_hypothesis() {
        let s = ScalingParams::new(8, 16, 8, MessageSpec::Count { j: 10 }).unwrap();
        let cw = Codeword::from_molecules([0, 1, 2, 3, 4, 5, 6, 7]);
        let cb = Codebook::new(s, Layout::Unstructured, vec![cw; 5]).unwrap();
        assert!(verify_multiset_k2(&cb).is_err());
    }
}
