//! Non-asymptotic bounds on the optimal error probability, as natural logarithms.
//! Upper bounds above probability one are reported as 0.

use serde::{Deserialize, Serialize};

use crate::codebook::k2_lower_bound;
use crate::error::{domain, Result};
use crate::numerics::ln_binomial;
use crate::scaling::ScalingParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
}

/// `n ln(x)` with `0^n = 0` for `n >= 1`.
fn ln_pow(x: f64, n: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        n * x.ln()
    }
}

fn check_ks(s: &ScalingParams, k1: u32, k2: u32) -> Result<()> {
    s.validate()?;
    if !(k2 <= k1 && k1 <= s.m) {
        return domain(format!("need 0 <= K2 <= K1 <= M (K1 = {k1}, K2 = {k2}, M = {})", s.m));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("p = {p} not in [0,1]"));
    }
    Ok(())
}

fn ln_quarter() -> f64 {
    -(4f64.ln())
}

/// `(1/4)(K2/M)^N <= Pe* <= C(M,K1)(K1/M)^N`.
pub fn bound_no_seq(s: &ScalingParams, k1: u32, k2: u32) -> Result<BoundPair> {
    bound_erasure(s, k1, k2, 0.0)
}

/// `(1/4) max(p, K2/M)^N <= Pe* <= C(M,K1)(p + K1/M)^N`.
pub fn bound_erasure(s: &ScalingParams, k1: u32, k2: u32, p: f64) -> Result<BoundPair> {
    check_ks(s, k1, k2)?;
    check_p(p)?;
    let (m, n) = (s.m as f64, s.n as f64);
    let lower = ln_quarter() + ln_pow(p.max(k2 as f64 / m), n);
    let upper = ln_binomial(s.m as u64, k1 as u64) + ln_pow(p + k1 as f64 / m, n);
    Ok(BoundPair {
        lower,
        upper: upper.min(0.0),
    })
}

/// `max((1/2)(p(1-p)/2)^(N/2), (1/4)(K2/M)^N) <= Pe*
///  <= (N+1) 4^N C(M,K1) max(p^(N/2), (K1/M)^N)`.
pub fn bound_adversarial(s: &ScalingParams, k1: u32, k2: u32, p: f64) -> Result<BoundPair> {
    check_ks(s, k1, k2)?;
    check_p(p)?;
    let (m, n) = (s.m as f64, s.n as f64);
    let attack = -(2f64.ln()) + ln_pow(p * (1.0 - p) / 2.0, n / 2.0);
    let pigeon = ln_quarter() + ln_pow(k2 as f64 / m, n);
    let upper = (n + 1.0).ln()
        + n * 4f64.ln()
        + ln_binomial(s.m as u64, k1 as u64)
        + ln_pow(p, n / 2.0).max(ln_pow(k1 as f64 / m, n));
    Ok(BoundPair {
        lower: attack.max(pigeon),
        upper: upper.min(0.0),
    })
}

/// Random-substitution model:
/// `(1/4) max(p, K2/M)^N <= Pe* <= N^3 2^(M+3N) max(K1/M, p, M^(1-alpha))^(N - gamma)`
/// with `gamma = ln J / ((alpha - 1) ln M)`. `K2` is the pigeonhole bound at `J`
/// (zero when `J < 2`).
pub fn bound_random(s: &ScalingParams, k1: u32, p: f64, log_j: f64, alpha: f64) -> Result<BoundPair> {
    s.validate()?;
    check_p(p)?;
    if k1 > s.m {
        return domain("K1 cannot exceed M");
    }
    if !(alpha > 1.0) {
        return domain("alpha must exceed 1");
    }
    if !(log_j >= 0.0) {
        return domain("need J >= 1");
    }
    let (m, n) = (s.m as f64, s.n as f64);
    let gamma = log_j / ((alpha - 1.0) * m.ln());
    let exponent = n - gamma;
    if !(exponent > 0.0) {
        return domain(format!("N - ln J/((alpha-1) ln M) = {exponent} is not positive; the bound is vacuous"));
    }
    let k2 = if log_j >= 2f64.ln() {
        k2_lower_bound(s.m, log_j, alpha)?
    } else {
        0
    };
    let base = (k1 as f64 / m).max(p).max(m.powf(1.0 - alpha));
    let upper = 3.0 * n.ln() + (m + 3.0 * n) * 2f64.ln() + ln_pow(base, exponent);
    let lower = ln_quarter() + ln_pow(p.max(k2 as f64 / m), n);
    Ok(BoundPair {
        lower,
        upper: upper.min(0.0),
    })
}
