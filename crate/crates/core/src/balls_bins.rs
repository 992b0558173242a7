//! Exact and sampled laws for the number of distinct items among `N` uniform draws
//! (with replacement) from `M` items.
//!
//! `p(N, M, K) = P(#distinct <= K)` is computed two independent ways:
//!
//! * the occupancy recurrence `P_{t+1}(k) = P_t(k) k/M + P_t(k-1) (M-k+1)/M`, and
//! * the decomposition `p = sum_{i<=K} C(M,i) (i/M)^N q(N,i)` where `q(N,i)` is the
//!   probability that `N` balls cover all of `i` bins, from inclusion-exclusion.
//!
//! Both run in log domain. The alternating inclusion-exclusion series cancels badly
//! when `N` is not much larger than `i`; those cases are routed to exact big-integer
//! arithmetic.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{ln_binomial, log_add_exp, log_sum_exp, round_half_up, SignedLogSum};
use crate::rng::{with_workers, StreamFactory};

/// Default budget of DP cells (`N * (min(N,M)+1)`).
pub const DEFAULT_CELL_CAP: u128 = 100_000_000;

/// Largest estimated relative error accepted from the signed inclusion-exclusion sum
/// before the exact path is used instead.
const SIGNED_REL_ERROR: f64 = 1e-12;

/// Exact law of the distinct count. `log_pmf[k] = ln P(#distinct = k)` for
/// `k = 0..=min(N, M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctCountDistribution {
    pub m: u32,
    pub n: u32,
    pub log_pmf: Vec<f64>,
}

impl DistinctCountDistribution {
    pub fn max_distinct(&self) -> u32 {
        self.n.min(self.m)
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.log_pmf.iter().map(|v| v.exp()).collect()
    }

    /// `ln P(#distinct <= k)`; 0 once `k` reaches `min(N, M)`.
    pub fn log_cdf(&self, k: u32) -> f64 {
        log_cdf_from_pmf(&self.log_pmf, k)
    }

    pub fn log_total_mass(&self) -> f64 {
        log_sum_exp(&self.log_pmf)
    }
}

/// Log-CDF from a log-pmf. When the upper tail is small the result is formed as
/// `ln(1 - tail)` so values near probability one keep their relative precision.
fn log_cdf_from_pmf(log_pmf: &[f64], k: u32) -> f64 {
    let k = k as usize;
    if k + 1 >= log_pmf.len() {
        return 0.0;
    }
    let tail = log_sum_exp(&log_pmf[k + 1..]);
    if tail < -std::f64::consts::LN_2 {
        (-tail.exp()).ln_1p()
    } else {
        log_sum_exp(&log_pmf[..=k])
    }
}

pub fn distinct_count_dp(m: u32, n: u32) -> Result<DistinctCountDistribution> {
    distinct_count_dp_capped(m, n, DEFAULT_CELL_CAP)
}

/// Exact distinct-count law via the occupancy recurrence, `O(N min(N,M))`.
pub fn distinct_count_dp_capped(m: u32, n: u32, cell_cap: u128) -> Result<DistinctCountDistribution> {
    if m == 0 {
        return domain("M must be at least 1");
    }
    let top = n.min(m) as usize;
    let cells = n as u128 * (top as u128 + 1);
    if cells > cell_cap {
        return Err(Error::Capacity { cells, cap: cell_cap });
    }
    let mf = m as f64;
    // stay[k] = ln(k/M), enter[k] = ln((M-k+1)/M)
    let stay: Vec<f64> = (0..=top).map(|k| (k as f64 / mf).ln()).collect();
    let enter: Vec<f64> = (0..=top).map(|k| ((mf - k as f64 + 1.0) / mf).ln()).collect();

    let mut lp = vec![f64::NEG_INFINITY; top + 1];
    lp[0] = 0.0;
    for t in 0..n as usize {
        let hi = (t + 1).min(top);
        for k in (1..=hi).rev() {
            lp[k] = log_add_exp(lp[k] + stay[k], lp[k - 1] + enter[k]);
        }
        lp[0] = f64::NEG_INFINITY;
    }
    Ok(DistinctCountDistribution { m, n, log_pmf: lp })
}

/// Query for `p(N, M, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyQuery {
    pub n: u32,
    pub m: u32,
    pub k: u32,
}

impl OccupancyQuery {
    pub fn new(n: u32, m: u32, k: u32) -> Result<Self> {
        let q = Self { n, m, k };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return domain("M must be at least 1");
        }
        if self.k > self.m {
            return domain(format!("K = {} exceeds M = {}", self.k, self.m));
        }
        Ok(())
    }
}

/// `ln p(N, M, K)` from the occupancy recurrence.
pub fn p_occupancy(q: OccupancyQuery) -> Result<f64> {
    p_occupancy_capped(q, DEFAULT_CELL_CAP)
}

pub fn p_occupancy_capped(q: OccupancyQuery, cell_cap: u128) -> Result<f64> {
    q.validate()?;
    if q.k >= q.n.min(q.m) {
        return Ok(0.0);
    }
    Ok(distinct_count_dp_capped(q.m, q.n, cell_cap)?.log_cdf(q.k))
}

/// `ln q(N, K)`: probability that `N` balls in `K` bins leave no bin empty.
///
/// Evaluated as a signed log-domain inclusion-exclusion sum, falling back to
/// [`q_surjection_exact`] when the sum loses more than a few digits to cancellation.
pub fn q_surjection(n: u32, k: u32) -> Result<f64> {
    if k == 0 {
        return domain("q(N, K) needs K >= 1");
    }
    if n < k {
        return Ok(f64::NEG_INFINITY);
    }
    if k == 1 {
        return Ok(0.0);
    }
    let sum = signed_inclusion_exclusion(n, k);
    if sum.stable() {
        Ok(sum.value.min(0.0))
    } else {
        q_surjection_exact(n, k)
    }
}

/// The raw signed log-domain evaluation of the inclusion-exclusion series, with no
/// precision fallback. Exposed for cross-checks.
pub fn q_surjection_signed(n: u32, k: u32) -> Result<f64> {
    if k == 0 {
        return domain("q(N, K) needs K >= 1");
    }
    if n < k {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(signed_inclusion_exclusion(n, k).value)
}

struct SignedSeries {
    value: f64,
    /// Log of the largest term.
    scale: f64,
    /// Largest `|ln term|`; each term carries a relative error of a few ulps of this.
    max_log_term: f64,
}

impl SignedSeries {
    /// Rounding in the log terms, amplified by the cancellation `exp(scale - value)`.
    fn rel_error(&self) -> f64 {
        8.0 * f64::EPSILON * (self.max_log_term + 1.0) * (self.scale - self.value).exp()
    }

    fn stable(&self) -> bool {
        self.value.is_finite() && self.rel_error() <= SIGNED_REL_ERROR
    }
}

fn signed_inclusion_exclusion(n: u32, k: u32) -> SignedSeries {
    let kf = k as f64;
    let mut acc = SignedLogSum::new();
    let mut max_log_term = 0f64;
    for j in 0..k {
        let binom = ln_binomial(k as u64, j as u64);
        let power = n as f64 * ((k - j) as f64 / kf).ln();
        max_log_term = max_log_term.max(binom.abs()).max(power.abs());
        acc.add(j % 2 == 1, binom + power);
    }
    let (negative, value) = acc.finish();
    SignedSeries {
        value: if negative { f64::NEG_INFINITY } else { value },
        scale: acc.scale(),
        max_log_term,
    }
}

/// `ln q(N, K)` from inclusion-exclusion in exact integer arithmetic:
/// `q = sum_j (-1)^j C(K,j) (K-j)^N / K^N`.
pub fn q_surjection_exact(n: u32, k: u32) -> Result<f64> {
    if k == 0 {
        return domain("q(N, K) needs K >= 1");
    }
    if n < k {
        return Ok(f64::NEG_INFINITY);
    }
    let mut pos = BigUint::zero();
    let mut neg = BigUint::zero();
    let mut binom = BigUint::one();
    for j in 0..=k {
        let term = &binom * BigUint::from(k - j).pow(n);
        if j % 2 == 0 {
            pos += term;
        } else {
            neg += term;
        }
        binom = binom * BigUint::from(k - j) / BigUint::from(j + 1);
    }
    let surj = pos - neg;
    Ok(ln_biguint(&surj) - n as f64 * (k as f64).ln())
}

fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln q(N, i)` for `i = 0..=k_max`, with `q(0, 0) = 1` and `q(N, 0) = 0` otherwise.
/// `q` does not depend on `M`, so one row serves every `M` at the same `N`.
pub fn surjection_row(n: u32, k_max: u32) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(k_max as usize + 1);
    row.push(if n == 0 { 0.0 } else { f64::NEG_INFINITY });
    for i in 1..=k_max {
        row.push(q_surjection(n, i)?);
    }
    Ok(row)
}

/// `ln P(#distinct = i)` for `i = 0..=min(N, M)` through the covering decomposition
/// `C(M,i) (i/M)^N q(N,i)`.
pub fn exactly_distinct_via_identity(n: u32, m: u32) -> Result<Vec<f64>> {
    if m == 0 {
        return domain("M must be at least 1");
    }
    let row = surjection_row(n, n.min(m))?;
    exactly_distinct_from_row(n, m, &row)
}

/// As [`exactly_distinct_via_identity`] with a precomputed [`surjection_row`] of
/// length at least `min(N, M) + 1`.
pub fn exactly_distinct_from_row(n: u32, m: u32, row: &[f64]) -> Result<Vec<f64>> {
    if m == 0 {
        return domain("M must be at least 1");
    }
    let top = n.min(m) as usize;
    if row.len() <= top {
        return domain("surjection row too short");
    }
    let mf = m as f64;
    let mut out = Vec::with_capacity(top + 1);
    out.push(row[0]);
    for (i, &q) in row.iter().enumerate().take(top + 1).skip(1) {
        out.push(ln_binomial(m as u64, i as u64) + n as f64 * (i as f64 / mf).ln() + q);
    }
    Ok(out)
}

/// `ln p(N, M, K)` through the covering decomposition.
pub fn p_via_identity(q: OccupancyQuery) -> Result<f64> {
    q.validate()?;
    if q.k >= q.n.min(q.m) {
        return Ok(0.0);
    }
    let terms = exactly_distinct_via_identity(q.n, q.m)?;
    Ok(log_cdf_from_identity_terms(&terms, q.k))
}

/// `ln p(N, M, K)` from the output of [`exactly_distinct_via_identity`].
pub fn log_cdf_from_identity_terms(terms: &[f64], k: u32) -> f64 {
    log_cdf_from_pmf(terms, k).min(0.0)
}

/// Monte-Carlo estimate of the distinct-count CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub m: u32,
    pub n: u32,
    pub trials: u64,
    pub seed: u64,
    /// Number of trials with exactly `k` distinct items.
    pub counts: Vec<u64>,
    /// Estimated `P(#distinct <= k)`.
    pub cdf: Vec<f64>,
    /// Binomial standard error of each CDF point, `sqrt(p_hat (1 - p_hat) / trials)`.
    pub std_err: Vec<f64>,
}

/// Samples the distinct count `trials` times. Trial `t` uses stream `t` of `seed`, so
/// the result does not depend on `workers`.
pub fn sample_distinct_count(m: u32, n: u32, trials: u64, seed: u64, workers: usize) -> Result<EmpiricalCdf> {
    if m == 0 {
        return domain("M must be at least 1");
    }
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let top = n.min(m) as usize;
    let factory = StreamFactory::new(seed);
    let counts = with_workers(workers, || {
        (0..trials)
            .into_par_iter()
            .fold(
                || (vec![0u64; top + 1], vec![0u64; m as usize]),
                |(mut counts, mut stamp), t| {
                    let mut rng = factory.stream(t);
                    let mark = t + 1;
                    let mut distinct = 0usize;
                    for _ in 0..n {
                        let x = rng.random_range(0..m) as usize;
                        if stamp[x] != mark {
                            stamp[x] = mark;
                            distinct += 1;
                        }
                    }
                    counts[distinct] += 1;
                    (counts, stamp)
                },
            )
            .map(|(c, _)| c)
            .reduce(
                || vec![0u64; top + 1],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    });
    let tf = trials as f64;
    let mut cum = 0u64;
    let mut cdf = Vec::with_capacity(top + 1);
    let mut std_err = Vec::with_capacity(top + 1);
    for c in &counts {
        cum += c;
        let p = cum as f64 / tf;
        cdf.push(p);
        std_err.push((p * (1.0 - p) / tf).sqrt());
    }
    Ok(EmpiricalCdf {
        m,
        n,
        trials,
        seed,
        counts,
        cdf,
        std_err,
    })
}

/// One row of a finite-M exponent sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalExponentPoint {
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub log_p: f64,
    /// `-(1/M) ln p(N, M, K)`.
    pub exponent: f64,
}

/// `N = round(cM)` and `K = round(delta M)` with ties rounded up.
pub fn rounded_query(c: f64, delta: f64, m: u32) -> Result<OccupancyQuery> {
    let n = round_half_up(c * m as f64);
    let k = round_half_up(delta * m as f64);
    if n < 1 || k < 1 {
        return domain(format!("rounding gives N = {n}, K = {k} at M = {m}; both must be >= 1"));
    }
    if n > u32::MAX as i64 {
        return domain("N overflows");
    }
    OccupancyQuery::new(n as u32, m, (k as u32).min(m))
}

pub fn empirical_exponent(c: f64, delta: f64, m_grid: &[u32]) -> Result<Vec<EmpiricalExponentPoint>> {
    empirical_exponent_capped(c, delta, m_grid, DEFAULT_CELL_CAP)
}

pub fn empirical_exponent_capped(
    c: f64,
    delta: f64,
    m_grid: &[u32],
    cell_cap: u128,
) -> Result<Vec<EmpiricalExponentPoint>> {
    if !(c > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return domain("need c > 0 and 0 < delta < 1");
    }
    m_grid
        .iter()
        .map(|&m| {
            let q = rounded_query(c, delta, m)?;
            let log_p = p_occupancy_capped(q, cell_cap)?;
            Ok(EmpiricalExponentPoint {
                m,
                n: q.n,
                k: q.k,
                log_p,
                exponent: -log_p / m as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dp_examples() {
        let d = distinct_count_dp(5, 0).unwrap();
        assert_eq!(d.log_pmf, vec![0.0]);
        let d = distinct_count_dp(2, 2).unwrap();
        let p = d.pmf();
        assert_eq!(p[0], 0.0);
        assert!(close(p[1], 0.5, 1e-15) && close(p[2], 0.5, 1e-15));
        let p = distinct_count_dp(3, 3).unwrap().pmf();
        assert!(close(p[1], 1.0 / 9.0, 1e-15));
        assert!(close(p[2], 6.0 / 9.0, 1e-15));
        assert!(close(p[3], 2.0 / 9.0, 1e-15));
    }

    #[test]
    fn capacity_guard() {
        let e = distinct_count_dp_capped(100, 200, 1000).unwrap_err();
        assert!(matches!(e, Error::Capacity { .. }));
        assert!(distinct_count_dp(0, 3).is_err());
    }

    #[test]
    fn occupancy_examples() {
        for n in [0, 1, 5, 40] {
            assert_eq!(p_occupancy(OccupancyQuery::new(n, 7, 7).unwrap()).unwrap(), 0.0);
        }
        let v = p_occupancy(OccupancyQuery::new(1, 9, 0).unwrap()).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
        let v = p_occupancy(OccupancyQuery::new(2, 2, 1).unwrap()).unwrap();
        assert!(close(v.exp(), 0.5, 1e-15));
        assert!(OccupancyQuery::new(3, 2, 3).is_err());
    }

    #[test]
    fn surjection_examples() {
        for n in 1..20 {
            assert_eq!(q_surjection(n, 1).unwrap(), 0.0);
        }
        assert_eq!(q_surjection(1, 2).unwrap(), f64::NEG_INFINITY);
        assert!(close(q_surjection(3, 2).unwrap().exp(), 0.75, 1e-15));
        assert!(q_surjection(3, 0).is_err());
    }

    #[test]
    fn signed_and_exact_paths_agree_where_signed_is_stable() {
        for k in 1..=40u32 {
            for n in k..=120u32 {
                let exact = q_surjection_exact(n, k).unwrap();
                let routed = q_surjection(n, k).unwrap();
                assert!(close(routed, exact, 1e-11 * exact.abs().max(1.0)), "n={n} k={k}");
                let sum = signed_inclusion_exclusion(n, k);
                if sum.stable() {
                    assert!(close(sum.value, exact, 1e-11 * exact.abs().max(1.0)), "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn signed_path_loses_precision_near_n_equals_k() {
        // q(40, 40) = 40!/40^40; the alternating sum has terms near 1e11.
        let exact = q_surjection_exact(40, 40).unwrap();
        let expected = crate::numerics::ln_factorial(40) - 40.0 * 40f64.ln();
        assert!(close(exact, expected, 1e-10));
        assert!(close(q_surjection(40, 40).unwrap(), expected, 1e-10));
    }

    #[test]
    fn identity_examples() {
        for n in [0, 3, 10] {
            let v = p_via_identity(OccupancyQuery::new(n, 4, 4).unwrap()).unwrap();
            assert_eq!(v, 0.0);
        }
        let v = p_via_identity(OccupancyQuery::new(2, 2, 1).unwrap()).unwrap();
        assert!(close(v.exp(), 0.5, 1e-15));
        let q = OccupancyQuery::new(15, 10, 6).unwrap();
        let a = p_occupancy(q).unwrap();
        let b = p_via_identity(q).unwrap();
        assert!(close(a, b, 1e-9 * a.abs()), "{a} vs {b}");
    }

    #[test]
    fn near_one_probabilities_keep_relative_precision() {
        // p(50, 50, 49) = 1 - 50!/50^50
        let cover = crate::numerics::ln_factorial(50) - 50.0 * 50f64.ln();
        let want = -cover.exp();
        let q = OccupancyQuery::new(50, 50, 49).unwrap();
        let a = p_occupancy(q).unwrap();
        let b = p_via_identity(q).unwrap();
        assert!(close(a, want, 1e-9 * want.abs()), "{a} vs {want}");
        assert!(close(b, want, 1e-9 * want.abs()), "{b} vs {want}");
    }

    #[test]
    fn sampling_small_cases() {
        let e = sample_distinct_count(1, 10, 100, 3, 1).unwrap();
        assert_eq!(e.counts, vec![0, 100]);
        let e = sample_distinct_count(2, 2, 200_000, 11, 1).unwrap();
        let sigma = (0.25f64 / 200_000.0).sqrt();
        assert!((e.cdf[1] - 0.5).abs() <= 4.0 * sigma);
        assert_eq!(e.cdf[2], 1.0);
        assert!(sample_distinct_count(2, 2, 0, 1, 1).is_err());
    }

    #[test]
    fn sampling_is_worker_independent() {
        let a = sample_distinct_count(30, 45, 5000, 99, 1).unwrap();
        let b = sample_distinct_count(30, 45, 5000, 99, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_exponent_examples() {
        let pts = empirical_exponent(0.5, 0.3, &[100, 200, 400]).unwrap();
        let f = crate::exponents::f_exponent(0.5, 0.3).unwrap();
        let gaps: Vec<f64> = pts.iter().map(|p| p.exponent - f).collect();
        assert!(gaps.iter().all(|g| *g > 0.0));
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        // Zero-exponent side: delta above 1 - e^-c.
        let pts = empirical_exponent(1.0, 0.8, &[100, 400]).unwrap();
        assert!(pts[1].exponent < pts[0].exponent);
        assert!(pts[1].exponent < 0.02);
        assert!(rounded_query(1.0, 0.001, 100).is_err());
    }

    #[test]
    fn rounding_ties_go_up() {
        let q = rounded_query(1.5, 0.25, 2).unwrap();
        assert_eq!((q.n, q.k), (3, 1));
        let q = rounded_query(0.25, 0.75, 2).unwrap();
        assert_eq!((q.n, q.k), (1, 2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dp_is_normalized(m in 1u32..120, n in 0u32..200) {
            let d = distinct_count_dp(m, n).unwrap();
            prop_assert_eq!(d.log_pmf.len(), n.min(m) as usize + 1);
            let total: f64 = d.pmf().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            if n >= 1 {
                prop_assert_eq!(d.log_pmf[0], f64::NEG_INFINITY);
            }
        }

        #[test]
        fn cdf_monotone_in_k_and_n(m in 2u32..40, n in 1u32..80, k in 0u32..40) {
            let k = k.min(m - 1);
            let here = p_occupancy(OccupancyQuery::new(n, m, k).unwrap()).unwrap();
            let more_k = p_occupancy(OccupancyQuery::new(n, m, k + 1).unwrap()).unwrap();
            let more_n = p_occupancy(OccupancyQuery::new(n + 1, m, k).unwrap()).unwrap();
            prop_assert!(more_k >= here - 1e-12);
            prop_assert!(more_n <= here + 1e-12);
        }

        #[test]
        fn one_step_recursion_lower_bound(m in 2u32..60, n in 1u32..120, k in 1u32..60) {
            // p(N, M, K) >= p(N-1, M, K) K/M
            let k = k.min(m);
            let lhs = p_occupancy(OccupancyQuery::new(n, m, k).unwrap()).unwrap();
            let rhs = p_occupancy(OccupancyQuery::new(n - 1, m, k).unwrap()).unwrap()
                + (k as f64 / m as f64).ln();
            prop_assert!(lhs >= rhs - 1e-12);
        }
    }
}
