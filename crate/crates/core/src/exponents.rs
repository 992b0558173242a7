//! Closed-form exponent calculus.
//!
//! The central object is `f(c, delta)`, the limit of `-(1/M) ln p(cM, M, delta M)`
//! where `p(N, M, K)` is the probability that `N` uniform draws from `M` items hit at
//! most `K` distinct items. For `delta <= 1 - e^-c` it is
//!
//! ```text
//! f(c, delta) = -c ln r - H2(delta) + r H2(delta / r),
//! ```
//!
//! with `r` in `(delta, 1]` the unique root of `psi(r) = delta`, `psi(x) = x (1 - e^(-c/x))`.
//! Above that threshold the exponent is zero. All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{binary_entropy, bisect_increasing};
use crate::scaling::ScalingParams;

/// Default residual tolerance for [`solve_r`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// Coverage depth `c = N/M` and normalized distinct-count threshold `delta`.
///
/// `delta` plays the role of the rate fraction `R0` when the exponent is used as an
/// error exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub c: f64,
    pub delta: f64,
}

impl ExponentParams {
    pub fn new(c: f64, delta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("coverage c = {c} must be positive"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta = {delta} must lie in (0,1)"));
        }
        Ok(Self { c, delta })
    }

    /// `1 - e^-c`, the expected fraction of distinct items at coverage `c`.
    pub fn saturation(&self) -> f64 {
        -(-self.c).exp_m1()
    }

    pub fn is_zero_regime(&self) -> bool {
        self.saturation() < self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentRegime {
    PositiveExponent,
    ZeroExponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub r: Option<f64>,
    pub f_value: f64,
    pub regime: ExponentRegime,
}

/// `psi(x) = x (1 - e^(-c/x))`, strictly increasing on `x > 0`.
pub fn psi(c: f64, x: f64) -> f64 {
    -x * (-c / x).exp_m1()
}

/// Root `r` in `(delta, 1]` of `psi(r) = delta`, by bisection.
///
/// The residual satisfies `|psi(r) - delta| <= tol`. The bracket is split down to
/// floating resolution, because for tiny `delta` a residual of `tol` would leave `r`
/// with no correct digits.
pub fn solve_r(params: ExponentParams, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return domain("root tolerance must be positive");
    }
    let ExponentParams { c, delta } = params;
    if params.is_zero_regime() {
        return domain(format!(
            "case (ii): 1 - exp(-c) = {} < delta = {delta}, no root in (delta, 1]",
            params.saturation()
        ));
    }
    let at_one = psi(c, 1.0) - delta;
    if at_one <= tol * delta.min(1.0) {
        return Ok(1.0);
    }
    let r = bisect_increasing(|x| psi(c, x) - delta, delta, 1.0, 0.0);
    if (psi(c, r) - delta).abs() > tol {
        return domain(format!("root residual above {tol} at c = {c}, delta = {delta}"));
    }
    Ok(r)
}

/// Multinomial-sampling exponent `f(c, delta)` in nats per molecule.
pub fn exponent_multinomial(params: ExponentParams, tol: f64) -> ExponentResult {
    if params.is_zero_regime() {
        return ExponentResult {
            r: None,
            f_value: 0.0,
            regime: ExponentRegime::ZeroExponent,
        };
    }
    let ExponentParams { c, delta } = params;
    let r = solve_r(params, tol).expect("valid params in case (i)");
    let ratio = delta / r;
    // 1 - delta/r formed as (r - delta)/r: exact subtraction when r is close to delta.
    let comp = (r - delta) / r;
    let h_ratio = if comp <= 0.0 {
        0.0
    } else {
        -(ratio * ratio.ln() + comp * comp.ln())
    };
    let f = -c * r.ln() - binary_entropy(delta) + r * h_ratio;
    ExponentResult {
        r: Some(r),
        f_value: f.max(0.0),
        regime: ExponentRegime::PositiveExponent,
    }
}

/// Convenience wrapper with the default tolerance.
pub fn f_exponent(c: f64, delta: f64) -> Result<f64> {
    Ok(exponent_multinomial(ExponentParams::new(c, delta)?, DEFAULT_ROOT_TOL).f_value)
}

/// Poisson-sampling exponent `D(1 - delta || e^-c)`, zero above the threshold.
pub fn exponent_poisson(params: ExponentParams) -> f64 {
    if params.is_zero_regime() {
        return 0.0;
    }
    let ExponentParams { c, delta } = params;
    // (1-delta) ln((1-delta)/e^-c) + delta ln(delta/(1-e^-c))
    let kl = (1.0 - delta) * ((-delta).ln_1p() + c) + delta * (delta / params.saturation()).ln();
    kl.max(0.0)
}

/// Coverage depths of the reference exponent curves.
pub const FIG1_COVERAGES: [f64; 2] = [0.5, 1.5];

/// Reference delta grid: `0.01, 0.02, ..., 0.99` plus half-decade steps from `1e-8`
/// up to `1e-2` for the small-delta zoom. Ascending, no duplicates.
pub fn fig1_delta_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..12).map(|i| 10f64.powf(-8.0 + 0.5 * i as f64)).collect();
    grid.extend((1..=99).map(|i| i as f64 / 100.0));
    grid
}

/// Supremum rate with positive exponent: `(1 - e^-c)(C_in - 1/beta)`.
pub fn rate_threshold(c: f64, c_in: f64, beta: f64) -> Result<f64> {
    if !(c > 0.0) {
        return domain("coverage c must be positive");
    }
    if !(beta > 0.0) {
        return domain("beta must be positive");
    }
    if !(c_in > 0.0) {
        return domain("inner capacity must be positive");
    }
    let margin = c_in - 1.0 / beta;
    if margin <= 0.0 {
        return domain(format!(
            "C_in = {c_in} <= 1/beta = {}: non-positive capacity term",
            1.0 / beta
        ));
    }
    Ok(-(-c).exp_m1() * margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    ConstantRate,
    Superlinear,
    LowrateNoerr,
    LowrateNoMultiset,
    LowrateMultiset,
    LowrateErasure,
    LowrateAdversarial,
    LowrateRandom,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 8] = [
        RegimeTag::ConstantRate,
        RegimeTag::Superlinear,
        RegimeTag::LowrateNoerr,
        RegimeTag::LowrateNoMultiset,
        RegimeTag::LowrateMultiset,
        RegimeTag::LowrateErasure,
        RegimeTag::LowrateAdversarial,
        RegimeTag::LowrateRandom,
    ];
}

/// Predicted normalized limit of `ln(1/P_e)` for one regime.
///
/// `predicted_limit` is the value of `ln(1/P_e)` divided by `normalizer`, evaluated at
/// the finite parameters supplied. When the limit has the form `coefficient * ln M`,
/// the asymptotic coefficient is reported separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRatePrediction {
    pub regime_tag: RegimeTag,
    pub normalizer: String,
    pub predicted_limit: f64,
    pub log_m_coefficient: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionOptions {
    /// Use `min(1/p, .)` for the adversarial row instead of `min(1/sqrt(p), .)`.
    pub adversarial_inverse_p: bool,
}

pub fn lowrate_prediction(tag: RegimeTag, scaling: &ScalingParams) -> Result<LowRatePrediction> {
    lowrate_prediction_with(tag, scaling, PredictionOptions::default())
}

pub fn lowrate_prediction_with(
    tag: RegimeTag,
    scaling: &ScalingParams,
    opts: PredictionOptions,
) -> Result<LowRatePrediction> {
    scaling.validate()?;
    let m = scaling.m as f64;
    let ln_m = m.ln();
    let alpha = scaling.alpha();
    let log_j = scaling.log_j();
    let s = scaling.s_exponent();

    let rate_in_unit = |r0: f64| -> Result<()> {
        if r0 > 0.0 && r0 < 1.0 {
            Ok(())
        } else {
            domain(format!("rate fraction R0 = {r0} outside (0,1)"))
        }
    };
    let large_j = || -> Result<()> {
        if !(s > 2.0 - alpha) {
            return domain(format!(
                "J >= exp(M^(2-alpha+c)) fails: s = {s} <= 2 - alpha = {}",
                2.0 - alpha
            ));
        }
        if !(log_j > ln_m) {
            return domain("log J / log M -> infinity fails: log J <= log M");
        }
        if !(log_j < m * ln_m) {
            return domain("low-rate assumption log J = o(M log M) fails: log J >= M log M");
        }
        Ok(())
    };
    let alpha_below_two = || -> Result<()> {
        if alpha > 1.0 && alpha < 2.0 {
            Ok(())
        } else {
            domain(format!("alpha = {alpha} outside (1,2)"))
        }
    };
    let p = scaling.p_seq;
    let positive_p = || -> Result<()> {
        if p > 0.0 {
            Ok(())
        } else {
            domain("sequencing error probability must be positive for this regime")
        }
    };
    let sampling_term = (m * ln_m / log_j).ln();
    let per_read = "N";

    let (normalizer, predicted, coef) = match tag {
        RegimeTag::ConstantRate => {
            let r0 = scaling.r0();
            rate_in_unit(r0)?;
            let f = exponent_multinomial(ExponentParams::new(scaling.coverage(), r0)?, DEFAULT_ROOT_TOL);
            ("M".to_string(), f.f_value, None)
        }
        RegimeTag::Superlinear => {
            let r0 = scaling.r0();
            rate_in_unit(r0)?;
            if scaling.n <= scaling.m {
                return domain("super-linear regime N = omega(M) requires N > M");
            }
            (per_read.to_string(), (1.0 / r0).ln(), None)
        }
        RegimeTag::LowrateNoerr => {
            large_j()?;
            (per_read.to_string(), sampling_term, (s < 1.0).then_some(1.0 - s))
        }
        RegimeTag::LowrateNoMultiset => {
            alpha_below_two()?;
            if !(log_j > std::f64::consts::LN_2 + alpha * ln_m) {
                return domain("J > 2 M^alpha fails");
            }
            if !(log_j <= m.powf(2.0 - alpha)) {
                return domain("J <= exp(M^(2-alpha)) fails");
            }
            (per_read.to_string(), (alpha - 1.0) * ln_m, Some(alpha - 1.0))
        }
        RegimeTag::LowrateMultiset => {
            alpha_below_two()?;
            if !(s > 0.0 && s < 2.0 - alpha) {
                return domain(format!("J = exp(M^s) needs s in (0, 2-alpha); s = {s}"));
            }
            let coef = (alpha - s) / 2.0;
            (per_read.to_string(), coef * ln_m, Some(coef))
        }
        RegimeTag::LowrateErasure | RegimeTag::LowrateRandom => {
            large_j()?;
            positive_p()?;
            let v = (1.0 / p).ln().min(sampling_term);
            (per_read.to_string(), v, None)
        }
        RegimeTag::LowrateAdversarial => {
            large_j()?;
            positive_p()?;
            let noise = if opts.adversarial_inverse_p {
                (1.0 / p).ln()
            } else {
                (1.0 / p.sqrt()).ln()
            };
            (per_read.to_string(), noise.min(sampling_term), None)
        }
    };
    Ok(LowRatePrediction {
        regime_tag: tag,
        normalizer,
        predicted_limit: predicted,
        log_m_coefficient: coef,
    })
}
