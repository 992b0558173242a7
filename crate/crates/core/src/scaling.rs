//! Regime parameters shared by the codebook and channel layers.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// How the number of messages `J` is specified.
///
/// Low-rate regimes have `J = exp(M^s)`, far beyond any integer type, so `J` is
/// carried through its natural logarithm whenever it is not a small count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MessageSpec {
    Count { j: u64 },
    LogCount { log_j: f64 },
    /// Rate as a fraction of the index-based capacity: `J = exp((alpha - 1) R0 M ln M)`.
    Rate { r0: f64 },
}

/// Regime knobs: molecules per codeword, inner-code size, reads, messages, and the
/// sequencing error probability.
///
/// The inner-code size is an explicit integer and `alpha = ln(inner_size) / ln(M)` is
/// derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub m: u32,
    pub inner_size: u64,
    pub n: u32,
    pub messages: MessageSpec,
    #[serde(default)]
    pub p_seq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_in: Option<f64>,
}

impl ScalingParams {
    pub fn new(m: u32, inner_size: u64, n: u32, messages: MessageSpec) -> Result<Self> {
        let s = Self {
            m,
            inner_size,
            n,
            messages,
            p_seq: 0.0,
            beta: None,
            r_in: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_p_seq(mut self, p: f64) -> Result<Self> {
        self.p_seq = p;
        self.validate()?;
        Ok(self)
    }

    /// Attaches molecule-length and inner-rate metadata; `beta * r_in` must equal alpha.
    pub fn with_inner_rate(mut self, beta: f64, r_in: f64) -> Result<Self> {
        self.beta = Some(beta);
        self.r_in = Some(r_in);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return domain(format!("M must be at least 2 (got {})", self.m));
        }
        if self.inner_size <= self.m as u64 {
            return domain(format!(
                "inner_size {} must exceed M = {} (alpha > 1)",
                self.inner_size, self.m
            ));
        }
        if self.inner_size > u32::MAX as u64 + 1 {
            return domain("inner_size must fit 32-bit molecule identifiers");
        }
        if self.n == 0 {
            return domain("N must be positive");
        }
        if !(0.0..1.0).contains(&self.p_seq) {
            return domain(format!("sequencing error probability {} not in [0,1)", self.p_seq));
        }
        match self.messages {
            MessageSpec::Count { j } if j == 0 => return domain("J must be positive"),
            MessageSpec::LogCount { log_j } if !(log_j >= 0.0 && log_j.is_finite()) => {
                return domain("log J must be finite and non-negative")
            }
            MessageSpec::Rate { r0 } if !(r0 > 0.0 && r0 < 1.0) => {
                return domain(format!("R0 = {r0} not in (0,1)"))
            }
            _ => {}
        }
        match (self.beta, self.r_in) {
            (Some(b), Some(r)) => {
                if !(b > 0.0 && r > 0.0) {
                    return domain("beta and R_in must be positive");
                }
                if (b * r - self.alpha()).abs() > 1e-9 {
                    return domain(format!(
                        "beta * R_in = {} disagrees with alpha = {}",
                        b * r,
                        self.alpha()
                    ));
                }
            }
            (None, None) => {}
            _ => return domain("beta and R_in must be given together"),
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        (self.inner_size as f64).ln() / (self.m as f64).ln()
    }

    pub fn coverage(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn log_j(&self) -> f64 {
        match self.messages {
            MessageSpec::Count { j } => (j as f64).ln(),
            MessageSpec::LogCount { log_j } => log_j,
            MessageSpec::Rate { r0 } => {
                let m = self.m as f64;
                (self.alpha() - 1.0) * r0 * m * m.ln()
            }
        }
    }

    /// Normalized rate `log J / ((alpha - 1) M ln M)`.
    pub fn r0(&self) -> f64 {
        match self.messages {
            MessageSpec::Rate { r0 } => r0,
            _ => {
                let m = self.m as f64;
                self.log_j() / ((self.alpha() - 1.0) * m * m.ln())
            }
        }
    }

    /// Exponent `s` with `J = exp(M^s)`; `-inf` when `log J = 0`.
    pub fn s_exponent(&self) -> f64 {
        self.log_j().ln() / (self.m as f64).ln()
    }

    /// Molecule length `L = beta ln M`, when beta is known. Metadata only.
    pub fn molecule_length(&self) -> Option<f64> {
        self.beta.map(|b| b * (self.m as f64).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let s = ScalingParams::new(16, 64, 32, MessageSpec::Count { j: 1000 }).unwrap();
        assert!((s.alpha() - 1.5).abs() < 1e-12);
        assert_eq!(s.coverage(), 2.0);
        assert!((s.log_j() - 1000f64.ln()).abs() < 1e-12);
        let r = ScalingParams::new(16, 64, 32, MessageSpec::Rate { r0: 0.5 }).unwrap();
        assert!((r.r0() - 0.5).abs() < 1e-15);
        assert!((r.log_j() - 0.5 * 0.5 * 16.0 * 16f64.ln()).abs() < 1e-12);
        let l = ScalingParams::new(100, 1000, 100, MessageSpec::LogCount { log_j: 10.0 }).unwrap();
        assert!((l.s_exponent() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ScalingParams::new(16, 16, 32, MessageSpec::Count { j: 2 }).is_err());
        assert!(ScalingParams::new(16, 64, 0, MessageSpec::Count { j: 2 }).is_err());
        assert!(ScalingParams::new(16, 64, 8, MessageSpec::Rate { r0: 1.0 }).is_err());
        let s = ScalingParams::new(16, 64, 8, MessageSpec::Count { j: 2 }).unwrap();
        assert!(s.clone().with_p_seq(1.0).is_err());
        assert!(s.clone().with_inner_rate(3.0, 0.5).is_ok());
        assert!(s.with_inner_rate(3.0, 0.6).is_err());
    }
}
