//! End-to-end trials: sampling with replacement from a codeword, per-read sequencing
//! errors, decoding, and Monte-Carlo error estimation.

mod attack;
mod bounds;
mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use attack::{adversarial_attack_trial, estimate_attack, AttackOutcome, AttackReport};
pub use bounds::{bound_adversarial, bound_erasure, bound_no_seq, bound_random, BoundPair};
pub use sim::{
    estimate_error_probability, run_trial, CauseHistogram, LemmaTally, RunMetadata, SimulationReport, Simulator,
};

/// Per-read channel applied after sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequencingErrorModel {
    None,
    /// The read is lost with probability `p`.
    Erasure { p: f64 },
    /// With probability `p` the read becomes a uniform molecule of the inner code
    /// (possibly the original one).
    Random { p: f64 },
    /// With probability `p/2` each, the read is replaced by a multiplicity-weighted
    /// draw from codeword `pair.0` or from codeword `pair.1`.
    Adversarial { p: f64, pair: (usize, usize) },
}

impl SequencingErrorModel {
    pub fn p(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Erasure { p } | Self::Random { p } | Self::Adversarial { p, .. } => p,
        }
    }

    pub fn validate(&self, messages: usize) -> Result<()> {
        let p = self.p();
        if !(0.0..1.0).contains(&p) {
            return domain(format!("sequencing error probability {p} not in [0,1)"));
        }
        if let Self::Adversarial { pair: (a, b), .. } = *self {
            if a == b || a >= messages || b >= messages {
                return domain(format!("attack pair ({a}, {b}) must be two distinct messages below {messages}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeRule {
    /// Maximize the number of distinct received molecules inside the codeword.
    DistinctIntersection,
    /// Maximize the number of received reads (with multiplicity) inside the codeword.
    MultiplicityCount,
    /// Output the unique codeword containing every received molecule; fail otherwise.
    UniqueSuperset,
}

/// Decoder choice plus the slack parameters used when recording the sufficient
/// success conditions. `r0` is the normalized rate those conditions are stated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub rule: DecodeRule,
    pub epsilon: f64,
    pub eta: f64,
    pub r0: f64,
}

impl DecoderConfig {
    pub fn new(rule: DecodeRule) -> Self {
        Self {
            rule,
            epsilon: 0.05,
            eta: 0.5,
            r0: 0.0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return domain("epsilon must be finite and non-negative");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return domain("eta must lie in (0,1)");
        }
        if !(0.0..1.0).contains(&self.r0) {
            return domain("r0 must lie in [0,1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// Too few distinct molecules to single out one codeword.
    OutageK,
    /// A wrong codeword strictly won without any sequencing error.
    Collision,
    /// Sequencing errors changed the decision.
    Sequencing,
    /// The argmax was shared and the coin picked a wrong codeword.
    Tie,
    None,
}

/// The three sufficient conditions of one decoding lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// Few enough sequencing errors.
    pub errors: bool,
    /// Enough of the codeword was observed (distinct count, or few undersampled molecules).
    pub sampling: bool,
    /// The codebook's pairwise intersections are below the cap.
    pub separation: bool,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.errors && self.sampling && self.separation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub true_message: usize,
    pub decoded_message: Option<usize>,
    /// Distinct molecules among the sampled reads, before sequencing errors.
    pub distinct_sampled: u32,
    /// Reads surviving erasure.
    pub reads_received: u32,
    /// Reads erased or altered by the channel.
    pub sequencing_errors: u32,
    /// Codeword molecules sampled at most `eta N / M` times.
    pub undersampled: u32,
    /// Size of the decoder's argmax (or candidate) set.
    pub tie_size: u32,
    /// Distinct-count lemma: `T <= eps M`, `K >= (R0 + 3 eps) M`, cap `< (R0 + eps) M`.
    pub lemma1: ConditionFlags,
    /// Undersampled lemma: at most `(1 - R0 - 3 eps) M` undersampled, `T < eps eta N`, cap.
    pub undersampled_lemma: ConditionFlags,
    /// Total count of the `K1` most-sampled molecules (`K1` = codebook max intersection).
    pub n1: u32,
    /// Number of sequencing errors.
    pub n2: u32,
    /// Largest number of altered reads landing in a single wrong codeword.
    pub n3: u32,
    pub failure_cause: FailureCause,
}
