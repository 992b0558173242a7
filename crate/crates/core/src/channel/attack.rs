//! The paired substitution attack: every read is kept with probability `1 - p` and
//! otherwise replaced by a draw from `A_i` or from `A_j` (probability `p/2` each).
//!
//! With `h = ceil(N/2)`, the bad event is
//! * message `i`: the first `h` reads come from `A_j`, the rest are unchanged;
//! * message `j`: the first `h` reads are unchanged, the rest come from `A_i`.
//!
//! Both produce `h` draws from `A_j` followed by `N - h` draws from `A_i`, so no
//! decoder can beat a coin flip on it.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sim::{RunMetadata, Scratch};
use super::{DecoderConfig, SequencingErrorModel, Simulator, TrialOutcome};
use crate::error::{domain, Result};
use crate::rng::{with_workers, StreamFactory, TrialRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub outcome: TrialOutcome,
    pub bad_event: bool,
}

fn check(sim: &Simulator, pair: (usize, usize), p: f64, n: u32, dec: &DecoderConfig) -> Result<()> {
    SequencingErrorModel::Adversarial { p, pair }.validate(sim.messages())?;
    dec.validate()?;
    if n == 0 {
        return domain("N must be positive");
    }
    Ok(())
}

fn attack_once(
    sim: &Simulator,
    pair: (usize, usize),
    p: f64,
    n: u32,
    dec: DecoderConfig,
    rng: &mut TrialRng,
    s: &mut Scratch,
) -> AttackOutcome {
    let first = rng.random_bool(0.5);
    let msg = if first { pair.0 } else { pair.1 };
    let model = SequencingErrorModel::Adversarial { p, pair };
    let outcome = sim.trial(msg, n as usize, model, dec, rng, s);
    let h = n.div_ceil(2) as usize;
    let cases = &s.cases;
    let bad_event = if first {
        cases[..h].iter().all(|&c| c == 2) && cases[h..].iter().all(|&c| c == 0)
    } else {
        cases[..h].iter().all(|&c| c == 0) && cases[h..].iter().all(|&c| c == 1)
    };
    AttackOutcome { outcome, bad_event }
}

/// One attack trial with the message drawn uniformly from `pair`.
pub fn adversarial_attack_trial(
    sim: &Simulator,
    pair: (usize, usize),
    p: f64,
    n: u32,
    dec: DecoderConfig,
    seed: u64,
) -> Result<AttackOutcome> {
    check(sim, pair, p, n, &dec)?;
    let mut rng = StreamFactory::new(seed).stream(0);
    let mut s = sim.scratch();
    Ok(attack_once(sim, pair, p, n, dec, &mut rng, &mut s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    pub std_err: f64,
    pub bad_events: u64,
    pub bad_event_errors: u64,
    pub bad_event_rate: f64,
    /// `P(bad event)` for the uniform message over the pair.
    pub predicted_bad_event_rate: f64,
    /// Error rate conditional on the bad event; absent when it never occurred.
    pub conditional_error: Option<f64>,
    pub conditional_std_err: Option<f64>,
    /// `(1/2) (p (1 - p) / 2)^(N/2)`.
    pub lower_bound: f64,
    pub pair: (usize, usize),
    pub p: f64,
    pub n: u32,
    pub seed: u64,
    pub decoder: DecoderConfig,
    pub metadata: RunMetadata,
}

impl AttackReport {
    pub fn without_metadata(&self) -> Self {
        Self {
            metadata: RunMetadata::default(),
            ..self.clone()
        }
    }
}

pub fn estimate_attack(
    sim: &Simulator,
    pair: (usize, usize),
    p: f64,
    n: u32,
    dec: DecoderConfig,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<AttackReport> {
    check(sim, pair, p, n, &dec)?;
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let start = Instant::now();
    let factory = StreamFactory::new(master_seed);
    let (errors, bad, bad_err) = with_workers(workers, || {
        (0..trials)
            .into_par_iter()
            .fold(
                || ((0u64, 0u64, 0u64), sim.scratch()),
                |((e, b, be), mut s), idx| {
                    let mut rng = factory.stream(idx);
                    let a = attack_once(sim, pair, p, n, dec, &mut rng, &mut s);
                    let err = u64::from(!a.outcome.success);
                    let bad = u64::from(a.bad_event);
                    ((e + err, b + bad, be + err * bad), s)
                },
            )
            .map(|(t, _)| t)
            .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2))
    });
    let tf = trials as f64;
    let p_hat = errors as f64 / tf;
    let h = n.div_ceil(2) as i32;
    let rest = n as i32 - h;
    let half = p / 2.0;
    let predicted = 0.5 * (half.powi(h) * (1.0 - p).powi(rest) + (1.0 - p).powi(h) * half.powi(rest));
    let (conditional_error, conditional_std_err) = if bad > 0 {
        let c = bad_err as f64 / bad as f64;
        (Some(c), Some((c * (1.0 - c) / bad as f64).sqrt()))
    } else {
        (None, None)
    };
    Ok(AttackReport {
        trials,
        errors,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / tf).sqrt(),
        bad_events: bad,
        bad_event_errors: bad_err,
        bad_event_rate: bad as f64 / tf,
        predicted_bad_event_rate: predicted,
        conditional_error,
        conditional_std_err,
        lower_bound: 0.5 * (p * (1.0 - p) / 2.0).powf(n as f64 / 2.0),
        pair,
        p,
        n,
        seed: master_seed,
        decoder: dec,
        metadata: RunMetadata {
            workers,
            wall_time_secs: start.elapsed().as_secs_f64(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::DecodeRule;
    use crate::codebook::Codebook;
    use crate::scaling::{MessageSpec, ScalingParams};

    fn pair_sim(n: u32) -> Simulator {
        let s = ScalingParams::new(4, 16, n, MessageSpec::Count { j: 2 }).unwrap();
        let cb = Codebook::from_molecule_lists(s, vec![vec![0, 4, 8, 12], vec![1, 5, 8, 13]]).unwrap();
        Simulator::new(cb).unwrap()
    }

    #[test]
    fn zero_p_is_the_noiseless_channel() {
        let sim = pair_sim(6);
        let dec = DecoderConfig::new(DecodeRule::MultiplicityCount);
        for seed in 0..200 {
            let a = adversarial_attack_trial(&sim, (0, 1), 0.0, 6, dec, seed).unwrap();
            assert_eq!(a.outcome.sequencing_errors, 0);
            assert!(!a.bad_event);
        }
    }

    #[test]
    fn bad_event_rate_matches_prediction() {
        let sim = pair_sim(4);
        let dec = DecoderConfig::new(DecodeRule::MultiplicityCount);
        let r = estimate_attack(&sim, (0, 1), 0.5, 4, dec, 400_000, 2, 0).unwrap();
        let q = r.predicted_bad_event_rate;
        let sigma = (q * (1.0 - q) / r.trials as f64).sqrt();
        assert!((r.bad_event_rate - q).abs() <= 4.0 * sigma);
        let c = r.conditional_error.unwrap();
        assert!(c >= 0.5 - 4.0 * r.conditional_std_err.unwrap());
    }

    #[test]
    fn odd_n_uses_ceiling_half() {
        let sim = pair_sim(5);
        let dec = DecoderConfig::new(DecodeRule::MultiplicityCount);
        let r = estimate_attack(&sim, (0, 1), 0.6, 5, dec, 200_000, 9, 0).unwrap();
        let want = 0.5 * (0.3f64.powi(3) * 0.4f64.powi(2) + 0.4f64.powi(3) * 0.3f64.powi(2));
        assert!((r.predicted_bad_event_rate - want).abs() < 1e-15);
        let sigma = (want / r.trials as f64).sqrt();
        assert!((r.bad_event_rate - want).abs() <= 4.0 * sigma);
    }
}
