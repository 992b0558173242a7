use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConditionFlags, DecodeRule, DecoderConfig, FailureCause, SequencingErrorModel, TrialOutcome};
use crate::codebook::{max_pairwise_intersection, Codebook};
use crate::error::{domain, Result};
use crate::rng::{with_workers, StreamFactory, TrialRng};

const DENSE_INDEX_LIMIT: u64 = 1 << 22;

/// Molecule -> ids of the codewords containing it, ascending.
#[derive(Debug, Clone)]
enum MoleculeIndex {
    Dense { offsets: Vec<u32>, ids: Vec<u32> },
    Sparse(HashMap<u32, Vec<u32>>),
}

impl MoleculeIndex {
    fn build(cb: &Codebook) -> Self {
        let inner = cb.scaling().inner_size;
        if inner <= DENSE_INDEX_LIMIT {
            let mut counts = vec![0u32; inner as usize + 1];
            for cw in cb.codewords() {
                for x in cw.support() {
                    counts[x as usize + 1] += 1;
                }
            }
            for i in 1..counts.len() {
                counts[i] += counts[i - 1];
            }
            let mut fill = counts.clone();
            let mut ids = vec![0u32; *counts.last().unwrap() as usize];
            for (id, cw) in cb.codewords().iter().enumerate() {
                for x in cw.support() {
                    ids[fill[x as usize] as usize] = id as u32;
                    fill[x as usize] += 1;
                }
            }
            Self::Dense { offsets: counts, ids }
        } else {
            let mut map: HashMap<u32, Vec<u32>> = HashMap::new();
            for (id, cw) in cb.codewords().iter().enumerate() {
                for x in cw.support() {
                    map.entry(x).or_default().push(id as u32);
                }
            }
            Self::Sparse(map)
        }
    }

    fn lookup(&self, x: u32) -> &[u32] {
        match self {
            Self::Dense { offsets, ids } => {
                let i = x as usize;
                &ids[offsets[i] as usize..offsets[i + 1] as usize]
            }
            Self::Sparse(map) => map.get(&x).map_or(&[], Vec::as_slice),
        }
    }
}

/// A codebook prepared for repeated trials: expanded codewords, an inverted index and
/// the exact maximum pairwise intersection.
#[derive(Debug, Clone)]
pub struct Simulator {
    cb: Codebook,
    expanded: Vec<Vec<u32>>,
    index: MoleculeIndex,
    max_intersection: u64,
}

/// Per-worker buffers reused across trials.
#[derive(Debug, Default)]
pub(super) struct Scratch {
    sampled: Vec<u32>,
    reads: Vec<u32>,
    altered: Vec<u32>,
    scores: Vec<u32>,
    touched: Vec<u32>,
    winners: Vec<u32>,
    counts: Vec<u32>,
    /// Per-read adversarial case: 0 = unchanged, 1 = drawn from `pair.0`, 2 = from `pair.1`.
    pub(super) cases: Vec<u8>,
}

impl Simulator {
    pub fn new(cb: Codebook) -> Result<Self> {
        if cb.is_empty() {
            return domain("codebook has no codewords");
        }
        let max_intersection = if cb.len() >= 2 {
            max_pairwise_intersection(&cb)?.value
        } else {
            0
        };
        let expanded = cb.codewords().iter().map(|c| c.expand()).collect();
        let index = MoleculeIndex::build(&cb);
        Ok(Self {
            cb,
            expanded,
            index,
            max_intersection,
        })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.cb
    }

    pub fn max_intersection(&self) -> u64 {
        self.max_intersection
    }

    pub fn messages(&self) -> usize {
        self.cb.len()
    }

    pub(super) fn scratch(&self) -> Scratch {
        Scratch {
            scores: vec![0; self.cb.len()],
            ..Scratch::default()
        }
    }

    fn check(&self, model: &SequencingErrorModel, dec: &DecoderConfig) -> Result<()> {
        model.validate(self.cb.len())?;
        dec.validate()
    }

    /// Trial `index` of [`estimate_error_probability`] with the same master seed.
    pub fn trial_at(
        &self,
        model: SequencingErrorModel,
        dec: DecoderConfig,
        master_seed: u64,
        index: u64,
    ) -> Result<TrialOutcome> {
        self.check(&model, &dec)?;
        let mut rng = StreamFactory::new(master_seed).stream(index);
        let msg = rng.random_range(0..self.cb.len());
        let mut s = self.scratch();
        Ok(self.trial(msg, self.cb.scaling().n as usize, model, dec, &mut rng, &mut s))
    }

    /// One trial for a fixed message: sample `n` reads from the codeword, pass them
    /// through `model`, decode and classify.
    pub(super) fn trial(
        &self,
        msg: usize,
        n: usize,
        model: SequencingErrorModel,
        dec: DecoderConfig,
        rng: &mut TrialRng,
        s: &mut Scratch,
    ) -> TrialOutcome {
        let m = self.cb.m() as usize;
        let inner = self.cb.scaling().inner_size;
        let word = &self.expanded[msg];

        s.sampled.clear();
        s.reads.clear();
        s.altered.clear();
        s.cases.clear();
        let mut erased = 0u32;
        for _ in 0..n {
            let x = word[rng.random_range(0..m)];
            s.sampled.push(x);
            match model {
                SequencingErrorModel::None => s.reads.push(x),
                SequencingErrorModel::Erasure { p } => {
                    if p > 0.0 && rng.random_bool(p) {
                        erased += 1;
                    } else {
                        s.reads.push(x);
                    }
                }
                SequencingErrorModel::Random { p } => {
                    if p > 0.0 && rng.random_bool(p) {
                        let y = rng.random_range(0..inner) as u32;
                        if y != x {
                            s.altered.push(y);
                        }
                        s.reads.push(y);
                    } else {
                        s.reads.push(x);
                    }
                }
                SequencingErrorModel::Adversarial { p, pair } => {
                    let u: f64 = if p > 0.0 { rng.random() } else { 1.0 };
                    if u < p {
                        let (src, case) = if u < p / 2.0 { (pair.0, 1) } else { (pair.1, 2) };
                        let from = &self.expanded[src];
                        let y = from[rng.random_range(0..from.len())];
                        if y != x {
                            s.altered.push(y);
                        }
                        s.reads.push(y);
                        s.cases.push(case);
                    } else {
                        s.reads.push(x);
                        s.cases.push(0);
                    }
                }
            }
        }
        let seq_errors = erased + s.altered.len() as u32;

        // Sampling statistics before sequencing errors.
        s.sampled.sort_unstable();
        s.counts.clear();
        for (i, &x) in s.sampled.iter().enumerate() {
            if i > 0 && s.sampled[i - 1] == x {
                *s.counts.last_mut().unwrap() += 1;
            } else {
                s.counts.push(1);
            }
        }
        let distinct = s.counts.len() as u32;
        let undersampled = {
            let eta_n = dec.eta * n as f64;
            let mut under = 0u32;
            let mut i = 0usize;
            for &(x, _) in self.cb.codewords()[msg].entries() {
                let mut c = 0u32;
                while i < s.sampled.len() && s.sampled[i] < x {
                    i += 1;
                }
                while i < s.sampled.len() && s.sampled[i] == x {
                    c += 1;
                    i += 1;
                }
                if c as f64 * m as f64 <= eta_n {
                    under += 1;
                }
            }
            under
        };
        s.counts.sort_unstable_by(|a, b| b.cmp(a));
        let k1 = (self.max_intersection as usize).min(s.counts.len());
        let n1: u32 = s.counts[..k1].iter().sum();

        // Largest number of altered reads inside one wrong codeword.
        let mut n3 = 0u32;
        if !s.altered.is_empty() {
            for &y in &s.altered {
                for &id in self.index.lookup(y) {
                    if id as usize != msg {
                        if s.scores[id as usize] == 0 {
                            s.touched.push(id);
                        }
                        s.scores[id as usize] += 1;
                    }
                }
            }
            for &id in &s.touched {
                n3 = n3.max(s.scores[id as usize]);
                s.scores[id as usize] = 0;
            }
            s.touched.clear();
        }

        // Decode.
        s.reads.sort_unstable();
        let reads_received = s.reads.len() as u32;
        let mut received_distinct = 0u32;
        let mut i = 0usize;
        while i < s.reads.len() {
            let y = s.reads[i];
            let mut c = 0u32;
            while i < s.reads.len() && s.reads[i] == y {
                c += 1;
                i += 1;
            }
            received_distinct += 1;
            let w = match dec.rule {
                DecodeRule::MultiplicityCount => c,
                DecodeRule::DistinctIntersection | DecodeRule::UniqueSuperset => 1,
            };
            for &id in self.index.lookup(y) {
                if s.scores[id as usize] == 0 {
                    s.touched.push(id);
                }
                s.scores[id as usize] += w;
            }
        }
        s.winners.clear();
        let target = match dec.rule {
            DecodeRule::UniqueSuperset => Some(received_distinct),
            _ => None,
        };
        let best = s.touched.iter().map(|&id| s.scores[id as usize]).max().unwrap_or(0);
        let want = target.unwrap_or(best);
        if want == 0 {
            s.winners.extend(0..self.cb.len() as u32);
        } else {
            s.winners.extend(s.touched.iter().copied().filter(|&id| s.scores[id as usize] == want));
            s.winners.sort_unstable();
        }
        for &id in &s.touched {
            s.scores[id as usize] = 0;
        }
        s.touched.clear();
        let tie_size = s.winners.len() as u32;
        let decoded = match dec.rule {
            DecodeRule::UniqueSuperset => (tie_size == 1).then(|| s.winners[0] as usize),
            _ => Some(if tie_size == 1 {
                s.winners[0] as usize
            } else {
                s.winners[rng.random_range(0..s.winners.len())] as usize
            }),
        };

        let mf = m as f64;
        let r0 = dec.r0;
        let eps = dec.epsilon;
        let separation = (self.max_intersection as f64) < (r0 + eps) * mf;
        let lemma1 = ConditionFlags {
            errors: seq_errors as f64 <= eps * mf,
            sampling: distinct as f64 >= (r0 + 3.0 * eps) * mf,
            separation,
        };
        let undersampled_lemma = ConditionFlags {
            errors: (seq_errors as f64) < eps * dec.eta * n as f64,
            sampling: undersampled as f64 <= (1.0 - r0 - 3.0 * eps) * mf,
            separation,
        };

        let success = decoded == Some(msg);
        let failure_cause = if success {
            FailureCause::None
        } else {
            match dec.rule {
                DecodeRule::UniqueSuperset if tie_size > 1 => FailureCause::OutageK,
                DecodeRule::UniqueSuperset => FailureCause::Sequencing,
                _ if tie_size > 1 => FailureCause::Tie,
                _ if seq_errors > 0 => FailureCause::Sequencing,
                _ => FailureCause::Collision,
            }
        };

        TrialOutcome {
            success,
            true_message: msg,
            decoded_message: decoded,
            distinct_sampled: distinct,
            reads_received,
            sequencing_errors: seq_errors,
            undersampled,
            tie_size,
            lemma1,
            undersampled_lemma,
            n1,
            n2: seq_errors,
            n3,
            failure_cause,
        }
    }
}

/// One trial for a fixed message, seeded directly by `seed`.
pub fn run_trial(
    sim: &Simulator,
    message: usize,
    model: SequencingErrorModel,
    dec: DecoderConfig,
    seed: u64,
) -> Result<TrialOutcome> {
    sim.check(&model, &dec)?;
    if message >= sim.messages() {
        return domain(format!("message {message} out of range (J = {})", sim.messages()));
    }
    let mut rng = StreamFactory::new(seed).stream(0);
    let mut s = sim.scratch();
    Ok(sim.trial(message, sim.cb.scaling().n as usize, model, dec, &mut rng, &mut s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CauseHistogram {
    pub outage_k: u64,
    pub collision: u64,
    pub sequencing: u64,
    pub tie: u64,
}

impl CauseHistogram {
    fn record(&mut self, cause: FailureCause) {
        match cause {
            FailureCause::OutageK => self.outage_k += 1,
            FailureCause::Collision => self.collision += 1,
            FailureCause::Sequencing => self.sequencing += 1,
            FailureCause::Tie => self.tie += 1,
            FailureCause::None => {}
        }
    }

    fn merge(&mut self, o: &Self) {
        self.outage_k += o.outage_k;
        self.collision += o.collision;
        self.sequencing += o.sequencing;
        self.tie += o.tie;
    }

    pub fn total(&self) -> u64 {
        self.outage_k + self.collision + self.sequencing + self.tie
    }
}

/// Trials in which a lemma's conditions all held, and how many of those failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LemmaTally {
    pub held: u64,
    pub held_but_failed: u64,
}

impl LemmaTally {
    fn record(&mut self, flags: &ConditionFlags, success: bool) {
        if flags.all() {
            self.held += 1;
            if !success {
                self.held_but_failed += 1;
            }
        }
    }

    fn merge(&mut self, o: &Self) {
        self.held += o.held;
        self.held_but_failed += o.held_but_failed;
    }
}

/// Non-reproducible run facts, kept apart from the numeric results.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub workers: usize,
    pub wall_time_secs: f64,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p_hat (1 - p_hat) / trials)`.
    pub std_err: f64,
    pub seed: u64,
    pub model: SequencingErrorModel,
    pub decoder: DecoderConfig,
    pub m: u32,
    pub n: u32,
    pub inner_size: u64,
    pub messages: usize,
    pub max_intersection: u64,
    pub causes: CauseHistogram,
    /// Tallied only for the distinct-intersection decoder.
    pub lemma1: LemmaTally,
    /// Tallied only for the multiplicity-count decoder.
    pub undersampled_lemma: LemmaTally,
    pub total_distinct_sampled: u64,
    pub total_sequencing_errors: u64,
    pub metadata: RunMetadata,
}

impl SimulationReport {
    /// Copy with the metadata cleared, for reproducibility comparisons.
    pub fn without_metadata(&self) -> Self {
        Self {
            metadata: RunMetadata::default(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    errors: u64,
    causes: CauseHistogram,
    lemma1: LemmaTally,
    undersampled: LemmaTally,
    distinct: u64,
    seq_errors: u64,
}

impl Tally {
    fn merge(mut self, o: Self) -> Self {
        self.trials += o.trials;
        self.errors += o.errors;
        self.causes.merge(&o.causes);
        self.lemma1.merge(&o.lemma1);
        self.undersampled.merge(&o.undersampled);
        self.distinct += o.distinct;
        self.seq_errors += o.seq_errors;
        self
    }
}

/// Monte-Carlo error probability with uniformly random messages. Trial `t` draws
/// its message and everything else from stream `t` of `master_seed`.
pub fn estimate_error_probability(
    sim: &Simulator,
    model: SequencingErrorModel,
    dec: DecoderConfig,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<SimulationReport> {
    sim.check(&model, &dec)?;
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let start = Instant::now();
    let factory = StreamFactory::new(master_seed);
    let n = sim.cb.scaling().n as usize;
    let j = sim.messages();
    let tally = with_workers(workers, || {
        (0..trials)
            .into_par_iter()
            .fold(
                || (Tally::default(), sim.scratch()),
                |(mut t, mut s), idx| {
                    let mut rng = factory.stream(idx);
                    let msg = rng.random_range(0..j);
                    let o = sim.trial(msg, n, model, dec, &mut rng, &mut s);
                    t.trials += 1;
                    t.errors += u64::from(!o.success);
                    t.causes.record(o.failure_cause);
                    match dec.rule {
                        DecodeRule::DistinctIntersection => t.lemma1.record(&o.lemma1, o.success),
                        DecodeRule::MultiplicityCount => t.undersampled.record(&o.undersampled_lemma, o.success),
                        DecodeRule::UniqueSuperset => {}
                    }
                    t.distinct += o.distinct_sampled as u64;
                    t.seq_errors += o.sequencing_errors as u64;
                    (t, s)
                },
            )
            .map(|(t, _)| t)
            .reduce(Tally::default, Tally::merge)
    });
    let p_hat = tally.errors as f64 / trials as f64;
    let scaling = sim.cb.scaling();
    Ok(SimulationReport {
        trials,
        errors: tally.errors,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        seed: master_seed,
        model,
        decoder: dec,
        m: scaling.m,
        n: scaling.n,
        inner_size: scaling.inner_size,
        messages: j,
        max_intersection: sim.max_intersection,
        causes: tally.causes,
        lemma1: tally.lemma1,
        undersampled_lemma: tally.undersampled,
        total_distinct_sampled: tally.distinct,
        total_sequencing_errors: tally.seq_errors,
        metadata: RunMetadata {
            workers,
            wall_time_secs: start.elapsed().as_secs_f64(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
