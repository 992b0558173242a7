use dnaexp::balls_bins::{empirical_exponent_capped, p_occupancy_capped, OccupancyQuery};
use dnaexp::channel::{
    bound_adversarial, bound_erasure, bound_no_seq, bound_random, estimate_attack, estimate_error_probability,
    BoundPair, DecoderConfig, SequencingErrorModel, Simulator,
};
use dnaexp::codebook::{
    greedy_index_codebook, k1_upper_bound, k2_lower_bound, k3_lower_bound, load, max_pairwise_intersection,
    repetition_codebook, save, verify_multiset_k2, Codebook,
};
use dnaexp::exponents::{exponent_multinomial, exponent_poisson, f_exponent, fig1_delta_grid, ExponentParams};
use dnaexp::numerics::ceil_snap;
use dnaexp::{Error, MessageSpec, ScalingParams};
use serde::Serialize;
use serde_json::json;

use crate::config::{CodebookSpec, Construction, ExponentSpec, ModelKind, OccupancySpec, SimulateSpec, SweepSpec};
use crate::output::{Cell, Output};
use crate::CliError;

/// A result to write, plus an error to report after writing it (shortfalls keep
/// their partial output).
pub type Outcome = Result<(Output, Option<CliError>), CliError>;

const KV: [&str; 3] = ["section", "key", "value"];

pub fn exponent(spec: &ExponentSpec, seed: u64) -> Outcome {
    let deltas = if spec.deltas.is_empty() {
        fig1_delta_grid()
    } else {
        spec.deltas.clone()
    };
    if spec.coverages.is_empty() {
        return Err(domain("exponent grid needs at least one coverage"));
    }
    let mut out = Output::new(
        "exponent",
        seed,
        spec,
        &["c", "delta", "f_multinomial", "f_poisson", "r", "regime"],
    );
    for &c in &spec.coverages {
        for &delta in &deltas {
            let p = ExponentParams::new(c, delta)?;
            let res = exponent_multinomial(p, spec.tol);
            let regime = serde_json::to_value(res.regime).expect("regime serializes");
            out.push(vec![
                c.into(),
                delta.into(),
                res.f_value.into(),
                exponent_poisson(p).into(),
                res.r.into(),
                regime.as_str().unwrap_or_default().into(),
            ]);
        }
    }
    Ok((out, None))
}

pub fn occupancy(spec: &OccupancySpec, seed: u64) -> Outcome {
    let cap = spec.cell_cap as u128;
    let mut out = Output::new(
        "occupancy",
        seed,
        spec,
        &["m", "n", "k", "log_p", "p", "exponent", "f", "gap"],
    );
    if !spec.queries.is_empty() {
        for &[n, m, k] in &spec.queries {
            let log_p = p_occupancy_capped(OccupancyQuery::new(n, m, k)?, cap)?;
            out.push(vec![
                m.into(),
                n.into(),
                k.into(),
                log_p.into(),
                log_p.exp().into(),
                (-log_p / m as f64).into(),
                Cell::Empty,
                Cell::Empty,
            ]);
        }
        return Ok((out, None));
    }
    if spec.m_grid.is_empty() {
        return Err(domain("occupancy schedule needs at least one M"));
    }
    let f = f_exponent(spec.c, spec.delta)?;
    for pt in empirical_exponent_capped(spec.c, spec.delta, &spec.m_grid, cap)? {
        out.push(vec![
            pt.m.into(),
            pt.n.into(),
            pt.k.into(),
            pt.log_p.into(),
            pt.log_p.exp().into(),
            pt.exponent.into(),
            f.into(),
            (pt.exponent - f).abs().into(),
        ]);
    }
    Ok((out, None))
}

fn scaling_for(spec: &CodebookSpec) -> dnaexp::Result<ScalingParams> {
    ScalingParams::new(spec.m, spec.inner_size, spec.n, MessageSpec::Count { j: spec.j as u64 })
}

fn build(spec: &CodebookSpec) -> dnaexp::Result<Codebook> {
    let s = scaling_for(spec)?;
    match spec.construction {
        Construction::Greedy => greedy_index_codebook(&s, spec.cap, spec.j, spec.seed, spec.budget),
        Construction::Repetition => repetition_codebook(&s, spec.t, spec.j, spec.cap, spec.seed, spec.budget),
    }
}

pub fn codebook(spec: &CodebookSpec, seed: u64) -> Outcome {
    let (cb, pending) = match build(spec) {
        Ok(cb) => (cb, None),
        Err(Error::Shortfall {
            achieved,
            target,
            attempts,
            partial,
        }) => {
            let err = Error::Shortfall {
                achieved,
                target,
                attempts,
                partial: partial.clone(),
            };
            (*partial, Some(CliError::Core(err)))
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &spec.save {
        save(&cb, path)?;
    }
    let mut out = Output::new("codebook", seed, spec, &KV);
    let s = cb.scaling();
    let alpha = s.alpha();
    let len = cb.len();
    out.kv("codebook", "construction", format!("{:?}", spec.construction).to_lowercase());
    out.kv("codebook", "m", s.m);
    out.kv("codebook", "inner_size", s.inner_size);
    out.kv("codebook", "alpha", alpha);
    out.kv("codebook", "target_j", spec.j);
    out.kv("codebook", "achieved_j", len);
    out.kv("codebook", "shortfall", pending.is_some());
    out.kv("codebook", "multiset_free", cb.is_multiset_free());
    if len < 2 {
        return Ok((out, pending));
    }
    let best = max_pairwise_intersection(&cb)?;
    out.kv("separation", "max_intersection", best.value);
    out.kv("separation", "witness", format!("{} {}", best.pair.0, best.pair.1));
    out.kv("separation", "cap", spec.cap);
    out.kv("separation", "cap_respected", best.value <= spec.cap as u64);

    // K1 is an existence bound at J = len; K2 and K3 bound any len codewords, i.e. J = 2 len.
    let k1 = k1_upper_bound(s.m, (len as f64).ln(), alpha, spec.c_prime)?;
    out.kv("bounds", "k1_upper", k1);
    out.kv("bounds", "max_within_k1", best.value <= k1);
    let j2 = 2.0 * len as f64;
    match k2_lower_bound(s.m, j2.ln(), alpha) {
        Ok(k2) => {
            out.kv("bounds", "k2_lower", k2);
            out.kv("bounds", "k2_consistent", best.value >= k2 as u64);
        }
        Err(e) => out.kv("bounds", "k2_lower", format!("n/a: {e}")),
    }
    if cb.is_multiset_free() {
        match k3_lower_bound(s.m, j2, alpha) {
            Ok(k3) => {
                out.kv("bounds", "k3_lower", k3);
                out.kv("bounds", "k3_consistent", best.value >= ceil_snap(k3) as u64);
            }
            Err(e) => out.kv("bounds", "k3_lower", format!("n/a: {e}")),
        }
    } else {
        match verify_multiset_k2(&cb) {
            Ok(r) => {
                out.kv("bounds", "multiset_k2_lower", r.bound);
                out.kv("bounds", "multiset_k2_consistent", r.holds);
                out.kv("bounds", "multiset_k2_s", r.s);
                out.kv("bounds", "multiset_k2_s_in_stated_range", r.s_in_stated_range);
            }
            Err(e) => out.kv("bounds", "multiset_k2_lower", format!("n/a: {e}")),
        }
    }
    Ok((out, pending))
}

/// Loads `codebook_file` or builds from `cb_spec`.
fn simulator(sim: &SimulateSpec, cb_spec: &CodebookSpec) -> Result<Simulator, CliError> {
    let cb = match &sim.codebook_file {
        Some(path) => load(path)?,
        None => build(cb_spec)?,
    };
    Ok(Simulator::new(cb)?)
}

fn default_pair(sim: &Simulator, spec: &SimulateSpec) -> Result<(usize, usize), CliError> {
    if let Some(pair) = spec.pair {
        return Ok(pair);
    }
    if sim.messages() < 2 {
        return Err(domain("the attack needs at least two codewords"));
    }
    Ok(max_pairwise_intersection(sim.codebook())?.pair)
}

fn decoder(spec: &SimulateSpec) -> DecoderConfig {
    DecoderConfig::new(spec.decoder.into())
        .with_epsilon(spec.epsilon)
        .with_eta(spec.eta)
        .with_r0(spec.r0)
}

/// The bound pair matching `model` for this codebook, or the reason none applies.
fn bounds_for(sim: &Simulator, model: SequencingErrorModel) -> Result<(&'static str, BoundPair), String> {
    let s = sim.codebook().scaling();
    let j = sim.messages();
    let alpha = s.alpha();
    let log_j = (j as f64).ln();
    let k1 = sim.max_intersection() as u32;
    // Zero is always a valid K2 when the pigeonhole hypotheses fail.
    let k2 = if j >= 2 {
        k2_lower_bound(s.m, log_j, alpha).unwrap_or(0).min(k1)
    } else {
        0
    };
    let r = match model {
        SequencingErrorModel::None => bound_no_seq(s, k1, k2).map(|b| ("no_sequencing_errors", b)),
        SequencingErrorModel::Erasure { p } => bound_erasure(s, k1, k2, p).map(|b| ("erasure", b)),
        SequencingErrorModel::Random { p } => bound_random(s, k1, p, log_j, alpha).map(|b| ("random", b)),
        SequencingErrorModel::Adversarial { p, .. } => bound_adversarial(s, k1, k2, p).map(|b| ("adversarial", b)),
    };
    r.map_err(|e| e.to_string())
}

fn four_sigma(q: f64, trials: u64) -> f64 {
    4.0 * (q * (1.0 - q) / trials as f64).sqrt()
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    simulate: &'a SimulateSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    codebook: Option<&'a CodebookSpec>,
}

pub fn simulate(spec: &SimulateSpec, cb_spec: &CodebookSpec, seed: u64, workers: usize) -> Outcome {
    let sim = simulator(spec, cb_spec)?;
    let echo = SimulateEcho {
        simulate: spec,
        codebook: spec.codebook_file.is_none().then_some(cb_spec),
    };
    let mut out = Output::new("simulate", seed, &echo, &KV);
    let dec = decoder(spec);
    let n = sim.codebook().scaling().n;
    out.kv("codebook", "messages", sim.messages());
    out.kv("codebook", "m", sim.codebook().m());
    out.kv("codebook", "n", n);
    out.kv("codebook", "max_intersection", sim.max_intersection());

    let (model, p_hat, trials) = if spec.attack {
        let pair = default_pair(&sim, spec)?;
        let r = estimate_attack(&sim, pair, spec.p, n, dec, spec.trials, seed, workers)?;
        out.kv("attack", "pair", format!("{} {}", pair.0, pair.1));
        out.kv("attack", "trials", r.trials);
        out.kv("attack", "errors", r.errors);
        out.kv("attack", "p_hat", r.p_hat);
        out.kv("attack", "std_err", r.std_err);
        out.kv("attack", "bad_events", r.bad_events);
        out.kv("attack", "bad_event_rate", r.bad_event_rate);
        out.kv("attack", "predicted_bad_event_rate", r.predicted_bad_event_rate);
        out.kv("attack", "conditional_error", r.conditional_error);
        out.kv("attack", "lower_bound", r.lower_bound);
        out.detail = Some(json!({ "attack": strip_metadata(&r) }));
        (SequencingErrorModel::Adversarial { p: spec.p, pair }, r.p_hat, r.trials)
    } else {
        let pair = if spec.model == ModelKind::Adversarial {
            default_pair(&sim, spec)?
        } else {
            (0, 1)
        };
        let model = spec.model.with(spec.p, pair);
        let r = estimate_error_probability(&sim, model, dec, spec.trials, seed, workers)?;
        out.kv("report", "trials", r.trials);
        out.kv("report", "errors", r.errors);
        out.kv("report", "p_hat", r.p_hat);
        out.kv("report", "std_err", r.std_err);
        out.kv("report", "mean_distinct_sampled", r.total_distinct_sampled as f64 / r.trials as f64);
        out.kv("report", "mean_sequencing_errors", r.total_sequencing_errors as f64 / r.trials as f64);
        out.kv("causes", "outage_k", r.causes.outage_k);
        out.kv("causes", "collision", r.causes.collision);
        out.kv("causes", "sequencing", r.causes.sequencing);
        out.kv("causes", "tie", r.causes.tie);
        out.kv("lemma", "distinct_count_held", r.lemma1.held);
        out.kv("lemma", "distinct_count_held_but_failed", r.lemma1.held_but_failed);
        out.kv("lemma", "undersampled_held", r.undersampled_lemma.held);
        out.kv("lemma", "undersampled_held_but_failed", r.undersampled_lemma.held_but_failed);
        out.detail = Some(json!({ "report": strip_metadata(&r) }));
        (model, r.p_hat, r.trials)
    };

    match bounds_for(&sim, model) {
        Ok((name, b)) => {
            let (lo, hi) = (b.lower.exp(), b.upper.exp());
            out.kv("bound", "model", name);
            out.kv("bound", "log_lower", b.lower);
            out.kv("bound", "log_upper", b.upper);
            out.kv("bound", "lower", lo);
            out.kv("bound", "upper", hi);
            out.kv("bound", "lower_consistent", p_hat >= lo - four_sigma(lo, trials));
            out.kv("bound", "upper_consistent", p_hat <= hi + four_sigma(hi, trials));
        }
        Err(why) => out.kv("bound", "unavailable", why),
    }
    Ok((out, None))
}

#[derive(Serialize)]
struct SweepEcho<'a> {
    sweep: &'a SweepSpec,
    simulate: &'a SimulateSpec,
    codebook: &'a CodebookSpec,
}

pub fn sweep(
    spec: &SweepSpec,
    sim_spec: &SimulateSpec,
    cb_spec: &CodebookSpec,
    seed: u64,
    workers: usize,
) -> Outcome {
    if spec.ns.is_empty() || spec.ps.is_empty() {
        return Err(domain("sweep needs at least one N and one p"));
    }
    if sim_spec.codebook_file.is_some() {
        return Err(domain("sweep rebuilds the codebook for every N; codebook_file is not supported"));
    }
    if sim_spec.model == ModelKind::None && spec.ps.iter().any(|&p| p != 0.0) {
        return Err(domain("a sweep over p needs an error model (erasure, random or adversarial)"));
    }
    let echo = SweepEcho {
        sweep: spec,
        simulate: sim_spec,
        codebook: cb_spec,
    };
    let mut out = Output::new(
        "sweep",
        seed,
        &echo,
        &["n", "p", "trials", "errors", "p_hat", "std_err", "log_lower", "log_upper"],
    );
    let dec = decoder(sim_spec);
    for &n in &spec.ns {
        let cb_n = CodebookSpec {
            n,
            save: None,
            ..cb_spec.clone()
        };
        let sim = simulator(sim_spec, &cb_n)?;
        for &p in &spec.ps {
            let (model, trials, errors, p_hat, std_err) = if sim_spec.attack {
                let pair = default_pair(&sim, sim_spec)?;
                let r = estimate_attack(&sim, pair, p, n, dec, sim_spec.trials, seed, workers)?;
                let model = SequencingErrorModel::Adversarial { p, pair };
                (model, r.trials, r.errors, r.p_hat, r.std_err)
            } else {
                let pair = if sim_spec.model == ModelKind::Adversarial {
                    default_pair(&sim, sim_spec)?
                } else {
                    (0, 1)
                };
                let model = sim_spec.model.with(p, pair);
                let r = estimate_error_probability(&sim, model, dec, sim_spec.trials, seed, workers)?;
                (model, r.trials, r.errors, r.p_hat, r.std_err)
            };
            let (lo, hi) = match bounds_for(&sim, model) {
                Ok((_, b)) => (Cell::F(b.lower), Cell::F(b.upper)),
                Err(_) => (Cell::Empty, Cell::Empty),
            };
            out.push(vec![
                n.into(),
                p.into(),
                trials.into(),
                errors.into(),
                p_hat.into(),
                std_err.into(),
                lo,
                hi,
            ]);
        }
    }
    Ok((out, None))
}

fn domain(msg: &str) -> CliError {
    CliError::Core(Error::Domain(msg.to_string()))
}

/// Run metadata lives once, at the top level of the JSON document.
fn strip_metadata(r: &impl serde::Serialize) -> serde_json::Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("metadata");
    }
    v
}
