//! Separation bounds checked on random and constructed codebooks, plus the
//! repetition-codeword sampling equivalence.

use dnaexp::balls_bins::distinct_count_dp;
use dnaexp::channel::{DecodeRule, DecoderConfig, SequencingErrorModel, Simulator};
use dnaexp::codebook::{
    greedy_index_codebook, k2_lower_bound, k3_lower_bound, max_pairwise_intersection, repetition_codebook,
    verify_multiset_k2, Codebook, Codeword, Layout,
};
use dnaexp::numerics::ceil_snap;
use dnaexp::{Error, MessageSpec, ScalingParams};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_multiset(rng: &mut ChaCha8Rng, m: u32, inner: u32) -> Codeword {
    Codeword::from_molecules((0..m).map(|_| rng.random_range(0..inner)))
}

fn random_set(rng: &mut ChaCha8Rng, m: u32, inner: u32) -> Codeword {
    Codeword::from_molecules(sample(rng, inner as usize, m as usize).into_iter().map(|x| x as u32))
}

fn distinct_sets(rng: &mut ChaCha8Rng, count: usize, m: u32, inner: u32) -> Vec<Codeword> {
    let mut out: Vec<Codeword> = Vec::with_capacity(count);
    while out.len() < count {
        let cw = random_set(rng, m, inner);
        if !out.contains(&cw) {
            out.push(cw);
        }
    }
    out
}

#[test]
fn plotkin_example_at_m4() {
    let bound = k3_lower_bound(4, 65.0, 1.5).unwrap();
    assert!((bound - (2.0 - 4.0 / 31.5)).abs() < 1e-12);
    let need = ceil_snap(bound) as u64;
    assert_eq!(need, 2);
    let s = ScalingParams::new(4, 8, 4, MessageSpec::Count { j: 32 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..1000 {
        let cb = Codebook::new(s.clone(), Layout::Unstructured, distinct_sets(&mut rng, 32, 4, 8)).unwrap();
        assert!(max_pairwise_intersection(&cb).unwrap().value >= need);
    }
}

#[test]
fn multiset_verifier_on_random_codebook() {
    // J = 600 means 300 codewords.
    let s = ScalingParams::new(8, 16, 8, MessageSpec::Count { j: 600 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let cws = (0..300).map(|_| random_multiset(&mut rng, 8, 16)).collect();
    let cb = Codebook::new(s, Layout::Unstructured, cws).unwrap();
    let r = verify_multiset_k2(&cb).unwrap();
    assert_eq!(r.j, 600.0);
    assert!(r.holds, "{r:?}");
    assert!(r.max_intersection as f64 >= r.bound);
    assert!(!r.s_in_stated_range);
}

#[test]
fn multiset_verifier_on_repetition_codebook() {
    let s = ScalingParams::new(16, 64, 16, MessageSpec::Count { j: 2048 }).unwrap();
    let cb = repetition_codebook(&s, 0.5, 1024, 4, 3, 1_000_000).unwrap();
    assert!(!cb.is_multiset_free());
    let r = verify_multiset_k2(&cb).unwrap();
    assert!(r.holds, "{r:?}");
}

#[test]
fn greedy_meets_target_at_lemma_scale() {
    // Generous cap relative to the typical intersection M^(2 - alpha) = 4.
    let s = ScalingParams::new(16, 64, 32, MessageSpec::Count { j: 1000 }).unwrap();
    for seed in 0..5 {
        let cb = greedy_index_codebook(&s, 12, 1000, seed, 100_000).unwrap();
        assert_eq!(cb.len(), 1000);
        assert!(cb.is_index_based() && cb.is_multiset_free());
    }
}

#[test]
fn shortfall_when_the_cap_is_too_tight() {
    let s = ScalingParams::new(8, 16, 8, MessageSpec::Count { j: 100 }).unwrap();
    match greedy_index_codebook(&s, 0, 100, 1, 5_000) {
        Err(Error::Shortfall { achieved, partial, .. }) => {
            // Two molecules per group: at most two pairwise disjoint codewords.
            assert!(achieved <= 2);
            assert_eq!(partial.len(), achieved);
        }
        other => panic!("expected shortfall, got {other:?}"),
    }
}

/// Two-sample chi-square on distinct-count histograms, over bins where both are populated.
fn chi_square(a: &[u64], b: &[u64]) -> (f64, usize) {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        let (x, y) = (x as f64, y as f64);
        let d = x * (nb / na).sqrt() - y * (na / nb).sqrt();
        stat += d * d / (x + y);
        bins += 1;
    }
    (stat, bins.saturating_sub(1))
}

fn distinct_histogram(sim: &Simulator, trials: u64, seed: u64, top: usize) -> Vec<u64> {
    let dec = DecoderConfig::new(DecodeRule::MultiplicityCount);
    let mut h = vec![0u64; top + 1];
    for t in 0..trials {
        let o = sim.trial_at(SequencingErrorModel::None, dec, seed, t).unwrap();
        h[o.distinct_sampled as usize] += 1;
    }
    h
}

#[test]
fn repetition_sampling_equals_support_sampling() {
    const TRIALS: u64 = 100_000;
    const N: u32 = 6;
    // M = 16, t = 1/2: four molecules, each four times.
    let rep_s = ScalingParams::new(16, 64, N, MessageSpec::Count { j: 8 }).unwrap();
    let rep = repetition_codebook(&rep_s, 0.5, 8, 4, 1, 10_000).unwrap();
    assert!(rep.codewords().iter().all(|c| c.entries().iter().all(|&(_, k)| k == 4)));
    let sup_s = ScalingParams::new(4, 64, N, MessageSpec::Count { j: 8 }).unwrap();
    let sup = greedy_index_codebook(&sup_s, 4, 8, 1, 10_000).unwrap();

    let a = distinct_histogram(&Simulator::new(rep).unwrap(), TRIALS, 10, 4);
    let b = distinct_histogram(&Simulator::new(sup).unwrap(), TRIALS, 20, 4);
    let (stat, df) = chi_square(&a, &b);
    assert_eq!(df, 3);
    // 0.999 quantile of chi-square with 3 degrees of freedom.
    assert!(stat < 16.266, "chi2 = {stat}, {a:?} vs {b:?}");

    // Both also fit the exact law of N draws from four molecules.
    let exact = distinct_count_dp(4, N).unwrap().pmf();
    for h in [&a, &b] {
        let gof: f64 = exact
            .iter()
            .zip(h.iter())
            .skip(1)
            .map(|(&p, &o)| {
                let e = p * TRIALS as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(gof < 16.266, "goodness of fit {gof}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn pigeonhole_holds_for_random_multisets(
        m in 2u32..6,
        inner_extra in 1u32..6,
        half_j in 2usize..200,
        seed in any::<u64>(),
    ) {
        let inner = m + inner_extra;
        let s = ScalingParams::new(m, inner as u64, m, MessageSpec::Count { j: 2 * half_j as u64 }).unwrap();
        let alpha = s.alpha();
        let log_j = (2.0 * half_j as f64).ln();
        prop_assume!(log_j <= 2f64.ln() + alpha * m as f64 * (m as f64).ln());
        let k2 = k2_lower_bound(m, log_j, alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cws = (0..half_j).map(|_| random_multiset(&mut rng, m, inner)).collect();
        let cb = Codebook::new(s, Layout::Unstructured, cws).unwrap();
        prop_assert!(max_pairwise_intersection(&cb).unwrap().value >= k2 as u64);
    }

    #[test]
    fn plotkin_holds_for_random_sets(
        m in 3u32..8,
        inner_extra in 1u32..8,
        seed in any::<u64>(),
    ) {
        let inner = m + inner_extra;
        let s = ScalingParams::new(m, inner as u64, m, MessageSpec::Count { j: 2 }).unwrap();
        let alpha = s.alpha();
        prop_assume!(alpha < 2.0);
        // Smallest J' = J/2 the theorem admits, capped by the number of distinct sets.
        let half_j = (inner as f64).floor() as usize + 1;
        let available = (0..m).fold(1f64, |acc, i| acc * (inner - i) as f64 / (i + 1) as f64);
        prop_assume!((half_j as f64) <= available);
        let bound = k3_lower_bound(m, 2.0 * half_j as f64, alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cb = Codebook::new(s, Layout::Unstructured, distinct_sets(&mut rng, half_j, m, inner)).unwrap();
        prop_assert!(max_pairwise_intersection(&cb).unwrap().value >= ceil_snap(bound) as u64);
    }

    #[test]
    fn greedy_respects_its_cap(
        m in 2u32..10,
        per_group in 2u64..6,
        cap in 0u32..10,
        target in 1usize..60,
        seed in any::<u64>(),
    ) {
        let s = ScalingParams::new(m, m as u64 * per_group, m, MessageSpec::Count { j: target as u64 }).unwrap();
        let cb = match greedy_index_codebook(&s, cap, target, seed, 20_000) {
            Ok(cb) => cb,
            Err(Error::Shortfall { partial, .. }) => *partial,
            Err(e) => panic!("{e}"),
        };
        if cb.len() >= 2 {
            prop_assert!(max_pairwise_intersection(&cb).unwrap().value <= cap as u64);
        }
        for cw in cb.codewords() {
            prop_assert!(cw.is_set());
            prop_assert_eq!(cw.support_len(), m as usize);
            for (g, x) in cw.support().enumerate() {
                prop_assert_eq!(x as u64 / per_group, g as u64);
            }
        }
    }
}
