//! Randomized greedy constructions.

use std::collections::HashSet;

use rand::Rng;

use super::{Codebook, Codeword, Layout};
use crate::error::{domain, Error, Result};
use crate::numerics::round_half_up;
use crate::rng::StreamFactory;
use crate::scaling::ScalingParams;

/// Greedy Gilbert-Varshamov style index-based codebook.
///
/// Candidates pick a uniform molecule in each of the `M` groups and are kept when
/// their intersection with every kept codeword is at most `intersection_cap` (and
/// they are new). Fails with [`Error::Shortfall`] after `attempt_budget` candidates.
pub fn greedy_index_codebook(
    scaling: &ScalingParams,
    intersection_cap: u32,
    target_j: usize,
    seed: u64,
    attempt_budget: u64,
) -> Result<Codebook> {
    scaling.validate()?;
    let m = scaling.m;
    if scaling.inner_size % m as u64 != 0 {
        return domain(format!(
            "inner_size {} is not divisible by M = {m}; unequal groups are not supported",
            scaling.inner_size
        ));
    }
    let group_size = scaling.inner_size / m as u64;
    let (supports, attempts) = greedy_supports(m, group_size, intersection_cap, target_j, seed, attempt_budget)?;
    let cws: Vec<Codeword> = supports.into_iter().map(Codeword::from_molecules).collect();
    finish(scaling, Layout::IndexBased { group_size }, cws, target_j, attempts)
}

/// Number of distinct molecules per repetition codeword, `round(M^t)` clamped to `1..=M`.
pub fn support_size(m: u32, t: f64) -> u32 {
    round_half_up((m as f64).powf(t)).clamp(1, m as i64) as u32
}

/// Multiplicities of a repetition codeword listed by ascending molecule:
/// `floor(M / M')` each, plus one for the `M mod M'` lowest molecules.
pub fn repetition_multiplicities(m: u32, support: u32) -> Vec<u32> {
    let base = m / support;
    let rem = m % support;
    (0..support).map(|k| base + u32::from(k < rem)).collect()
}

/// Codebook whose codewords use `M' = round(M^t)` distinct molecules repeated to
/// total multiplicity `M`.
///
/// The supports form an index-based codebook over `M'` groups of the same inner code,
/// built greedily with `support_cap` bounding pairwise support intersections.
pub fn repetition_codebook(
    scaling: &ScalingParams,
    t: f64,
    target_j: usize,
    support_cap: u32,
    seed: u64,
    attempt_budget: u64,
) -> Result<Codebook> {
    scaling.validate()?;
    if !(t > 0.0 && t <= 1.0) {
        return domain(format!("repetition exponent t = {t} not in (0, 1]"));
    }
    let m = scaling.m;
    let support = support_size(m, t);
    if scaling.inner_size % support as u64 != 0 {
        return domain(format!(
            "inner_size {} is not divisible by the support size {support}",
            scaling.inner_size
        ));
    }
    let group_size = scaling.inner_size / support as u64;
    let (supports, attempts) =
        greedy_supports(support, group_size, support_cap, target_j, seed, attempt_budget)?;
    let mults = repetition_multiplicities(m, support);
    let cws = supports
        .into_iter()
        .map(|ids| Codeword::from_pairs(ids.into_iter().zip(mults.iter().copied())))
        .collect::<Result<Vec<_>>>()?;
    finish(
        scaling,
        Layout::Repetition {
            support_size: support,
            group_size,
        },
        cws,
        target_j,
        attempts,
    )
}

fn finish(scaling: &ScalingParams, layout: Layout, cws: Vec<Codeword>, target: usize, attempts: u64) -> Result<Codebook> {
    let achieved = cws.len();
    let cb = Codebook::new(scaling.clone(), layout, cws)?;
    if achieved < target {
        return Err(Error::Shortfall {
            achieved,
            target,
            attempts,
            partial: Box::new(cb),
        });
    }
    Ok(cb)
}

/// Greedy rejection sampling of one-per-group supports. Returns the kept supports
/// (ascending molecule order) and the number of candidates drawn.
fn greedy_supports(
    groups: u32,
    group_size: u64,
    cap: u32,
    target: usize,
    seed: u64,
    budget: u64,
) -> Result<(Vec<Vec<u32>>, u64)> {
    if budget < target as u64 {
        return domain(format!("attempt budget {budget} is below the target size {target}"));
    }
    let mut rng = StreamFactory::new(seed).stream(0);
    let mut kept: Vec<Vec<u32>> = Vec::with_capacity(target);
    let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(target);
    let mut attempts = 0u64;
    while kept.len() < target && attempts < budget {
        attempts += 1;
        let cand: Vec<u32> = (0..groups as u64)
            .map(|g| (g * group_size + rng.random_range(0..group_size)) as u32)
            .collect();
        if seen.contains(&cand) {
            continue;
        }
        let blocked = cap < groups
            && kept.iter().any(|w| {
                let mut agree = 0u32;
                for (a, b) in w.iter().zip(&cand) {
                    if a == b {
                        agree += 1;
                        if agree > cap {
                            return true;
                        }
                    }
                }
                false
            });
        if !blocked {
            seen.insert(cand.clone());
            kept.push(cand);
        }
    }
    Ok((kept, attempts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::max_pairwise_intersection;
    use crate::scaling::MessageSpec;

    fn scaling(m: u32, inner: u64) -> ScalingParams {
        ScalingParams::new(m, inner, m, MessageSpec::Count { j: 2 }).unwrap()
    }

    #[test]
    fn cap_at_m_never_binds() {
        let cb = greedy_index_codebook(&scaling(4, 16), 4, 200, 5, 10_000).unwrap();
        assert_eq!(cb.len(), 200);
        assert!(cb.is_index_based());
    }

    #[test]
    fn cap_zero_gives_disjoint_pair() {
        let cb = greedy_index_codebook(&scaling(2, 4), 0, 2, 1, 100).unwrap();
        assert_eq!(max_pairwise_intersection(&cb).unwrap().value, 0);
        let union: HashSet<u32> = cb.codewords().iter().flat_map(|c| c.support()).collect();
        assert_eq!(union.len(), 4);
    }

    #[test]
    fn shortfall_carries_partial() {
        // Only two pairwise-disjoint index-based codewords exist here.
        match greedy_index_codebook(&scaling(2, 4), 0, 3, 1, 50) {
            Err(Error::Shortfall {
                achieved,
                target,
                attempts,
                partial,
            }) => {
                assert_eq!((achieved, target, attempts), (2, 3, 50));
                assert_eq!(partial.len(), 2);
            }
            other => panic!("expected shortfall, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_grouping_and_budget() {
        assert!(greedy_index_codebook(&scaling(3, 16), 3, 2, 1, 10).is_err());
        assert!(greedy_index_codebook(&scaling(4, 16), 3, 20, 1, 10).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let a = greedy_index_codebook(&scaling(8, 32), 4, 50, 9, 10_000).unwrap();
        let b = greedy_index_codebook(&scaling(8, 32), 4, 50, 9, 10_000).unwrap();
        let c = greedy_index_codebook(&scaling(8, 32), 4, 50, 10, 10_000).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn repetition_examples() {
        let s = scaling(16, 64);
        let cb = repetition_codebook(&s, 0.5, 20, 1, 3, 10_000).unwrap();
        for cw in cb.codewords() {
            assert_eq!(cw.support_len(), 4);
            assert!(cw.entries().iter().all(|&(_, c)| c == 4));
            assert_eq!(cw.size(), 16);
        }
        let a = Codeword::from_pairs([(0, 4), (16, 4), (32, 4), (48, 4)]).unwrap();
        let b = Codeword::from_pairs([(1, 4), (17, 4), (33, 4), (49, 4)]).unwrap();
        assert_eq!(a.intersection(&b), 0);
    }

    #[test]
    fn repetition_remainder_goes_to_lowest_ids() {
        assert_eq!(repetition_multiplicities(10, 4), vec![3, 3, 2, 2]);
        assert_eq!(support_size(10, 0.6), 4);
        let s = ScalingParams::new(10, 40, 10, MessageSpec::Count { j: 2 }).unwrap();
        let cb = repetition_codebook(&s, 0.6, 5, 4, 1, 100).unwrap();
        for cw in cb.codewords() {
            let m: Vec<u32> = cw.entries().iter().map(|&(_, c)| c).collect();
            assert_eq!(m, vec![3, 3, 2, 2]);
        }
    }

    #[test]
    fn repetition_at_t_one_is_index_based() {
        let s = scaling(8, 32);
        let rep = repetition_codebook(&s, 1.0, 30, 4, 21, 10_000).unwrap();
        let idx = greedy_index_codebook(&s, 4, 30, 21, 10_000).unwrap();
        assert_eq!(rep.codewords(), idx.codewords());
    }
}
