//! Outer codebooks: size-M multisets of molecule identifiers, their constructions,
//! exact separation analysis and the K1/K2/K3 separation bounds.

mod bounds;
mod construct;
mod io;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scaling::ScalingParams;

pub use bounds::{
    k1_upper_bound, k2_lower_bound, k3_lower_bound, k3_plotkin_average_bound, separation_bounds,
    verify_multiset_k2, MultisetK2Report, SeparationBounds,
};
pub use construct::{greedy_index_codebook, repetition_codebook, repetition_multiplicities, support_size};
pub use io::{from_json, load, save, to_json, CODEBOOK_FORMAT, CODEBOOK_VERSION};

/// A multiset of molecules stored as `(molecule, multiplicity)` pairs sorted by
/// molecule with positive multiplicities. This canonical form makes derived
/// equality and hashing agree with multiset equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Codeword {
    entries: Vec<(u32, u32)>,
}

impl Codeword {
    pub fn from_molecules(ids: impl IntoIterator<Item = u32>) -> Self {
        let mut ids: Vec<u32> = ids.into_iter().collect();
        ids.sort_unstable();
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for x in ids {
            match entries.last_mut() {
                Some((y, c)) if *y == x => *c += 1,
                _ => entries.push((x, 1)),
            }
        }
        Self { entries }
    }

    /// Builds from pairs in any order; repeated molecules are merged.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut pairs: Vec<(u32, u32)> = pairs.into_iter().collect();
        if pairs.iter().any(|&(_, c)| c == 0) {
            return domain("multiplicities must be positive");
        }
        pairs.sort_unstable();
        let mut entries: Vec<(u32, u32)> = Vec::with_capacity(pairs.len());
        for (x, c) in pairs {
            match entries.last_mut() {
                Some((y, d)) if *y == x => *d += c,
                _ => entries.push((x, c)),
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    /// Total multiplicity.
    pub fn size(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(x, _)| x)
    }

    pub fn multiplicity(&self, x: u32) -> u32 {
        match self.entries.binary_search_by_key(&x, |&(y, _)| y) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, x: u32) -> bool {
        self.multiplicity(x) > 0
    }

    pub fn is_set(&self) -> bool {
        self.entries.iter().all(|&(_, c)| c == 1)
    }

    /// Multiset intersection size `sum_x min(mult_A(x), mult_B(x))`.
    pub fn intersection(&self, other: &Codeword) -> u64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1.min(b[j].1) as u64;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// The multiset as a flat list with repeats, in ascending order.
    pub fn expand(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.size() as usize);
        for &(x, c) in &self.entries {
            out.extend(std::iter::repeat_n(x, c as usize));
        }
        out
    }

    fn is_canonical(&self) -> bool {
        self.entries.iter().all(|&(_, c)| c > 0) && self.entries.windows(2).all(|w| w[0].0 < w[1].0)
    }
}

/// Structure of a codebook. Groups are the contiguous identifier blocks
/// `[g * group_size, (g + 1) * group_size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    Unstructured,
    /// One molecule from each of `M` groups, no repeats.
    IndexBased { group_size: u64 },
    /// One molecule from each of `support_size` groups, each repeated so the
    /// multiplicities sum to `M`.
    Repetition { support_size: u32, group_size: u64 },
}

/// Immutable outer codebook. Construct through [`Codebook::new`] or the builders,
/// which check the layout invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    scaling: ScalingParams,
    layout: Layout,
    codewords: Vec<Codeword>,
}

impl Codebook {
    pub fn new(scaling: ScalingParams, layout: Layout, codewords: Vec<Codeword>) -> Result<Self> {
        scaling.validate()?;
        let m = scaling.m as u64;
        for (idx, cw) in codewords.iter().enumerate() {
            if !cw.is_canonical() {
                return domain(format!("codeword {idx} is not in canonical sorted form"));
            }
            if cw.size() != m {
                return domain(format!("codeword {idx} has total multiplicity {} != M = {m}", cw.size()));
            }
            if let Some(&(x, _)) = cw.entries.last() {
                if x as u64 >= scaling.inner_size {
                    return domain(format!("codeword {idx} uses molecule {x} outside the inner code"));
                }
            }
        }
        match layout {
            Layout::Unstructured => {}
            Layout::IndexBased { group_size } => {
                check_grouped(&scaling, &codewords, scaling.m, group_size)?;
                if codewords.iter().any(|c| !c.is_set()) {
                    return domain("index-based codewords cannot repeat molecules");
                }
            }
            Layout::Repetition { support_size, group_size } => {
                if support_size == 0 || support_size > scaling.m {
                    return domain("repetition support size must be in 1..=M");
                }
                check_grouped(&scaling, &codewords, support_size, group_size)?;
                let mults = repetition_multiplicities(scaling.m, support_size);
                for (idx, cw) in codewords.iter().enumerate() {
                    if cw.entries.iter().map(|&(_, c)| c).ne(mults.iter().copied()) {
                        return domain(format!("codeword {idx} does not follow the repetition multiplicities"));
                    }
                }
            }
        }
        Ok(Self {
            scaling,
            layout,
            codewords,
        })
    }

    /// Unstructured codebook from explicit molecule lists.
    pub fn from_molecule_lists(scaling: ScalingParams, lists: Vec<Vec<u32>>) -> Result<Self> {
        let cws = lists.into_iter().map(Codeword::from_molecules).collect();
        Self::new(scaling, Layout::Unstructured, cws)
    }

    pub fn scaling(&self) -> &ScalingParams {
        &self.scaling
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn codewords(&self) -> &[Codeword] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn m(&self) -> u32 {
        self.scaling.m
    }

    pub fn is_index_based(&self) -> bool {
        matches!(self.layout, Layout::IndexBased { .. })
    }

    pub fn group_size(&self) -> Option<u64> {
        match self.layout {
            Layout::Unstructured => None,
            Layout::IndexBased { group_size } | Layout::Repetition { group_size, .. } => Some(group_size),
        }
    }

    /// True when no codeword repeats a molecule.
    pub fn is_multiset_free(&self) -> bool {
        self.codewords.iter().all(Codeword::is_set)
    }

    /// Codebook restricted to the given codeword indices, keeping the layout.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut cws = Vec::with_capacity(indices.len());
        for &i in indices {
            match self.codewords.get(i) {
                Some(c) => cws.push(c.clone()),
                None => return domain(format!("codeword index {i} out of range")),
            }
        }
        Ok(Self {
            scaling: self.scaling.clone(),
            layout: self.layout,
            codewords: cws,
        })
    }
}

fn check_grouped(scaling: &ScalingParams, cws: &[Codeword], groups: u32, group_size: u64) -> Result<()> {
    if group_size == 0 || group_size * groups as u64 != scaling.inner_size {
        return domain(format!(
            "inner_size {} is not {groups} groups of {group_size}",
            scaling.inner_size
        ));
    }
    let mut seen = HashSet::with_capacity(cws.len());
    for (idx, cw) in cws.iter().enumerate() {
        if cw.entries.len() != groups as usize {
            return domain(format!("codeword {idx} does not take one molecule per group"));
        }
        // Sorted order plus one-per-group means entry g lies in group g.
        for (g, &(x, _)) in cw.entries.iter().enumerate() {
            if x as u64 / group_size != g as u64 {
                return domain(format!("codeword {idx} does not take one molecule per group"));
            }
        }
        if !seen.insert(cw) {
            return domain(format!("codeword {idx} duplicates an earlier codeword"));
        }
    }
    Ok(())
}

/// Largest pairwise multiset intersection and the lexicographically smallest pair
/// attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseMax {
    pub value: u64,
    pub pair: (usize, usize),
}

pub fn max_pairwise_intersection(cb: &Codebook) -> Result<PairwiseMax> {
    max_pairwise_of(cb.codewords(), cb.m() as u64)
}

pub(crate) fn max_pairwise_of(cws: &[Codeword], m: u64) -> Result<PairwiseMax> {
    if cws.len() < 2 {
        return domain("need at least two codewords");
    }
    let row_best = |i: usize| -> PairwiseMax {
        let mut best = PairwiseMax {
            value: 0,
            pair: (i, i + 1),
        };
        let mut first = true;
        for j in i + 1..cws.len() {
            let v = cws[i].intersection(&cws[j]);
            if first || v > best.value {
                best = PairwiseMax { value: v, pair: (i, j) };
                first = false;
                if v == m {
                    break;
                }
            }
        }
        best
    };
    let better = |a: PairwiseMax, b: PairwiseMax| {
        if b.value > a.value || (b.value == a.value && b.pair < a.pair) {
            b
        } else {
            a
        }
    };
    let best = if cws.len() < 64 {
        (0..cws.len() - 1).map(row_best).reduce(better)
    } else {
        (0..cws.len() - 1).into_par_iter().map(row_best).reduce_with(better)
    };
    Ok(best.expect("at least one pair"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::MessageSpec;

    fn scaling(m: u32, inner: u64) -> ScalingParams {
        ScalingParams::new(m, inner, m, MessageSpec::Count { j: 2 }).unwrap()
    }

    #[test]
    fn multiset_intersection_examples() {
        let a = Codeword::from_molecules([0, 0, 1]);
        let b = Codeword::from_molecules([0, 1, 1]);
        assert_eq!(a.intersection(&b), 2);
        assert_eq!(a.intersection(&a), 3);
        let c = Codeword::from_molecules([2, 3, 4]);
        assert_eq!(a.intersection(&c), 0);
        assert_eq!(a.entries(), &[(0, 2), (1, 1)]);
        assert_eq!(a.expand(), vec![0, 0, 1]);
    }

    #[test]
    fn pairwise_max_examples() {
        let s = scaling(3, 8);
        let cb = Codebook::from_molecule_lists(s.clone(), vec![vec![0, 0, 1], vec![0, 1, 1]]).unwrap();
        assert_eq!(max_pairwise_intersection(&cb).unwrap(), PairwiseMax { value: 2, pair: (0, 1) });
        let cb = Codebook::from_molecule_lists(s.clone(), vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 1, 2]]).unwrap();
        assert_eq!(max_pairwise_intersection(&cb).unwrap(), PairwiseMax { value: 3, pair: (0, 2) });
        let cb = Codebook::from_molecule_lists(s.clone(), vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert_eq!(max_pairwise_intersection(&cb).unwrap().value, 0);
        let cb = Codebook::from_molecule_lists(s, vec![vec![0, 1, 2]]).unwrap();
        assert!(max_pairwise_intersection(&cb).is_err());
    }

    #[test]
    fn witness_is_lexicographically_smallest() {
        let s = scaling(2, 8);
        let lists = vec![vec![0, 1], vec![2, 3], vec![0, 4], vec![2, 5], vec![0, 6]];
        let cb = Codebook::from_molecule_lists(s, lists).unwrap();
        assert_eq!(max_pairwise_intersection(&cb).unwrap().pair, (0, 2));
    }

    #[test]
    fn layout_checks() {
        let s = scaling(2, 4);
        let ok = vec![Codeword::from_molecules([0, 2]), Codeword::from_molecules([1, 3])];
        assert!(Codebook::new(s.clone(), Layout::IndexBased { group_size: 2 }, ok).is_ok());
        let same_group = vec![Codeword::from_molecules([0, 1])];
        assert!(Codebook::new(s.clone(), Layout::IndexBased { group_size: 2 }, same_group).is_err());
        let dup = vec![Codeword::from_molecules([0, 2]), Codeword::from_molecules([0, 2])];
        assert!(Codebook::new(s.clone(), Layout::IndexBased { group_size: 2 }, dup.clone()).is_err());
        assert!(Codebook::new(s.clone(), Layout::Unstructured, dup).is_ok());
        let wrong_size = vec![Codeword::from_molecules([0])];
        assert!(Codebook::new(s.clone(), Layout::Unstructured, wrong_size).is_err());
        let out_of_range = vec![Codeword::from_molecules([0, 4])];
        assert!(Codebook::new(s, Layout::Unstructured, out_of_range).is_err());
    }
}
