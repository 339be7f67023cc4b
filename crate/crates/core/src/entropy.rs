//! Disorder measures for cascade sets.
//!
//! For every unordered node pair `{i, j}` that co-occurs in at least one
//! cascade we count `n_ij`, the number of co-occurrences, and `w_ij`, how
//! often the smaller id comes first. `p_ij = w_ij / n_ij` feeds a binary
//! entropy (PCE), and APCE is the co-occurrence-weighted average
//!
//! ```text
//! APCE = Σ_{i<j} (n_ij / T) · PCE(p_ij),   T = Σ_{i<j} n_ij
//! ```
//!
//! The normaliser `T` is the total number of pair occurrences, not the
//! number of distinct pairs: for `{(1,2,3,4), (1,3,2)}` it is 9.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::cascade::{CascadeSet, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCount {
    /// Times the smaller id preceded the larger one.
    pub first_before: u64,
    /// Co-occurrences.
    pub total: u64,
}

impl PairCount {
    /// Probability that the smaller id precedes the larger one.
    pub fn p(&self) -> f64 {
        self.first_before as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairwiseOrderStats {
    pairs: BTreeMap<(NodeId, NodeId), PairCount>,
    total_pair_occurrences: u64,
}

impl PairwiseOrderStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds every (earlier, later) position pair of one sequence.
    pub fn add_sequence(&mut self, nodes: &[NodeId]) -> Result<()> {
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("cascade contains a repeated node".into()));
        }
        for (a, &u) in nodes.iter().enumerate() {
            for &v in &nodes[a + 1..] {
                let entry = self.pairs.entry((u.min(v), u.max(v))).or_default();
                entry.total += 1;
                if u < v {
                    entry.first_before += 1;
                }
            }
        }
        let len = nodes.len() as u64;
        self.total_pair_occurrences += len * len.saturating_sub(1) / 2;
        Ok(())
    }

    /// Counter addition; associative and commutative.
    pub fn merge(&mut self, other: &PairwiseOrderStats) {
        for (&k, c) in &other.pairs {
            let e = self.pairs.entry(k).or_default();
            e.first_before += c.first_before;
            e.total += c.total;
        }
        self.total_pair_occurrences += other.total_pair_occurrences;
    }

    /// Counts for the unordered pair `{i, j}`, if it ever co-occurred.
    pub fn get(&self, i: NodeId, j: NodeId) -> Option<PairCount> {
        self.pairs.get(&(i.min(j), i.max(j))).copied()
    }

    /// Probability that `i` precedes `j`.
    pub fn p_before(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.get(i, j)
            .map(|c| if i < j { c.p() } else { 1.0 - c.p() })
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((NodeId, NodeId), PairCount)> + '_ {
        self.pairs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn distinct_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn total_pair_occurrences(&self) -> u64 {
        self.total_pair_occurrences
    }

    pub fn apce(&self) -> Result<f64> {
        apce(self)
    }
}

pub fn pairwise_stats(cs: &CascadeSet) -> Result<PairwiseOrderStats> {
    let mut stats = PairwiseOrderStats::new();
    for c in cs {
        stats.add_sequence(c.nodes())?;
    }
    Ok(stats)
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Binary entropy in bits, with `0·log 0 = 0`.
pub fn pce(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(-(plogp(p) + plogp(1.0 - p)))
}

pub fn apce(stats: &PairwiseOrderStats) -> Result<f64> {
    if stats.total_pair_occurrences == 0 {
        return Err(Error::Domain(
            "no co-occurring node pairs; APCE is undefined".into(),
        ));
    }
    let total = stats.total_pair_occurrences as f64;
    let mut acc = 0.0;
    for c in stats.pairs.values() {
        acc += c.total as f64 / total * pce(c.p())?;
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// Convenience: APCE of a cascade set.
pub fn apce_of(cs: &CascadeSet) -> Result<f64> {
    apce(&pairwise_stats(cs)?)
}

/// Shannon entropy (bits) of length-`n` sliding-window blocks pooled over
/// all sequences.
pub fn block_entropy<T, S>(sequences: &[S], n: usize) -> Result<f64>
where
    T: Hash + Eq,
    S: AsRef<[T]>,
{
    if n == 0 {
        return Err(Error::Domain("block length must be positive".into()));
    }
    if let Some(short) = sequences.iter().find(|s| s.as_ref().len() < n) {
        return Err(Error::Domain(format!(
            "sequence of length {} shorter than block length {n}",
            short.as_ref().len()
        )));
    }
    let mut counts: HashMap<&[T], u64> = HashMap::new();
    let mut total = 0u64;
    for s in sequences {
        for block in s.as_ref().windows(n) {
            *counts.entry(block).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Domain("no blocks to count".into()));
    }
    let mut freqs: Vec<u64> = counts.into_values().collect();
    freqs.sort_unstable();
    let total = total as f64;
    Ok(-freqs
        .into_iter()
        .map(|c| plogp(c as f64 / total))
        .sum::<f64>())
}
