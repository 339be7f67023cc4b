//! Independent reference implementations used by several test targets.
#![allow(dead_code)]

use pccurve::{Cascade, CascadeSet, NodeId};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// APCE from first principles: every unordered node pair, every cascade,
/// positions found by linear search.
pub fn apce_brute(cascades: &[Vec<NodeId>], universe: usize) -> f64 {
    let pos = |c: &[NodeId], v: NodeId| c.iter().position(|&x| x == v);
    let mut weighted = 0.0;
    let mut total = 0.0;
    for i in 0..universe {
        for j in i + 1..universe {
            let (mut both, mut i_first) = (0.0, 0.0);
            for c in cascades {
                if let (Some(a), Some(b)) = (pos(c, i), pos(c, j)) {
                    both += 1.0;
                    if a < b {
                        i_first += 1.0;
                    }
                }
            }
            if both > 0.0 {
                let p: f64 = i_first / both;
                let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
                weighted += both * (h(p) + h(1.0 - p));
                total += both;
            }
        }
    }
    weighted / total
}

/// Average precision recomputed from prefix sets at every rank.
pub fn ap_brute(truth: &[NodeId], ranking: &[NodeId]) -> f64 {
    let relevant: Vec<NodeId> = truth[1..].to_vec();
    let mut sum = 0.0;
    for k in 1..=ranking.len() {
        if relevant.contains(&ranking[k - 1]) {
            let hits = ranking[..k].iter().filter(|v| relevant.contains(v)).count();
            sum += hits as f64 / k as f64;
        }
    }
    sum / relevant.len() as f64
}

/// Two-sided one-sample Kolmogorov–Smirnov p-value against `cdf`,
/// using the asymptotic distribution with the Stephens correction.
pub fn ks_pvalue(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut q = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        q += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    q.clamp(0.0, 1.0)
}

/// Pearson chi-square goodness-of-fit p-value.
pub fn chi_square_pvalue(observed: &[u64], expected: &[f64]) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

pub fn to_set(cascades: &[Vec<NodeId>], universe: usize) -> CascadeSet {
    CascadeSet::new(
        cascades
            .iter()
            .map(|c| Cascade::new(c.clone()).unwrap())
            .collect(),
        universe,
    )
    .unwrap()
}

/// A cascade of 2..=universe distinct nodes drawn from `0..universe`.
pub fn cascade(universe: usize) -> impl Strategy<Value = Vec<NodeId>> {
    Just((0..universe).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_flat_map(move |perm| (Just(perm), 2..=universe))
        .prop_map(|(perm, len)| perm[..len].to_vec())
}

/// Up to `max_m` cascades over at most `max_n` nodes.
pub fn cascade_set(max_n: usize, max_m: usize) -> impl Strategy<Value = (Vec<Vec<NodeId>>, usize)> {
    (2..=max_n).prop_flat_map(move |n| (prop::collection::vec(cascade(n), 1..=max_m), Just(n)))
}
