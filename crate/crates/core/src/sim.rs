//! Spreading simulators: synchronous independent cascade (IC), and
//! Gillespie-driven susceptible-infectious (SI) and linear threshold (LT)
//! dynamics. Only the infection order is kept in the output cascade.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, CascadeSet, NodeId};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Ic,
    Lt,
    Si,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Ic => "ic",
            Mechanism::Lt => "lt",
            Mechanism::Si => "si",
        }
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdDist {
    /// θ ~ U[0, 1) drawn per node.
    Uniform01,
    Fixed(f64),
}

impl ThresholdDist {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ThresholdDist::Uniform01 => rng.random::<f64>(),
            ThresholdDist::Fixed(theta) => theta,
        }
    }
}

fn default_ic_prob() -> f64 {
    0.3
}
fn default_si_rate() -> f64 {
    1.0
}
fn default_threshold() -> ThresholdDist {
    ThresholdDist::Uniform01
}
fn default_max_attempts() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mechanism: Mechanism,
    #[serde(default = "default_ic_prob")]
    pub ic_prob: f64,
    #[serde(default = "default_si_rate")]
    pub si_rate: f64,
    #[serde(default = "default_threshold")]
    pub lt_threshold_dist: ThresholdDist,
    pub target_length: usize,
    /// Simulations allowed per requested cascade before giving up.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
}

impl SimConfig {
    pub fn new(mechanism: Mechanism, target_length: usize) -> Self {
        Self {
            mechanism,
            ic_prob: default_ic_prob(),
            si_rate: default_si_rate(),
            lt_threshold_dist: default_threshold(),
            target_length,
            max_attempts: default_max_attempts(),
        }
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ic_prob) {
            return Err(Error::Validation(format!(
                "ic_prob must lie in [0, 1], got {}",
                self.ic_prob
            )));
        }
        if !(self.si_rate.is_finite() && self.si_rate > 0.0) {
            return Err(Error::Validation(format!(
                "si_rate must be positive, got {}",
                self.si_rate
            )));
        }
        if let ThresholdDist::Fixed(theta) = self.lt_threshold_dist {
            if !theta.is_finite() {
                return Err(Error::Validation(
                    "fixed LT threshold must be finite".into(),
                ));
            }
        }
        if self.target_length == 0 || self.target_length > graph.node_count() {
            return Err(Error::Validation(format!(
                "target_length {} must lie in [1, {}]",
                self.target_length,
                graph.node_count()
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::Validation("max_attempts must be positive".into()));
        }
        Ok(())
    }

    /// Runs one simulation of the configured mechanism, stopping once
    /// `limit` nodes are infected. The first `limit` nodes are identical to
    /// those of an unlimited run on the same random stream.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        graph: &Graph,
        source: NodeId,
        limit: usize,
        rng: &mut R,
    ) -> Cascade {
        match self.mechanism {
            Mechanism::Ic => ic_run(graph, self.ic_prob, source, limit, rng),
            Mechanism::Si => si_run(graph, self.si_rate, source, limit, rng).0,
            Mechanism::Lt => lt_run(graph, self.lt_threshold_dist, source, limit, rng).0,
        }
    }
}

fn check_source(graph: &Graph, source: NodeId) {
    assert!(
        source < graph.node_count(),
        "source {source} outside graph of {} nodes",
        graph.node_count()
    );
}

/// Synchronous-round independent cascade. Each newly infected node gets one
/// chance per uninfected neighbour; nodes infected in the same round are
/// appended in random order.
pub fn simulate_ic<R: Rng + ?Sized>(
    graph: &Graph,
    ic_prob: f64,
    source: NodeId,
    rng: &mut R,
) -> Cascade {
    ic_run(graph, ic_prob, source, usize::MAX, rng)
}

fn ic_run<R: Rng + ?Sized>(
    graph: &Graph,
    ic_prob: f64,
    source: NodeId,
    limit: usize,
    rng: &mut R,
) -> Cascade {
    check_source(graph, source);
    let p = ic_prob.clamp(0.0, 1.0);
    let mut infected = vec![false; graph.node_count()];
    infected[source] = true;
    let mut order = vec![source];
    let mut frontier = vec![source];
    while !frontier.is_empty() && order.len() < limit {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in graph.neighbors(u) {
                if !infected[v] && rng.random_bool(p) {
                    infected[v] = true;
                    next.push(v);
                }
            }
        }
        next.shuffle(rng);
        order.extend_from_slice(&next);
        frontier = next;
    }
    order.truncate(limit.max(1));
    Cascade::from_unique(order)
}

/// Gillespie SI: a susceptible node with `k` infected neighbours is infected
/// at rate `si_rate·k`. Runs until no susceptible node is at risk.
pub fn simulate_si_gillespie<R: Rng + ?Sized>(
    graph: &Graph,
    si_rate: f64,
    source: NodeId,
    rng: &mut R,
) -> Cascade {
    si_run(graph, si_rate, source, usize::MAX, rng).0
}

/// As [`simulate_si_gillespie`], also returning each node's infection time
/// (the source at time 0).
pub fn simulate_si_gillespie_timed<R: Rng + ?Sized>(
    graph: &Graph,
    si_rate: f64,
    source: NodeId,
    rng: &mut R,
) -> (Cascade, Vec<f64>) {
    si_run(graph, si_rate, source, usize::MAX, rng)
}

/// Nodes with positive event weight, kept in a dense list for O(1) removal.
struct AtRisk {
    nodes: Vec<NodeId>,
    slot: Vec<Option<usize>>,
}

impl AtRisk {
    fn new(n: usize) -> Self {
        Self {
            nodes: Vec::new(),
            slot: vec![None; n],
        }
    }

    fn insert(&mut self, v: NodeId) {
        if self.slot[v].is_none() {
            self.slot[v] = Some(self.nodes.len());
            self.nodes.push(v);
        }
    }

    fn remove(&mut self, v: NodeId) {
        if let Some(i) = self.slot[v].take() {
            self.nodes.swap_remove(i);
            if i < self.nodes.len() {
                self.slot[self.nodes[i]] = Some(i);
            }
        }
    }
}

fn si_run<R: Rng + ?Sized>(
    graph: &Graph,
    si_rate: f64,
    source: NodeId,
    limit: usize,
    rng: &mut R,
) -> (Cascade, Vec<f64>) {
    check_source(graph, source);
    assert!(si_rate > 0.0, "si_rate must be positive");
    let n = graph.node_count();
    let mut infected = vec![false; n];
    let mut pressure = vec![0u64; n];
    let mut at_risk = AtRisk::new(n);
    let mut total: u64 = 0;
    let mut order = Vec::new();
    let mut times = Vec::new();
    let mut t = 0.0;

    let mut infect = |v: NodeId,
                      t: f64,
                      infected: &mut Vec<bool>,
                      pressure: &mut Vec<u64>,
                      at_risk: &mut AtRisk,
                      total: &mut u64| {
        infected[v] = true;
        *total -= pressure[v];
        pressure[v] = 0;
        at_risk.remove(v);
        order.push(v);
        times.push(t);
        for &w in graph.neighbors(v) {
            if !infected[w] {
                pressure[w] += 1;
                *total += 1;
                at_risk.insert(w);
            }
        }
    };

    infect(
        source,
        t,
        &mut infected,
        &mut pressure,
        &mut at_risk,
        &mut total,
    );
    let mut count = 1;
    while total > 0 && count < limit {
        let rate = si_rate * total as f64;
        t += Exp::new(rate).expect("positive rate").sample(rng);
        let mut r = rng.random_range(0..total);
        let mut chosen = None;
        for &v in &at_risk.nodes {
            if r < pressure[v] {
                chosen = Some(v);
                break;
            }
            r -= pressure[v];
        }
        let v = chosen.expect("event selection within total rate");
        infect(v, t, &mut infected, &mut pressure, &mut at_risk, &mut total);
        count += 1;
    }
    (Cascade::from_unique(order), times)
}

/// Gillespie linear threshold. Node thresholds are drawn up front; an
/// inactive node with at least one active neighbour becomes eligible once
/// its active-neighbour fraction reaches its threshold. Each eligible node
/// fires at unit rate.
pub fn simulate_lt_gillespie<R: Rng + ?Sized>(
    graph: &Graph,
    threshold_dist: ThresholdDist,
    source: NodeId,
    rng: &mut R,
) -> Cascade {
    lt_run(graph, threshold_dist, source, usize::MAX, rng).0
}

pub fn simulate_lt_gillespie_timed<R: Rng + ?Sized>(
    graph: &Graph,
    threshold_dist: ThresholdDist,
    source: NodeId,
    rng: &mut R,
) -> (Cascade, Vec<f64>) {
    lt_run(graph, threshold_dist, source, usize::MAX, rng)
}

fn lt_run<R: Rng + ?Sized>(
    graph: &Graph,
    threshold_dist: ThresholdDist,
    source: NodeId,
    limit: usize,
    rng: &mut R,
) -> (Cascade, Vec<f64>) {
    check_source(graph, source);
    let n = graph.node_count();
    let thresholds: Vec<f64> = (0..n).map(|_| threshold_dist.draw(rng)).collect();
    let mut active = vec![false; n];
    let mut active_neighbors = vec![0usize; n];
    let mut eligible = AtRisk::new(n);
    let mut order = Vec::new();
    let mut times = Vec::new();
    let mut t = 0.0;

    let mut activate = |v: NodeId,
                        t: f64,
                        active: &mut Vec<bool>,
                        active_neighbors: &mut Vec<usize>,
                        eligible: &mut AtRisk| {
        active[v] = true;
        eligible.remove(v);
        order.push(v);
        times.push(t);
        for &w in graph.neighbors(v) {
            if active[w] {
                continue;
            }
            active_neighbors[w] += 1;
            let fraction = active_neighbors[w] as f64 / graph.degree(w) as f64;
            if fraction >= thresholds[w] {
                eligible.insert(w);
            }
        }
    };

    activate(source, t, &mut active, &mut active_neighbors, &mut eligible);
    let mut count = 1;
    while !eligible.nodes.is_empty() && count < limit {
        let k = eligible.nodes.len();
        t += Exp::new(k as f64).expect("positive rate").sample(rng);
        let v = eligible.nodes[rng.random_range(0..k)];
        activate(v, t, &mut active, &mut active_neighbors, &mut eligible);
        count += 1;
    }
    (Cascade::from_unique(order), times)
}

/// Draws `m` cascades of exactly `config.target_length` nodes. Each cascade
/// slot `k` owns the random stream `(seed, k)`: it repeatedly picks a uniform
/// source and simulates, accepting the first run that reaches the target
/// length (truncated to it) and rejecting shorter runs.
pub fn generate_cascade_set(
    graph: &Graph,
    config: &SimConfig,
    m: usize,
    seed: u64,
) -> Result<CascadeSet> {
    config.validate(graph)?;
    if m == 0 {
        return Err(Error::Validation("cascade count m must be positive".into()));
    }
    let target = config.target_length;
    let slots: Vec<(Option<Cascade>, usize)> = (0..m)
        .into_par_iter()
        .map(|k| {
            let mut rng = derived_rng(seed, &[k as u64]);
            for attempt in 1..=config.max_attempts {
                let source = rng.random_range(0..graph.node_count());
                let c = config.simulate(graph, source, target, &mut rng);
                if c.len() >= target {
                    return (Some(c.truncated(target)), attempt);
                }
            }
            (None, config.max_attempts)
        })
        .collect();
    let attempts: usize = slots.iter().map(|s| s.1).sum();
    let accepted: Vec<Cascade> = slots.into_iter().filter_map(|s| s.0).collect();
    if accepted.len() < m {
        return Err(Error::GenerationFailure {
            accepted: accepted.len(),
            required: m,
            attempts,
            rate: accepted.len() as f64 / attempts as f64,
        });
    }
    CascadeSet::new(accepted, graph.node_count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_er, GraphSpec};
    use crate::rng::rng_from;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v)));
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn ic_certain_transmission_covers_component() {
        let mut edges = vec![(0, 1), (1, 2), (2, 3), (1, 4)];
        edges.push((5, 6));
        let g = Graph::from_edges(7, edges).unwrap();
        for seed in 0..20 {
            let c = simulate_ic(&g, 1.0, 2, &mut rng_from(seed));
            let mut got = c.nodes().to_vec();
            got.sort_unstable();
            assert_eq!(got, g.component_of(2));
            assert_eq!(c.source(), 2);
        }
    }

    #[test]
    fn ic_zero_probability() {
        let g = complete(6);
        assert_eq!(simulate_ic(&g, 0.0, 3, &mut rng_from(1)).nodes(), &[3]);
    }

    #[test]
    fn ic_rounds_are_ordered() {
        // Star centre 0 with leaves 1..=3, leaf 1 has a pendant 4.
        let g = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (1, 4)]).unwrap();
        for seed in 0..50 {
            let c = simulate_ic(&g, 1.0, 0, &mut rng_from(seed));
            assert_eq!(c.nodes()[4], 4, "pendant must come in the second round");
        }
    }

    #[test]
    fn isolated_sources() {
        let g = Graph::empty(3);
        assert_eq!(
            simulate_si_gillespie(&g, 1.0, 1, &mut rng_from(0)).nodes(),
            &[1]
        );
        assert_eq!(
            simulate_lt_gillespie(&g, ThresholdDist::Uniform01, 1, &mut rng_from(0)).nodes(),
            &[1]
        );
    }

    #[test]
    fn si_complete_graph_always_full() {
        let g = complete(5);
        for seed in 0..100 {
            let (c, times) = simulate_si_gillespie_timed(&g, 2.0, 0, &mut rng_from(seed));
            assert_eq!(c.len(), 5);
            assert!(times.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn lt_fixed_half_on_path() {
        for seed in 0..50 {
            let c =
                simulate_lt_gillespie(&path3(), ThresholdDist::Fixed(0.5), 0, &mut rng_from(seed));
            assert_eq!(c.nodes(), &[0, 1, 2]);
        }
    }

    #[test]
    fn lt_unreachable_threshold() {
        let g = complete(6);
        let c = simulate_lt_gillespie(&g, ThresholdDist::Fixed(1.5), 0, &mut rng_from(3));
        assert_eq!(c.nodes(), &[0]);
    }

    #[test]
    fn limited_runs_are_prefixes() {
        let g = gen_er(&GraphSpec::er(300, 6.0, 9)).unwrap();
        for mech in [Mechanism::Ic, Mechanism::Si, Mechanism::Lt] {
            let cfg = SimConfig::new(mech, 10);
            for seed in 0..20 {
                let full = cfg.simulate(&g, 5, usize::MAX, &mut rng_from(seed));
                let cut = cfg.simulate(&g, 5, 10, &mut rng_from(seed));
                assert!(cut.len() <= 10);
                assert_eq!(cut.nodes(), &full.nodes()[..cut.len()], "{mech}");
            }
        }
    }

    #[test]
    fn cascade_set_lengths_and_determinism() {
        let g = gen_er(&GraphSpec::er(200, 6.0, 1)).unwrap();
        for mech in [Mechanism::Ic, Mechanism::Si, Mechanism::Lt] {
            let cfg = SimConfig::new(mech, 8);
            let a = generate_cascade_set(&g, &cfg, 50, 11).unwrap();
            assert_eq!(a.len(), 50);
            assert!(a.iter().all(|c| c.len() == 8));
            assert_eq!(a, generate_cascade_set(&g, &cfg, 50, 11).unwrap());
        }
    }

    #[test]
    fn cascade_set_generation_failure() {
        let g = gen_er(&GraphSpec::er(100, 6.0, 1)).unwrap();
        let mut cfg = SimConfig::new(Mechanism::Ic, 5);
        cfg.ic_prob = 0.0;
        match generate_cascade_set(&g, &cfg, 50, 0) {
            Err(Error::GenerationFailure { accepted, rate, .. }) => {
                assert_eq!(accepted, 0);
                assert_eq!(rate, 0.0);
            }
            other => panic!("expected generation failure, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let g = complete(5);
        let mut cfg = SimConfig::new(Mechanism::Ic, 6);
        assert!(cfg.validate(&g).is_err());
        cfg.target_length = 3;
        cfg.ic_prob = 1.5;
        assert!(cfg.validate(&g).is_err());
        cfg.ic_prob = 0.3;
        cfg.si_rate = 0.0;
        assert!(cfg.validate(&g).is_err());
    }
}
