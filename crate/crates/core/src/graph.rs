//! Undirected simple graphs and the two random generators used for synthetic
//! spreading substrates.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cascade::NodeId;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Simple undirected graph on dense ids `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Graph {
    pub fn empty(node_count: usize) -> Self {
        Self {
            node_count,
            adjacency: vec![Vec::new(); node_count],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicates
    /// (in either orientation) and out-of-range ids.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adjacency = vec![Vec::new(); node_count];
        let mut seen = HashSet::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop on node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Validation(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            adjacency,
            edge_count: seen.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Nodes reachable from `source`, including itself.
    pub fn component_of(&self, source: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![source];
        seen[source] = true;
        let mut out = Vec::new();
        while let Some(u) = stack.pop() {
            out.push(u);
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Er,
    BaStatic,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Er => "er",
            Topology::BaStatic => "ba_static",
        }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_weight_exponent() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub topology: Topology,
    pub node_count: usize,
    pub avg_degree: f64,
    /// Static-model weight exponent α; `0.5` targets a degree exponent of 3.
    #[serde(default = "default_weight_exponent")]
    pub weight_exponent: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GraphSpec {
    pub fn er(node_count: usize, avg_degree: f64, seed: u64) -> Self {
        Self {
            topology: Topology::Er,
            node_count,
            avg_degree,
            weight_exponent: default_weight_exponent(),
            seed,
        }
    }

    pub fn ba_static(node_count: usize, avg_degree: f64, weight_exponent: f64, seed: u64) -> Self {
        Self {
            topology: Topology::BaStatic,
            node_count,
            avg_degree,
            weight_exponent,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::Validation(format!(
                "node_count must be at least 2, got {}",
                self.node_count
            )));
        }
        if !(self.avg_degree.is_finite() && self.avg_degree > 0.0) {
            return Err(Error::Validation(format!(
                "avg_degree must be positive, got {}",
                self.avg_degree
            )));
        }
        if self.topology == Topology::BaStatic {
            let pairs = pair_count(self.node_count);
            let target = self.target_edges();
            if target > pairs {
                return Err(Error::Validation(format!(
                    "requested {target} edges but only {pairs} node pairs exist"
                )));
            }
            if !(self.weight_exponent.is_finite() && self.weight_exponent >= 0.0) {
                return Err(Error::Validation(format!(
                    "weight_exponent must be >= 0, got {}",
                    self.weight_exponent
                )));
            }
        }
        if self.avg_degree > (self.node_count - 1) as f64 {
            return Err(Error::Validation(format!(
                "avg_degree {} exceeds node_count - 1 = {}",
                self.avg_degree,
                self.node_count - 1
            )));
        }
        Ok(())
    }

    /// ⌊N·⟨k⟩/2⌋, the exact edge count of a static-model graph.
    pub fn target_edges(&self) -> usize {
        (self.node_count as f64 * self.avg_degree / 2.0).floor() as usize
    }

    pub fn generate(&self) -> Result<Graph> {
        match self.topology {
            Topology::Er => gen_er(self),
            Topology::BaStatic => gen_ba_static(self),
        }
    }
}

fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// G(N, p) with `p = avg_degree / (N - 1)`.
pub fn gen_er(spec: &GraphSpec) -> Result<Graph> {
    if spec.topology != Topology::Er {
        return Err(Error::Validation("gen_er called with a non-ER spec".into()));
    }
    spec.validate()?;
    let n = spec.node_count;
    let p = (spec.avg_degree / (n - 1) as f64).clamp(0.0, 1.0);
    let mut rng = rng_from(spec.seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Static scale-free model: node `i` carries weight `(i + 1)^(-α)` and node
/// pairs are drawn with probability proportional to `w_i·w_j` until the
/// target edge count is reached.
pub fn gen_ba_static(spec: &GraphSpec) -> Result<Graph> {
    if spec.topology != Topology::BaStatic {
        return Err(Error::Validation(
            "gen_ba_static called with a non-static-model spec".into(),
        ));
    }
    spec.validate()?;
    let n = spec.node_count;
    let target = spec.target_edges();
    let weights: Vec<f64> = (0..n)
        .map(|i| ((i + 1) as f64).powf(-spec.weight_exponent))
        .collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Validation(format!("invalid node weights: {e}")))?;
    let mut rng = rng_from(spec.seed);
    let max_draws = target.saturating_mul(1000);
    let mut seen = HashSet::with_capacity(target);
    let mut edges = Vec::with_capacity(target);
    let mut draws = 0usize;
    while edges.len() < target {
        if draws >= max_draws {
            return Err(Error::Convergence(format!(
                "reached {} of {target} edges after {draws} draws",
                edges.len()
            )));
        }
        draws += 1;
        let u = dist.sample(&mut rng);
        let v = dist.sample(&mut rng);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    Graph::from_edges(n, edges)
}
