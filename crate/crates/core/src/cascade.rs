//! Cascades: ordered, duplicate-free recipient sequences whose first element
//! is the diffusion source.

use std::collections::HashSet;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cascade {
    nodes: Vec<NodeId>,
}

impl Cascade {
    /// Validates non-emptiness and uniqueness.
    pub fn new(nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Validation("empty cascade".into()));
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        for &v in &nodes {
            if !seen.insert(v) {
                return Err(Error::Validation(format!("node {v} repeated in cascade")));
            }
        }
        Ok(Self { nodes })
    }

    /// Caller guarantees the invariants (used by the simulators).
    pub(crate) fn from_unique(nodes: Vec<NodeId>) -> Self {
        debug_assert!(!nodes.is_empty());
        Self { nodes }
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Recipients after the source.
    pub fn recipients(&self) -> &[NodeId] {
        &self.nodes[1..]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self {
            nodes: self.nodes[..len.min(self.nodes.len()).max(1)].to_vec(),
        }
    }

    pub fn into_nodes(self) -> Vec<NodeId> {
        self.nodes
    }
}

/// The set `C` of `m` cascades over a universe of `universe_size` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeSet {
    cascades: Vec<Cascade>,
    universe_size: usize,
}

impl CascadeSet {
    pub fn new(cascades: Vec<Cascade>, universe_size: usize) -> Result<Self> {
        if cascades.is_empty() {
            return Err(Error::Validation("cascade set is empty".into()));
        }
        if let Some(bad) = cascades
            .iter()
            .flat_map(|c| c.nodes())
            .find(|&&v| v >= universe_size)
        {
            return Err(Error::Validation(format!(
                "node {bad} outside universe of size {universe_size}"
            )));
        }
        Ok(Self {
            cascades,
            universe_size,
        })
    }

    pub fn cascades(&self) -> &[Cascade] {
        &self.cascades
    }

    pub fn len(&self) -> usize {
        self.cascades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cascades.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cascade> {
        self.cascades.iter()
    }

    pub fn into_cascades(self) -> Vec<Cascade> {
        self.cascades
    }
}

impl<'a> IntoIterator for &'a CascadeSet {
    type Item = &'a Cascade;
    type IntoIter = std::slice::Iter<'a, Cascade>;

    fn into_iter(self) -> Self::IntoIter {
        self.cascades.iter()
    }
}
