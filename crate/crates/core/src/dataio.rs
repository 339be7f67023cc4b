//! File formats and empirical-data preparation.
//!
//! - Cascade files: one cascade per line, whitespace-separated node ids, the
//!   first id being the source. `#` lines and blank lines are skipped. A
//!   token may carry a timestamp as `id,time`; the timestamp is discarded.
//! - Edge lists: a `# nodes=N` header, then one `u v` pair per line.
//! - External rankings: one line per test cascade, `source: r1 r2 r3 …`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::Rng;

use crate::cascade::{Cascade, CascadeSet, NodeId};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::PredictedRanking;

/// Bijection between external string ids and dense internal ids, in
/// first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIdMap {
    external: Vec<String>,
    internal: HashMap<String, NodeId>,
}

impl NodeIdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Identity map over `0..n`, labelled by decimal ids.
    pub fn identity(n: usize) -> Self {
        let mut map = Self::new();
        for v in 0..n {
            map.intern(&v.to_string());
        }
        map
    }

    pub fn intern(&mut self, ext: &str) -> NodeId {
        if let Some(&id) = self.internal.get(ext) {
            return id;
        }
        let id = self.external.len();
        self.external.push(ext.to_string());
        self.internal.insert(ext.to_string(), id);
        id
    }

    /// Rebuilds a map from labels listed in internal-id order.
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut map = Self::new();
        for (i, l) in labels.into_iter().enumerate() {
            if map.intern(l.as_ref()) != i {
                return Err(Error::Validation(format!(
                    "label '{}' listed twice",
                    l.as_ref()
                )));
            }
        }
        Ok(map)
    }

    pub fn labels(&self) -> &[String] {
        &self.external
    }

    pub fn get(&self, ext: &str) -> Option<NodeId> {
        self.internal.get(ext).copied()
    }

    pub fn external(&self, id: NodeId) -> Option<&str> {
        self.external.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses cascade text, interning ids into `map`.
pub fn parse_cascades(text: &str, origin: &str, map: &mut NodeIdMap) -> Result<Vec<Cascade>> {
    let mut cascades = Vec::new();
    for (lineno, line) in content_lines(text) {
        let mut nodes = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for token in line.split_whitespace() {
            let id = token.split(',').next().unwrap_or(token);
            if id.is_empty() {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("empty node id in '{token}'"),
                ));
            }
            if !seen.insert(id) {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("node '{id}' repeated in cascade"),
                ));
            }
            nodes.push(map.intern(id));
        }
        cascades.push(Cascade::new(nodes)?);
    }
    Ok(cascades)
}

pub fn load_cascades(path: impl AsRef<Path>) -> Result<(CascadeSet, NodeIdMap)> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut map = NodeIdMap::new();
    let cascades = parse_cascades(&text, &path.display().to_string(), &mut map)?;
    if cascades.is_empty() {
        return Err(Error::parse(path.display(), 0, "no cascades in file"));
    }
    let set = CascadeSet::new(cascades, map.len())?;
    Ok((set, map))
}

/// Loads cascades whose ids are resolved through (and added to) an existing
/// map, e.g. test data labelled like a training set.
pub fn load_cascades_into(path: impl AsRef<Path>, map: &mut NodeIdMap) -> Result<Vec<Cascade>> {
    let path = path.as_ref();
    let cascades = parse_cascades(&read(path)?, &path.display().to_string(), map)?;
    if cascades.is_empty() {
        return Err(Error::parse(path.display(), 0, "no cascades in file"));
    }
    Ok(cascades)
}

/// Cascade file text; ids are written through `map` when given.
pub fn format_cascades(cs: &CascadeSet, map: Option<&NodeIdMap>) -> String {
    let mut out = String::new();
    for c in cs {
        let line: Vec<String> = c
            .nodes()
            .iter()
            .map(|&v| match map.and_then(|m| m.external(v)) {
                Some(ext) => ext.to_string(),
                None => v.to_string(),
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_cascades(
    path: impl AsRef<Path>,
    cs: &CascadeSet,
    map: Option<&NodeIdMap>,
) -> Result<()> {
    write(path.as_ref(), &format_cascades(cs, map))
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("# nodes={}\n", g.node_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn write_edge_list(path: impl AsRef<Path>, g: &Graph) -> Result<()> {
    write(path.as_ref(), &format_edge_list(g))
}

pub fn parse_edge_list(text: &str, origin: &str) -> Result<Graph> {
    let mut nodes = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(n) = rest.trim().strip_prefix("nodes=") {
                let n = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::parse(origin, lineno, format!("bad node count: {e}")))?;
                nodes = Some(n);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let ids: Vec<&str> = line.split_whitespace().collect();
        if ids.len() != 2 {
            return Err(Error::parse(origin, lineno, "expected 'u v'"));
        }
        let parse = |s: &str| {
            s.parse::<NodeId>()
                .map_err(|e| Error::parse(origin, lineno, format!("bad node id '{s}': {e}")))
        };
        edges.push((parse(ids[0])?, parse(ids[1])?));
    }
    let n = nodes.ok_or_else(|| Error::parse(origin, 1, "missing '# nodes=N' header"))?;
    Graph::from_edges(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    parse_edge_list(&read(path)?, &path.display().to_string())
}

/// Keeps the source and a uniform random `(len - 1)`-subset of the other
/// nodes, preserving their relative order.
pub fn subsample_cascade<R: Rng + ?Sized>(c: &Cascade, len: usize, rng: &mut R) -> Result<Cascade> {
    if len < 2 {
        return Err(Error::Validation(format!(
            "subsample length must be at least 2, got {len}"
        )));
    }
    if c.len() < len {
        return Err(Error::Validation(format!(
            "cascade of length {} is shorter than {len}",
            c.len()
        )));
    }
    let mut picks = index::sample(rng, c.len() - 1, len - 1).into_vec();
    picks.sort_unstable();
    let mut nodes = Vec::with_capacity(len);
    nodes.push(c.source());
    nodes.extend(picks.into_iter().map(|i| c.recipients()[i]));
    Ok(Cascade::from_unique(nodes))
}

/// Distinct nodes appearing anywhere in the set.
pub fn propagation_subgraph_size(cs: &CascadeSet) -> usize {
    let mut seen = vec![false; cs.universe_size()];
    let mut count = 0;
    for &v in cs.iter().flat_map(|c| c.nodes()) {
        if !seen[v] {
            seen[v] = true;
            count += 1;
        }
    }
    count
}

/// Relabels the set onto `0..k` for the `k` nodes it actually uses, in
/// first-seen order. Returns the compacted set and the map from the new ids
/// to the original external labels.
pub fn compact(cs: &CascadeSet, labels: &NodeIdMap) -> Result<(CascadeSet, NodeIdMap)> {
    let mut map = NodeIdMap::new();
    let cascades = cs
        .iter()
        .map(|c| {
            let nodes = c
                .nodes()
                .iter()
                .map(|&v| {
                    let ext = labels
                        .external(v)
                        .map(str::to_string)
                        .unwrap_or_else(|| v.to_string());
                    map.intern(&ext)
                })
                .collect();
            Cascade::from_unique(nodes)
        })
        .collect();
    let set = CascadeSet::new(cascades, map.len())?;
    Ok((set, map))
}

pub fn parse_predictions(
    text: &str,
    origin: &str,
    map: &NodeIdMap,
) -> Result<Vec<PredictedRanking>> {
    let lookup = |id: &str, lineno: usize| {
        map.get(id)
            .ok_or_else(|| Error::parse(origin, lineno, format!("unknown node id '{id}'")))
    };
    let mut out = Vec::new();
    for (lineno, line) in content_lines(text) {
        let (src, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(origin, lineno, "expected 'source: r1 r2 ...'"))?;
        let source = lookup(src.trim(), lineno)?;
        let ranking = rest
            .split_whitespace()
            .map(|id| lookup(id, lineno))
            .collect::<Result<Vec<_>>>()?;
        let ranking = PredictedRanking::new(source, ranking)
            .map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        out.push(ranking);
    }
    Ok(out)
}

pub fn load_external_predictions(
    path: impl AsRef<Path>,
    map: &NodeIdMap,
) -> Result<Vec<PredictedRanking>> {
    let path = path.as_ref();
    parse_predictions(&read(path)?, &path.display().to_string(), map)
}

pub fn format_predictions(preds: &[PredictedRanking], map: &NodeIdMap) -> String {
    let label = |v: NodeId| {
        map.external(v)
            .map(str::to_string)
            .unwrap_or_else(|| v.to_string())
    };
    let mut out = String::new();
    for p in preds {
        let ranked: Vec<String> = p.ranking().iter().map(|&v| label(v)).collect();
        let _ = writeln!(out, "{}: {}", label(p.source()), ranked.join(" "));
    }
    out
}

pub fn write_predictions(
    path: impl AsRef<Path>,
    preds: &[PredictedRanking],
    map: &NodeIdMap,
) -> Result<()> {
    write(path.as_ref(), &format_predictions(preds, map))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    write(path, text)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    read(path)
}
