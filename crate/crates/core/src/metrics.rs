//! Ranking accuracy: average precision per cascade, MAP over a test set, and
//! the size-rescaled SMAP = MAP·N/L.
//!
//! The source of a cascade is given to the predictor, so it is excluded from
//! both the evaluated truth set and the ranking. Truth nodes missing from the
//! ranking contribute zero precision.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, NodeId};
use crate::error::{Error, Result};

/// Ordered candidate list `ĉ` for one source, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedRanking {
    source: NodeId,
    ranking: Vec<NodeId>,
}

impl PredictedRanking {
    pub fn new(source: NodeId, ranking: Vec<NodeId>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(ranking.len());
        for &v in &ranking {
            if v == source {
                return Err(Error::Validation(format!(
                    "ranking for source {source} contains the source"
                )));
            }
            if !seen.insert(v) {
                return Err(Error::Validation(format!(
                    "ranking for source {source} repeats node {v}"
                )));
            }
        }
        Ok(Self { source, ranking })
    }

    pub(crate) fn from_unique(source: NodeId, ranking: Vec<NodeId>) -> Self {
        Self { source, ranking }
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn ranking(&self) -> &[NodeId] {
        &self.ranking
    }

    pub fn truncated(&self, k: usize) -> Self {
        Self {
            source: self.source,
            ranking: self.ranking[..k.min(self.ranking.len())].to_vec(),
        }
    }
}

/// `AP_c = (1/|c|) Σ_{v∈c} |top_k(ĉ) ∩ c| / k` with `k` the rank of `v` in
/// `ĉ`, over the truth nodes after the source.
pub fn average_precision(truth: &Cascade, pred: &PredictedRanking) -> Result<f64> {
    let evaluated: HashSet<NodeId> = truth.recipients().iter().copied().collect();
    if evaluated.is_empty() {
        return Err(Error::Domain(format!(
            "cascade from source {} has no recipients to evaluate",
            truth.source()
        )));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, v) in pred.ranking().iter().enumerate() {
        if evaluated.contains(v) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
            if hits == evaluated.len() {
                break;
            }
        }
    }
    Ok(sum / evaluated.len() as f64)
}

/// Per-cascade AP values; `k` truncates each ranking to its top-k first.
pub fn per_cascade_ap(
    truths: &[Cascade],
    preds: &[PredictedRanking],
    k: Option<usize>,
) -> Result<Vec<f64>> {
    if truths.is_empty() {
        return Err(Error::Validation("no cascades to evaluate".into()));
    }
    if truths.len() != preds.len() {
        return Err(Error::Validation(format!(
            "{} truth cascades but {} predictions",
            truths.len(),
            preds.len()
        )));
    }
    if k == Some(0) {
        return Err(Error::Validation("k must be positive".into()));
    }
    truths
        .iter()
        .zip(preds)
        .enumerate()
        .map(|(i, (t, p))| {
            if t.source() != p.source() {
                return Err(Error::Validation(format!(
                    "cascade {i}: truth source {} but prediction source {}",
                    t.source(),
                    p.source()
                )));
            }
            match k {
                Some(k) => average_precision(t, &p.truncated(k)),
                None => average_precision(t, p),
            }
        })
        .collect()
}

pub fn mean_average_precision(
    truths: &[Cascade],
    preds: &[PredictedRanking],
    k: Option<usize>,
) -> Result<f64> {
    let aps = per_cascade_ap(truths, preds, k)?;
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// `MAP · N / L`.
pub fn smap(map_value: f64, network_size: usize, target_length: usize) -> Result<f64> {
    if network_size == 0 || target_length == 0 {
        return Err(Error::Domain(format!(
            "network size ({network_size}) and target length ({target_length}) must be positive"
        )));
    }
    if target_length > network_size {
        return Err(Error::Domain(format!(
            "target length {target_length} exceeds network size {network_size}"
        )));
    }
    Ok(map_value * network_size as f64 / target_length as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_cascade_ap: Vec<f64>,
    pub map_value: f64,
    pub smap_value: f64,
    pub network_size: usize,
    pub target_length: usize,
}

impl EvalResult {
    pub fn evaluate(
        truths: &[Cascade],
        preds: &[PredictedRanking],
        k: Option<usize>,
        network_size: usize,
        target_length: usize,
    ) -> Result<Self> {
        let per_cascade_ap = per_cascade_ap(truths, preds, k)?;
        let map_value = per_cascade_ap.iter().sum::<f64>() / per_cascade_ap.len() as f64;
        Ok(Self {
            smap_value: smap(map_value, network_size, target_length)?,
            per_cascade_ap,
            map_value,
            network_size,
            target_length,
        })
    }
}
