//! Heat-diffusion-kernel embedding predictors.
//!
//! All three models score a candidate `v` for source `s` by the heat kernel
//! `(4πt)^(-d/2)·exp(-‖x_s - y_v‖² / 4t)` between a source-side vector `x_s`
//! and a target-side vector `y_v`. Because the kernel is strictly decreasing
//! in the squared distance, rankings use `-‖x_s - y_v‖²` directly.
//!
//! | variant | source side      | target side                          |
//! |---------|------------------|--------------------------------------|
//! | CDK     | `z_s`            | `z_v` (one shared space)             |
//! | PAE     | influence `a_s`  | susceptibility `b_v`                 |
//! | IAE     | influence `a_s`  | per-source susceptibility `b_v^(s)`  |
//!
//! Training is SGD on the margin ranking loss
//! `max(0, margin - score(s, v_i) + score(s, v_j))` over pairs where `v_i`
//! was infected before `v_j`, or `v_j` was never infected.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeSet, NodeId};
use crate::error::{Error, Result};
use crate::metrics::PredictedRanking;
use crate::rng::{derive_seed, derived_rng, rng_from};

const STREAM_CDK: u64 = 0;
const STREAM_INFLUENCE: u64 = 1;
const STREAM_SUSCEPTIBILITY: u64 = 2;
const STREAM_PER_SOURCE: u64 = 3;
const STREAM_TRAIN: u64 = 4;
const STREAM_RANDOM: u64 = 5;

/// Probability that a training pair contrasts two infected nodes rather than
/// an infected node and an uninfected one.
const LATER_INFECTED_SHARE: f64 = 0.5;

pub const MODEL_FORMAT: &str = "pccurve-embedding-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Cdk,
    Pae,
    Iae,
    External,
    Random,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Cdk => "cdk",
            Variant::Pae => "pae",
            Variant::Iae => "iae",
            Variant::External => "external",
            Variant::Random => "random",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cdk" => Ok(Variant::Cdk),
            "pae" => Ok(Variant::Pae),
            "iae" => Ok(Variant::Iae),
            "external" => Ok(Variant::External),
            "random" => Ok(Variant::Random),
            other => Err(Error::Validation(format!(
                "unknown model variant '{other}'"
            ))),
        }
    }
}

fn d_latent() -> usize {
    10
}
fn d_margin() -> f64 {
    1.0
}
fn d_lr() -> f64 {
    0.01
}
fn d_epochs() -> usize {
    50
}
fn d_negatives() -> usize {
    1
}
fn d_kernel_time() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub variant: Variant,
    #[serde(default = "d_latent")]
    pub latent_dim: usize,
    #[serde(default = "d_margin")]
    pub margin: f64,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    /// Defaults to five times the cascade length.
    #[serde(default)]
    pub pairs_per_cascade: Option<usize>,
    #[serde(default = "d_negatives")]
    pub negatives_per_pair: usize,
    #[serde(default = "d_kernel_time")]
    pub kernel_time: f64,
    #[serde(default)]
    pub seed: u64,
    /// Label written to result files; defaults to the variant name.
    #[serde(default)]
    pub label: Option<String>,
    /// Rankings file for the external variant.
    #[serde(default)]
    pub predictions_path: Option<std::path::PathBuf>,
}

impl PredictorSpec {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            latent_dim: d_latent(),
            margin: d_margin(),
            learning_rate: d_lr(),
            epochs: d_epochs(),
            pairs_per_cascade: None,
            negatives_per_pair: d_negatives(),
            kernel_time: d_kernel_time(),
            seed: 0,
            label: None,
            predictions_path: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.variant.as_str().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.latent_dim == 0
            || !positive(self.margin)
            || !positive(self.learning_rate)
            || !positive(self.kernel_time)
            || self.negatives_per_pair == 0
            || self.pairs_per_cascade == Some(0)
        {
            return Err(Error::Validation(format!(
                "predictor hyperparameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// `(4πt)^(-d/2) · exp(-sq_dist / 4t)`.
pub fn heat_kernel(t: f64, d: usize, sq_dist: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!(
            "kernel time must be positive, got {t}"
        )));
    }
    if sq_dist < 0.0 {
        return Err(Error::Domain(format!(
            "negative squared distance {sq_dist}"
        )));
    }
    Ok((4.0 * std::f64::consts::PI * t).powf(-(d as f64) / 2.0) * (-sq_dist / (4.0 * t)).exp())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Margin ranking loss for one (source, earlier, later) triple, given the
/// source-side vector and the two target-side vectors.
pub fn hinge_loss(src: &[f64], earlier: &[f64], later: &[f64], margin: f64) -> f64 {
    (margin + sq_dist(src, earlier) - sq_dist(src, later)).max(0.0)
}

/// Gradients of [`hinge_loss`] with respect to `(src, earlier, later)`, or
/// `None` where the loss is inactive.
pub fn hinge_grad(
    src: &[f64],
    earlier: &[f64],
    later: &[f64],
    margin: f64,
) -> Option<[Vec<f64>; 3]> {
    if margin + sq_dist(src, earlier) - sq_dist(src, later) <= 0.0 {
        return None;
    }
    let g_src = earlier
        .iter()
        .zip(later)
        .map(|(e, l)| 2.0 * (l - e))
        .collect();
    let g_earlier = src
        .iter()
        .zip(earlier)
        .map(|(s, e)| -2.0 * (s - e))
        .collect();
    let g_later = src.iter().zip(later).map(|(s, l)| 2.0 * (s - l)).collect();
    Some([g_src, g_earlier, g_later])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Params {
    Cdk {
        z: Vec<f64>,
    },
    Pae {
        influence: Vec<f64>,
        susceptibility: Vec<f64>,
    },
    Iae {
        influence: Vec<f64>,
        /// Susceptibility block (`universe_size × dim`) per trained source.
        #[serde(with = "source_blocks")]
        per_source: BTreeMap<NodeId, Vec<f64>>,
    },
    Random,
}

/// Stores the map as a list of `(source, block)` entries; integer map keys do
/// not survive the buffering used for internally tagged enums.
mod source_blocks {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::cascade::NodeId;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<NodeId, Vec<f64>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        map.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<NodeId, Vec<f64>>, D::Error> {
        Ok(Vec::<(NodeId, Vec<f64>)>::deserialize(d)?
            .into_iter()
            .collect())
    }
}

/// Where a parameter vector lives, for gradient application.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Cdk(NodeId),
    Influence(NodeId),
    Susceptibility(NodeId),
    PerSource(NodeId, NodeId),
}

/// A trained (or initialised) predictor. Immutable once built, so it may be
/// shared across threads for prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    format: String,
    version: u32,
    variant: Variant,
    universe_size: usize,
    dim: usize,
    kernel_time: f64,
    seed: u64,
    params: Params,
}

fn normal_block<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect()
}

impl EmbeddingModel {
    /// Seeded initialisation: standard normal entries scaled by `1/√d`.
    pub fn initialize(spec: &PredictorSpec, universe_size: usize) -> Result<Self> {
        spec.validate()?;
        let d = spec.latent_dim;
        let scale = 1.0 / (d as f64).sqrt();
        let len = universe_size * d;
        let params = match spec.variant {
            Variant::Cdk => Params::Cdk {
                z: normal_block(&mut derived_rng(spec.seed, &[STREAM_CDK]), len, scale),
            },
            Variant::Pae => Params::Pae {
                influence: normal_block(
                    &mut derived_rng(spec.seed, &[STREAM_INFLUENCE]),
                    len,
                    scale,
                ),
                susceptibility: normal_block(
                    &mut derived_rng(spec.seed, &[STREAM_SUSCEPTIBILITY]),
                    len,
                    scale,
                ),
            },
            Variant::Iae => Params::Iae {
                influence: normal_block(
                    &mut derived_rng(spec.seed, &[STREAM_INFLUENCE]),
                    len,
                    scale,
                ),
                per_source: BTreeMap::new(),
            },
            Variant::Random => Params::Random,
            Variant::External => {
                return Err(Error::Unsupported(
                    "external predictions are loaded from file, not initialised".into(),
                ))
            }
        };
        Ok(Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            variant: spec.variant,
            universe_size,
            dim: d,
            kernel_time: spec.kernel_time,
            seed: spec.seed,
            params,
        })
    }

    /// Uniform-permutation baseline.
    pub fn random(universe_size: usize, seed: u64) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            variant: Variant::Random,
            universe_size,
            dim: 0,
            kernel_time: 1.0,
            seed,
            params: Params::Random,
        }
    }

    /// CDK model with explicit positions (row-major `universe_size × dim`).
    pub fn cdk_from_positions(dim: usize, positions: Vec<f64>) -> Result<Self> {
        if dim == 0 || !positions.len().is_multiple_of(dim) {
            return Err(Error::Validation(
                "positions length must be a multiple of dim".into(),
            ));
        }
        Ok(Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            variant: Variant::Cdk,
            universe_size: positions.len() / dim,
            dim,
            kernel_time: 1.0,
            seed: 0,
            params: Params::Cdk { z: positions },
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Default per-source susceptibility vector `b_v^(s)` for pairs that
    /// were never allocated; also the initial value of allocated blocks.
    fn per_source_default(&self, source: NodeId, v: NodeId) -> Vec<f64> {
        let mut rng = derived_rng(self.seed, &[STREAM_PER_SOURCE, source as u64, v as u64]);
        normal_block(&mut rng, self.dim, 1.0 / (self.dim as f64).sqrt())
    }

    fn ensure_source_block(&mut self, source: NodeId) {
        let missing = matches!(&self.params, Params::Iae { per_source, .. } if !per_source.contains_key(&source));
        if missing {
            let block: Vec<f64> = (0..self.universe_size)
                .flat_map(|v| self.per_source_default(source, v))
                .collect();
            if let Params::Iae { per_source, .. } = &mut self.params {
                per_source.insert(source, block);
            }
        }
    }

    /// Source-side and target-side slots for a scored pair.
    fn slots(&self, source: NodeId, v: NodeId) -> (Slot, Slot) {
        match self.variant {
            Variant::Cdk => (Slot::Cdk(source), Slot::Cdk(v)),
            Variant::Pae => (Slot::Influence(source), Slot::Susceptibility(v)),
            _ => (Slot::Influence(source), Slot::PerSource(source, v)),
        }
    }

    fn vector(&self, slot: Slot) -> std::borrow::Cow<'_, [f64]> {
        let d = self.dim;
        match (&self.params, slot) {
            (Params::Cdk { z }, Slot::Cdk(v)) => z[v * d..(v + 1) * d].into(),
            (Params::Pae { influence, .. }, Slot::Influence(v))
            | (Params::Iae { influence, .. }, Slot::Influence(v)) => {
                influence[v * d..(v + 1) * d].into()
            }
            (Params::Pae { susceptibility, .. }, Slot::Susceptibility(v)) => {
                susceptibility[v * d..(v + 1) * d].into()
            }
            (Params::Iae { per_source, .. }, Slot::PerSource(s, v)) => match per_source.get(&s) {
                Some(block) => block[v * d..(v + 1) * d].into(),
                None => self.per_source_default(s, v).into(),
            },
            _ => unreachable!("slot does not match model variant"),
        }
    }

    fn vector_mut(&mut self, slot: Slot) -> &mut [f64] {
        let d = self.dim;
        match (&mut self.params, slot) {
            (Params::Cdk { z }, Slot::Cdk(v)) => &mut z[v * d..(v + 1) * d],
            (Params::Pae { influence, .. }, Slot::Influence(v))
            | (Params::Iae { influence, .. }, Slot::Influence(v)) => {
                &mut influence[v * d..(v + 1) * d]
            }
            (Params::Pae { susceptibility, .. }, Slot::Susceptibility(v)) => {
                &mut susceptibility[v * d..(v + 1) * d]
            }
            (Params::Iae { per_source, .. }, Slot::PerSource(s, v)) => {
                let block = per_source
                    .get_mut(&s)
                    .expect("source block allocated before update");
                &mut block[v * d..(v + 1) * d]
            }
            _ => unreachable!("slot does not match model variant"),
        }
    }

    fn check_node(&self, v: NodeId) -> Result<()> {
        if v >= self.universe_size {
            return Err(Error::Domain(format!(
                "node {v} outside universe of size {}",
                self.universe_size
            )));
        }
        Ok(())
    }

    fn check_pair(&self, source: NodeId, v: NodeId) -> Result<()> {
        self.check_node(source)?;
        self.check_node(v)?;
        if source == v {
            return Err(Error::Domain(format!(
                "cannot score source {source} against itself"
            )));
        }
        if matches!(self.variant, Variant::Random | Variant::External) {
            return Err(Error::Unsupported(format!(
                "{} models have no scores",
                self.variant
            )));
        }
        Ok(())
    }

    fn neg_sq_dist(&self, source: NodeId, v: NodeId) -> f64 {
        let (s, t) = self.slots(source, v);
        -sq_dist(&self.vector(s), &self.vector(t))
    }

    /// `-‖source side − target side‖²`; 0 is the best possible score.
    pub fn score(&self, source: NodeId, v: NodeId) -> Result<f64> {
        self.check_pair(source, v)?;
        Ok(self.neg_sq_dist(source, v))
    }

    /// Heat-kernel value at the model's kernel time; ranks identically to
    /// [`EmbeddingModel::score`].
    pub fn kernel_score(&self, source: NodeId, v: NodeId) -> Result<f64> {
        let s = self.score(source, v)?;
        heat_kernel(self.kernel_time, self.dim, -s)
    }

    /// Top-`k` candidates by descending score, ties broken by ascending id.
    pub fn predict(&self, source: NodeId, k: usize) -> Result<PredictedRanking> {
        self.check_node(source)?;
        if k == 0 || k >= self.universe_size {
            return Err(Error::Domain(format!(
                "k = {k} must lie in [1, {}]",
                self.universe_size.saturating_sub(1)
            )));
        }
        let ranking = match self.variant {
            Variant::Random => {
                let mut rng = derived_rng(self.seed, &[STREAM_RANDOM, source as u64]);
                let mut nodes: Vec<NodeId> =
                    (0..self.universe_size).filter(|&v| v != source).collect();
                nodes.shuffle(&mut rng);
                nodes.truncate(k);
                nodes
            }
            _ => {
                let mut scored: Vec<(f64, NodeId)> = (0..self.universe_size)
                    .filter(|&v| v != source)
                    .map(|v| (self.neg_sq_dist(source, v), v))
                    .collect();
                scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                scored.into_iter().take(k).map(|(_, v)| v).collect()
            }
        };
        Ok(PredictedRanking::from_unique(source, ranking))
    }

    /// Full ranking of every non-source node.
    pub fn predict_all(&self, source: NodeId) -> Result<PredictedRanking> {
        self.predict(source, self.universe_size - 1)
    }

    /// Hinge loss of one triple under the current parameters.
    pub fn triple_loss(&self, source: NodeId, earlier: NodeId, later: NodeId, margin: f64) -> f64 {
        let (s, ti) = self.slots(source, earlier);
        let (_, tj) = self.slots(source, later);
        hinge_loss(&self.vector(s), &self.vector(ti), &self.vector(tj), margin)
    }

    /// Gradient of [`EmbeddingModel::triple_loss`] over the flattened
    /// parameter vector (see [`EmbeddingModel::params_flat`]).
    pub fn triple_gradient(
        &mut self,
        source: NodeId,
        earlier: NodeId,
        later: NodeId,
        margin: f64,
    ) -> Vec<f64> {
        self.ensure_source_block(source);
        let mut shadow = self.clone();
        shadow.params_flat_mut().into_iter().for_each(|p| *p = 0.0);
        let (s, ti) = self.slots(source, earlier);
        let (_, tj) = self.slots(source, later);
        if let Some(grads) = hinge_grad(&self.vector(s), &self.vector(ti), &self.vector(tj), margin)
        {
            for (slot, g) in [s, ti, tj].into_iter().zip(grads) {
                for (p, gi) in shadow.vector_mut(slot).iter_mut().zip(g) {
                    *p += gi;
                }
            }
        }
        shadow.params_flat()
    }

    /// All trainable parameters in a fixed order.
    pub fn params_flat(&self) -> Vec<f64> {
        match &self.params {
            Params::Cdk { z } => z.clone(),
            Params::Pae {
                influence,
                susceptibility,
            } => influence.iter().chain(susceptibility).copied().collect(),
            Params::Iae {
                influence,
                per_source,
            } => influence
                .iter()
                .chain(per_source.values().flatten())
                .copied()
                .collect(),
            Params::Random => Vec::new(),
        }
    }

    pub fn params_flat_mut(&mut self) -> Vec<&mut f64> {
        match &mut self.params {
            Params::Cdk { z } => z.iter_mut().collect(),
            Params::Pae {
                influence,
                susceptibility,
            } => influence
                .iter_mut()
                .chain(susceptibility.iter_mut())
                .collect(),
            Params::Iae {
                influence,
                per_source,
            } => influence
                .iter_mut()
                .chain(per_source.values_mut().flat_map(|b| b.iter_mut()))
                .collect(),
            Params::Random => Vec::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params_flat().iter().all(|p| p.is_finite())
    }

    fn sgd_step(&mut self, source: NodeId, earlier: NodeId, later: NodeId, margin: f64, lr: f64) {
        let (s, ti) = self.slots(source, earlier);
        let (_, tj) = self.slots(source, later);
        let grads = hinge_grad(&self.vector(s), &self.vector(ti), &self.vector(tj), margin);
        if let Some(grads) = grads {
            for (slot, g) in [s, ti, tj].into_iter().zip(grads) {
                for (p, gi) in self.vector_mut(slot).iter_mut().zip(g) {
                    *p -= lr * gi;
                }
            }
        }
    }

    /// JSON dump; parameters round-trip bit-exactly.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT || model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model format {} v{}",
                model.format, model.version
            )));
        }
        Ok(model)
    }
}

/// Trains a CDK, PAE or IAE model. Cascade order is reshuffled every epoch
/// and all sampling comes from the predictor seed, so equal inputs give
/// bit-identical models.
pub fn train(spec: &PredictorSpec, train_set: &CascadeSet) -> Result<EmbeddingModel> {
    if !matches!(spec.variant, Variant::Cdk | Variant::Pae | Variant::Iae) {
        return Err(Error::Unsupported(format!(
            "variant '{}' cannot be trained",
            spec.variant
        )));
    }
    let n = train_set.universe_size();
    let mut model = EmbeddingModel::initialize(spec, n)?;
    if spec.variant == Variant::Iae {
        for c in train_set {
            model.ensure_source_block(c.source());
        }
    }
    let mut rng = rng_from(derive_seed(spec.seed, &[STREAM_TRAIN]));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut in_cascade = vec![false; n];

    for epoch in 0..spec.epochs {
        order.shuffle(&mut rng);
        for &ci in &order {
            let nodes = train_set.cascades()[ci].nodes();
            let len = nodes.len();
            if len < 2 {
                continue;
            }
            let source = nodes[0];
            let uninfected = n - len;
            nodes.iter().for_each(|&v| in_cascade[v] = true);
            let pairs = spec.pairs_per_cascade.unwrap_or(5 * len);
            for _ in 0..pairs {
                let i = rng.random_range(1..len);
                for _ in 0..spec.negatives_per_pair {
                    let has_later = i + 1 < len;
                    let use_later =
                        has_later && (uninfected == 0 || rng.random_bool(LATER_INFECTED_SHARE));
                    let later = if use_later {
                        nodes[rng.random_range(i + 1..len)]
                    } else if uninfected > 0 {
                        loop {
                            let v = rng.random_range(0..n);
                            if !in_cascade[v] {
                                break v;
                            }
                        }
                    } else {
                        continue;
                    };
                    model.sgd_step(source, nodes[i], later, spec.margin, spec.learning_rate);
                }
            }
            nodes.iter().for_each(|&v| in_cascade[v] = false);
        }
        if !model.is_finite() {
            return Err(Error::Diverged(format!(
                "{} parameters became non-finite in epoch {epoch}",
                spec.variant
            )));
        }
    }
    Ok(model)
}

/// Builds the predictor described by `spec`: trains embedding variants and
/// seeds the random baseline. External rankings are handled by the caller.
pub fn build_predictor(spec: &PredictorSpec, train_set: &CascadeSet) -> Result<EmbeddingModel> {
    match spec.variant {
        Variant::Random => Ok(EmbeddingModel::random(train_set.universe_size(), spec.seed)),
        _ => train(spec, train_set),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::Cascade;

    fn toy_set() -> CascadeSet {
        let cs = vec![
            Cascade::new(vec![0, 1, 2, 3]).unwrap(),
            Cascade::new(vec![0, 1, 3]).unwrap(),
            Cascade::new(vec![4, 2, 1]).unwrap(),
        ];
        CascadeSet::new(cs, 6).unwrap()
    }

    #[test]
    fn heat_kernel_values() {
        let t = 1.0 / (4.0 * std::f64::consts::PI);
        assert!((heat_kernel(t, 2, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let v = heat_kernel(t, 2, 1.0).unwrap();
        assert!((v - (-std::f64::consts::PI).exp()).abs() < 1e-12);
        assert!((v - 0.0432139).abs() < 1e-7);
        assert!(heat_kernel(1.0, 3, 0.5).unwrap() > heat_kernel(1.0, 3, 0.6).unwrap());
        assert!(heat_kernel(0.0, 3, 0.5).is_err());
        assert!(heat_kernel(1.0, 3, -0.5).is_err());
    }

    #[test]
    fn hand_cdk_ranking() {
        let m = EmbeddingModel::cdk_from_positions(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(m.score(0, 1).unwrap(), -1.0);
        assert_eq!(m.score(0, 2).unwrap(), -4.0);
        assert_eq!(m.predict(0, 2).unwrap().ranking(), &[1, 2]);
        assert!(m.kernel_score(0, 1).unwrap() > m.kernel_score(0, 2).unwrap());
        assert!(matches!(m.score(0, 0), Err(Error::Domain(_))));
        assert!(matches!(m.score(0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn ties_break_by_id() {
        let m = EmbeddingModel::cdk_from_positions(1, vec![0.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(m.predict_all(0).unwrap().ranking(), &[1, 2, 3]);
    }

    #[test]
    fn translation_invariance() {
        let pos = vec![0.3, -1.0, 2.0, 0.5, -0.7, 1.1, 0.0, 0.2];
        let shifted: Vec<f64> = pos
            .iter()
            .enumerate()
            .map(|(i, p)| p + [5.0, -3.0][i % 2])
            .collect();
        let a = EmbeddingModel::cdk_from_positions(2, pos).unwrap();
        let b = EmbeddingModel::cdk_from_positions(2, shifted).unwrap();
        for s in 0..4 {
            assert_eq!(a.predict_all(s).unwrap(), b.predict_all(s).unwrap());
        }
    }

    #[test]
    fn zero_epochs_is_initialisation() {
        for variant in [Variant::Cdk, Variant::Pae] {
            let mut spec = PredictorSpec::new(variant).with_seed(3);
            spec.epochs = 0;
            let trained = train(&spec, &toy_set()).unwrap();
            assert_eq!(trained, EmbeddingModel::initialize(&spec, 6).unwrap());
        }
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        for variant in [Variant::Cdk, Variant::Pae, Variant::Iae] {
            let mut spec = PredictorSpec::new(variant).with_seed(11);
            spec.epochs = 200;
            spec.learning_rate = 0.05;
            let a = train(&spec, &toy_set()).unwrap();
            assert_eq!(a, train(&spec, &toy_set()).unwrap());
            let mut before = spec.clone();
            before.epochs = 0;
            let init = train(&before, &toy_set()).unwrap();
            let loss =
                |m: &EmbeddingModel| m.triple_loss(0, 1, 3, 1.0) + m.triple_loss(0, 1, 5, 1.0);
            assert!(
                loss(&a) < loss(&init),
                "{variant}: {} vs {}",
                loss(&a),
                loss(&init)
            );
        }
    }

    #[test]
    fn iae_untrained_sources_are_stable() {
        let mut spec = PredictorSpec::new(Variant::Iae).with_seed(2);
        spec.epochs = 5;
        let m = train(&spec, &toy_set()).unwrap();
        assert_eq!(m.predict_all(5).unwrap(), m.predict_all(5).unwrap());
        assert_eq!(m.score(5, 1).unwrap(), m.score(5, 1).unwrap());
    }

    #[test]
    fn random_and_external_variants() {
        let r = build_predictor(
            &PredictorSpec::new(Variant::Random).with_seed(1),
            &toy_set(),
        )
        .unwrap();
        let p = r.predict_all(2).unwrap();
        let mut sorted = p.ranking().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 3, 4, 5]);
        assert_eq!(p, r.predict_all(2).unwrap());
        assert!(matches!(r.score(0, 1), Err(Error::Unsupported(_))));
        for v in [Variant::Random, Variant::External] {
            assert!(matches!(
                train(&PredictorSpec::new(v), &toy_set()),
                Err(Error::Unsupported(_))
            ));
        }
    }

    #[test]
    fn json_round_trip() {
        let mut spec = PredictorSpec::new(Variant::Iae).with_seed(8);
        spec.epochs = 3;
        let m = train(&spec, &toy_set()).unwrap();
        let back = EmbeddingModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = m.to_json().unwrap().replace(MODEL_FORMAT, "other");
        assert!(EmbeddingModel::from_json(&bad).is_err());
    }

    #[test]
    fn variant_names() {
        for v in [
            Variant::Cdk,
            Variant::Pae,
            Variant::Iae,
            Variant::External,
            Variant::Random,
        ] {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("xyz".parse::<Variant>().is_err());
    }

    #[test]
    fn invalid_hyperparameters() {
        let mut spec = PredictorSpec::new(Variant::Cdk);
        spec.latent_dim = 0;
        assert!(spec.validate().is_err());
        let mut spec = PredictorSpec::new(Variant::Cdk);
        spec.learning_rate = f64::NAN;
        assert!(spec.validate().is_err());
    }
}
