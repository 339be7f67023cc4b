//! Experiment cells, sweeps and curve fitting over result tables.
//!
//! A cell produces one cascade set (simulated on a generated graph, or loaded
//! from a file and subsampled), splits it into train and test sets, and
//! evaluates every configured predictor on the test set. Each predictor gives
//! one [`ScalingPoint`]: the set's APCE against the achieved MAP and SMAP.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, CascadeSet};
use crate::dataio::{self, NodeIdMap};
use crate::embed::{build_predictor, PredictorSpec, Variant};
use crate::entropy::apce_of;
use crate::error::{Error, Result};
use crate::fit::{fit_exp_decay, FittedCurve};
use crate::graph::GraphSpec;
use crate::metrics::{EvalResult, PredictedRanking};
use crate::rng::{derive_seed, derived_rng};
use crate::sim::{generate_cascade_set, SimConfig};
use crate::svg;

const STREAM_GRAPH: u64 = 1;
const STREAM_CASCADES: u64 = 2;
const STREAM_SPLIT: u64 = 3;
const STREAM_PREDICTOR: u64 = 4;
const STREAM_SUBSAMPLE: u64 = 5;

/// Topology and mechanism labels written for cells loaded from files.
pub const EMPIRICAL_LABEL: &str = "empirical";

pub const CSV_COLUMNS: [&str; 10] = [
    "topology",
    "mechanism",
    "model",
    "N",
    "L",
    "m",
    "seed",
    "apce",
    "map",
    "smap",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApceScope {
    #[default]
    Full,
    Train,
}

/// Which `N` an empirical cell reports for SMAP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkSize {
    #[default]
    PropagationSubgraph,
    Whole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CellData {
    Synthetic {
        graph: GraphSpec,
        sim: SimConfig,
    },
    Empirical {
        path: PathBuf,
        length: usize,
        #[serde(default)]
        network_size: NetworkSize,
    },
}

fn default_m() -> usize {
    200
}
fn default_split() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub data: CellData,
    /// Cascades per cell. Empirical cells use at most this many.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_split")]
    pub split_ratio: f64,
    pub predictors: Vec<PredictorSpec>,
    /// Overrides the seed derived from the plan seed and cell index.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub apce_scope: ApceScope,
    /// Permits synthetic cells with `L > ⌊N/10⌋`.
    #[serde(default)]
    pub allow_long: bool,
}

impl CellSpec {
    pub fn synthetic(graph: GraphSpec, sim: SimConfig, predictors: Vec<PredictorSpec>) -> Self {
        Self {
            data: CellData::Synthetic { graph, sim },
            m: default_m(),
            split_ratio: default_split(),
            predictors,
            seed: None,
            apce_scope: ApceScope::Full,
            allow_long: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.predictors.is_empty() {
            return Err(Error::Validation("cell has no predictors".into()));
        }
        for p in &self.predictors {
            p.validate()?;
            if p.variant == Variant::External && p.predictions_path.is_none() {
                return Err(Error::Validation(
                    "external predictor needs a predictions_path".into(),
                ));
            }
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Validation(format!(
                "split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.m == 0 {
            return Err(Error::Validation("m must be positive".into()));
        }
        match &self.data {
            CellData::Synthetic { graph, sim } => {
                graph.validate()?;
                let n = graph.node_count;
                if !self.allow_long && sim.target_length > n / 10 {
                    return Err(Error::Validation(format!(
                        "target length {} exceeds N/10 = {} (set allow_long to override)",
                        sim.target_length,
                        n / 10
                    )));
                }
            }
            CellData::Empirical { length, .. } => {
                if *length < 2 {
                    return Err(Error::Validation(
                        "empirical length must be at least 2".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub topology: String,
    pub mechanism: String,
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub m: usize,
    pub seed: u64,
    pub apce: f64,
    pub map: f64,
    pub smap: f64,
}

impl ScalingPoint {
    fn sort_key(&self, other: &Self) -> std::cmp::Ordering {
        (
            &self.topology,
            &self.mechanism,
            &self.model,
            self.n,
            self.l,
            self.m,
            self.seed,
        )
            .cmp(&(
                &other.topology,
                &other.mechanism,
                &other.model,
                other.n,
                other.l,
                other.m,
                other.seed,
            ))
            .then(self.apce.total_cmp(&other.apce))
            .then(self.map.total_cmp(&other.map))
    }
}

/// Seeded uniform shuffle, then the first `⌊ratio·m⌋` cascades train.
pub fn split(cs: &CascadeSet, ratio: f64, seed: u64) -> Result<(CascadeSet, CascadeSet)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let m = cs.len();
    let n_train = (ratio * m as f64).floor() as usize;
    if n_train == 0 || n_train == m {
        return Err(Error::Domain(format!(
            "{m} cascades at ratio {ratio} leave an empty train or test set"
        )));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut derived_rng(seed, &[]));
    let pick = |ids: &[usize]| -> Result<CascadeSet> {
        let cascades = ids.iter().map(|&i| cs.cascades()[i].clone()).collect();
        CascadeSet::new(cascades, cs.universe_size())
    };
    Ok((pick(&idx[..n_train])?, pick(&idx[n_train..])?))
}

struct Prepared {
    set: CascadeSet,
    labels: NodeIdMap,
    topology: String,
    mechanism: String,
    network_size: usize,
    length: usize,
}

fn prepare(cell: &CellSpec, seed: u64) -> Result<Prepared> {
    match &cell.data {
        CellData::Synthetic { graph, sim } => {
            let mut spec = graph.clone();
            spec.seed = derive_seed(seed, &[STREAM_GRAPH, graph.seed]);
            let g = spec.generate()?;
            let set = generate_cascade_set(&g, sim, cell.m, derive_seed(seed, &[STREAM_CASCADES]))?;
            Ok(Prepared {
                labels: NodeIdMap::identity(g.node_count()),
                set,
                topology: graph.topology.to_string(),
                mechanism: sim.mechanism.to_string(),
                network_size: g.node_count(),
                length: sim.target_length,
            })
        }
        CellData::Empirical {
            path,
            length,
            network_size,
        } => {
            let (raw, labels) = dataio::load_cascades(path)?;
            let long_enough = raw.iter().filter(|c| c.len() >= *length).take(cell.m);
            let sampled = long_enough
                .enumerate()
                .map(|(k, c)| {
                    dataio::subsample_cascade(
                        c,
                        *length,
                        &mut derived_rng(seed, &[STREAM_SUBSAMPLE, k as u64]),
                    )
                })
                .collect::<Result<Vec<Cascade>>>()?;
            if sampled.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "{}: no cascade reaches length {length}",
                    path.display()
                )));
            }
            let (set, labels) =
                dataio::compact(&CascadeSet::new(sampled, raw.universe_size())?, &labels)?;
            let n = match network_size {
                NetworkSize::PropagationSubgraph => dataio::propagation_subgraph_size(&set),
                NetworkSize::Whole => raw.universe_size(),
            };
            Ok(Prepared {
                set,
                labels,
                topology: EMPIRICAL_LABEL.into(),
                mechanism: EMPIRICAL_LABEL.into(),
                network_size: n,
                length: *length,
            })
        }
    }
}

fn external_rankings(
    spec: &PredictorSpec,
    labels: &NodeIdMap,
    test: &CascadeSet,
) -> Result<Vec<PredictedRanking>> {
    let path = spec
        .predictions_path
        .as_ref()
        .ok_or_else(|| Error::Validation("external predictor needs a predictions_path".into()))?;
    let preds = dataio::load_external_predictions(path, labels)?;
    if preds.len() != test.len() {
        return Err(Error::Validation(format!(
            "{}: {} rankings for {} test cascades",
            path.display(),
            preds.len(),
            test.len()
        )));
    }
    Ok(preds)
}

/// Runs one cell with an explicit seed, giving one point per predictor in
/// predictor order.
pub fn run_cell(cell: &CellSpec, seed: u64) -> Result<Vec<ScalingPoint>> {
    cell.validate()?;
    let prep = prepare(cell, seed)?;
    let (train, test) = split(
        &prep.set,
        cell.split_ratio,
        derive_seed(seed, &[STREAM_SPLIT]),
    )?;
    let apce = match cell.apce_scope {
        ApceScope::Full => apce_of(&prep.set)?,
        ApceScope::Train => apce_of(&train)?,
    };
    log::debug!(
        "cell seed {seed}: {} {} N={} L={} apce={apce:.4}",
        prep.topology,
        prep.mechanism,
        prep.network_size,
        prep.length
    );
    cell.predictors
        .iter()
        .map(|p| {
            let preds = if p.variant == Variant::External {
                external_rankings(p, &prep.labels, &test)?
            } else {
                let mut spec = p.clone();
                spec.seed = derive_seed(seed, &[STREAM_PREDICTOR, p.seed]);
                let model = build_predictor(&spec, &train)?;
                test.iter()
                    .map(|c| model.predict_all(c.source()))
                    .collect::<Result<Vec<_>>>()?
            };
            let eval = EvalResult::evaluate(
                test.cascades(),
                &preds,
                None,
                prep.network_size,
                prep.length,
            )?;
            Ok(ScalingPoint {
                topology: prep.topology.clone(),
                mechanism: prep.mechanism.clone(),
                model: p.label(),
                n: prep.network_size,
                l: prep.length,
                m: prep.set.len(),
                seed,
                apce,
                map: eval.map_value,
                smap: eval.smap_value,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub seed: u64,
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub strict: bool,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentPlan {
    pub fn cell_seed(&self, index: usize) -> u64 {
        self.cells[index]
            .seed
            .unwrap_or_else(|| derive_seed(self.seed, &[index as u64]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: usize,
    pub category: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    /// Canonically sorted, independent of execution order.
    pub points: Vec<ScalingPoint>,
    pub failures: Vec<CellFailure>,
}

/// Runs every cell on a bounded worker pool. In strict mode the first failing
/// cell (by index) aborts the sweep; otherwise failures are collected.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<SweepOutcome> {
    if plan.cells.is_empty() {
        return Err(Error::Validation("plan has no cells".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = plan.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Validation(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<Vec<ScalingPoint>>> = pool.install(|| {
        (0..plan.cells.len())
            .into_par_iter()
            .map(|i| run_cell(&plan.cells[i], plan.cell_seed(i)))
            .collect()
    });
    let mut out = SweepOutcome::default();
    for (cell, r) in results.into_iter().enumerate() {
        match r {
            Ok(points) => out.points.extend(points),
            Err(e) if plan.strict => {
                return Err(Error::Cell {
                    cell: cell.to_string(),
                    source: Box::new(e),
                });
            }
            Err(e) => {
                log::warn!("cell {cell} failed: {e}");
                out.failures.push(CellFailure {
                    cell,
                    category: e.category().into(),
                    message: e.to_string(),
                });
            }
        }
    }
    out.points.sort_by(|a, b| a.sort_key(b));
    Ok(out)
}

pub fn format_points_csv(points: &[ScalingPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if points.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for p in points {
        w.serialize(p)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Validation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Validation(e.to_string()))
}

pub fn write_points_csv(path: impl AsRef<Path>, points: &[ScalingPoint]) -> Result<()> {
    dataio::write_text(path.as_ref(), &format_points_csv(points)?)
}

/// Parses a results table, checking the header and `smap = map·N/L`.
pub fn parse_points_csv(text: &str, origin: &str) -> Result<Vec<ScalingPoint>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::parse(
            origin,
            1,
            format!("unexpected columns {header:?}"),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<ScalingPoint>().enumerate() {
        let line = i + 2;
        let p = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let expect = p.map * p.n as f64 / p.l.max(1) as f64;
        if p.l == 0 || (p.smap - expect).abs() > 1e-12 * expect.abs().max(1.0) {
            return Err(Error::parse(
                origin,
                line,
                format!("smap {} does not equal map·N/L = {expect}", p.smap),
            ));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn load_points_csv(path: impl AsRef<Path>) -> Result<Vec<ScalingPoint>> {
    let path = path.as_ref();
    parse_points_csv(&dataio::read_text(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    #[default]
    Smap,
    Map,
}

impl FitTarget {
    pub fn value(self, p: &ScalingPoint) -> f64 {
        match self {
            FitTarget::Smap => p.smap,
            FitTarget::Map => p.map,
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            FitTarget::Smap => "SMAP",
            FitTarget::Map => "MAP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub model: String,
    pub y0: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl CurveRecord {
    fn from_fit(model: &str, c: &FittedCurve) -> Self {
        Self {
            model: model.into(),
            y0: c.y0,
            a: c.a,
            b: c.b,
            r_squared: c.r_squared,
            n_points: c.n_points,
        }
    }

    pub fn curve(&self) -> FittedCurve {
        FittedCurve {
            y0: self.y0,
            a: self.a,
            b: self.b,
            r_squared: self.r_squared,
            n_points: self.n_points,
            degenerate: false,
        }
    }
}

pub fn group_by_model(points: &[ScalingPoint]) -> BTreeMap<&str, Vec<&ScalingPoint>> {
    let mut groups: BTreeMap<&str, Vec<&ScalingPoint>> = BTreeMap::new();
    for p in points {
        groups.entry(&p.model).or_default().push(p);
    }
    groups
}

/// Fits one curve per model. Groups with fewer than three distinct APCE
/// values are skipped with a warning.
pub fn fit_groups(points: &[ScalingPoint], target: FitTarget) -> Result<Vec<CurveRecord>> {
    if points.is_empty() {
        return Err(Error::InsufficientData(
            "no groups to fit: the table is empty".into(),
        ));
    }
    let mut curves = Vec::new();
    for (model, group) in group_by_model(points) {
        let xy: Vec<(f64, f64)> = group.iter().map(|p| (p.apce, target.value(p))).collect();
        match fit_exp_decay(&xy) {
            Ok(c) => curves.push(CurveRecord::from_fit(model, &c)),
            Err(Error::InsufficientData(msg)) => log::warn!("skipping model '{model}': {msg}"),
            Err(e) => return Err(e),
        }
    }
    if curves.is_empty() {
        return Err(Error::InsufficientData(
            "no group has three distinct APCE values".into(),
        ));
    }
    Ok(curves)
}

pub fn render_plot(points: &[ScalingPoint], curves: &[CurveRecord], target: FitTarget) -> String {
    let series: Vec<svg::Series> = group_by_model(points)
        .into_iter()
        .map(|(model, group)| svg::Series {
            label: model.to_string(),
            points: group.iter().map(|p| (p.apce, target.value(p))).collect(),
            curve: curves
                .iter()
                .find(|c| c.model == model)
                .map(CurveRecord::curve),
        })
        .collect();
    svg::scatter_plot(&series, "APCE", target.axis_label())
}

pub fn format_curves_json(curves: &[CurveRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(curves)? + "\n")
}

pub fn parse_curves_json(text: &str) -> Result<Vec<CurveRecord>> {
    Ok(serde_json::from_str(text)?)
}

pub struct PlotOutputs {
    pub curves: Vec<CurveRecord>,
    pub curves_path: PathBuf,
    pub svg_path: PathBuf,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Fits per-model curves to a results table and writes
/// `<prefix>.curves.json` and `<prefix>.svg`.
pub fn fit_and_plot(
    points_csv: impl AsRef<Path>,
    target: FitTarget,
    out_prefix: impl AsRef<Path>,
) -> Result<PlotOutputs> {
    let points = load_points_csv(points_csv)?;
    let curves = fit_groups(&points, target)?;
    let prefix = out_prefix.as_ref();
    let curves_path = with_suffix(prefix, ".curves.json");
    let svg_path = with_suffix(prefix, ".svg");
    dataio::write_text(&curves_path, &format_curves_json(&curves)?)?;
    dataio::write_text(&svg_path, &render_plot(&points, &curves, target))?;
    Ok(PlotOutputs {
        curves,
        curves_path,
        svg_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Variant;
    use crate::sim::Mechanism;

    fn small_cell() -> CellSpec {
        let mut p = PredictorSpec::new(Variant::Cdk);
        p.epochs = 3;
        CellSpec::synthetic(
            GraphSpec::er(60, 6.0, 1),
            SimConfig::new(Mechanism::Ic, 5),
            vec![p, PredictorSpec::new(Variant::Random)],
        )
        .with_m(40)
    }

    fn set_of(n: usize) -> CascadeSet {
        let cs = (0..n)
            .map(|i| Cascade::new(vec![i, n + i]).unwrap())
            .collect();
        CascadeSet::new(cs, 2 * n).unwrap()
    }

    #[test]
    fn split_sizes() {
        let (tr, te) = split(&set_of(10), 0.8, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(split(&set_of(10), 0.8, 3).unwrap(), (tr, te));
        assert!(matches!(split(&set_of(1), 0.8, 3), Err(Error::Domain(_))));
        assert!(matches!(split(&set_of(4), 0.2, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn cell_points_and_determinism() {
        let cell = small_cell();
        let a = run_cell(&cell, 9).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].model, "cdk");
        assert_eq!(a[1].model, "random");
        for p in &a {
            assert_eq!((p.n, p.l, p.m), (60, 5, 40));
            assert_eq!(p.smap, p.map * 60.0 / 5.0);
        }
        assert_eq!(a, run_cell(&cell, 9).unwrap());
    }

    #[test]
    fn long_cells_need_opt_in() {
        let mut cell = small_cell();
        if let CellData::Synthetic { sim, .. } = &mut cell.data {
            sim.target_length = 7;
        }
        assert!(matches!(cell.validate(), Err(Error::Validation(_))));
        cell.allow_long = true;
        cell.validate().unwrap();
    }

    #[test]
    fn csv_round_trip_and_schema() {
        let pts = run_cell(&small_cell(), 2).unwrap();
        let text = format_points_csv(&pts).unwrap();
        assert!(text.starts_with("topology,mechanism,model,N,L,m,seed,apce,map,smap\n"));
        assert_eq!(parse_points_csv(&text, "t").unwrap(), pts);
        let bad = text.replacen(&format!(",{}\n", pts[0].smap), ",1234.5\n", 1);
        assert!(matches!(
            parse_points_csv(&bad, "t"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn lenient_sweep_records_failures() {
        let mut bad = small_cell();
        bad.m = 1;
        let mut plan = ExperimentPlan {
            seed: 4,
            cells: vec![small_cell(), bad],
            strict: false,
            workers: Some(2),
        };
        let out = run_sweep(&plan).unwrap();
        assert_eq!(out.points.len(), 2);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].cell, 1);
        plan.strict = true;
        assert!(matches!(run_sweep(&plan), Err(Error::Cell { cell, .. }) if cell == "1"));
    }

    #[test]
    fn empty_table_has_no_groups() {
        assert!(matches!(
            fit_groups(&[], FitTarget::Smap),
            Err(Error::InsufficientData(_))
        ));
    }
}
