use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pccurve::dataio::{self, NodeIdMap};
use pccurve::embed::{build_predictor, EmbeddingModel, PredictorSpec, Variant};
use pccurve::entropy::pairwise_stats;
use pccurve::harness::{self, ExperimentPlan, FitTarget};
use pccurve::metrics::EvalResult;
use pccurve::sim::{generate_cascade_set, Mechanism, SimConfig};
use pccurve::{CascadeSet, Error, GraphSpec, Result};

#[derive(Parser)]
#[command(
    name = "pccurve",
    version,
    about = "Cascade prediction experiments and performance curves"
)]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON document holding the subcommand's settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (a prefix for `fit`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Abort a sweep on the first failing cell.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random graph and write it as an edge list.
    GenGraph(GenGraph),
    /// Simulate a cascade set on a graph.
    Simulate(Simulate),
    /// Report the APCE of a cascade file.
    Entropy { cascades: PathBuf },
    /// Train a predictor on a cascade file.
    Train(Train),
    /// Score a trained model or external rankings against test cascades.
    Evaluate(Evaluate),
    /// Run an experiment plan and write the results table.
    Sweep,
    /// Fit one curve per model to a results table; writes `<out>.curves.json` and `<out>.svg`.
    Fit(FitArgs),
    /// Render a results table (and optional curves) as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Er,
    BaStatic,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Ic,
    Lt,
    Si,
}

impl From<MechanismArg> for Mechanism {
    fn from(m: MechanismArg) -> Self {
        match m {
            MechanismArg::Ic => Mechanism::Ic,
            MechanismArg::Lt => Mechanism::Lt,
            MechanismArg::Si => Mechanism::Si,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Cdk,
    Pae,
    Iae,
    Random,
}

impl From<ModelArg> for Variant {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Cdk => Variant::Cdk,
            ModelArg::Pae => Variant::Pae,
            ModelArg::Iae => Variant::Iae,
            ModelArg::Random => Variant::Random,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Smap,
    Map,
}

impl From<TargetArg> for FitTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Smap => FitTarget::Smap,
            TargetArg::Map => FitTarget::Map,
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, value_enum, default_value = "er")]
    topology: TopologyArg,
    #[arg(long, short = 'n', default_value_t = 100)]
    nodes: usize,
    #[arg(long, default_value_t = 6.0)]
    avg_degree: f64,
    /// Weight exponent of the static scale-free model.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

impl GraphArgs {
    fn spec(&self, seed: u64) -> GraphSpec {
        match self.topology {
            TopologyArg::Er => GraphSpec::er(self.nodes, self.avg_degree, seed),
            TopologyArg::BaStatic => {
                GraphSpec::ba_static(self.nodes, self.avg_degree, self.alpha, seed)
            }
        }
    }
}

#[derive(Args)]
struct GenGraph {
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args)]
struct Simulate {
    /// Edge list to simulate on; otherwise a graph is generated.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    gen: GraphArgs,
    #[arg(long, value_enum, default_value = "ic")]
    mechanism: MechanismArg,
    /// Cascade length L.
    #[arg(long, short = 'l', default_value_t = 10)]
    length: usize,
    /// Number of cascades.
    #[arg(long, short = 'm', default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0.3)]
    ic_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    si_rate: f64,
}

#[derive(Args)]
struct Train {
    cascades: PathBuf,
    #[arg(long, value_enum, default_value = "cdk")]
    model: ModelArg,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args)]
struct Evaluate {
    /// Test cascades.
    cascades: PathBuf,
    /// Model written by `train`.
    #[arg(
        long,
        conflicts_with = "predictions",
        required_unless_present = "predictions"
    )]
    model: Option<PathBuf>,
    /// External rankings, one `source: r1 r2 ...` line per test cascade.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Network size N for SMAP; defaults to the number of known nodes.
    #[arg(long)]
    network_size: Option<usize>,
    /// Truncate rankings to the top k.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "smap")]
    target: TargetArg,
}

#[derive(Args)]
struct PlotArgs {
    input: PathBuf,
    /// Curves written by `fit`.
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "smap")]
    target: TargetArg,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|source| Error::Io {
                    path: dir.into(),
                    source,
                })?;
            }
            fs::write(path, text).map_err(|source| Error::Io {
                path: path.into(),
                source,
            })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config<T: serde::de::DeserializeOwned>(cli: &Cli) -> Result<Option<T>> {
    cli.config
        .as_deref()
        .map(|p| Ok(serde_json::from_str(&read_file(p)?)?))
        .transpose()
}

fn gen_graph(cli: &Cli, args: &GenGraph) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let spec = match config::<GraphSpec>(cli)? {
        Some(mut spec) => {
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            spec
        }
        None => args.graph.spec(seed),
    };
    let g = spec.generate()?;
    log::info!(
        "{} graph: {} nodes, {} edges",
        spec.topology,
        g.node_count(),
        g.edge_count()
    );
    emit(cli.out.as_deref(), &dataio::format_edge_list(&g))
}

fn simulate(cli: &Cli, args: &Simulate) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let graph = match &args.graph {
        Some(path) => dataio::load_edge_list(path)?,
        None => args.gen.spec(seed).generate()?,
    };
    let sim = match config::<SimConfig>(cli)? {
        Some(sim) => sim,
        None => {
            let mut sim = SimConfig::new(args.mechanism.into(), args.length);
            sim.ic_prob = args.ic_prob;
            sim.si_rate = args.si_rate;
            sim
        }
    };
    let set = generate_cascade_set(
        &graph,
        &sim,
        args.count,
        pccurve::rng::derive_seed(seed, &[1]),
    )?;
    emit(cli.out.as_deref(), &dataio::format_cascades(&set, None))
}

fn entropy(cli: &Cli, path: &Path) -> Result<()> {
    let (set, _) = dataio::load_cascades(path)?;
    let stats = pairwise_stats(&set)?;
    let report = json!({
        "apce": stats.apce()?,
        "cascades": set.len(),
        "nodes": set.universe_size(),
        "distinct_pairs": stats.distinct_pairs(),
        "pair_occurrences": stats.total_pair_occurrences(),
    });
    emit(
        cli.out.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )
}

fn train(cli: &Cli, args: &Train) -> Result<()> {
    let (set, labels) = dataio::load_cascades(&args.cascades)?;
    let mut spec =
        config::<PredictorSpec>(cli)?.unwrap_or_else(|| PredictorSpec::new(args.model.into()));
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(e) = args.epochs {
        spec.epochs = e;
    }
    if let Some(d) = args.dim {
        spec.latent_dim = d;
    }
    if let Some(lr) = args.learning_rate {
        spec.learning_rate = lr;
    }
    let model = build_predictor(&spec, &set)?;
    let doc = json!({
        "labels": labels.labels(),
        "model": serde_json::from_str::<serde_json::Value>(&model.to_json()?)?,
    });
    emit(
        cli.out.as_deref(),
        &format!("{}\n", serde_json::to_string(&doc)?),
    )
}

fn load_model(path: &Path) -> Result<(EmbeddingModel, NodeIdMap)> {
    let doc: serde_json::Value = serde_json::from_str(&read_file(path)?)?;
    let labels: Vec<String> = serde_json::from_value(doc["labels"].clone())?;
    let model = EmbeddingModel::from_json(&doc["model"].to_string())?;
    let map = NodeIdMap::from_labels(&labels)?;
    if map.len() != model.universe_size() {
        return Err(Error::Validation(format!(
            "{}: {} labels for a model over {} nodes",
            path.display(),
            map.len(),
            model.universe_size()
        )));
    }
    Ok((model, map))
}

fn common_length(set: &CascadeSet) -> Result<usize> {
    let l = set.cascades()[0].len();
    if set.iter().any(|c| c.len() != l) {
        return Err(Error::Validation(
            "test cascades must share one length".into(),
        ));
    }
    Ok(l)
}

fn evaluate(cli: &Cli, args: &Evaluate) -> Result<()> {
    let (preds, truths, known) = match (&args.model, &args.predictions) {
        (Some(path), _) => {
            let (model, mut map) = load_model(path)?;
            let known = map.len();
            let truths = dataio::load_cascades_into(&args.cascades, &mut map)?;
            let preds = truths
                .iter()
                .map(|c| {
                    if c.source() >= known {
                        return Err(Error::Validation(format!(
                            "source '{}' was not seen in training",
                            map.external(c.source()).unwrap_or("?")
                        )));
                    }
                    model.predict_all(c.source())
                })
                .collect::<Result<Vec<_>>>()?;
            (preds, CascadeSet::new(truths, map.len())?, known)
        }
        (None, Some(path)) => {
            let (truths, map) = dataio::load_cascades(&args.cascades)?;
            let preds = dataio::load_external_predictions(path, &map)?;
            let known = map.len();
            (preds, truths, known)
        }
        (None, None) => unreachable!("clap requires --model or --predictions"),
    };
    let l = common_length(&truths)?;
    let n = args.network_size.unwrap_or(known);
    let eval = EvalResult::evaluate(truths.cascades(), &preds, args.k, n, l)?;
    let report = json!({
        "map": eval.map_value,
        "smap": eval.smap_value,
        "N": n,
        "L": l,
        "cascades": truths.len(),
        "per_cascade_ap": eval.per_cascade_ap,
    });
    emit(
        cli.out.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )
}

fn sweep(cli: &Cli) -> Result<()> {
    let mut plan: ExperimentPlan =
        config(cli)?.ok_or_else(|| Error::Validation("sweep needs --config <plan.json>".into()))?;
    if let Some(s) = cli.seed {
        plan.seed = s;
    }
    plan.strict |= cli.strict;
    let outcome = harness::run_sweep(&plan)?;
    emit(
        cli.out.as_deref(),
        &harness::format_points_csv(&outcome.points)?,
    )?;
    for f in &outcome.failures {
        eprintln!(
            "{}",
            json!({ "cell": f.cell, "error": f.category, "message": f.message })
        );
    }
    if let (Some(out), false) = (&cli.out, outcome.failures.is_empty()) {
        let mut path = out.clone().into_os_string();
        path.push(".failures.json");
        emit(
            Some(Path::new(&path)),
            &format!("{}\n", serde_json::to_string_pretty(&outcome.failures)?),
        )?;
    }
    Ok(())
}

fn fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let prefix = cli
        .out
        .as_deref()
        .ok_or_else(|| Error::Validation("fit needs --out <prefix>".into()))?;
    let outputs = harness::fit_and_plot(&args.input, args.target.into(), prefix)?;
    print!("{}", harness::format_curves_json(&outputs.curves)?);
    Ok(())
}

fn plot(cli: &Cli, args: &PlotArgs) -> Result<()> {
    let points = harness::load_points_csv(&args.input)?;
    let curves = match &args.curves {
        Some(p) => harness::parse_curves_json(&read_file(p)?)?,
        None => Vec::new(),
    };
    emit(
        cli.out.as_deref(),
        &harness::render_plot(&points, &curves, args.target.into()),
    )
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenGraph(a) => gen_graph(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Entropy { cascades } => entropy(cli, cascades),
        Command::Train(a) => train(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Sweep => sweep(cli),
        Command::Fit(a) => fit(cli, a),
        Command::Plot(a) => plot(cli, a),
    }
}

fn exit_code(category: &str) -> u8 {
    match category {
        "validation" => 3,
        "domain" => 4,
        "parse" | "csv" | "json" => 5,
        "io" => 6,
        "generation" => 7,
        "convergence" | "diverged" => 8,
        "insufficient-data" => 9,
        "unsupported" => 10,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("{}", json!({ "error": category, "message": e.to_string() }));
            ExitCode::from(exit_code(category))
        }
    }
}
