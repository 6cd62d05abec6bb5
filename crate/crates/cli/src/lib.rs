//! Subcommands of the `pivotal` tool. Each command reads its inputs, writes
//! its outputs plus a run manifest into `--out-dir`, and reports a one-line
//! summary. `main` only maps errors to exit codes.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pivotal::classify::{
    ovr_report, predict_proba, stratified_split, train, vectorize, write_roc_csv, EvalReport,
    TrainParams,
};
use pivotal::cohort::{compute_valid_nodes, parse_volume_table, write_volume_table, CohortDataset, Group};
use pivotal::diffgraph::restricted_graphs;
use pivotal::mfs::{
    consensus_pivotal, make_view_weights, run_grid, ConsensusConfig, MfsConfig, PivotalNodeSet,
    SelectionRecord, WeightScheme, SCHEMA_VERSION,
};
use pivotal::subgraph::{apply_cutoff, edges_to_csv, export_dot, group_mean_graph, Aggregation};
use pivotal::synth::{generate_cohort, SynthConfig};
use pivotal::DifferentialGraph;

pub mod manifest;

use manifest::{read_manifest, Run, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pivotal::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("replay mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for usage, configuration and input problems, 3 for numerical
    /// failures, 1 when a replay does not reproduce its outputs.
    pub fn exit_code(&self) -> i32 {
        use pivotal::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Mismatch(_) => 1,
            CliError::Core(e) => match e {
                E::NotSymmetric { .. } | E::NonFinite | E::NoConvergence | E::GridPoint { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pivotal", version, about = "Pivotal brain-network node discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic longitudinal cohort.
    Synth(SynthArgs),
    /// Run the (λ, k) grid for one weighting setting and extract pivotal nodes.
    Select(SelectArgs),
    /// Merge pivotal node files over the same node space.
    Union(UnionArgs),
    /// Score how well the pivotal subgraph separates the groups.
    Classify(ClassifyArgs),
    /// Export group-mean pivotal subgraphs as DOT.
    Viz(VizArgs),
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub cohort: PathBuf,
    /// `subtraction A B`, `group G`, `cohort`, or `explicit` with `--group-weights`.
    #[arg(long, num_args = 1..=3, required = true)]
    pub setting: Vec<String>,
    /// Per-group weights for `--setting explicit`, e.g. `AD=1.5,MCI=-1`.
    #[arg(long, value_delimiter = ',')]
    pub group_weights: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10,100")]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "15,20,25,30,35,40,45,50,55")]
    pub k_grid: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value_t = 41, conflicts_with = "pass_ratio")]
    pub min_pass: usize,
    /// Pass threshold as a fraction of the grid size instead of a count.
    #[arg(long)]
    pub pass_ratio: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Worker threads for the grid; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct UnionArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file stem inside the output directory.
    #[arg(long, default_value = "union")]
    pub name: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub cohort: PathBuf,
    #[arg(long)]
    pub pivotal: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
    /// Additional splits with seeds `seed+1, …` summarised in the report.
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Leave the diagonal products out of the feature vector.
    #[arg(long)]
    pub no_diagonal: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AggregationArg {
    Mean,
    Median,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    #[arg(long)]
    pub cohort: PathBuf,
    #[arg(long)]
    pub pivotal: PathBuf,
    /// A group (`AD`) or a difference of group means (`AD-MCI`).
    #[arg(long, value_delimiter = ',', required = true)]
    pub groups: Vec<String>,
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long, value_enum, default_value = "mean")]
    pub aggregation: AggregationArg,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &argv) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, argv: &[String]) -> CliResult<String> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, argv),
        Command::Select(a) => cmd_select(a, argv),
        Command::Union(a) => cmd_union(a, argv),
        Command::Classify(a) => cmd_classify(a, argv),
        Command::Viz(a) => cmd_viz(a, argv),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn to_json<S: Serialize>(value: &S) -> CliResult<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value).map_err(pivotal::Error::from)?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn parse_group(s: &str) -> CliResult<Group> {
    Group::from_str(s).map_err(|_| CliError::Usage(format!("unknown group {s:?}")))
}

pub fn parse_setting(words: &[String], group_weights: &[String]) -> CliResult<WeightScheme> {
    let w: Vec<&str> = words.iter().map(String::as_str).collect();
    match w.as_slice() {
        ["subtraction", a, b] => Ok(WeightScheme::Subtraction {
            a: parse_group(a)?,
            b: parse_group(b)?,
        }),
        ["group", g] => Ok(WeightScheme::SingleGroup {
            group: parse_group(g)?,
        }),
        ["cohort"] => Ok(WeightScheme::WholeCohort),
        ["explicit"] => {
            let mut weights = std::collections::BTreeMap::new();
            for item in group_weights {
                let (g, w) = item
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("expected GROUP=WEIGHT, got {item:?}")))?;
                let w: f64 = w
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad weight in {item:?}")))?;
                weights.insert(parse_group(g)?, w);
            }
            if weights.is_empty() {
                return Err(CliError::Usage("--setting explicit needs --group-weights".into()));
            }
            Ok(WeightScheme::Explicit { weights })
        }
        _ => Err(CliError::Usage(format!(
            "setting must be `subtraction A B`, `group G` or `cohort`, got {:?}",
            words.join(" ")
        ))),
    }
}

fn load_cohort(run: &mut Run, path: &Path) -> CliResult<CohortDataset> {
    let bytes = run.input(path)?;
    Ok(parse_volume_table(bytes.as_slice())?)
}

fn load_pivotal(run: &mut Run, path: &Path) -> CliResult<PivotalNodeSet> {
    let bytes = run.input(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
    Ok(PivotalNodeSet::from_json(&text)?)
}

/// Graphs restricted to the pivotal file's node space, which must name
/// cohort regions in ascending order.
fn node_space_graphs(
    dataset: &CohortDataset,
    nodes: &PivotalNodeSet,
) -> CliResult<Vec<DifferentialGraph>> {
    let idx = nodes
        .node_names
        .iter()
        .map(|n| {
            dataset
                .region_index(n)
                .ok_or_else(|| CliError::Usage(format!("region {n:?} is not in the cohort")))
        })
        .collect::<CliResult<Vec<usize>>>()?;
    Ok(restricted_graphs(dataset, &idx)?)
}

fn cmd_synth(a: &SynthArgs, argv: &[String]) -> CliResult<String> {
    let mut run = Run::start(&a.out_dir, "synth", argv)?;
    let mut config = match &a.config {
        Some(path) => {
            let bytes = run.input(path)?;
            serde_json::from_slice::<SynthConfig>(&bytes)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let dataset = generate_cohort(&config)?;
    let mut csv = Vec::new();
    write_volume_table(&dataset, &mut csv)?;
    run.write("cohort.csv", &csv)?;
    run.finish("manifest_synth.json", json!({ "synth": config }))?;
    Ok(format!(
        "wrote {} patients x {} regions to {}",
        dataset.num_patients(),
        dataset.num_regions(),
        a.out_dir.join("cohort.csv").display()
    ))
}

#[derive(Serialize)]
struct SelectionDocument<'a> {
    schema_version: u32,
    weighting: &'a str,
    node_space: &'a [String],
    results: Vec<SelectionRecord>,
}

fn cmd_select(a: &SelectArgs, argv: &[String]) -> CliResult<String> {
    let scheme = parse_setting(&a.setting, &a.group_weights)?;
    let mut consensus = ConsensusConfig {
        top_k: a.top_k,
        min_pass_count: a.min_pass,
        lambda_grid: a.lambda_grid.clone(),
        k_grid: a.k_grid.clone(),
    };
    if let Some(r) = a.pass_ratio {
        consensus = consensus.with_pass_ratio(r)?;
    }
    let template = MfsConfig {
        epsilon: a.epsilon,
        tol: a.tol,
        max_iter: a.max_iter,
        ..MfsConfig::new(0.0, 1)
    };
    let mut run = Run::start(&a.out_dir, "select", argv)?;
    let dataset = load_cohort(&mut run, &a.cohort)?;
    let valid = compute_valid_nodes(&dataset)?;
    consensus.validate(valid.len())?;
    let names: Vec<String> = valid.indices.iter().map(|&i| dataset.regions[i].clone()).collect();
    let weighting = make_view_weights(&dataset, &scheme)?;
    let graphs = restricted_graphs::<f64>(&dataset, &valid.indices)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let results = pool.install(|| run_grid(&graphs, &weighting, &consensus, &template))?;
    let pivotal = consensus_pivotal(&results, &consensus, &names, &weighting.description)?;

    let tag = scheme.tag();
    let doc = SelectionDocument {
        schema_version: SCHEMA_VERSION,
        weighting: &weighting.description,
        node_space: &names,
        results: results.iter().map(|r| r.to_record(&names)).collect(),
    };
    run.write(&format!("selections_{tag}.json"), &to_json(&doc)?)?;
    let pivotal_path = run.write(&format!("pivotal_{tag}.json"), (pivotal.to_json()? + "\n").as_bytes())?;
    run.finish(
        &format!("manifest_select_{tag}.json"),
        json!({
            "setting": scheme,
            "weighting": weighting.description,
            "group_weights": weighting.group_weights(&dataset),
            "valid_nodes": valid.len(),
            "consensus": consensus,
            "solver": template,
            "jobs": a.jobs,
        }),
    )?;
    Ok(format!(
        "{} grid points, {} pivotal nodes of {} -> {}",
        results.len(),
        pivotal.len(),
        valid.len(),
        pivotal_path.display()
    ))
}

fn cmd_union(a: &UnionArgs, argv: &[String]) -> CliResult<String> {
    let mut run = Run::start(&a.out_dir, "union", argv)?;
    let sets = a
        .inputs
        .iter()
        .map(|p| load_pivotal(&mut run, p))
        .collect::<CliResult<Vec<_>>>()?;
    let merged = pivotal::mfs::union_pivotal(&sets)?;
    let path = run.write(&format!("pivotal_{}.json", a.name), (merged.to_json()? + "\n").as_bytes())?;
    run.finish(&format!("manifest_union_{}.json", a.name), json!({ "inputs": a.inputs }))?;
    Ok(format!("{} pivotal nodes -> {}", merged.len(), path.display()))
}

#[derive(Serialize)]
struct ClassifyDocument<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a EvalReport,
    train_fraction: f64,
    n_train: usize,
    n_test: usize,
    n_features: usize,
    dropped_features: Vec<&'a str>,
    pivotal_nodes: Vec<&'a str>,
    hyperparameters: &'a TrainParams,
    final_loss: f64,
    /// Macro AUC per split seed when `--repeats` > 1.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    repeats: Vec<RepeatSummary>,
}

#[derive(Serialize)]
struct RepeatSummary {
    seed: u64,
    macro_auc: f64,
    micro_auc: f64,
}

fn cmd_classify(a: &ClassifyArgs, argv: &[String]) -> CliResult<String> {
    let mut run = Run::start(&a.out_dir, "classify", argv)?;
    let dataset = load_cohort(&mut run, &a.cohort)?;
    let nodes = load_pivotal(&mut run, &a.pivotal)?;
    if nodes.is_empty() {
        return Err(CliError::Usage(format!("{}: pivotal set is empty", a.pivotal.display())));
    }
    let graphs = node_space_graphs(&dataset, &nodes)?;
    let features = vectorize(&graphs, &nodes, !a.no_diagonal)?;
    let params = TrainParams {
        l2: a.l2,
        step: a.step,
        max_iter: a.max_iter,
    };
    let evaluate = |seed: u64| -> CliResult<_> {
        let split = stratified_split(&features.labels, a.train_frac, seed)?;
        let model = train(&features.select_rows(&split.train), &params)?;
        let test_set = features.select_rows(&split.test);
        let probs = predict_proba(&model, &test_set.rows)?;
        let report = ovr_report(&probs, &test_set.labels, seed)?;
        Ok((split, model, report))
    };
    let (split, model, report) = evaluate(a.seed)?;
    let mut repeats = Vec::new();
    if a.repeats > 1 {
        repeats.push(RepeatSummary {
            seed: a.seed,
            macro_auc: report.macro_auc,
            micro_auc: report.micro_auc,
        });
        for i in 1..a.repeats {
            let seed = a.seed.wrapping_add(i);
            let (_, _, r) = evaluate(seed)?;
            repeats.push(RepeatSummary {
                seed,
                macro_auc: r.macro_auc,
                micro_auc: r.micro_auc,
            });
        }
    }

    let doc = ClassifyDocument {
        schema_version: SCHEMA_VERSION,
        report: &report,
        train_fraction: a.train_frac,
        n_train: split.train.len(),
        n_test: split.test.len(),
        n_features: features.rows.cols(),
        dropped_features: model
            .dropped_columns
            .iter()
            .map(|&j| features.feature_names[j].as_str())
            .collect(),
        pivotal_nodes: nodes.indices.iter().map(|&i| nodes.node_names[i].as_str()).collect(),
        hyperparameters: &params,
        final_loss: model.loss_trace.last().copied().unwrap_or(f64::NAN),
        repeats,
    };
    run.write("report.json", &to_json(&doc)?)?;
    let curves = report
        .curves
        .iter()
        .map(|(g, c)| (g.as_str().to_string(), c))
        .chain(report.micro_curve.iter().map(|c| ("micro".to_string(), c)));
    for (label, curve) in curves {
        let mut buf = Vec::new();
        write_roc_csv(curve, &mut buf)?;
        run.write(&format!("roc_{label}.csv"), &buf)?;
    }
    run.finish(
        "manifest_classify.json",
        json!({
            "seed": a.seed,
            "train_fraction": a.train_frac,
            "repeats": a.repeats,
            "include_diagonal": !a.no_diagonal,
            "hyperparameters": params,
        }),
    )?;
    Ok(format!(
        "macro AUC {:.4}, micro AUC {:.4} on {} test patients",
        report.macro_auc, report.micro_auc, split.test.len()
    ))
}

fn cmd_viz(a: &VizArgs, argv: &[String]) -> CliResult<String> {
    let mut requests = Vec::new();
    for spec in &a.groups {
        let parts = match spec.split_once('-') {
            Some((x, y)) => (parse_group(x)?, Some(parse_group(y)?)),
            None => (parse_group(spec)?, None),
        };
        requests.push((spec.clone(), parts));
    }
    let aggregation = match a.aggregation {
        AggregationArg::Mean => Aggregation::Mean,
        AggregationArg::Median => Aggregation::Median,
    };
    let mut run = Run::start(&a.out_dir, "viz", argv)?;
    let dataset = load_cohort(&mut run, &a.cohort)?;
    let nodes = load_pivotal(&mut run, &a.pivotal)?;
    let graphs = node_space_graphs(&dataset, &nodes)?;
    let mut edge_total = 0;
    for (label, (g, minus)) in &requests {
        let mut m = group_mean_graph(&graphs, *g, aggregation)?;
        if let Some(h) = minus {
            m.add_scaled(-1.0, &group_mean_graph(&graphs, *h, aggregation)?)?;
        }
        let edges = apply_cutoff(&m, &nodes, a.cutoff)?;
        edge_total += edges.edges.len();
        run.write(&format!("subgraph_{label}.dot"), export_dot(&edges).as_bytes())?;
        run.write(&format!("subgraph_{label}_edges.csv"), edges_to_csv(&edges).as_bytes())?;
    }
    run.finish(
        "manifest_viz.json",
        json!({
            "groups": a.groups,
            "cutoff": a.cutoff,
            "aggregation": format!("{:?}", a.aggregation).to_lowercase(),
        }),
    )?;
    Ok(format!(
        "{} subgraphs, {edge_total} edges -> {}",
        requests.len(),
        a.out_dir.display()
    ))
}

fn cmd_replay(a: &ReplayArgs) -> CliResult<String> {
    let old: RunManifest = read_manifest(&a.manifest)?;
    let cli = Cli::try_parse_from(&old.argv)
        .map_err(|e| CliError::Usage(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("refusing to replay a replay".into()));
    }
    execute(&cli, &old.argv)?;
    let mut mismatched = Vec::new();
    for out in &old.outputs {
        let now = manifest::digest_file(Path::new(&out.path))?;
        if now.sha256 != out.sha256 {
            mismatched.push(out.path.clone());
        }
    }
    if !mismatched.is_empty() {
        return Err(CliError::Mismatch(mismatched.join(", ")));
    }
    Ok(format!("{} outputs reproduced", old.outputs.len()))
}
