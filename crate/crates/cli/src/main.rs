use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use ontorient::experiments::{emit_report, emit_summary, run_sweep, ExperimentConfig, SweepKind};
use ontorient::graph::{duplicate_graph, generate_synthetic_graph, parse_triples, Graph, NodeId};
use ontorient::orientation::RotationModel;
use ontorient::pipeline::{align_spaces, run_pipeline, EmbeddingParams};
use ontorient::{
    apply_rotation, evaluate, generate_walks, matcher::match_nearest, train, Alignment,
    EmbeddingSpace, Side, TripleFormat, WalkConfig, WalkCorpus,
};

const USAGE_EXIT: u8 = 2;

#[derive(Parser)]
#[command(name = "ontorient", version, about = "Graph matching by embedding rotation")]
struct Cli {
    /// Worker threads; 1 forces the sequential order everywhere.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// Log at info level (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random directed graph, optionally with a renamed copy.
    Generate(GenerateArgs),
    /// Write random walks over a graph, one walk per line.
    Walk(WalkArgs),
    /// Train skip-gram embeddings from a walk file.
    Embed(EmbedArgs),
    /// Fit the rotation between two embedding spaces from anchor pairs.
    Rotate(RotateArgs),
    /// Nearest-neighbor matching between two spaces.
    Match(MatchArgs),
    /// Precision, recall and F1 of an alignment against a reference.
    Evaluate(EvaluateArgs),
    /// Walk, embed, rotate and match two graphs in one go.
    Pipeline(PipelineArgs),
    /// Run one of the synthetic sweeps and write its CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    nodes: u64,
    /// Mean out-degree of the Poisson degree distribution.
    #[arg(long, default_value_t = 4.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: TripleFormat,
    /// Also write a copy with every node renamed by this suffix.
    #[arg(long, requires = "duplicate_out")]
    duplicate_suffix: Option<String>,
    #[arg(long, requires = "duplicate_suffix")]
    duplicate_out: Option<PathBuf>,
    /// Reference alignment between the graph and its copy.
    #[arg(long = "ref", requires = "duplicate_suffix")]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct GraphInput {
    #[arg(long, default_value = "tsv")]
    format: TripleFormat,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, default_value_t = WalkConfig::default().walks_per_node)]
    walks: usize,
    #[arg(long, default_value_t = WalkConfig::default().depth)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainingArgs {
    #[arg(long, default_value_t = EmbeddingParams::default().dimension)]
    dimension: usize,
    #[arg(long, default_value_t = EmbeddingParams::default().window)]
    window: usize,
    #[arg(long, default_value_t = EmbeddingParams::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = EmbeddingParams::default().negatives)]
    negatives: usize,
    #[arg(long, default_value_t = EmbeddingParams::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = EmbeddingParams::default().min_count)]
    min_count: u64,
    /// Frequent-token downsampling threshold; 0 disables.
    #[arg(long, default_value_t = EmbeddingParams::default().subsample)]
    subsample: f64,
    /// Always use the full window instead of a random width per center.
    #[arg(long)]
    fixed_window: bool,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    walks: PathBuf,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RotateArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    anchors: PathBuf,
    /// Rotation model output.
    #[arg(long)]
    out: PathBuf,
    /// Centered source space output.
    #[arg(long)]
    source_out: Option<PathBuf>,
    /// Centered and rotated target space output.
    #[arg(long)]
    target_out: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Apply this rotation model first; without it the spaces are taken as
    /// already aligned.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Restrict source candidates to the nodes of this graph.
    #[arg(long)]
    source_graph: Option<PathBuf>,
    /// Restrict target candidates to the nodes of this graph.
    #[arg(long)]
    target_graph: Option<PathBuf>,
    #[command(flatten)]
    input: GraphInput,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predicted: PathBuf,
    #[arg(long)]
    reference: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    anchors: PathBuf,
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, default_value_t = EmbeddingParams::default().walks_per_node)]
    walks: usize,
    #[arg(long, default_value_t = EmbeddingParams::default().depth)]
    depth: usize,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Reference alignment to score the prediction against.
    #[arg(long)]
    eval: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// training-size, noise or heterogeneity.
    #[arg(long)]
    sweep: SweepKind,
    /// Key = value config file; built-in full-size defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides master_seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Errors that should exit with the usage status.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn require_file(path: &Path, flag: &str) -> Result<()> {
    if !path.is_file() {
        return Err(UsageError(format!("--{flag}: no such file {}", path.display())).into());
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn read_graph(path: &Path, format: TripleFormat) -> Result<Graph> {
    let parsed =
        parse_triples(open(path)?, format).with_context(|| format!("reading {}", path.display()))?;
    if parsed.skipped_literals > 0 {
        info!("{}: skipped {} literal triples", path.display(), parsed.skipped_literals);
    }
    Ok(parsed.graph)
}

fn read_alignment(path: &Path) -> Result<Alignment> {
    Alignment::read_tsv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn read_space(path: &Path) -> Result<EmbeddingSpace> {
    EmbeddingSpace::read_text(open(path)?).with_context(|| format!("reading {}", path.display()))
}

impl TrainingArgs {
    fn params(&self, walks_per_node: usize, depth: usize) -> EmbeddingParams {
        EmbeddingParams {
            walks_per_node,
            depth,
            dimension: self.dimension,
            window: self.window,
            epochs: self.epochs,
            negatives: self.negatives,
            learning_rate: self.learning_rate,
            min_count: self.min_count,
            subsample: self.subsample,
            shrink_window: !self.fixed_window,
        }
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let g = generate_synthetic_graph(a.nodes as usize, a.lambda, a.seed)?;
    g.write(create(&a.out)?, a.format)?;
    println!("nodes={} triples={}", g.node_count(), g.triple_count());
    if let (Some(suffix), Some(dup_out)) = (&a.duplicate_suffix, &a.duplicate_out) {
        let (copy, reference) = duplicate_graph(&g, suffix)?;
        copy.write(create(dup_out)?, a.format)?;
        if let Some(path) = &a.reference {
            reference.write_tsv(create(path)?)?;
        }
        println!("copy nodes={} reference={}", copy.node_count(), reference.len());
    }
    Ok(())
}

fn cmd_walk(a: &WalkArgs) -> Result<()> {
    require_file(&a.graph, "graph")?;
    let g = read_graph(&a.graph, a.input.format)?;
    let cfg = WalkConfig {
        walks_per_node: a.walks,
        depth: a.depth,
        seed: a.seed,
    };
    let corpus = generate_walks(&g, &cfg)?;
    corpus.write_text(create(&a.out)?)?;
    println!("walks={} tokens={}", corpus.walk_count(), corpus.token_count());
    Ok(())
}

fn cmd_embed(a: &EmbedArgs) -> Result<()> {
    require_file(&a.walks, "walks")?;
    let corpus = WalkCorpus::read_text(open(&a.walks)?)?;
    let cfg = a.training.params(0, 0).training_config(a.seed);
    let space = train(&corpus, &cfg)?;
    space.write_text(create(&a.out)?)?;
    println!("vectors={} dimension={}", space.len(), space.dimension());
    Ok(())
}

fn cmd_rotate(a: &RotateArgs) -> Result<()> {
    require_file(&a.source, "source")?;
    require_file(&a.target, "target")?;
    require_file(&a.anchors, "anchors")?;
    let src = read_space(&a.source)?;
    let tgt = read_space(&a.target)?;
    let anchors = read_alignment(&a.anchors)?;
    let aligned = align_spaces(&src, &tgt, &anchors)?;
    aligned.model.write_text(create(&a.out)?)?;
    if let Some(p) = &a.source_out {
        aligned.source.write_text(create(p)?)?;
    }
    if let Some(p) = &a.target_out {
        aligned.target.write_text(create(p)?)?;
    }
    let d = &aligned.model.diagnostics;
    println!(
        "anchors={} skipped={} rank={} det={:.6}",
        d.anchor_count,
        aligned.skipped_anchors.len(),
        d.rank,
        d.determinant
    );
    Ok(())
}

fn candidates(graph: Option<&PathBuf>, space: &EmbeddingSpace, format: TripleFormat) -> Result<Vec<NodeId>> {
    match graph {
        Some(p) => {
            require_file(p, "source-graph/target-graph")?;
            Ok(read_graph(p, format)?.nodes().to_vec())
        }
        None => space
            .tokens()
            .iter()
            .map(|t| NodeId::new(t.as_str()).map_err(Into::into))
            .collect(),
    }
}

fn cmd_match(a: &MatchArgs) -> Result<()> {
    require_file(&a.source, "source")?;
    require_file(&a.target, "target")?;
    let mut src = read_space(&a.source)?;
    let mut tgt = read_space(&a.target)?;
    if let Some(p) = &a.model {
        require_file(p, "model")?;
        let model = RotationModel::read_text(open(p)?)?;
        src = apply_rotation(&model, &src, Side::Source)?;
        tgt = apply_rotation(&model, &tgt, Side::Target)?;
    }
    let s_cand = candidates(a.source_graph.as_ref(), &src, a.input.format)?;
    let t_cand = candidates(a.target_graph.as_ref(), &tgt, a.input.format)?;
    let outcome = match_nearest(&src, &tgt, &s_cand, &t_cand)?;
    outcome.alignment.write_tsv(create(&a.out)?)?;
    println!(
        "matched={} skipped_sources={} skipped_targets={}",
        outcome.alignment.len(),
        outcome.skipped_sources,
        outcome.skipped_targets
    );
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    require_file(&a.predicted, "predicted")?;
    require_file(&a.reference, "reference")?;
    let report = evaluate(&read_alignment(&a.predicted)?, &read_alignment(&a.reference)?);
    println!("{report}");
    Ok(())
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<()> {
    require_file(&a.source, "source")?;
    require_file(&a.target, "target")?;
    require_file(&a.anchors, "anchors")?;
    if let Some(p) = &a.eval {
        require_file(p, "eval")?;
    }
    let source = read_graph(&a.source, a.input.format)?;
    let target = read_graph(&a.target, a.input.format)?;
    let anchors = read_alignment(&a.anchors)?;
    let params = a.training.params(a.walks, a.depth);
    let out = run_pipeline(&source, &target, &anchors, &params, a.seed)?;
    out.predicted.write_tsv(create(&a.out)?)?;
    println!(
        "matched={} anchors_used={} anchors_skipped={}",
        out.predicted.len(),
        out.aligned.model.diagnostics.anchor_count,
        out.aligned.skipped_anchors.len()
    );
    if let Some(p) = &a.eval {
        println!("{}", evaluate(&out.predicted, &read_alignment(p)?));
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            require_file(p, "config")?;
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| UsageError(format!("--config: {e}")))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    let result = run_sweep(a.sweep, &cfg)?;
    emit_report(&result, create(&a.out)?)?;
    emit_summary(&result, io::stdout().lock())?;
    Ok(())
}

fn configure_threads(threads: Option<u16>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .context("configuring the thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Walk(a) => cmd_walk(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Rotate(a) => cmd_rotate(a),
        Command::Match(a) => cmd_match(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref::<ontorient::Error>(),
                Some(ontorient::Error::InvalidArgument(_))
            )
    });
    if usage {
        USAGE_EXIT
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
