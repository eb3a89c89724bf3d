//! Alignment metrics and the synthetic duplicate-graph experiments:
//! anchor-set size, anchor noise and target-graph triple removal.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::alignment::Alignment;
use crate::embedder::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::graph::{duplicate_graph, generate_synthetic_graph, remove_triples, Graph};
use crate::matcher::{inject_noise, split_alignment};
use crate::par;
use crate::pipeline::{embed_graph, embed_pair, match_graphs, EmbeddingParams};
use crate::seed::{derive_seed, derive_seed_index};

/// Suffix appended to node ids of the duplicated graph.
pub const COPY_SUFFIX: &str = "_copy";

/// Micro precision, recall and F1 of a predicted alignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub true_positives: usize,
    pub predicted: usize,
    pub reference: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={} R={} F1={} (tp={} predicted={} reference={})",
            self.precision, self.recall, self.f1, self.true_positives, self.predicted, self.reference
        )
    }
}

/// Compares (source, target) pairs only; relation and confidence are ignored.
pub fn evaluate(predicted: &Alignment, reference: &Alignment) -> EvalReport {
    let gold: HashSet<(&str, &str)> = reference
        .iter()
        .map(|c| (c.source.as_str(), c.target.as_str()))
        .collect();
    let tp = predicted
        .iter()
        .filter(|c| gold.contains(&(c.source.as_str(), c.target.as_str())))
        .count();
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, predicted.len());
    let recall = ratio(tp, reference.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EvalReport {
        true_positives: tp,
        predicted: predicted.len(),
        reference: reference.len(),
        precision,
        recall,
        f1,
    }
}

/// Precision of `predicted` restricted to the source nodes of `reference`.
pub fn subset_precision(predicted: &Alignment, reference: &Alignment) -> f64 {
    let sources: HashSet<&str> = reference.sources().map(|s| s.as_str()).collect();
    evaluate(&predicted.restrict_to_sources(&sources), reference).precision
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub nodes: usize,
    pub lambda: f64,
    pub embedding: EmbeddingParams,
    /// Anchor share for the noise and heterogeneity sweeps.
    pub alpha: f64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub alpha_values: Vec<f64>,
    pub noise_values: Vec<f64>,
    pub removal_values: Vec<f64>,
}

fn tenths() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

impl Default for ExperimentConfig {
    /// Full-size setting: 2500 nodes, λ = 4, d = 100, window 6, depth 6,
    /// 150 walks per node, 5 repetitions.
    fn default() -> Self {
        ExperimentConfig {
            nodes: 2500,
            lambda: 4.0,
            embedding: EmbeddingParams::default(),
            alpha: 0.2,
            repetitions: 5,
            master_seed: 42,
            alpha_values: vec![0.2, 0.4, 0.6, 0.8],
            noise_values: tenths(),
            removal_values: tenths(),
        }
    }
}

impl ExperimentConfig {
    /// Laptop-size setting: 500 nodes, d = 64, depth 4, 50 walks per node,
    /// 3 repetitions.
    pub fn desk() -> Self {
        let mut cfg = ExperimentConfig {
            nodes: 500,
            repetitions: 3,
            ..ExperimentConfig::default()
        };
        cfg.embedding.dimension = 64;
        cfg.embedding.walks_per_node = 50;
        cfg.embedding.depth = 4;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::invalid_argument("nodes must be at least 2"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid_argument("repetitions must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid_argument("alpha must lie in (0, 1)"));
        }
        if self.alpha_values.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::invalid_argument("alpha_values must lie in (0, 1)"));
        }
        for (name, values) in [("noise_values", &self.noise_values), ("removal_values", &self.removal_values)] {
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid_argument(format!("{name} must lie in [0, 1]")));
            }
        }
        self.embedding.training_config(0).validate()?;
        if self.embedding.walks_per_node == 0 || self.embedding.depth == 0 {
            return Err(Error::invalid_argument("walks and depth must be at least 1"));
        }
        Ok(())
    }

    /// Reads `key = value` lines on top of the full-size defaults. `#` starts
    /// a comment; list values are comma separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value)
                .map_err(|e| Error::parse(line_no, format!("{key}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
        }
        fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
            v.split(',').map(|x| num::<f64>(x.trim())).collect()
        }
        let e = &mut self.embedding;
        match key {
            "nodes" => self.nodes = num(value)?,
            "lambda" => self.lambda = num(value)?,
            "dimension" => e.dimension = num(value)?,
            "window" => e.window = num(value)?,
            "depth" => e.depth = num(value)?,
            "walks" => e.walks_per_node = num(value)?,
            "epochs" => e.epochs = num(value)?,
            "negatives" => e.negatives = num(value)?,
            "learning_rate" => e.learning_rate = num(value)?,
            "min_count" => e.min_count = num(value)?,
            "subsample" => e.subsample = num(value)?,
            "shrink_window" => e.shrink_window = num(value)?,
            "alpha" => self.alpha = num(value)?,
            "repetitions" => self.repetitions = num(value)?,
            "master_seed" => self.master_seed = num(value)?,
            "alpha_values" => self.alpha_values = list(value)?,
            "noise_values" => self.noise_values = list(value)?,
            "removal_values" => self.removal_values = list(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Inverse of [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let e = &self.embedding;
        format!(
            "nodes = {}\nlambda = {}\ndimension = {}\nwindow = {}\ndepth = {}\nwalks = {}\n\
             epochs = {}\nnegatives = {}\nlearning_rate = {}\nmin_count = {}\nsubsample = {}\n\
             shrink_window = {}\nalpha = {}\n\
             repetitions = {}\nmaster_seed = {}\nalpha_values = {}\nnoise_values = {}\n\
             removal_values = {}\n",
            self.nodes,
            self.lambda,
            e.dimension,
            e.window,
            e.depth,
            e.walks_per_node,
            e.epochs,
            e.negatives,
            e.learning_rate,
            e.min_count,
            e.subsample,
            e.shrink_window,
            self.alpha,
            self.repetitions,
            self.master_seed,
            list(&self.alpha_values),
            list(&self.noise_values),
            list(&self.removal_values),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub control: f64,
    pub repetition: usize,
    pub train_precision: f64,
    pub test_precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub control_name: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub control: f64,
    pub count: usize,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
    pub test_median: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

impl SweepResult {
    fn new(control_name: &str, mut rows: Vec<SweepRow>) -> Self {
        rows.sort_by(|a, b| {
            a.control
                .total_cmp(&b.control)
                .then(a.repetition.cmp(&b.repetition))
        });
        SweepResult {
            control_name: control_name.to_string(),
            rows,
        }
    }

    /// Distinct control values in ascending order.
    pub fn controls(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.control) {
                out.push(r.control);
            }
        }
        out
    }

    pub fn rows_for(&self, control: f64) -> impl Iterator<Item = &SweepRow> + '_ {
        self.rows.iter().filter(move |r| r.control == control)
    }

    pub fn test_precisions(&self, control: f64) -> Vec<f64> {
        self.rows_for(control).map(|r| r.test_precision).collect()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.controls()
            .into_iter()
            .map(|c| {
                let train: Vec<f64> = self.rows_for(c).map(|r| r.train_precision).collect();
                let test = self.test_precisions(c);
                SummaryRow {
                    control: c,
                    count: test.len(),
                    train_mean: mean(&train),
                    train_std: std_dev(&train),
                    test_mean: mean(&test),
                    test_std: std_dev(&test),
                    test_median: median(&test),
                }
            })
            .collect()
    }
}

/// Writes the per-run CSV: header plus one line per (control, repetition).
pub fn emit_report<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::invalid_argument("sweep result has no rows"));
    }
    writeln!(out, "control,repetition,train_precision,test_precision")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.control, r.repetition, r.train_precision, r.test_precision
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the per-control summary block (mean and sample standard deviation).
pub fn emit_summary<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::invalid_argument("sweep result has no rows"));
    }
    writeln!(
        out,
        "{},runs,train_mean,train_std,test_mean,test_std,test_median",
        result.control_name
    )?;
    for s in result.summary() {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            s.control, s.count, s.train_mean, s.train_std, s.test_mean, s.test_std, s.test_median
        )?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    TrainingSize,
    Noise,
    Heterogeneity,
}

impl SweepKind {
    pub fn control_name(self) -> &'static str {
        match self {
            SweepKind::TrainingSize => "alpha",
            SweepKind::Noise => "noise",
            SweepKind::Heterogeneity => "removed_fraction",
        }
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training-size" => Ok(SweepKind::TrainingSize),
            "noise" => Ok(SweepKind::Noise),
            "heterogeneity" => Ok(SweepKind::Heterogeneity),
            other => Err(Error::invalid_argument(format!("unknown sweep {other:?}"))),
        }
    }
}

pub fn run_sweep(kind: SweepKind, cfg: &ExperimentConfig) -> Result<SweepResult> {
    match kind {
        SweepKind::TrainingSize => run_duplicate_experiment(cfg),
        SweepKind::Noise => run_noise_sweep(cfg),
        SweepKind::Heterogeneity => run_heterogeneity_sweep(cfg),
    }
}

/// Per-repetition streams, all derived from the master seed.
struct RepetitionSeeds {
    graph: u64,
    embed: u64,
    split: u64,
    noise: u64,
    removal: u64,
}

impl RepetitionSeeds {
    fn new(master: u64, repetition: usize) -> Self {
        let rep = derive_seed_index(master, repetition as u64);
        RepetitionSeeds {
            graph: derive_seed(rep, b"graph"),
            embed: derive_seed(rep, b"embed"),
            split: derive_seed(rep, b"split"),
            noise: derive_seed(rep, b"noise"),
            removal: derive_seed(rep, b"removal"),
        }
    }

    fn source_embedding(&self) -> u64 {
        derive_seed(self.embed, b"source")
    }

    fn target_embedding(&self) -> u64 {
        derive_seed(self.embed, b"target")
    }
}

/// A source graph, its duplicate and the identity reference alignment.
struct DuplicateTask {
    seeds: RepetitionSeeds,
    source: Graph,
    target: Graph,
    reference: Alignment,
}

impl DuplicateTask {
    fn new(cfg: &ExperimentConfig, repetition: usize) -> Result<Self> {
        let seeds = RepetitionSeeds::new(cfg.master_seed, repetition);
        let source = generate_synthetic_graph(cfg.nodes, cfg.lambda, seeds.graph)?;
        let (target, reference) = duplicate_graph(&source, COPY_SUFFIX)?;
        Ok(DuplicateTask {
            seeds,
            source,
            target,
            reference,
        })
    }

    /// Rotates with `anchors`, matches every node and scores the train and
    /// test references separately.
    fn score(
        &self,
        target_graph: &Graph,
        source_space: &EmbeddingSpace,
        target_space: &EmbeddingSpace,
        anchors: &Alignment,
        train_reference: &Alignment,
        test_reference: &Alignment,
    ) -> Result<(f64, f64)> {
        let out = match_graphs(&self.source, target_graph, source_space, target_space, anchors)?;
        Ok((
            subset_precision(&out.predicted, train_reference),
            subset_precision(&out.predicted, test_reference),
        ))
    }
}

fn flatten(nested: Vec<Result<Vec<SweepRow>>>) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for r in nested {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Varies the anchor share α over `cfg.alpha_values`.
pub fn run_duplicate_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let nested = par::map_range(cfg.repetitions, |rep| -> Result<Vec<SweepRow>> {
        let task = DuplicateTask::new(cfg, rep)?;
        let (src, tgt) = embed_pair(&task.source, &task.target, &cfg.embedding, task.seeds.embed)?;
        let results = par::map(&cfg.alpha_values, |&alpha| -> Result<SweepRow> {
            let (train, test) = split_alignment(&task.reference, alpha, task.seeds.split)?;
            let (train_p, test_p) = task.score(&task.target, &src, &tgt, &train, &train, &test)?;
            Ok(SweepRow {
                control: alpha,
                repetition: rep,
                train_precision: train_p,
                test_precision: test_p,
            })
        });
        results.into_iter().collect()
    });
    Ok(SweepResult::new(SweepKind::TrainingSize.control_name(), flatten(nested)?))
}

/// Distorts a share of the anchors (α fixed at `cfg.alpha`). Train precision
/// is measured against the undistorted train correspondences.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let nested = par::map_range(cfg.repetitions, |rep| -> Result<Vec<SweepRow>> {
        let task = DuplicateTask::new(cfg, rep)?;
        let (src, tgt) = embed_pair(&task.source, &task.target, &cfg.embedding, task.seeds.embed)?;
        let (train, test) = split_alignment(&task.reference, cfg.alpha, task.seeds.split)?;
        let results = par::map(&cfg.noise_values, |&noise| -> Result<SweepRow> {
            let anchors = inject_noise(&train, noise, task.target.nodes(), task.seeds.noise)?;
            let (train_p, test_p) = task.score(&task.target, &src, &tgt, &anchors, &train, &test)?;
            Ok(SweepRow {
                control: noise,
                repetition: rep,
                train_precision: train_p,
                test_precision: test_p,
            })
        });
        results.into_iter().collect()
    });
    Ok(SweepResult::new(SweepKind::Noise.control_name(), flatten(nested)?))
}

/// Removes a share of the duplicate's triples before it is walked and
/// embedded (α fixed at `cfg.alpha`).
pub fn run_heterogeneity_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let nested = par::map_range(cfg.repetitions, |rep| -> Result<Vec<SweepRow>> {
        let task = DuplicateTask::new(cfg, rep)?;
        let src = embed_graph(&task.source, &cfg.embedding, task.seeds.source_embedding())?;
        let (train, test) = split_alignment(&task.reference, cfg.alpha, task.seeds.split)?;
        let results = par::map(&cfg.removal_values, |&fraction| -> Result<SweepRow> {
            let reduced = remove_triples(&task.target, fraction, task.seeds.removal)?;
            let tgt = embed_graph(&reduced, &cfg.embedding, task.seeds.target_embedding())?;
            let (train_p, test_p) = task.score(&reduced, &src, &tgt, &train, &train, &test)?;
            Ok(SweepRow {
                control: fraction,
                repetition: rep,
                train_precision: train_p,
                test_precision: test_p,
            })
        });
        results.into_iter().collect()
    });
    Ok(SweepResult::new(SweepKind::Heterogeneity.control_name(), flatten(nested)?))
}
