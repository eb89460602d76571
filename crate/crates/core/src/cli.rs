//! Command-line front end: `generate`, `train`, `predict`, `evaluate`,
//! `inspect`.
//!
//! Exit codes: 0 success, 1 usage or I/O, 2 data validation, 3 solver
//! non-convergence (iteration cap or early termination).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::graphdata::{self, Dataset, GeneratorConfig, Metrics};
use crate::infer::{self, Predictions, Strategy};
use crate::learn::{self, OracleKind, Termination, TrainConfig, TrainReport};
use crate::model::{Checkpoint, Hyperparameters, WeightVector, DEFAULT_RHO};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cutlearn", version, about = "Max-margin learning of pairwise graph labelings")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset.
    Generate(GenerateArgs),
    /// Train a weight checkpoint with the cutting-plane learner.
    Train(TrainArgs),
    /// Label every instance of a dataset.
    Predict(PredictArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Dump the pairwise weight matrices of a checkpoint.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 30)]
    pub min_nodes: usize,
    #[arg(long, default_value_t = 30)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 0.5)]
    pub edge_density: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.9)]
    pub affinity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Exact,
    QpboR,
}

impl From<OracleArg> for OracleKind {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Exact => OracleKind::Exact,
            OracleArg::QpboR => OracleKind::QpboR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Auto,
    Exact,
    Trws,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Exact => Strategy::Exact,
            StrategyArg::Trws => Strategy::Trws,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub model: PathBuf,
    /// Per-iteration JSON-lines log; defaults to the model path with
    /// extension `log.jsonl`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Cross-validation report (JSON), written when `--folds` is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    /// Defaults to `rho / 1000`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = OracleArg::Exact)]
    pub oracle: OracleArg,
    /// Rounding heuristic for the qpbo-r oracle (on by default).
    #[arg(long, overrides_with = "no_heuristic")]
    pub heuristic: bool,
    #[arg(long, overrides_with = "heuristic")]
    pub no_heuristic: bool,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Run k-fold cross-validation before fitting the full dataset.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    pub strategy: StrategyArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Predictions file from `predict`.
    #[arg(long, required_unless_present = "model")]
    pub predictions: Option<PathBuf>,
    /// Checkpoint to predict with when no predictions file is given.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    pub strategy: StrategyArg,
    /// Machine-readable metrics (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also report metrics per fold of a seeded k-fold split.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Directory for `pairwise_<feature>.csv` files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => EXIT_USAGE,
            Error::QpNotConverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match cfg.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Train(a) => cmd_train(&a, out, err),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// [`run_with`] on the process arguments and standard streams.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn require_file(path: &Path, what: &str) -> std::result::Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{what} {} does not exist", path.display())))
    }
}

fn require_parent(path: &Path) -> std::result::Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Failure::usage(format!("directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments) {
    let _ = out.write_fmt(text);
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { emit($out, format_args!("{}\n", format_args!($($arg)*))) };
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    require_parent(&a.out)?;
    let cfg = GeneratorConfig {
        label_count: a.classes,
        min_nodes: a.min_nodes,
        max_nodes: a.max_nodes,
        edge_density: a.edge_density,
        noise: a.noise,
        instances: a.instances,
        affinity: a.affinity,
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let data = graphdata::generate_synthetic(&cfg, a.seed)?;
    graphdata::save_dataset(&data, &a.out)?;
    say!(
        out,
        "wrote {}: {} instances, {} nodes, {} edges, K = {}",
        a.out.display(),
        data.len(),
        data.total_nodes(),
        data.total_edges(),
        data.label_count()
    );
    Ok(EXIT_OK)
}

fn train_config(a: &TrainArgs) -> std::result::Result<TrainConfig, Failure> {
    let mut cfg = TrainConfig::with_rho(a.rho);
    cfg.c = a.c;
    if let Some(eps) = a.epsilon {
        cfg.epsilon = eps;
    }
    cfg.oracle = a.oracle.into();
    cfg.heuristic = !a.no_heuristic;
    cfg.max_iterations = a.max_iters;
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(cfg)
}

fn describe_termination(report: &TrainReport, err: &mut dyn Write) -> i32 {
    match report.termination {
        Termination::Converged => EXIT_OK,
        Termination::EarlyTermination {
            iteration,
            violation,
            slack,
        } => {
            say!(
                err,
                "warning: early termination at iteration {iteration}: new violation {violation:.6} is below \
                 the working-set slack {slack:.6}; the separation oracle is not exact"
            );
            EXIT_NOT_CONVERGED
        }
        Termination::MaxIterations => {
            say!(err, "warning: stopped at the iteration cap without reaching the tolerance");
            EXIT_NOT_CONVERGED
        }
    }
}

#[derive(Debug, Serialize)]
struct FoldReport {
    fold: usize,
    train_instances: usize,
    test_instances: usize,
    iterations: usize,
    termination: Termination,
    metrics: Metrics,
}

#[derive(Debug, Serialize)]
struct CrossValidationReport {
    folds: Vec<FoldReport>,
    pooled: Metrics,
}

fn predict_all(w: &WeightVector, data: &Dataset, strategy: Strategy) -> crate::error::Result<Vec<infer::InferenceResult>> {
    use rayon::prelude::*;
    data.instances().par_iter().map(|x| infer::predict(w, x, strategy)).collect()
}

fn cross_validate(
    a: &TrainArgs,
    cfg: &TrainConfig,
    data: &Dataset,
    folds: usize,
    out: &mut dyn Write,
) -> std::result::Result<CrossValidationReport, Failure> {
    let assignment = graphdata::fold_assignment(data.len(), folds, a.seed).map_err(|e| Failure::usage(e.to_string()))?;
    let k = data.label_count();
    let mut pooled = vec![vec![0u64; k]; k];
    let mut reports = Vec::new();
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] != fold).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == fold).collect();
        let train_set = data.subset(&train_idx);
        let test_set = data.subset(&test_idx);
        let (w, report) = learn::train(&train_set, cfg)?;
        let predictions: Vec<Vec<usize>> = predict_all(&w, &test_set, a.strategy.into())?
            .into_iter()
            .map(|r| r.labeling)
            .collect();
        let metrics = graphdata::evaluate(&predictions, &test_set)?;
        for (row, add) in pooled.iter_mut().zip(&metrics.confusion) {
            for (c, v) in row.iter_mut().zip(add) {
                *c += v;
            }
        }
        say!(
            out,
            "fold {fold}: {} train / {} test, {} iterations, accuracy {:.4}",
            train_idx.len(),
            test_idx.len(),
            report.iterations.len(),
            metrics.accuracy
        );
        reports.push(FoldReport {
            fold,
            train_instances: train_idx.len(),
            test_instances: test_idx.len(),
            iterations: report.iterations.len(),
            termination: report.termination,
            metrics,
        });
    }
    let pooled = graphdata::metrics_from_confusion(pooled);
    say!(
        out,
        "cross-validation: accuracy {:.4}, macro precision {:.4}, macro recall {:.4}",
        pooled.accuracy,
        pooled.macro_precision,
        pooled.macro_recall
    );
    Ok(CrossValidationReport { folds: reports, pooled })
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    require_file(&a.data, "dataset")?;
    require_parent(&a.model)?;
    let log_path = a.log.clone().unwrap_or_else(|| a.model.with_extension("log.jsonl"));
    require_parent(&log_path)?;
    if let Some(p) = &a.out {
        require_parent(p)?;
    }
    let cfg = train_config(a)?;
    let data = graphdata::load_dataset(&a.data)?;

    if let Some(folds) = a.folds {
        let report = cross_validate(a, &cfg, &data, folds, out)?;
        if let Some(p) = &a.out {
            write_json(p, &report)?;
        }
    }

    let file = File::create(&log_path).map_err(|e| io_failure(&log_path, e))?;
    let mut log = BufWriter::new(file);
    let mut log_error = None;
    let (w, report) = learn::train_with_observer(&data, &cfg, |record| {
        let line = serde_json::to_string(record).expect("record serializes");
        if let Err(e) = writeln!(log, "{line}") {
            log_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_error {
        return Err(io_failure(&log_path, e));
    }
    log.flush().map_err(|e| io_failure(&log_path, e))?;

    let hyper = Hyperparameters {
        c: cfg.c,
        rho: cfg.rho,
        epsilon: cfg.epsilon,
        oracle: cfg.oracle.name().to_string(),
        heuristic: cfg.heuristic,
    };
    Checkpoint::new(&w, hyper).save(&a.model)?;
    let last = report.iterations.last();
    say!(
        out,
        "trained on {} instances: {} iterations, objective {:.6}, slack {:.6}, violation {:.6}",
        data.len(),
        report.iterations.len(),
        report.final_objective(),
        last.map_or(0.0, |r| r.slack),
        last.map_or(0.0, |r| r.violation)
    );
    say!(out, "wrote {} and {}", a.model.display(), log_path.display());
    Ok(describe_termination(&report, err))
}

fn load_model(path: &Path) -> std::result::Result<WeightVector, Failure> {
    require_file(path, "checkpoint")?;
    Ok(Checkpoint::load(path)?.weights()?)
}

fn check_compatible(w: &WeightVector, data: &Dataset) -> std::result::Result<(), Failure> {
    let pairs = [
        ("label count K", w.label_count(), data.label_count()),
        ("node feature dimension d_n", w.node_dim(), data.node_dim()),
        ("edge feature dimension d_e", w.edge_dim(), data.edge_dim()),
    ];
    for (name, model, file) in pairs {
        if model != file {
            return Err(Failure {
                code: EXIT_DATA,
                message: format!("{name} mismatch: checkpoint has {model}, dataset has {file}"),
            });
        }
    }
    Ok(())
}

fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> CmdResult {
    require_file(&a.data, "dataset")?;
    require_parent(&a.out)?;
    let w = load_model(&a.model)?;
    let data = graphdata::load_dataset(&a.data)?;
    check_compatible(&w, &data)?;
    let strategy: Strategy = a.strategy.into();
    let results = predict_all(&w, &data, strategy)?;
    let exact = results.iter().filter(|r| r.exact).count();
    let total: f64 = results.iter().map(|r| r.energy).sum();
    Predictions::new(strategy, results).save(&a.out)?;
    say!(
        out,
        "labeled {} instances ({} certified optimal), total energy {:.6}; wrote {}",
        data.len(),
        exact,
        total,
        a.out.display()
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    instances: usize,
    nodes: usize,
    #[serde(flatten)]
    metrics: Metrics,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    folds: Vec<Metrics>,
}

fn print_metrics(out: &mut dyn Write, m: &Metrics) {
    say!(out, "accuracy         {:.4}", m.accuracy);
    say!(out, "macro precision  {:.4}", m.macro_precision);
    say!(out, "macro recall     {:.4}", m.macro_recall);
    say!(out, "confusion (rows gold, columns predicted):");
    let width = m.confusion.iter().flatten().map(|c| c.to_string().len()).max().unwrap_or(1).max(3);
    let header: Vec<String> = (0..m.confusion.len()).map(|k| format!("{k:>width$}")).collect();
    say!(out, "{:>5} {}", "", header.join(" "));
    for (g, row) in m.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        say!(out, "{g:>5} {}", cells.join(" "));
    }
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CmdResult {
    require_file(&a.data, "dataset")?;
    if let Some(p) = &a.out {
        require_parent(p)?;
    }
    let data = graphdata::load_dataset(&a.data)?;
    let predictions = match (&a.predictions, &a.model) {
        (Some(p), _) => {
            require_file(p, "predictions file")?;
            Predictions::load(p)?.labelings()
        }
        (None, Some(m)) => {
            let w = load_model(m)?;
            check_compatible(&w, &data)?;
            predict_all(&w, &data, a.strategy.into())?.into_iter().map(|r| r.labeling).collect()
        }
        (None, None) => return Err(Failure::usage("either --predictions or --model is required")),
    };
    let metrics = graphdata::evaluate(&predictions, &data)?;
    let mut folds = Vec::new();
    if let Some(k) = a.folds {
        let assignment = graphdata::fold_assignment(data.len(), k, a.seed).map_err(|e| Failure::usage(e.to_string()))?;
        for fold in 0..k {
            let idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == fold).collect();
            let preds: Vec<Vec<usize>> = idx.iter().map(|&i| predictions[i].clone()).collect();
            let m = graphdata::evaluate(&preds, &data.subset(&idx))?;
            say!(out, "fold {fold}: {} instances, accuracy {:.4}", idx.len(), m.accuracy);
            folds.push(m);
        }
    }
    say!(out, "{} instances, {} nodes", data.len(), data.total_nodes());
    print_metrics(out, &metrics);
    if let Some(p) = &a.out {
        let report = EvaluationReport {
            instances: data.len(),
            nodes: data.total_nodes(),
            metrics,
            folds,
        };
        write_json(p, &report)?;
    }
    Ok(EXIT_OK)
}

/// `K x K` matrix as aligned text, rows indexed by the first endpoint's class.
pub fn format_matrix(matrix: &[f64], k: usize) -> String {
    let cells: Vec<String> = matrix.iter().map(|v| format!("{v:.4}")).collect();
    let width = cells.iter().map(String::len).max().unwrap_or(1);
    let mut text = format!("{:>4}", "");
    for l in 0..k {
        text += &format!(" {l:>width$}");
    }
    text.push('\n');
    for row in 0..k {
        text += &format!("{row:>4}");
        for cell in &cells[row * k..(row + 1) * k] {
            text += &format!(" {cell:>width$}");
        }
        text.push('\n');
    }
    text
}

/// `K x K` matrix as CSV with full precision.
pub fn matrix_csv(matrix: &[f64], k: usize) -> String {
    let mut text = String::from("class");
    for l in 0..k {
        text += &format!(",{l}");
    }
    text.push('\n');
    for row in 0..k {
        text += &row.to_string();
        for v in &matrix[row * k..(row + 1) * k] {
            text += &format!(",{v:?}");
        }
        text.push('\n');
    }
    text
}

fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> CmdResult {
    if let Some(dir) = &a.out {
        if !dir.is_dir() {
            return Err(Failure::usage(format!("directory {} does not exist", dir.display())));
        }
    }
    let w = load_model(&a.model)?;
    let k = w.label_count();
    say!(
        out,
        "K = {k}, d_n = {}, d_e = {}, min pairwise weight {:.6}",
        w.node_dim(),
        w.edge_dim(),
        w.min_constrained()
    );
    for f in 0..w.edge_dim() {
        let matrix = w.pairwise_matrix(f);
        say!(out, "\npairwise weights, edge feature {f}:");
        emit(out, format_args!("{}", format_matrix(&matrix, k)));
        if let Some(dir) = &a.out {
            let path = dir.join(format!("pairwise_{f}.csv"));
            std::fs::write(&path, matrix_csv(&matrix, k)).map_err(|e| io_failure(&path, e))?;
        }
    }
    Ok(EXIT_OK)
}
