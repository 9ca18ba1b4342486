//! The `qperiod` command line.
//!
//! Exit codes: 0 success, 1 I/O or data error, 2 training did not converge,
//! 3 period estimation failed, 64 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{distribution_distance, echo_report, eigenphase_histogram, Histogram};
use crate::circuit::{
    estimate_period, generate_periodic_function, inverse_qft_matrix, output_distribution, reference_distribution,
};
use crate::classifier::{
    build_corpus, evaluate, flatten_unitary, split_corpus, train_classifier, ClassifierTrainConfig, CorpusConfig,
    Example, LearnedRun, Mlp, MlpConfig, Split,
};
use crate::error::{Error, Result};
use crate::io::{
    load_corpus, read_json, read_mlp, read_unitary, write_csv, write_csv_to, write_json, write_mlp, write_unitary,
    CorpusEntry, CorpusManifest, Provenance, RunManifest,
};
use crate::linalg::{derive_seed, haar_random_unitary, ComplexMatrix};
use crate::optim::AdamConfig;
use crate::training::{
    dataset_periods, default_dataset_size, generate_functions, initialize_parameters, loss, train_from, LossConfig,
    TargetKind, TrainConfig, TrainingDataset,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_ESTIMATION: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "qperiod",
    version,
    about = "Learn and analyse post-processing unitaries for quantum period finding"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for written artifacts.
    #[arg(long, global = true, env = "QPERIOD_OUT_DIR", default_value = "qperiod-out")]
    pub out_dir: PathBuf,
    /// Width of the X register.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=10))]
    pub qubits: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a post-processing matrix on random periodic functions.
    Train(TrainArgs),
    /// Per-period loss and distance to the QFT output for a stored matrix.
    Eval(EvalArgs),
    /// Loschmidt echoes of a stored matrix against a reference.
    Echo(EchoArgs),
    /// Eigenphase histogram of a matrix or of Haar samples.
    Spectrum(SpectrumArgs),
    /// Run the circuit on a random function of period r and estimate r.
    Period(PeriodArgs),
    /// Build a labelled corpus of learned and Haar-random matrices.
    Corpus(CorpusArgs),
    /// Train the learned-vs-random classifier on a corpus.
    ClassifyTrain(ClassifyTrainArgs),
    /// Evaluate a trained classifier.
    ClassifyEval(ClassifyEvalArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset_size: Option<usize>,
    #[arg(long, default_value_t = 5000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.99)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Weight of the unitarity penalty.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// qft, single-peak, step or gaussian.
    #[arg(long, default_value = "qft")]
    pub target: TargetKind,
    /// Width of the gaussian target, in outcome bins.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub ancilla: u32,
    #[arg(long, default_value_t = 1e-6)]
    pub loss_threshold: f64,
    /// Largest training period; defaults to 2^(n-1).
    #[arg(long)]
    pub max_period: Option<usize>,
    /// File stem for the written artifacts.
    #[arg(long, default_value = "run")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Periods to test; defaults to 1..=2^n.
    #[arg(long, value_delimiter = ',')]
    pub periods: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EchoArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// `qft` or the path of another matrix file.
    #[arg(long, default_value = "qft")]
    pub reference: String,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, conflicts_with = "haar_samples", required_unless_present = "haar_samples")]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub haar_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeriodArgs {
    /// Post-processing matrix; the inverse QFT when absent.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub r: usize,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    #[arg(long)]
    pub dataset_size: Option<usize>,
    #[arg(long, default_value_t = 5000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub max_retries: usize,
}

#[derive(Debug, Args)]
pub struct ClassifyTrainArgs {
    /// Corpus manifest written by `corpus`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Hidden layer widths; defaults to (2 * input, 512).
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct ClassifyEvalArgs {
    /// Network file written by `classify-train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus manifest; only `--score-qft` is reported without one.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Split file; defaults to `split.json` beside the model. The test part
    /// is evaluated, or the whole corpus when no split exists.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Also score the inverse QFT matrix.
    #[arg(long)]
    pub score_qft: bool,
}

/// Parses `args` (program name first) and runs the command, writing
/// results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Estimation(_) => EXIT_ESTIMATION,
                Error::Diverged { .. } => EXIT_NOT_CONVERGED,
                _ => EXIT_ERROR,
            }
        }
    }
}

pub fn main() -> std::process::ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::ExitCode::from(code)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Train(a) => cmd_train(g, a, out, err),
        Command::Eval(a) => cmd_eval(g, a, out),
        Command::Echo(a) => cmd_echo(g, a, out),
        Command::Spectrum(a) => cmd_spectrum(g, a, out),
        Command::Period(a) => cmd_period(g, a, out, err),
        Command::Corpus(a) => cmd_corpus(g, a, out, err),
        Command::ClassifyTrain(a) => cmd_classify_train(g, a, out, err),
        Command::ClassifyEval(a) => cmd_classify_eval(a, out),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn emit_csv<T: Serialize>(rows: &[T], to: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match to {
        Some(path) => write_csv(path, rows),
        None => write_csv_to(out, rows),
    }
}

/// Register width of a stored matrix, checked against `--qubits` if given.
fn matrix_qubits(m: &ComplexMatrix, qubits: Option<u32>, path: &Path) -> Result<u32> {
    let q = m
        .qubits()
        .ok_or_else(|| Error::DimensionMismatch(format!("{} is not a 2^n x 2^n matrix", path.display())))?;
    match qubits {
        Some(n) if n > q => Err(Error::DimensionMismatch(format!(
            "{} acts on {q} qubits, --qubits is {n}",
            path.display()
        ))),
        Some(n) => Ok(n),
        None => Ok(q),
    }
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

struct PersistedRun<'a> {
    dir: &'a Path,
    name: &'a str,
    matrix: &'a ComplexMatrix,
    dataset: &'a TrainingDataset,
    history: &'a [f64],
}

/// Writes matrix, dataset, loss history and manifest; returns the manifest.
fn persist_run(p: PersistedRun<'_>, mut manifest: RunManifest) -> Result<RunManifest> {
    manifest.matrix_path = format!("{}.umat", p.name);
    manifest.dataset_path = format!("{}_dataset.json", p.name);
    manifest.loss_history_path = format!("{}_loss.csv", p.name);
    write_unitary(&p.dir.join(&manifest.matrix_path), p.matrix)?;
    write_json(&p.dir.join(&manifest.dataset_path), &p.dataset.functions())?;
    let rows: Vec<LossRow> = p
        .history
        .iter()
        .enumerate()
        .map(|(epoch, &loss)| LossRow { epoch, loss })
        .collect();
    write_csv(&p.dir.join(&manifest.loss_history_path), &rows)?;
    write_json(&p.dir.join(format!("{}.json", p.name)), &manifest)?;
    Ok(manifest)
}

fn cmd_train(g: &GlobalArgs, a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let n = g.qubits.unwrap_or(3);
    let size = a.dataset_size.unwrap_or_else(|| default_dataset_size(n));
    if size == 0 {
        return Err(Error::InvalidArgument("--dataset-size must be at least 1".into()));
    }
    let max_period = a.max_period.unwrap_or(1 << (n - 1));
    let dataset_seed = derive_seed(g.seed, 1);
    let functions = generate_functions(n, n, size, max_period, dataset_seed)?;
    let loss_cfg = LossConfig {
        k: a.k,
        target: a.target,
        gaussian_sigma: a.sigma,
    };
    let dataset = TrainingDataset::new(functions, &loss_cfg, a.ancilla)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        seed: g.seed,
        adam: AdamConfig {
            alpha: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
        },
        loss: loss_cfg,
    };
    let report_every = (a.epochs / 10).max(1);
    let start = initialize_parameters(dataset.qubits(), cfg.seed);
    let outcome = train_from(&dataset, &cfg, start, |epoch, l| {
        if (epoch + 1) % report_every == 0 {
            let _ = writeln!(err, "epoch {:>6}  mean loss {l:.3e}", epoch + 1);
        }
    })?;
    let final_loss = dataset.mean_loss(&outcome.matrix, a.k)?;
    let defect = outcome.matrix.unitarity_defect()?;
    let converged = final_loss <= a.loss_threshold;
    let manifest = RunManifest {
        n,
        m: n,
        ancilla: a.ancilla,
        target: a.target.to_string(),
        k: a.k,
        gaussian_sigma: a.sigma,
        alpha: a.lr,
        beta1: a.beta1,
        beta2: a.beta2,
        epsilon: a.epsilon,
        epochs: a.epochs,
        seed: g.seed,
        dataset_seed,
        dataset_size: size,
        periods: dataset_periods(size, max_period, dataset_seed),
        dataset_path: String::new(),
        matrix_path: String::new(),
        loss_history_path: String::new(),
        final_loss,
        unitarity_defect: defect,
        loss_threshold: a.loss_threshold,
        converged,
    };
    let manifest = persist_run(
        PersistedRun {
            dir: &g.out_dir,
            name: &a.name,
            matrix: &outcome.matrix,
            dataset: &dataset,
            history: &outcome.loss_history,
        },
        manifest,
    )?;
    writeln!(out, "final_loss={final_loss:.6e}").map_err(io_err)?;
    writeln!(out, "unitarity_defect={defect:.6e}").map_err(io_err)?;
    writeln!(out, "matrix={}", g.out_dir.join(&manifest.matrix_path).display()).map_err(io_err)?;
    if converged {
        Ok(EXIT_OK)
    } else {
        writeln!(
            err,
            "did not converge: final loss {final_loss:.3e} > {:.1e}",
            a.loss_threshold
        )
        .map_err(io_err)?;
        Ok(EXIT_NOT_CONVERGED)
    }
}

#[derive(Serialize)]
struct EvalRow {
    period: usize,
    loss: f64,
    distance: f64,
}

fn cmd_eval(g: &GlobalArgs, a: &EvalArgs, out: &mut dyn Write) -> Result<u8> {
    let m3 = read_unitary(&a.matrix)?;
    let total = m3.qubits().unwrap_or(0);
    let n = g.qubits.unwrap_or(total);
    if n == 0 || n > total {
        return Err(Error::DimensionMismatch(format!(
            "{} acts on {total} qubits, cannot evaluate on {n}",
            a.matrix.display()
        )));
    }
    let periods: Vec<usize> = if a.periods.is_empty() {
        (1..=1usize << n).collect()
    } else {
        a.periods.clone()
    };
    let mut rows = Vec::with_capacity(periods.len());
    for (i, &r) in periods.iter().enumerate() {
        let f = generate_periodic_function(n, n, r, derive_seed(g.seed, i as u64))?;
        let reference = reference_distribution(&f);
        let p_a = output_distribution(&m3, &f)?;
        rows.push(EvalRow {
            period: r,
            loss: loss(&m3, &f, &reference, a.k)?,
            distance: distribution_distance(&p_a, &reference)?,
        });
    }
    emit_csv(&rows, a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn cmd_echo(g: &GlobalArgs, a: &EchoArgs, out: &mut dyn Write) -> Result<u8> {
    let subject = read_unitary(&a.matrix)?;
    let n = matrix_qubits(&subject, g.qubits, &a.matrix)?;
    let reference = if a.reference == "qft" {
        inverse_qft_matrix(n)
    } else {
        read_unitary(Path::new(&a.reference))?
    };
    let report = echo_report(&subject, &reference, n)?.labelled(a.matrix.display().to_string(), &a.reference);
    write_csv_to(out, &[report])?;
    Ok(EXIT_OK)
}

fn cmd_spectrum(g: &GlobalArgs, a: &SpectrumArgs, out: &mut dyn Write) -> Result<u8> {
    let hist = match (&a.matrix, a.haar_samples) {
        (Some(path), _) => {
            let m = read_unitary(path)?;
            eigenphase_histogram(&m)?
        }
        (None, Some(samples)) => {
            let n = g.qubits.unwrap_or(5);
            let mut total = Histogram::phases();
            for i in 0..samples {
                let u = haar_random_unitary(n, derive_seed(g.seed, i as u64));
                total.merge(&eigenphase_histogram(&u)?)?;
            }
            total
        }
        (None, None) => unreachable!("clap requires one of --matrix and --haar-samples"),
    };
    emit_csv(&hist.rows(), a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn cmd_period(g: &GlobalArgs, a: &PeriodArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let (m3, n) = match &a.matrix {
        Some(path) => {
            let m = read_unitary(path)?;
            let n = matrix_qubits(&m, g.qubits, path)?;
            (m, n)
        }
        None => {
            let n = g.qubits.unwrap_or(5);
            (inverse_qft_matrix(n), n)
        }
    };
    let f = generate_periodic_function(n, n, a.r, g.seed)?;
    let estimate = estimate_period(&output_distribution(&m3, &f)?, n)?;
    writeln!(out, "{estimate}").map_err(io_err)?;
    if estimate == a.r {
        Ok(EXIT_OK)
    } else {
        writeln!(err, "estimated period {estimate} differs from the true period {}", a.r).map_err(io_err)?;
        Ok(EXIT_ESTIMATION)
    }
}

fn learned_manifest(cfg: &CorpusConfig, run: &LearnedRun) -> RunManifest {
    let max_period = 1usize << (cfg.n - 1);
    RunManifest {
        n: cfg.n,
        m: cfg.n,
        ancilla: 0,
        target: cfg.train.loss.target.to_string(),
        k: cfg.train.loss.k,
        gaussian_sigma: cfg.train.loss.gaussian_sigma,
        alpha: cfg.train.adam.alpha,
        beta1: cfg.train.adam.beta1,
        beta2: cfg.train.adam.beta2,
        epsilon: cfg.train.adam.epsilon,
        epochs: cfg.train.epochs,
        seed: run.seed,
        dataset_seed: run.functions_seed,
        dataset_size: cfg.dataset_size,
        periods: dataset_periods(cfg.dataset_size, max_period, run.functions_seed),
        dataset_path: String::new(),
        matrix_path: String::new(),
        loss_history_path: String::new(),
        final_loss: run.final_loss,
        unitarity_defect: run.defect,
        loss_threshold: cfg.threshold,
        converged: true,
    }
}

fn cmd_corpus(g: &GlobalArgs, a: &CorpusArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let n = g.qubits.unwrap_or(4);
    let mut cfg = CorpusConfig::new(n, a.per_class, g.seed);
    if let Some(size) = a.dataset_size {
        cfg.dataset_size = size;
    }
    cfg.train.epochs = a.epochs;
    cfg.threshold = a.threshold;
    cfg.max_retries = a.max_retries;
    writeln!(err, "training {} matrices on {n} qubits", a.per_class).map_err(io_err)?;
    let (corpus, runs) = build_corpus(&cfg)?;
    let dir = g.out_dir.join("corpus");
    let mut entries = Vec::with_capacity(corpus.len());
    for (i, run) in runs.iter().enumerate() {
        let name = format!("learned_{i:05}");
        let functions = generate_functions(n, n, cfg.dataset_size, 1 << (n - 1), run.functions_seed)?;
        let dataset = TrainingDataset::new(functions, &cfg.train.loss, 0)?;
        let manifest = persist_run(
            PersistedRun {
                dir: &dir,
                name: &name,
                matrix: &run.matrix,
                dataset: &dataset,
                history: &run.loss_history,
            },
            learned_manifest(&cfg, run),
        )?;
        entries.push(CorpusEntry {
            matrix_path: manifest.matrix_path,
            label: 1,
            provenance: Provenance {
                seed: run.seed,
                training: format!("{name}.json"),
            },
        });
    }
    for (i, e) in corpus.entries.iter().filter(|e| e.label == 0).enumerate() {
        let path = format!("haar_{i:05}.umat");
        write_unitary(&dir.join(&path), &e.matrix)?;
        entries.push(CorpusEntry {
            matrix_path: path,
            label: 0,
            provenance: Provenance {
                seed: e.seed,
                training: "haar".into(),
            },
        });
    }
    let manifest_path = dir.join("corpus.json");
    write_json(&manifest_path, &CorpusManifest { n, entries })?;
    writeln!(out, "corpus={}", manifest_path.display()).map_err(io_err)?;
    writeln!(out, "entries={}", corpus.len()).map_err(io_err)?;
    Ok(EXIT_OK)
}

fn cmd_classify_train(g: &GlobalArgs, a: &ClassifyTrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let (manifest, corpus) = load_corpus(&a.corpus)?;
    if corpus.is_empty() {
        return Err(Error::Corpus(format!("{} has no entries", a.corpus.display())));
    }
    let split = split_corpus(&corpus.labels(), derive_seed(g.seed, 1))?;
    let mut net_cfg = MlpConfig::for_qubits(manifest.n, derive_seed(g.seed, 2));
    if !a.hidden.is_empty() {
        net_cfg.hidden_dims = a.hidden.clone();
    }
    let cfg = ClassifierTrainConfig {
        adam: AdamConfig {
            alpha: a.lr,
            ..AdamConfig::default()
        },
        batch_size: a.batch_size,
        max_epochs: a.max_epochs,
        patience: a.patience,
        seed: derive_seed(g.seed, 3),
    };
    let train = corpus.examples(&split.train);
    let validation = corpus.examples(&split.validation);
    let (net, history) = train_classifier(Mlp::new(&net_cfg)?, &train, &validation, &cfg, |m| {
        let _ = writeln!(
            err,
            "epoch {:>3}  train loss {:.4} acc {:.3}  val loss {:.4} acc {:.3}",
            m.epoch + 1,
            m.train_loss,
            m.train_accuracy,
            m.validation_loss,
            m.validation_accuracy
        );
    })?;
    let test = evaluate(&net, &corpus.examples(&split.test))?;
    let model_path = g.out_dir.join("classifier.mlpc");
    write_mlp(&model_path, &net)?;
    write_csv(&g.out_dir.join("classifier_metrics.csv"), &history)?;
    write_json(&g.out_dir.join("split.json"), &SplitFile::new(&a.corpus, split))?;
    writeln!(out, "model={}", model_path.display()).map_err(io_err)?;
    writeln!(out, "test_accuracy={:.6}", test.accuracy).map_err(io_err)?;
    Ok(EXIT_OK)
}

#[derive(Serialize, serde::Deserialize)]
struct SplitFile {
    corpus: String,
    #[serde(flatten)]
    split: Split,
}

impl SplitFile {
    fn new(corpus: &Path, split: Split) -> Self {
        SplitFile {
            corpus: corpus.display().to_string(),
            split,
        }
    }
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    matrix_path: &'a str,
    label: u8,
    score: f64,
}

fn cmd_classify_eval(a: &ClassifyEvalArgs, out: &mut dyn Write) -> Result<u8> {
    let net = read_mlp(&a.model)?;
    if let Some(corpus_path) = &a.corpus {
        let (manifest, corpus) = load_corpus(corpus_path)?;
        if corpus.is_empty() {
            return Err(Error::Corpus(format!("{} has no entries", corpus_path.display())));
        }
        let split_path = a
            .split
            .clone()
            .unwrap_or_else(|| a.model.parent().unwrap_or(Path::new(".")).join("split.json"));
        let indices: Vec<usize> = if split_path.exists() {
            let file: SplitFile = read_json(&split_path)?;
            if let Some(&bad) = file.split.test.iter().find(|&&i| i >= corpus.len()) {
                return Err(Error::Corpus(format!(
                    "split refers to entry {bad} but the corpus has {}",
                    corpus.len()
                )));
            }
            file.split.test
        } else {
            (0..corpus.len()).collect()
        };
        let examples: Vec<Example> = corpus.examples(&indices);
        let result = evaluate(&net, &examples)?;
        writeln!(out, "accuracy={:.6}", result.accuracy).map_err(io_err)?;
        let rows: Vec<ScoreRow<'_>> = indices
            .iter()
            .zip(&result.scores)
            .map(|(&i, &score)| ScoreRow {
                matrix_path: &manifest.entries[i].matrix_path,
                label: corpus.entries[i].label,
                score,
            })
            .collect();
        write_csv_to(&mut *out, &rows)?;
    } else if !a.score_qft {
        return Err(Error::InvalidArgument(
            "nothing to evaluate: give --corpus or --score-qft".into(),
        ));
    }
    if a.score_qft {
        let dim = net.input_dim();
        let n = (0..=10u32).find(|&n| 1usize << (2 * n + 1) == dim).ok_or_else(|| {
            Error::DimensionMismatch(format!("network input of {dim} does not match any register width"))
        })?;
        let score = net.forward(&flatten_unitary(&inverse_qft_matrix(n)))?;
        writeln!(out, "qft_score={score:.6}").map_err(io_err)?;
    }
    Ok(EXIT_OK)
}
