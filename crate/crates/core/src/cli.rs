//! Command-line front end. Exit codes: 0 ok, 2 usage or validation,
//! 3 I/O, 4 numerical or estimation failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::format::{self, FormatError, SavedModel};
use crate::harness::{self, CompareMode, CompareOptions, ScenarioSpec};
use crate::logit::{self, FeatureKind, FeatureMap, TrainConfig};
use crate::moments::VarianceEstimator;
use crate::util::fmt_f64;
use crate::GenerativeModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bayeslogit", version, about = "Generative Bayes classifiers vs. logistic regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a labelled dataset from a scenario file.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the seed stored in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model to a CSV dataset and write a model file.
    Fit {
        #[arg(long, value_enum)]
        model: ModelChoice,
        /// Feature map (logit only).
        #[arg(long, value_enum)]
        features: Option<FeatureChoice>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
        /// Divisor for second moments (bayes-gaussian only).
        #[arg(long, value_enum)]
        variance_estimator: Option<EstimatorChoice>,
    },
    /// Write per-class probabilities and the argmax label for every row.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit both model families on a scenario and compare their posteriors.
    Compare {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        eval_points: usize,
        #[arg(long, value_enum, default_value_t = ModeChoice::Estimated)]
        mode: ModeChoice,
        /// Overrides the automatic feature-map choice.
        #[arg(long, value_enum)]
        features: Option<FeatureChoice>,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Wall-clock comparison of moment fitting and gradient ascent.
    Timing {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Repeats per size (at least 5 are run).
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[command(flatten)]
        train: TrainArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Initial gradient-ascent step.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Gradient max-norm stopping tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// L2 penalty on non-intercept weights.
    #[arg(long)]
    pub l2: Option<f64>,
}

impl TrainArgs {
    fn is_set(&self) -> bool {
        self.lr.is_some() || self.tol.is_some() || self.max_iters.is_some() || self.l2.is_some()
    }

    fn config(&self) -> TrainConfig {
        let mut cfg = TrainConfig::default();
        if let Some(v) = self.lr {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.tol {
            cfg.grad_tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.l2 {
            cfg.l2 = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    BayesGaussian,
    BayesUniform,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureChoice {
    Linear,
    Quadratic,
}

impl From<FeatureChoice> for FeatureKind {
    fn from(c: FeatureChoice) -> Self {
        match c {
            FeatureChoice::Linear => FeatureKind::Linear,
            FeatureChoice::Quadratic => FeatureKind::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorChoice {
    Population,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Estimated,
    Exact,
}

/// A failed command: message for stderr plus exit code.
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

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidSpec(_) | Error::InvalidDataset(_) | Error::DimensionMismatch { .. } | Error::InvalidOverlap { .. } => {
                EXIT_USAGE
            }
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn from_format(path: &Path, e: FormatError) -> Failure {
    match e {
        FormatError::Io(io) => Failure::io(path, io),
        FormatError::Parse { line, msg } => Failure::usage(format!("{}:{line}: {msg}", path.display())),
        FormatError::Model(e) => {
            let mut f = Failure::from(e);
            f.message = format!("{}: {}", path.display(), f.message);
            f
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn load_spec(path: &Path, seed: Option<u64>) -> Result<ScenarioSpec, Failure> {
    let spec = ScenarioSpec::from_toml(&read_text(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(match seed {
        Some(s) => spec.with_seed(s),
        None => spec,
    })
}

fn load_dataset(path: &Path) -> Result<crate::LabeledDataset, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::io(path, e))?;
    format::read_dataset(std::io::BufReader::new(file)).map_err(|e| match e {
        // Label/shape problems in a parsed CSV are validation failures.
        FormatError::Model(err) => Failure::usage(format!("{}: {err}", path.display())),
        other => from_format(path, other),
    })
}

/// Runs one parsed command, writing human-readable output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let mut say = |text: String| {
        let _ = out.write_all(text.as_bytes());
    };
    match cli.command {
        Command::Gen { spec, seed, out: dest } => {
            let spec = load_spec(&spec, seed)?;
            let data = harness::sample(&spec)?;
            let mut buf = Vec::new();
            format::write_dataset(&mut buf, &data).map_err(|e| Failure::io(&dest, e))?;
            write_bytes(&dest, &buf)?;
            say(format!(
                "N={} M={} d={} seed={}\n",
                data.len(),
                data.num_classes(),
                data.dim(),
                spec.seed
            ));
        }
        Command::Fit {
            model,
            features,
            data,
            out: dest,
            train,
            variance_estimator,
        } => {
            if model != ModelChoice::Logit && (features.is_some() || train.is_set()) {
                return Err(Failure::usage(
                    "--features, --lr, --tol, --max-iters and --l2 apply only to --model logit",
                ));
            }
            if model != ModelChoice::BayesGaussian && variance_estimator.is_some() {
                return Err(Failure::usage("--variance-estimator applies only to --model bayes-gaussian"));
            }
            let ds = load_dataset(&data)?;
            let saved = match model {
                ModelChoice::BayesGaussian => {
                    let est = match variance_estimator {
                        Some(EstimatorChoice::Sample) => VarianceEstimator::Sample,
                        _ => VarianceEstimator::Population,
                    };
                    SavedModel::Generative(GenerativeModel::fit_gaussian(&ds, est)?)
                }
                ModelChoice::BayesUniform => SavedModel::Generative(GenerativeModel::fit_uniform(&ds)?),
                ModelChoice::Logit => {
                    let cfg = train.config();
                    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
                    let kind = features.map_or(FeatureKind::Linear, FeatureKind::from);
                    let (m, report) = logit::train(&ds, FeatureMap::new(kind, ds.dim()), &cfg)?;
                    say(format!(
                        "iterations={} converged={} final_grad_norm={} final_ll={}\n",
                        report.iterations,
                        report.converged,
                        fmt_f64(report.final_grad_norm),
                        fmt_f64(report.final_ll)
                    ));
                    SavedModel::Logit(m)
                }
            };
            write_bytes(&dest, saved.to_text().as_bytes())?;
            say(format!(
                "wrote {} (M={} d={})\n",
                dest.display(),
                saved.num_classes(),
                saved.dim()
            ));
        }
        Command::Predict { model, data, out: dest } => {
            let saved = SavedModel::from_text(&read_text(&model)?).map_err(|e| from_format(&model, e))?;
            let ds = load_dataset(&data)?;
            if ds.dim() != saved.dim() {
                return Err(Failure::usage(format!(
                    "DimensionMismatch: model expects d={}, data has d={}",
                    saved.dim(),
                    ds.dim()
                )));
            }
            let preds = (0..ds.len())
                .map(|i| saved.predict(ds.row(i)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut buf = Vec::new();
            format::write_predictions(&mut buf, saved.num_classes(), &preds).map_err(|e| Failure::io(&dest, e))?;
            write_bytes(&dest, &buf)?;
            let undefined = preds.iter().filter(|p| p.is_none()).count();
            say(format!("predicted {} rows ({undefined} undefined)\n", preds.len()));
        }
        Command::Compare {
            spec,
            seed,
            eval_points,
            mode,
            features,
            csv,
            train,
        } => {
            let spec = load_spec(&spec, seed)?;
            let cfg = train.config();
            cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let opts = CompareOptions {
                eval_points,
                mode: match mode {
                    ModeChoice::Estimated => CompareMode::Estimated,
                    ModeChoice::Exact => CompareMode::Exact,
                },
                feature_kind: features.map(FeatureKind::from),
                train: cfg,
                variance_estimator: VarianceEstimator::Population,
            };
            let report = harness::run_comparison(&spec, &opts)?;
            say(report.to_text());
            if let Some(path) = csv {
                write_bytes(&path, report.to_csv().as_bytes())?;
            }
        }
        Command::Timing {
            spec,
            seed,
            repeats,
            train,
        } => {
            let spec = load_spec(&spec, seed)?;
            let cfg = train.config();
            cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let base = spec.class_sizes.clone();
            let scaled: Vec<usize> = base.iter().map(|n| n * 10).collect();
            let report = harness::run_timing(&spec, &[base, scaled], repeats, &cfg)?;
            say(report.to_text());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
