//! `dpsvm`: train, privatize and explain SVMs on WDBC, and run the sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpsvm::data::NormalizationParams;
use dpsvm::experiment::{emit, ExperimentConfig, Format, Pipeline, SweepRecord, Table};
use dpsvm::explain::{feature_deltas, validate_chance_constraint, Explanation};
use dpsvm::privacy::{privatize, PrivateRelease};
use dpsvm::{Error, ErrorKind, Result, SvmModel};
use ndarray::Array1;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "dpsvm", version, about = "Private SVM release and robust counterfactual explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON, or TOML by extension); defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Overrides noise_realizations.
    #[arg(long)]
    realizations: Option<usize>,
    /// Explain only this many test instances.
    #[arg(long)]
    sample_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the non-private SVM and write the model bundle as JSON.
    Train(Common),
    /// Add calibrated Laplace noise to a trained model.
    Privatize {
        #[command(flatten)]
        common: Common,
        /// Model bundle from `train`; trained from the config when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Privacy level; the config's beta_default when omitted.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Explain one test instance (or a raw feature vector) against a release.
    Explain {
        #[command(flatten)]
        common: Common,
        /// Release bundle from `privatize`; drawn from the config when omitted.
        #[arg(long)]
        release: Option<PathBuf>,
        /// Test-set index of the instance.
        #[arg(long, conflicts_with = "instance")]
        index: Option<usize>,
        /// Comma-separated raw feature values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        instance: Option<Vec<f64>>,
        /// Confidence level; the config's p_default when omitted.
        #[arg(long)]
        p: Option<f64>,
        /// Non-robust explanation (ignores --p).
        #[arg(long)]
        nonrobust: bool,
    },
    /// Test accuracy per privacy level and noise realization.
    SweepAccuracy(SweepArgs),
    /// Explanation distances across the privacy grid.
    SweepDistanceBeta(SweepArgs),
    /// Explanation distances across the confidence grid.
    SweepDistanceP(SweepArgs),
    /// Percentiles of the true-classifier margin at the explanations.
    ViolationStats(SweepArgs),
    /// Per-iteration bisection record for one test instance.
    TraceConvergence {
        #[command(flatten)]
        common: Common,
        /// Test-set index; the first suitable instance labeled +1 when omitted.
        #[arg(long)]
        instance: Option<usize>,
    },
    /// Monte Carlo estimate of the flip probability at an explanation.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        release: PathBuf,
        /// Explanation document from `explain`.
        #[arg(long)]
        explanation: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Serialize, Deserialize)]
struct ModelBundle {
    normalizer: NormalizationParams,
    model: SvmModel,
}

#[derive(Serialize, Deserialize)]
struct ReleaseBundle {
    normalizer: NormalizationParams,
    release: PrivateRelease,
}

#[derive(Serialize, Deserialize)]
struct ExplainReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    test_index: Option<usize>,
    explanation: Explanation,
    /// Instance and explanation in original feature units.
    instance_raw: Vec<f64>,
    explanation_raw: Vec<f64>,
    /// Relative change per feature in original units; null where the instance value is zero.
    feature_deltas: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct ValidateReport {
    p: f64,
    trials: usize,
    seed: u64,
    empirical_probability: f64,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep(args: &SweepArgs, run: impl Fn(&Pipeline) -> Result<Vec<SweepRecord>>) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(r) = args.realizations {
        cfg.noise_realizations = r;
    }
    if args.sample_size.is_some() {
        cfg.sample_size = args.sample_size;
    }
    let pipeline = Pipeline::prepare(&cfg)?;
    let records = run(&pipeline)?;
    emit(&Table::from(records.as_slice()), args.common.out.as_deref(), args.common.format)
}

fn release_for(pipeline: &Pipeline, path: Option<&Path>) -> Result<PrivateRelease> {
    match path {
        Some(path) => {
            let bundle: ReleaseBundle = read_json(path)?;
            if bundle.release.map != *pipeline.map() || bundle.normalizer != pipeline.normalizer {
                return Err(Error::InvalidParameter(format!(
                    "{} was not produced from this config's split and feature map",
                    path.display()
                )));
            }
            Ok(bundle.release)
        }
        None => pipeline.release(pipeline.config.beta_default, pipeline.config.release_seed()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = load_config(&common)?;
            let pipeline = Pipeline::prepare(&cfg)?;
            eprintln!(
                "trained on {} rows in {} sweeps; test accuracy {:.4}",
                pipeline.train.len(),
                pipeline.model.report.sweeps,
                pipeline.baseline_accuracy()
            );
            let bundle = ModelBundle {
                normalizer: pipeline.normalizer.clone(),
                model: pipeline.model.clone(),
            };
            write_json(&bundle, common.out.as_deref())
        }
        Command::Privatize { common, model, beta } => {
            let cfg = load_config(&common)?;
            let bundle = match model {
                Some(path) => read_json::<ModelBundle>(&path)?,
                None => {
                    let pipeline = Pipeline::prepare(&cfg)?;
                    ModelBundle {
                        normalizer: pipeline.normalizer,
                        model: pipeline.model,
                    }
                }
            };
            let release = privatize(&bundle.model, beta.unwrap_or(cfg.beta_default), cfg.release_seed())?;
            eprintln!("lambda = {:.6e}", release.lambda);
            let out = ReleaseBundle {
                normalizer: bundle.normalizer,
                release,
            };
            write_json(&out, common.out.as_deref())
        }
        Command::Explain {
            common,
            release,
            index,
            instance,
            p,
            nonrobust,
        } => {
            let cfg = load_config(&common)?;
            let pipeline = Pipeline::prepare(&cfg)?;
            let release = release_for(&pipeline, release.as_deref())?;
            let p = if nonrobust { 0.5 } else { p.unwrap_or(cfg.p_default) };
            let mut explainer = pipeline.explainer(&release, p, cfg.prototype_seed());
            let (test_index, explanation) = match (index, instance) {
                (_, Some(raw)) => {
                    let x = pipeline.normalizer.normalize(Array1::from(raw).view())?;
                    (None, explainer.explain_point(x)?)
                }
                (Some(i), None) => {
                    if i >= pipeline.test.len() {
                        return Err(Error::InvalidParameter(format!(
                            "index {i} is out of range for a test set of {}",
                            pipeline.test.len()
                        )));
                    }
                    (Some(i), explainer.explain(i)?)
                }
                (None, None) => {
                    return Err(Error::InvalidParameter("explain needs --index or --instance".into()))
                }
            };
            let instance_raw = pipeline.normalizer.denormalize(explanation.x_prime.view())?;
            let explanation_raw = pipeline.normalizer.denormalize(explanation.x.view())?;
            let report = ExplainReport {
                test_index,
                feature_deltas: feature_deltas(explanation_raw.view(), instance_raw.view())?,
                instance_raw: instance_raw.to_vec(),
                explanation_raw: explanation_raw.to_vec(),
                explanation,
            };
            write_json(&report, common.out.as_deref())
        }
        Command::SweepAccuracy(args) => sweep(&args, Pipeline::accuracy_sweep),
        Command::SweepDistanceBeta(args) => sweep(&args, Pipeline::distance_sweep_beta),
        Command::SweepDistanceP(args) => sweep(&args, Pipeline::distance_sweep_p),
        Command::ViolationStats(args) => sweep(&args, Pipeline::violation_stats),
        Command::TraceConvergence { common, instance } => {
            let cfg = load_config(&common)?;
            let pipeline = Pipeline::prepare(&cfg)?;
            let (index, rows) = pipeline.convergence_trace(instance)?;
            eprintln!("test instance {index}: {} iterations", rows.len());
            emit(&Table::from(rows.as_slice()), common.out.as_deref(), common.format)
        }
        Command::Validate {
            common,
            release,
            explanation,
            trials,
        } => {
            let cfg = load_config(&common)?;
            let bundle: ReleaseBundle = read_json(&release)?;
            let report: ExplainReport = read_json(&explanation)?;
            let ex = report.explanation;
            let seed = cfg.seed_for_validation();
            let prob = validate_chance_constraint(ex.x.view(), &bundle.release, ex.y_prime, trials, seed)?;
            write_json(
                &ValidateReport {
                    p: ex.p,
                    trials,
                    seed,
                    empirical_probability: prob,
                },
                common.out.as_deref(),
            )
        }
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
