//! Command-line front end and HTTP service for `bcpredict-core`.

pub mod service;

use std::path::{Path, PathBuf};

use bcpredict_core::boruta::BorutaConfig;
use bcpredict_core::dataset::correlation_matrix;
use bcpredict_core::logreg::TrainConfig;
use bcpredict_core::pipeline::{evaluate_dataset, train, TrainOptions};
use bcpredict_core::predict::{predict, request_from_csv_row, request_from_pairs, PredictResponse};
use bcpredict_core::{Dataset, Error, ModelArtifact};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bcpredict", version, about = "Breast cancer malignancy classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a WDBC CSV and write the artifact.
    Train(TrainArgs),
    /// Score a dataset with a saved model and write the report and ROC CSV.
    Evaluate(EvaluateArgs),
    /// Predict a single case from name=value pairs or a one-row CSV.
    Predict(PredictArgs),
    /// Serve the JSON prediction API.
    Serve(ServeArgs),
    /// Write the Pearson correlation matrix of a WDBC CSV.
    Correlation(CorrelationArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5)]
    pub smote_k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub smote_ratio: f64,
    /// Run Boruta feature selection (default).
    #[arg(long, overrides_with = "no_boruta")]
    pub boruta: bool,
    #[arg(long, overrides_with = "boruta")]
    pub no_boruta: bool,
    #[arg(long, default_value_t = 50)]
    pub boruta_iters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub boruta_alpha: f64,
    /// Drop Tentative features as well as Rejected ones.
    #[arg(long)]
    pub boruta_drop_tentative: bool,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

impl TrainArgs {
    pub fn options(&self) -> TrainOptions {
        TrainOptions {
            seed: self.seed,
            test_fraction: self.test_fraction,
            train: TrainConfig {
                learning_rate: self.learning_rate,
                max_iters: self.max_iters,
                tolerance: self.tol,
                ..TrainConfig::default()
            },
            smote_k: self.smote_k,
            smote_ratio: self.smote_ratio,
            boruta: (!self.no_boruta).then(|| BorutaConfig {
                n_iterations: self.boruta_iters,
                significance: self.boruta_alpha,
                seed: self.seed,
                ..BorutaConfig::default()
            }),
            boruta_drop_tentative: self.boruta_drop_tentative,
            threshold: self.threshold,
            ..TrainOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// ROC CSV path; defaults to the report path with a `.roc.csv` suffix.
    #[arg(long)]
    pub roc: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV file holding a header and exactly one record.
    #[arg(long, conflicts_with = "pairs")]
    pub csv: Option<PathBuf>,
    /// Feature values as name=value.
    pub pairs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, Args)]
pub struct CorrelationArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit code for a failed command: 2 for unreadable inputs, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::root) {
        Some(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let artifact = cmd_train(&args)?;
            print!("{}", train_summary(&artifact));
        }
        Command::Evaluate(args) => {
            let report = cmd_evaluate(&args)?;
            print!("{}", report.to_text());
        }
        Command::Predict(args) => print!("{}", cmd_predict(&args)?.to_text()),
        Command::Serve(args) => {
            let artifact = ModelArtifact::load(&args.model)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime
                .block_on(service::serve(artifact, args.port))
                .map_err(|e| anyhow::anyhow!("cannot serve on port {}: {e}", args.port))?;
        }
        Command::Correlation(args) => {
            let data = Dataset::from_csv_path(&args.data)?;
            let matrix = correlation_matrix(&data, &data.all_rows())?;
            write_file(&args.out, &matrix.to_csv())?;
        }
    }
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> anyhow::Result<ModelArtifact> {
    let data = Dataset::from_csv_path(&args.data)?;
    let outcome = train(&data, &args.options())?;
    outcome.artifact.save(&args.out)?;
    Ok(outcome.artifact)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> anyhow::Result<bcpredict_core::metrics::EvaluationReport> {
    let artifact = ModelArtifact::load(&args.model)?;
    let data = Dataset::from_csv_path(&args.data)?;
    let protocol = format!("all {} rows of {} scored with model {}", data.len(), args.data.display(), artifact.model_version);
    let report = evaluate_dataset(&artifact, &data, protocol)?;
    write_file(&args.report, &report.to_text())?;
    write_file(&roc_path(args), &report.roc_csv())?;
    Ok(report)
}

pub fn roc_path(args: &EvaluateArgs) -> PathBuf {
    args.roc.clone().unwrap_or_else(|| {
        let mut name = args.report.file_stem().unwrap_or_default().to_os_string();
        name.push(".roc.csv");
        args.report.with_file_name(name)
    })
}

pub fn cmd_predict(args: &PredictArgs) -> anyhow::Result<PredictResponse> {
    let artifact = ModelArtifact::load(&args.model)?;
    let request = match &args.csv {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            request_from_csv_row(&artifact, &text)?
        }
        None => request_from_pairs(&args.pairs)?,
    };
    Ok(predict(&artifact, &request)?)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }.into())
}

pub fn train_summary(artifact: &ModelArtifact) -> String {
    let m = &artifact.metrics;
    let meta = &artifact.training_meta;
    let mut out = format!(
        "model {}\nfeatures used: {}\ntrain rows {} (+{} synthetic), test rows {}\ngradient descent: {} iterations, converged={}, final cost {:.6}\n",
        artifact.model_version,
        artifact.feature_names.len(),
        meta.n_train,
        meta.n_synthetic,
        meta.n_test,
        meta.iterations_run,
        meta.converged,
        meta.final_cost,
    );
    if let Some(boruta) = &meta.boruta {
        for d in &boruta.decisions {
            out.push_str(&format!("boruta {:<26} {:?} hits={}\n", d.feature_name, d.status, d.hits));
        }
    }
    out.push_str(&format!(
        "test: tp={} fp={} fn={} tn={} accuracy={:.4} precision={:.4} recall={:.4} f1={:.4} auc={:.4}\n",
        m.confusion.tp, m.confusion.fp, m.confusion.fn_, m.confusion.tn, m.accuracy, m.precision, m.recall, m.f1, m.auc
    ));
    out
}
