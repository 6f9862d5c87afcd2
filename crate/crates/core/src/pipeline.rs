//! End-to-end training: split → standardize → Boruta → SMOTE → fit →
//! evaluate on the untouched test fold.

use ndarray::Axis;

use crate::artifact::{default_label_map, model_fingerprint, BorutaMeta, FeatureSummary, ModelArtifact, TrainingMeta, SCHEMA_VERSION};
use crate::boruta::{boruta_run, BorutaConfig, FeatureStatus};
use crate::dataset::{standardize_fit, stratified_split, Dataset, SplitIndices};
use crate::error::{Error, Result, StageExt};
use crate::exec::Execution;
use crate::logreg::{fit_gradient_descent, TrainConfig, TrainTrace};
use crate::metrics::EvaluationReport;
use crate::smote::{smote_oversample, SmoteConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub seed: u64,
    pub test_fraction: f64,
    pub train: TrainConfig,
    pub smote_k: usize,
    pub smote_ratio: f64,
    /// `None` skips feature selection.
    pub boruta: Option<BorutaConfig>,
    pub boruta_drop_tentative: bool,
    pub threshold: f64,
    pub execution: Execution,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            test_fraction: 0.2,
            train: TrainConfig::default(),
            smote_k: 5,
            smote_ratio: 1.0,
            boruta: Some(BorutaConfig::default()),
            boruta_drop_tentative: false,
            threshold: 0.5,
            execution: Execution::default(),
        }
    }
}

/// Row sets each fitting stage saw, kept so callers can check that the test
/// fold never leaked into fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FitAudit {
    pub split: SplitIndices,
    pub standardize_rows: Vec<usize>,
    pub boruta_rows: Vec<usize>,
    pub smote_rows: Vec<usize>,
    pub fit_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub trace: TrainTrace,
    pub audit: FitAudit,
}

pub fn train(data: &Dataset, options: &TrainOptions) -> Result<TrainOutcome> {
    if !(options.threshold > 0.0 && options.threshold < 1.0) {
        return Err(Error::InvalidConfig(format!("threshold {} outside (0, 1)", options.threshold)));
    }
    options.train.validate().stage("configuration")?;

    let split = stratified_split(data, options.test_fraction, options.seed).stage("split")?;
    let all_columns: Vec<usize> = (0..data.n_features()).collect();
    let full_params = standardize_fit(data, &split.train).stage("standardize")?;
    let train_y = data.labels_at(&split.train);
    let train_z = full_params.apply_matrix(&data.matrix(&split.train, &all_columns)).stage("standardize")?;

    let (selected, boruta_meta) = match &options.boruta {
        Some(config) => {
            let config = BorutaConfig { seed: options.seed, execution: options.execution, ..config.clone() };
            let decisions = boruta_run(train_z.view(), &train_y, data.feature_names(), &config).stage("boruta")?;
            let keep: Vec<usize> = decisions
                .iter()
                .enumerate()
                .filter(|(_, d)| match d.status {
                    FeatureStatus::Confirmed => true,
                    FeatureStatus::Tentative => !options.boruta_drop_tentative,
                    FeatureStatus::Rejected => false,
                })
                .map(|(j, _)| j)
                .collect();
            if keep.is_empty() {
                return Err(Error::Stage {
                    stage: "boruta",
                    source: Box::new(Error::InvalidConfig("every feature was rejected".into())),
                });
            }
            let meta = BorutaMeta { config, drop_tentative: options.boruta_drop_tentative, decisions };
            (keep, Some(meta))
        }
        None => (all_columns.clone(), None),
    };

    let params = full_params.select(&selected);
    let feature_names: Vec<String> = selected.iter().map(|&j| data.feature_names()[j].clone()).collect();
    let train_selected = train_z.select(Axis(1), &selected);

    let smote = SmoteConfig { k: options.smote_k, target_ratio: options.smote_ratio, seed: options.seed };
    let balanced = smote_oversample(train_selected.view(), &train_y, &smote).stage("smote")?;

    let (coefficients, trace) =
        fit_gradient_descent(balanced.features.view(), &balanced.labels, &options.train).stage("fit")?;

    let test_z = params.apply_matrix(&data.matrix(&split.test, &selected)).stage("evaluate")?;
    let scores = coefficients.predict_proba_batch(test_z.view(), options.execution).stage("evaluate")?;
    let protocol = protocol_string(options, &split, boruta_meta.is_some());
    let metrics = EvaluationReport::evaluate(&data.labels_at(&split.test), &scores, options.threshold, protocol)
        .stage("evaluate")?;

    let feature_summary = selected
        .iter()
        .map(|&j| {
            let column = data.column(j, &split.train);
            FeatureSummary {
                name: data.feature_names()[j].clone(),
                min: column.iter().copied().fold(f64::INFINITY, f64::min),
                mean: full_params.means[j],
                max: column.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    let artifact = ModelArtifact {
        schema_version: SCHEMA_VERSION,
        model_version: model_fingerprint(&coefficients, &feature_names),
        feature_names,
        standardization: params,
        coefficients,
        threshold: options.threshold,
        label_map: default_label_map(),
        feature_summary,
        training_meta: TrainingMeta {
            seed: options.seed,
            test_fraction: options.test_fraction,
            n_train: split.train.len(),
            n_test: split.test.len(),
            n_synthetic: balanced.n_synthetic(),
            smote,
            boruta: boruta_meta,
            train_config: options.train.clone(),
            iterations_run: trace.iterations_run,
            converged: trace.converged,
            final_cost: trace.final_cost(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
        metrics,
    };
    artifact.validate().stage("package")?;

    let audit = FitAudit {
        standardize_rows: split.train.clone(),
        boruta_rows: if options.boruta.is_some() { split.train.clone() } else { Vec::new() },
        smote_rows: split.train.clone(),
        fit_rows: split.train.clone(),
        split,
    };
    Ok(TrainOutcome { artifact, trace, audit })
}

fn protocol_string(options: &TrainOptions, split: &SplitIndices, boruta: bool) -> String {
    let boruta = match (&options.boruta, boruta) {
        (Some(b), true) => format!(
            "boruta iterations={} alpha={} drop_tentative={}",
            b.n_iterations, b.significance, options.boruta_drop_tentative
        ),
        _ => "boruta off".to_string(),
    };
    format!(
        "stratified holdout test_fraction={} seed={} n_train={} n_test={}; z-score on train; {}; smote k={} ratio={}; gradient descent lr={} max_iters={} tol={}; threshold={}",
        options.test_fraction,
        split.seed,
        split.train.len(),
        split.test.len(),
        boruta,
        options.smote_k,
        options.smote_ratio,
        options.train.learning_rate,
        options.train.max_iters,
        options.train.tolerance,
        options.threshold,
    )
}

/// Scores every record of `data` with `artifact`. Columns are matched by
/// name; any model feature absent from `data` is an error.
pub fn evaluate_dataset(artifact: &ModelArtifact, data: &Dataset, protocol: impl Into<String>) -> Result<EvaluationReport> {
    let mut missing = Vec::new();
    let columns: Vec<usize> = artifact
        .feature_names
        .iter()
        .filter_map(|name| {
            let idx = data.feature_index(name);
            if idx.is_none() {
                missing.push(name.clone());
            }
            idx
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::FeatureMismatch(missing));
    }
    let rows = data.all_rows();
    let z = artifact.standardization.apply_matrix(&data.matrix(&rows, &columns))?;
    let scores = artifact.coefficients.predict_proba_batch(z.view(), Execution::default())?;
    EvaluationReport::evaluate(&data.labels(), &scores, artifact.threshold, protocol)
}
