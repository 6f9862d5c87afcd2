//! All-relevant feature selection against shuffled "shadow" copies.
//!
//! Each iteration appends a row-permuted copy of every feature, fits the
//! logistic model on the doubled matrix and measures permutation importance.
//! A feature scores a hit when it beats the best shadow. Hit counts are then
//! tested against Binomial(n_iterations, ½) with a Bonferroni-corrected
//! two-sided test.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::logreg::{fit_gradient_descent, label_for, sigmoid, TrainConfig};
use crate::rng::{derive_seed, SplitMix64};

/// Shuffles averaged per column in [`importance_permutation`].
pub const IMPORTANCE_SHUFFLES: usize = 5;
/// Smallest iteration count the binomial test is allowed to run with.
pub const MIN_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaConfig {
    pub n_iterations: usize,
    pub significance: f64,
    pub seed: u64,
    pub inner_train_config: TrainConfig,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for BorutaConfig {
    fn default() -> Self {
        Self {
            n_iterations: 50,
            significance: 0.05,
            seed: 42,
            inner_train_config: TrainConfig { learning_rate: 0.1, max_iters: 1000, tolerance: 1e-6, ..Default::default() },
            execution: Execution::default(),
        }
    }
}

impl BorutaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations < MIN_ITERATIONS {
            return Err(Error::InvalidConfig(format!(
                "Boruta needs at least {MIN_ITERATIONS} iterations, got {}",
                self.n_iterations
            )));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Boruta significance {} outside (0, 1)",
                self.significance
            )));
        }
        self.inner_train_config.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureStatus {
    Confirmed,
    Rejected,
    Tentative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDecision {
    pub feature_name: String,
    pub status: FeatureStatus,
    pub hits: usize,
    pub mean_importance: f64,
}

/// Importances from one iteration: real features, then their shadows in
/// the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    pub real: Vec<f64>,
    pub shadow: Vec<f64>,
}

impl ImportanceVector {
    pub fn max_shadow(&self) -> f64 {
        self.shadow.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `[X | shadows]` where shadow column `j` is column `j` row-shuffled.
pub fn shadow_augment(x: ArrayView2<f64>, seed: u64) -> Array2<f64> {
    let (m, n) = x.dim();
    let mut out = Array2::zeros((m, 2 * n));
    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<usize> = (0..m).collect();
    for j in 0..n {
        rng.shuffle(&mut order);
        for i in 0..m {
            out[[i, j]] = x[[i, j]];
            out[[i, n + j]] = x[[order[i], j]];
        }
    }
    out
}

pub fn importance_permutation(
    x_aug: ArrayView2<f64>,
    y: &[u8],
    config: &TrainConfig,
    seed: u64,
) -> Result<ImportanceVector> {
    importance_permutation_with(x_aug, y, config, seed, Execution::default())
}

/// Drop in training accuracy when one column is row-shuffled, averaged over
/// [`IMPORTANCE_SHUFFLES`] shuffles. `x_aug` must have an even number of
/// columns laid out as `[real | shadow]`.
pub fn importance_permutation_with(
    x_aug: ArrayView2<f64>,
    y: &[u8],
    config: &TrainConfig,
    seed: u64,
    exec: Execution,
) -> Result<ImportanceVector> {
    let (m, cols) = x_aug.dim();
    if cols == 0 || cols % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "augmented matrix needs an even, non-zero column count, got {cols}"
        )));
    }
    let (coeffs, _) = fit_gradient_descent(x_aug, y, config)?;
    let logits: Vec<f64> = x_aug
        .rows()
        .into_iter()
        .map(|row| coeffs.weights.iter().zip(row).fold(coeffs.intercept, |acc, (w, v)| acc + w * v))
        .collect();
    let accuracy = |z: &mut dyn Iterator<Item = f64>| {
        z.zip(y).filter(|(z, &yi)| label_for(sigmoid(*z), 0.5) == yi).count() as f64 / m as f64
    };
    let baseline = accuracy(&mut logits.iter().copied());

    let scores = exec.map_indices(cols, |j| {
        let w = coeffs.weights[j];
        let column = x_aug.column(j);
        let mut rng = SplitMix64::new(derive_seed(seed, j as u64));
        let mut order: Vec<usize> = (0..m).collect();
        let mut total = 0.0;
        for _ in 0..IMPORTANCE_SHUFFLES {
            rng.shuffle(&mut order);
            let mut shuffled = (0..m).map(|i| logits[i] - w * column[i] + w * column[order[i]]);
            total += baseline - accuracy(&mut shuffled);
        }
        total / IMPORTANCE_SHUFFLES as f64
    });
    let shadow = scores[cols / 2..].to_vec();
    let mut real = scores;
    real.truncate(cols / 2);
    Ok(ImportanceVector { real, shadow })
}

/// Runs the shadow-feature competition and classifies every real feature.
pub fn boruta_run(
    x: ArrayView2<f64>,
    y: &[u8],
    feature_names: &[String],
    config: &BorutaConfig,
) -> Result<Vec<FeatureDecision>> {
    config.validate()?;
    let n = x.ncols();
    if n == 0 {
        return Err(Error::InvalidConfig("no features to select from".into()));
    }
    if feature_names.len() != n {
        return Err(Error::ArityMismatch { expected: n, found: feature_names.len() });
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch { left: x.nrows(), right: y.len() });
    }
    crate::check_binary_labels(y)?;
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::SingleClass);
    }

    // Per-iteration seeds are fixed up front so iterations can run in any order.
    let rounds = config.execution.try_map_indices(config.n_iterations, |i| {
        let round_seed = derive_seed(config.seed, i as u64);
        let augmented = shadow_augment(x, derive_seed(round_seed, 0));
        importance_permutation_with(
            augmented.view(),
            y,
            &config.inner_train_config,
            derive_seed(round_seed, 1),
            Execution::Sequential,
        )
    })?;

    let mut hits = vec![0usize; n];
    let mut importance_sum = vec![0.0; n];
    for round in &rounds {
        let bar = round.max_shadow();
        for j in 0..n {
            if round.real[j] > bar {
                hits[j] += 1;
            }
            importance_sum[j] += round.real[j];
        }
    }

    let corrected = config.significance / n as f64;
    Ok(feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureDecision {
            feature_name: name.clone(),
            status: classify_hits(hits[j], config.n_iterations, corrected),
            hits: hits[j],
            mean_importance: importance_sum[j] / config.n_iterations as f64,
        })
        .collect())
}

/// Two-sided binomial test of `hits` against Binomial(trials, ½) at level `alpha`.
pub fn classify_hits(hits: usize, trials: usize, alpha: f64) -> FeatureStatus {
    let p_value = binomial_two_sided_half(hits, trials);
    if p_value < alpha && 2 * hits > trials {
        FeatureStatus::Confirmed
    } else if p_value < alpha && 2 * hits < trials {
        FeatureStatus::Rejected
    } else {
        FeatureStatus::Tentative
    }
}

/// Two-sided p-value `min(1, 2·min(P[X ≤ k], P[X ≥ k]))` for X ~ Binomial(n, ½).
pub fn binomial_two_sided_half(k: usize, n: usize) -> f64 {
    let lower = binomial_cdf_half(k, n);
    let upper = if k == 0 { 1.0 } else { 1.0 - binomial_cdf_half(k - 1, n) };
    (2.0 * lower.min(upper)).min(1.0)
}

/// `P[X ≤ k]` for X ~ Binomial(n, ½), summed in log space.
fn binomial_cdf_half(k: usize, n: usize) -> f64 {
    if k >= n {
        return 1.0;
    }
    let log_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut log_choose = 0.0; // ln C(n, 0)
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            log_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        total += (log_choose + log_half_n).exp();
    }
    total.min(1.0)
}
