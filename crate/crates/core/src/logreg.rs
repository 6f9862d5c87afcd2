//! Binary logistic regression fitted by full-batch gradient descent on the
//! mean negative log-likelihood.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Halvings of the learning rate allowed on a single step before giving up.
pub const MAX_CONSECUTIVE_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(n_features: usize) -> Self {
        Self { intercept: 0.0, weights: vec![0.0; n_features] }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.intercept.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    /// `β₀ + Σ βⱼ xⱼ`.
    pub fn logit(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::ArityMismatch { expected: self.weights.len(), found: features.len() });
        }
        Ok(self.logit_unchecked(features.iter().copied()))
    }

    fn logit_unchecked(&self, features: impl Iterator<Item = f64>) -> f64 {
        self.weights.iter().zip(features).fold(self.intercept, |acc, (w, x)| acc + w * x)
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<f64> {
        self.logit(features).map(sigmoid)
    }

    /// 1 iff the probability reaches `threshold`; ties go to the positive class.
    pub fn predict_label(&self, features: &[f64], threshold: f64) -> Result<u8> {
        Ok(label_for(self.predict_proba(features)?, threshold))
    }

    /// Probabilities for every row of `x`.
    pub fn predict_proba_batch(&self, x: ArrayView2<f64>, exec: Execution) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::ArityMismatch { expected: self.weights.len(), found: x.ncols() });
        }
        Ok(exec.map_indices(x.nrows(), |i| sigmoid(self.logit_unchecked(x.row(i).iter().copied()))))
    }

    fn axpy(&self, step: f64, direction: &Coefficients) -> Coefficients {
        Coefficients {
            intercept: self.intercept - step * direction.intercept,
            weights: self.weights.iter().zip(&direction.weights).map(|(w, g)| w - step * g).collect(),
        }
    }
}

pub fn label_for(probability: f64, threshold: f64) -> u8 {
    u8::from(probability >= threshold)
}

/// Logistic function, evaluated without overflow for any finite `z`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `y ln p + (1−y) ln(1−p)` for `p = sigmoid(z)`, finite at both tails.
fn log_prob(z: f64, y: u8) -> f64 {
    if y == 1 {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

fn check_shapes(coeffs: &Coefficients, x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch { left: x.nrows(), right: y.len() });
    }
    if x.ncols() != coeffs.n_features() {
        return Err(Error::ArityMismatch { expected: coeffs.n_features(), found: x.ncols() });
    }
    crate::check_binary_labels(y)
}

/// Log of the Bernoulli likelihood `∏ pᵢ^yᵢ (1−pᵢ)^(1−yᵢ)`.
pub fn log_likelihood(coeffs: &Coefficients, x: ArrayView2<f64>, y: &[u8]) -> Result<f64> {
    check_shapes(coeffs, x, y)?;
    Ok(x.rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yi)| log_prob(coeffs.logit_unchecked(row.iter().copied()), yi))
        .sum())
}

/// Mean negative log-likelihood.
pub fn nll_cost(coeffs: &Coefficients, x: ArrayView2<f64>, y: &[u8]) -> Result<f64> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(-log_likelihood(coeffs, x, y)? / x.nrows() as f64)
}

/// Gradient of [`nll_cost`]: `(1/m) Σ (pᵢ − yᵢ)(1, xᵢ)`.
pub fn gradient(coeffs: &Coefficients, x: ArrayView2<f64>, y: &[u8]) -> Result<Coefficients> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    check_shapes(coeffs, x, y)?;
    Ok(cost_and_gradient(coeffs, x, y).1)
}

// Single pass over the rows; shapes must already be checked.
fn cost_and_gradient(coeffs: &Coefficients, x: ArrayView2<f64>, y: &[u8]) -> (f64, Coefficients) {
    let m = x.nrows() as f64;
    let mut grad = Coefficients::zeros(coeffs.n_features());
    let mut ll = 0.0;
    for (row, &yi) in x.rows().into_iter().zip(y) {
        let z = coeffs.logit_unchecked(row.iter().copied());
        ll += log_prob(z, yi);
        let residual = sigmoid(z) - f64::from(yi);
        grad.intercept += residual;
        for (g, xj) in grad.weights.iter_mut().zip(row) {
            *g += residual * xj;
        }
    }
    grad.intercept /= m;
    grad.weights.iter_mut().for_each(|g| *g /= m);
    (-ll / m, grad)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Zeros,
    Given(Coefficients),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once `|ΔC| / max(C, 1e−12)` falls below this.
    pub tolerance: f64,
    #[serde(default)]
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, max_iters: 10_000, tolerance: 1e-8, init: Init::Zeros }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Cost at the starting point followed by the cost after every accepted step.
    pub cost_history: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Learning rate in effect at the end, after any divergence halvings.
    pub final_learning_rate: f64,
}

impl TrainTrace {
    pub fn final_cost(&self) -> f64 {
        *self.cost_history.last().expect("history holds the initial cost")
    }
}

/// Full-batch gradient descent `β ← β − α ∇C(β)`.
///
/// A step that would raise the cost is retried with α halved; the reduced α
/// is kept for later steps. Thirty consecutive halvings on one step is a
/// divergence error.
pub fn fit_gradient_descent(
    x: ArrayView2<f64>,
    y: &[u8],
    config: &TrainConfig,
) -> Result<(Coefficients, TrainTrace)> {
    config.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut beta = match &config.init {
        Init::Zeros => Coefficients::zeros(x.ncols()),
        Init::Given(c) => c.clone(),
    };
    check_shapes(&beta, x, y)?;
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::SingleClass);
    }

    let (mut cost, mut grad) = cost_and_gradient(&beta, x, y);
    let mut history = vec![cost];
    let mut lr = config.learning_rate;
    let mut converged = false;
    let mut iterations_run = 0;

    for iteration in 0..config.max_iters {
        let mut halvings = 0;
        let (candidate, next_cost, next_grad) = loop {
            let candidate = beta.axpy(lr, &grad);
            let (c, g) = cost_and_gradient(&candidate, x, y);
            if c.is_finite() && c <= cost {
                break (candidate, c, g);
            }
            if halvings == MAX_CONSECUTIVE_HALVINGS {
                return Err(Error::Divergence { iteration, halvings });
            }
            halvings += 1;
            lr *= 0.5;
        };
        let relative_decrease = (cost - next_cost).abs() / cost.max(1e-12);
        beta = candidate;
        cost = next_cost;
        grad = next_grad;
        history.push(cost);
        iterations_run += 1;
        if relative_decrease < config.tolerance {
            converged = true;
            break;
        }
    }

    Ok((
        beta,
        TrainTrace { cost_history: history, iterations_run, converged, final_learning_rate: lr },
    ))
}

/// Fraction of rows whose thresholded prediction matches `y`.
pub fn accuracy_on(coeffs: &Coefficients, x: &Array2<f64>, y: &[u8], threshold: f64) -> Result<f64> {
    let probs = coeffs.predict_proba_batch(x.view(), Execution::Sequential)?;
    let correct = probs.iter().zip(y).filter(|(p, &yi)| label_for(**p, threshold) == yi).count();
    Ok(correct as f64 / y.len().max(1) as f64)
}
