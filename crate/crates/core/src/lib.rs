//! Breast cancer (WDBC) malignancy classifier.
//!
//! Logistic regression trained by full-batch gradient descent, with SMOTE
//! oversampling of the minority class, Boruta shadow-feature selection, and
//! confusion-matrix / ROC evaluation. [`pipeline::train`] wires the stages
//! together and produces a [`ModelArtifact`] that [`predict::predict`] scores
//! single cases against.
//!
//! The `parallel` feature (on by default) runs the independent inner loops
//! (k-NN rows, Boruta iterations, permutation columns, batch scoring) on
//! rayon. Results are identical with the feature off.

pub mod artifact;
pub mod boruta;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod logreg;
pub mod metrics;
pub mod pipeline;
pub mod predict;
pub mod rng;
pub mod smote;

pub use artifact::ModelArtifact;
pub use dataset::Dataset;
pub use error::{Error, FieldError, Result};
pub use exec::Execution;

/// Scientific notation with 17 significant digits; parses back to the same
/// `f64`.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn check_binary_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().enumerate().find(|(_, &l)| l > 1) {
        Some((index, &value)) => Err(Error::NonBinaryLabel { index, value }),
        None => Ok(()),
    }
}
