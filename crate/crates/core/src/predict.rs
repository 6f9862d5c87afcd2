//! Single-case prediction shared by the CLI and the HTTP service.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::artifact::ModelArtifact;
use crate::error::{Error, FieldError, Result};
use crate::logreg::label_for;

/// Raw feature values keyed by feature name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub features: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub probability: f64,
    pub label: String,
    pub threshold: f64,
    pub model_version: String,
}

impl PredictResponse {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "probability = {}", crate::fmt_sig(self.probability));
        let _ = writeln!(out, "label = {}", self.label);
        let _ = writeln!(out, "threshold = {}", crate::fmt_sig(self.threshold));
        let _ = writeln!(out, "model_version = {}", self.model_version);
        out
    }
}

/// Orders the request by the model's features, collecting one message per
/// missing, unexpected or non-finite field.
pub fn ordered_features(artifact: &ModelArtifact, request: &PredictRequest) -> Result<Vec<f64>> {
    let mut problems = Vec::new();
    let mut values = Vec::with_capacity(artifact.feature_names.len());
    for name in &artifact.feature_names {
        match request.features.get(name) {
            None => problems.push(FieldError::new(name, "missing")),
            Some(v) if !v.is_finite() => problems.push(FieldError::new(name, format!("{v} is not a finite number"))),
            Some(&v) => values.push(v),
        }
    }
    for name in request.features.keys() {
        if !artifact.feature_names.contains(name) {
            problems.push(FieldError::new(name, "not a model feature"));
        }
    }
    if problems.is_empty() {
        Ok(values)
    } else {
        Err(Error::InvalidFeatures(problems))
    }
}

pub fn predict(artifact: &ModelArtifact, request: &PredictRequest) -> Result<PredictResponse> {
    let raw = ordered_features(artifact, request)?;
    let probability = artifact.probability(&raw)?;
    let label = label_for(probability, artifact.threshold);
    Ok(PredictResponse {
        probability,
        label: artifact.label_name(label).to_string(),
        threshold: artifact.threshold,
        model_version: artifact.model_version.clone(),
    })
}

/// Builds a request from `name=value` arguments. Values that do not parse
/// are reported per field.
pub fn request_from_pairs<S: AsRef<str>>(pairs: &[S]) -> Result<PredictRequest> {
    let mut request = PredictRequest::default();
    let mut problems = Vec::new();
    for pair in pairs {
        let pair = pair.as_ref();
        let Some((name, value)) = pair.split_once('=') else {
            problems.push(FieldError::new(pair, "expected name=value"));
            continue;
        };
        let name = name.trim();
        match value.trim().parse::<f64>() {
            Ok(v) => {
                if request.features.insert(name.to_string(), v).is_some() {
                    problems.push(FieldError::new(name, "given more than once"));
                }
            }
            Err(_) => problems.push(FieldError::new(name, format!("'{}' is not a number", value.trim()))),
        }
    }
    if problems.is_empty() {
        Ok(request)
    } else {
        Err(Error::InvalidFeatures(problems))
    }
}

/// Builds a request from a header line plus exactly one data row. Columns
/// that are not model features (`id`, `diagnosis`, features the model does
/// not use) are ignored, so a record copied from the dataset can be scored
/// as is.
pub fn request_from_csv_row(artifact: &ModelArtifact, text: &str) -> Result<PredictRequest> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::MalformedHeader(e.to_string()))?.clone();
    let mut rows = reader.records();
    let row = match rows.next() {
        Some(r) => r.map_err(|e| Error::MalformedRow { row: 1, message: e.to_string() })?,
        None => return Err(Error::EmptyDataset),
    };
    if rows.next().is_some() {
        return Err(Error::MalformedRow { row: 2, message: "expected exactly one data row".into() });
    }
    let mut request = PredictRequest::default();
    let mut problems = Vec::new();
    for (name, value) in header.iter().zip(row.iter()) {
        if !artifact.feature_names.iter().any(|f| f == name) {
            continue;
        }
        match value.parse::<f64>() {
            Ok(v) => {
                request.features.insert(name.to_string(), v);
            }
            Err(_) => problems.push(FieldError::new(name, format!("'{value}' is not a number"))),
        }
    }
    if problems.is_empty() {
        Ok(request)
    } else {
        Err(Error::InvalidFeatures(problems))
    }
}
