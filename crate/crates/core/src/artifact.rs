//! Persisted model bundle.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boruta::{BorutaConfig, FeatureDecision};
use crate::dataset::StandardizationParams;
use crate::error::{Error, Result};
use crate::logreg::{Coefficients, TrainConfig};
use crate::metrics::EvaluationReport;
use crate::smote::SmoteConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Training-fold range of one raw feature, used for input hints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub name: String,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaMeta {
    pub config: BorutaConfig,
    pub drop_tentative: bool,
    pub decisions: Vec<FeatureDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub test_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Rows added by SMOTE to the training fold.
    pub n_synthetic: usize,
    pub smote: SmoteConfig,
    pub boruta: Option<BorutaMeta>,
    pub train_config: TrainConfig,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_cost: f64,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub model_version: String,
    pub feature_names: Vec<String>,
    pub standardization: StandardizationParams,
    pub coefficients: Coefficients,
    pub threshold: f64,
    pub label_map: BTreeMap<u8, String>,
    pub feature_summary: Vec<FeatureSummary>,
    pub training_meta: TrainingMeta,
    pub metrics: EvaluationReport,
}

pub fn default_label_map() -> BTreeMap<u8, String> {
    BTreeMap::from([(0, "B".to_string()), (1, "M".to_string())])
}

/// FNV-1a over the coefficient bits; identifies a fitted model.
pub fn model_fingerprint(coeffs: &Coefficients, feature_names: &[String]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            hash ^= u64::from(*b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&coeffs.intercept.to_bits().to_le_bytes());
    for w in &coeffs.weights {
        eat(&w.to_bits().to_le_bytes());
    }
    for name in feature_names {
        eat(name.as_bytes());
        eat(&[0]);
    }
    format!("lr{SCHEMA_VERSION}-{hash:016x}")
}

impl ModelArtifact {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema(self.schema_version));
        }
        let n = self.feature_names.len();
        if n == 0 {
            return Err(Error::InvalidArtifact("no features".into()));
        }
        let arity = |what: &str, found: usize| -> Result<()> {
            if found != n {
                return Err(Error::InvalidArtifact(format!("{what} has {found} entries for {n} features")));
            }
            Ok(())
        };
        arity("coefficients.weights", self.coefficients.weights.len())?;
        arity("standardization.means", self.standardization.means.len())?;
        arity("standardization.std_devs", self.standardization.std_devs.len())?;
        arity("feature_summary", self.feature_summary.len())?;
        if !self.coefficients.is_finite() {
            return Err(Error::InvalidArtifact("non-finite coefficient".into()));
        }
        if self.standardization.means.iter().any(|m| !m.is_finite())
            || self.standardization.std_devs.iter().any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::InvalidArtifact("standardization needs finite means and positive std devs".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArtifact(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        for (summary, name) in self.feature_summary.iter().zip(&self.feature_names) {
            if &summary.name != name {
                return Err(Error::InvalidArtifact(format!(
                    "feature_summary entry '{}' does not match feature '{name}'",
                    summary.name
                )));
            }
        }
        if self.label_map.get(&0).map(String::as_str) != Some("B") || self.label_map.get(&1).map(String::as_str) != Some("M") {
            return Err(Error::InvalidArtifact("label_map must be {0: B, 1: M}".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct VersionProbe {
            schema_version: u32,
        }
        // Check the version before the full shape so old/new files get a clear error.
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.schema_version != SCHEMA_VERSION {
            return Err(Error::UnsupportedSchema(probe.schema_version));
        }
        let artifact: ModelArtifact = serde_json::from_str(text)?;
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Writes through a sibling temp file and renames, so a failure never
    /// leaves a partial artifact at `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let path = path.as_ref();
        let json = self.to_json()?;
        let tmp = path.with_extension("json.partial");
        let write = || -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(json.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        };
        write().map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            Error::io(path, e)
        })
    }

    /// Probability of malignancy for raw (unstandardized) feature values in
    /// `feature_names` order.
    pub fn probability(&self, raw: &[f64]) -> Result<f64> {
        let z = self.standardization.apply(raw)?;
        self.coefficients.predict_proba(&z)
    }

    pub fn label_name(&self, label: u8) -> &str {
        self.label_map.get(&label).map(String::as_str).unwrap_or("?")
    }
}
