//! WDBC ingestion, z-score standardization, stratified splitting and
//! Pearson correlation.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Number of numeric measurements in a WDBC record.
pub const WDBC_FEATURES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Diagnosis {
    #[serde(rename = "B")]
    Benign,
    #[serde(rename = "M")]
    Malignant,
}

impl Diagnosis {
    /// Malignant is the positive class.
    pub fn label(self) -> u8 {
        match self {
            Diagnosis::Benign => 0,
            Diagnosis::Malignant => 1,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Diagnosis::Benign),
            1 => Some(Diagnosis::Malignant),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Diagnosis::Benign => "B",
            Diagnosis::Malignant => "M",
        }
    }

    fn parse(token: &str) -> Option<Self> {
        match token {
            "B" => Some(Diagnosis::Benign),
            "M" => Some(Diagnosis::Malignant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub diagnosis: Diagnosis,
    pub features: Vec<f64>,
}

/// An immutable table of labelled records sharing one feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    records: Vec<RawRecord>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, records: Vec<RawRecord>) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::MalformedHeader("no feature columns".into()));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::MalformedHeader(format!("duplicate feature name '{name}'")));
            }
        }
        for (row, record) in records.iter().enumerate() {
            if record.features.len() != feature_names.len() {
                return Err(Error::MalformedRow {
                    row: row + 1,
                    message: format!(
                        "expected {} features, found {}",
                        feature_names.len(),
                        record.features.len()
                    ),
                });
            }
            if let Some((column, &value)) =
                record.features.iter().enumerate().find(|(_, v)| !v.is_finite())
            {
                return Err(Error::NonFinite { row: row + 1, column, value });
            }
        }
        Ok(Self { feature_names, records })
    }

    /// Reads a WDBC CSV file.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    /// Parses WDBC CSV text: header `id,diagnosis,<30 features>`, one record
    /// per line, an optional trailing empty column. Row numbers in errors
    /// count data rows from 1.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let header = csv
            .headers()
            .map_err(|e| Error::MalformedHeader(e.to_string()))?
            .clone();
        let mut columns: Vec<&str> = header.iter().collect();
        if columns.last() == Some(&"") {
            columns.pop();
        }
        if columns.len() != WDBC_FEATURES + 2 {
            return Err(Error::MalformedHeader(format!(
                "expected {} columns (id, diagnosis, {} features), found {}",
                WDBC_FEATURES + 2,
                WDBC_FEATURES,
                columns.len()
            )));
        }
        if !columns[0].eq_ignore_ascii_case("id") || !columns[1].eq_ignore_ascii_case("diagnosis") {
            return Err(Error::MalformedHeader(format!(
                "first columns must be 'id,diagnosis', found '{},{}'",
                columns[0], columns[1]
            )));
        }
        let feature_names: Vec<String> = columns[2..].iter().map(|s| s.to_string()).collect();

        let mut records = Vec::new();
        for (i, row) in csv.records().enumerate() {
            let row_no = i + 1;
            let row = row.map_err(|e| Error::MalformedRow { row: row_no, message: e.to_string() })?;
            let mut fields: Vec<&str> = row.iter().collect();
            if fields.len() == WDBC_FEATURES + 3 && fields.last() == Some(&"") {
                fields.pop();
            }
            if fields.len() != WDBC_FEATURES + 2 {
                return Err(Error::MalformedRow {
                    row: row_no,
                    message: format!("expected {} fields, found {}", WDBC_FEATURES + 2, fields.len()),
                });
            }
            let diagnosis = Diagnosis::parse(fields[1]).ok_or_else(|| Error::UnknownDiagnosis {
                token: fields[1].to_string(),
                row: row_no,
            })?;
            let features = fields[2..]
                .iter()
                .zip(&feature_names)
                .map(|(raw, name)| match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::MalformedRow {
                        row: row_no,
                        message: format!("non-numeric value '{raw}' for {name}"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            records.push(RawRecord { id: fields[0].to_string(), diagnosis, features });
        }
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::new(feature_names, records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn records(&self) -> &[RawRecord] {
        &self.records
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Labels for every record, M→1, B→0.
    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.diagnosis.label()).collect()
    }

    pub fn labels_at(&self, rows: &[usize]) -> Vec<u8> {
        rows.iter().map(|&i| self.records[i].diagnosis.label()).collect()
    }

    /// `(benign, malignant)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let malignant = self.records.iter().filter(|r| r.diagnosis == Diagnosis::Malignant).count();
        (self.len() - malignant, malignant)
    }

    /// Raw feature values for `rows` restricted to `columns`, in that order.
    pub fn matrix(&self, rows: &[usize], columns: &[usize]) -> Array2<f64> {
        Array2::from_shape_fn((rows.len(), columns.len()), |(i, j)| {
            self.records[rows[i]].features[columns[j]]
        })
    }

    pub fn column(&self, column: usize, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.records[i].features[column]).collect()
    }

    pub fn all_rows(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

/// Per-feature z-score parameters fitted on a set of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

/// Sample mean and n−1 standard deviation of every feature over `rows`.
/// Fails listing every feature whose variance over `rows` is zero.
pub fn standardize_fit(data: &Dataset, rows: &[usize]) -> Result<StandardizationParams> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut means = Vec::with_capacity(data.n_features());
    let mut std_devs = Vec::with_capacity(data.n_features());
    let mut constant = Vec::new();
    for j in 0..data.n_features() {
        let (mean, sd) = mean_and_sd(&data.column(j, rows));
        if sd.is_nan() || sd <= 0.0 {
            constant.push(data.feature_names()[j].clone());
        }
        means.push(mean);
        std_devs.push(sd);
    }
    if !constant.is_empty() {
        return Err(Error::ZeroVariance(constant));
    }
    Ok(StandardizationParams { means, std_devs })
}

pub(crate) fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

impl StandardizationParams {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    fn check_arity(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(Error::ArityMismatch { expected: self.len(), found });
        }
        Ok(())
    }

    pub fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(features.len())?;
        Ok(features
            .iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn invert(&self, standardized: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(standardized.len())?;
        Ok(standardized
            .iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(z, (m, s))| z * s + m)
            .collect())
    }

    pub fn apply_matrix(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_arity(x.ncols())?;
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.means[j]) / self.std_devs[j];
            }
        }
        Ok(out)
    }

    /// Parameters for a subset of features, in the order given.
    pub fn select(&self, columns: &[usize]) -> Self {
        Self {
            means: columns.iter().map(|&j| self.means[j]).collect(),
            std_devs: columns.iter().map(|&j| self.std_devs[j]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Per-class shuffled holdout. Each class contributes
/// `round(count × test_fraction)` records to the test side; both index lists
/// come back sorted.
pub fn stratified_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Diagnosis::Benign, Diagnosis::Malignant] {
        let mut members: Vec<usize> = data
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.diagnosis == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(Error::InvalidSplit(format!(
                "class {} has {} record(s), need at least 2",
                class.code(),
                members.len()
            )));
        }
        rng.shuffle(&mut members);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    if test.is_empty() || train.is_empty() {
        return Err(Error::InvalidSplit(format!(
            "test fraction {test_fraction} leaves an empty {} partition",
            if test.is_empty() { "test" } else { "train" }
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}

/// Pearson r, clamped to [−1, 1].
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let cx = centered(x).ok_or_else(|| Error::ConstantInput("x".into()))?;
    let cy = centered(y).ok_or_else(|| Error::ConstantInput("y".into()))?;
    Ok(centered_r(&cx, &cy))
}

/// Centers and returns `(deviations, sqrt(sum of squares))`, or `None` for a
/// constant vector.
fn centered(v: &[f64]) -> Option<(Vec<f64>, f64)> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let dev: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
    (norm > 0.0).then_some((dev, norm))
}

fn centered_r(x: &(Vec<f64>, f64), y: &(Vec<f64>, f64)) -> f64 {
    let cov: f64 = x.0.iter().zip(&y.0).map(|(a, b)| a * b).sum();
    (cov / (x.1 * y.1)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub feature_names: Vec<String>,
    /// Row-major `n × n`.
    pub values: Vec<Vec<f64>>,
}

/// Pairwise Pearson correlation of every feature over `rows`. The diagonal
/// is exactly 1 and the lower triangle mirrors the upper bit for bit.
pub fn correlation_matrix(data: &Dataset, rows: &[usize]) -> Result<CorrelationMatrix> {
    if rows.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let n = data.n_features();
    let columns = (0..n)
        .map(|j| {
            centered(&data.column(j, rows))
                .ok_or_else(|| Error::ConstantInput(data.feature_names()[j].clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in (i + 1)..n {
            let r = centered_r(&columns[i], &columns[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { feature_names: data.feature_names().to_vec(), values })
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.feature_names.iter().position(|n| n == a)?;
        let j = self.feature_names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    /// CSV with a header row and a leading name column; 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("feature");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(&csv_field(name));
        }
        out.push('\n');
        for (name, row) in self.feature_names.iter().zip(&self.values) {
            out.push_str(&csv_field(name));
            for v in row {
                let _ = write!(out, ",{}", crate::fmt_sig(*v));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
