//! Confusion matrix, derived rates, ROC curve and trapezoidal AUC.
//! Malignant (label 1) is the positive class throughout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt_sig;
use crate::logreg::label_for;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

pub fn confusion_matrix(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    crate::check_binary_labels(y_true)?;
    crate::check_binary_labels(y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Precision, recall and F1. A rate whose denominator is zero is reported as
/// 0 with its flag set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
    pub f1_degenerate: bool,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::EmptyConfusion),
            total => Ok((self.tp + self.tn) as f64 / total as f64),
        }
    }

    pub fn rates(&self) -> Rates {
        let ratio = |num: usize, den: usize| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
        let (precision, precision_degenerate) = ratio(self.tp, self.tp + self.fp);
        let (recall, recall_degenerate) = ratio(self.tp, self.tp + self.fn_);
        let (f1, f1_degenerate) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), false)
        } else {
            (0.0, true)
        };
        Rates { precision, recall, f1, precision_degenerate, recall_degenerate, f1_degenerate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC sweep over the distinct scores, highest first, predicting positive
/// when `score ≥ threshold`. Tied scores enter together as one vertex. The
/// first point is `(0, 0)` at a sentinel threshold above every score.
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<Vec<RocPoint>> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch { left: y_true.len(), right: scores.len() });
    }
    crate::check_binary_labels(y_true)?;
    if let Some((i, &s)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
        return Err(Error::NonFinite { row: i, column: 0, value: s });
    }
    let positives = y_true.iter().filter(|&&y| y == 1).count();
    let negatives = y_true.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let top = scores[order[0]];
    let sentinel = match top + top.abs().max(1.0) {
        s if s.is_finite() => s,
        _ => f64::MAX,
    };
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: sentinel }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve that starts at (0,0), ends at (1,1)
/// and is sorted by fpr then tpr.
pub fn auc_trapezoid(roc: &[RocPoint]) -> Result<f64> {
    let (first, last) = match (roc.first(), roc.last()) {
        (Some(f), Some(l)) if roc.len() >= 2 => (f, l),
        _ => return Err(Error::MalformedCurve("need at least two points".into())),
    };
    if (first.fpr, first.tpr) != (0.0, 0.0) {
        return Err(Error::MalformedCurve(format!("starts at ({}, {}), not (0, 0)", first.fpr, first.tpr)));
    }
    if (last.fpr, last.tpr) != (1.0, 1.0) {
        return Err(Error::MalformedCurve(format!("ends at ({}, {}), not (1, 1)", last.fpr, last.tpr)));
    }
    let mut area = 0.0;
    for (k, pair) in roc.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let in_unit = |p: RocPoint| (0.0..=1.0).contains(&p.fpr) && (0.0..=1.0).contains(&p.tpr);
        if !in_unit(b) {
            return Err(Error::MalformedCurve(format!("point {} outside the unit square", k + 1)));
        }
        if b.fpr < a.fpr || (b.fpr == a.fpr && b.tpr < a.tpr) {
            return Err(Error::MalformedCurve(format!("points {} and {} out of order", k, k + 1)));
        }
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    Ok(area)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
    pub f1_degenerate: bool,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub n_test: usize,
    pub threshold: f64,
    pub protocol: String,
}

impl EvaluationReport {
    /// Scores `scores` against `y_true` at `threshold`.
    pub fn evaluate(y_true: &[u8], scores: &[f64], threshold: f64, protocol: impl Into<String>) -> Result<Self> {
        let y_pred: Vec<u8> = scores.iter().map(|&s| label_for(s, threshold)).collect();
        let confusion = confusion_matrix(y_true, &y_pred)?;
        let roc = roc_curve(y_true, scores)?;
        let auc = auc_trapezoid(&roc)?;
        let rates = confusion.rates();
        Ok(Self {
            confusion,
            accuracy: confusion.accuracy()?,
            precision: rates.precision,
            recall: rates.recall,
            f1: rates.f1,
            precision_degenerate: rates.precision_degenerate,
            recall_degenerate: rates.recall_degenerate,
            f1_degenerate: rates.f1_degenerate,
            auc,
            roc,
            n_test: y_true.len(),
            threshold,
            protocol: protocol.into(),
        })
    }

    /// `key = value` lines; reals carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# evaluation report\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("protocol", self.protocol.replace('\n', " "));
        kv("n_test", self.n_test.to_string());
        kv("threshold", fmt_sig(self.threshold));
        kv("tp", self.confusion.tp.to_string());
        kv("fp", self.confusion.fp.to_string());
        kv("fn", self.confusion.fn_.to_string());
        kv("tn", self.confusion.tn.to_string());
        kv("accuracy", fmt_sig(self.accuracy));
        kv("precision", fmt_sig(self.precision));
        kv("precision_degenerate", self.precision_degenerate.to_string());
        kv("recall", fmt_sig(self.recall));
        kv("recall_degenerate", self.recall_degenerate.to_string());
        kv("f1", fmt_sig(self.f1));
        kv("f1_degenerate", self.f1_degenerate.to_string());
        kv("auc", fmt_sig(self.auc));
        kv("roc_points", self.roc.len().to_string());
        out
    }

    /// Two-column `fpr,tpr` CSV of the ROC curve.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for p in &self.roc {
            let _ = writeln!(out, "{},{}", fmt_sig(p.fpr), fmt_sig(p.tpr));
        }
        out
    }
}

/// Key/value pairs of a report written by [`EvaluationReport::to_text`].
pub fn parse_report_text(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once(" = ")
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::MalformedReport(format!("line without ' = ': {l}")))
        })
        .collect()
}

/// Parses a `fpr,tpr` CSV back into curve points (thresholds are not kept).
pub fn parse_roc_csv(text: &str) -> Result<Vec<RocPoint>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("fpr,tpr") {
        return Err(Error::MalformedReport("ROC CSV must start with 'fpr,tpr'".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (a, b) = l.split_once(',').ok_or_else(|| Error::MalformedReport(l.to_string()))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::MalformedReport(l.to_string()));
            Ok(RocPoint { fpr: parse(a)?, tpr: parse(b)?, threshold: f64::NAN })
        })
        .collect()
}
