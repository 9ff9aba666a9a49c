use serde::{Deserialize, Serialize};

use super::{check_inputs, roc_auc};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        Self { tn, fp, fn_, tp }
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    /// F1 as the exact fraction `2tp / (2tp + fp + fn)`; `(0, 1)` when undefined.
    pub fn f1_fraction(&self) -> (u64, u64) {
        let den = 2 * self.tp + self.fp + self.fn_;
        if den == 0 || self.tp == 0 {
            (0, 1)
        } else {
            (2 * self.tp, den)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fnr: f64,
    pub fpr: f64,
    pub roc_auc: Option<f64>,
    pub threshold: Option<f64>,
    pub confusion: ConfusionMatrix,
    /// Metrics that fell back to a default because their denominator was zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

/// Tally predictions (`score >= tau` is malicious) against labels.
pub fn confusion_matrix(scores: &[f64], labels: &[u8], tau: f64) -> Result<ConfusionMatrix> {
    check_inputs(scores, labels)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::OutOfRange(format!("threshold {tau} outside (0, 1)")));
    }
    let mut cm = ConfusionMatrix::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (l == 1, s >= tau) {
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (true, true) => cm.tp += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0 {
        degenerate.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Derive the threshold metrics from a confusion matrix. Zero denominators
/// yield 0 and are listed in `degenerate`. `roc_auc` is left unset.
pub fn metrics_from_cm(cm: &ConfusionMatrix) -> MetricsReport {
    let mut degenerate = Vec::new();
    let accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy", &mut degenerate);
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut degenerate);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", &mut degenerate);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate.push("f1".into());
        0.0
    };
    let fnr = ratio(cm.fn_, cm.fn_ + cm.tp, "fnr", &mut degenerate);
    let fpr = ratio(cm.fp, cm.fp + cm.tn, "fpr", &mut degenerate);
    MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        fnr,
        fpr,
        roc_auc: None,
        threshold: None,
        confusion: *cm,
        degenerate,
    }
}

/// Full report at one threshold, with ROC-AUC when both classes are present.
pub fn evaluate(scores: &[f64], labels: &[u8], tau: f64) -> Result<MetricsReport> {
    let cm = confusion_matrix(scores, labels, tau)?;
    let mut report = metrics_from_cm(&cm);
    report.threshold = Some(tau);
    report.roc_auc = match roc_auc(scores, labels) {
        Ok(a) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(report)
}
