use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Tallies predictions `probability ≥ threshold` against labels.
pub fn confusion(labels: &[u8], probabilities: &[f64], threshold: f64) -> Result<ConfusionMatrix> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("no samples to evaluate".into()));
    }
    if labels.len() != probabilities.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} predictions",
            labels.len(),
            probabilities.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(probabilities) {
        match (y, p >= threshold) {
            (1, true) => cm.tp += 1,
            (1, false) => cm.fn_ += 1,
            (0, true) => cm.fp += 1,
            (0, false) => cm.tn += 1,
            _ => return Err(Error::InvalidInput(format!("label {y} is not 0/1"))),
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics of one evaluation. `fpr_standard = FP/(FP+TN)` is the usual false
/// positive rate; `fpr_alt = FP/(FP+FN)` is the variant some references
/// print under the same name. Both are kept so neither is silently dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tag: String,
    pub fold: Option<usize>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr_standard: f64,
    pub fpr_alt: f64,
    pub auc: f64,
}

pub const METRIC_NAMES: [&str; 7] = ["auc", "accuracy", "precision", "recall", "f1", "fpr_standard", "fpr_alt"];

impl MetricReport {
    /// Thresholded metrics from a confusion matrix; `auc` is left at 0.
    /// Zero denominators yield 0.
    pub fn from_confusion(cm: &ConfusionMatrix) -> MetricReport {
        let precision = ratio(cm.tp, cm.tp + cm.fp);
        let recall = ratio(cm.tp, cm.tp + cm.fn_);
        // 2PR/(P+R) in count form, rounded once.
        let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
        MetricReport {
            tag: String::new(),
            fold: None,
            accuracy: ratio(cm.tp + cm.tn, cm.total()),
            precision,
            recall,
            f1,
            fpr_standard: ratio(cm.fp, cm.fp + cm.tn),
            fpr_alt: ratio(cm.fp, cm.fp + cm.fn_),
            auc: 0.0,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "auc" => self.auc,
            "accuracy" => self.accuracy,
            "precision" => self.precision,
            "recall" => self.recall,
            "f1" => self.f1,
            "fpr_standard" => self.fpr_standard,
            "fpr_alt" => self.fpr_alt,
            _ => return None,
        })
    }

    fn set(&mut self, name: &str, v: f64) {
        match name {
            "auc" => self.auc = v,
            "accuracy" => self.accuracy = v,
            "precision" => self.precision = v,
            "recall" => self.recall = v,
            "f1" => self.f1 = v,
            "fpr_standard" => self.fpr_standard = v,
            "fpr_alt" => self.fpr_alt = v,
            _ => unreachable!("unknown metric {name}"),
        }
    }

    /// Arithmetic mean of each metric over `reports`.
    pub fn mean(tag: &str, reports: &[MetricReport]) -> Result<MetricReport> {
        if reports.is_empty() {
            return Err(Error::InvalidInput("nothing to average".into()));
        }
        let mut out = MetricReport {
            tag: tag.to_string(),
            ..MetricReport::from_confusion(&ConfusionMatrix::default())
        };
        for name in METRIC_NAMES {
            let s: f64 = reports.iter().map(|r| r.get(name).expect("known metric")).sum();
            out.set(name, s / reports.len() as f64);
        }
        Ok(out)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricReport {
    MetricReport::from_confusion(cm)
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auc_roc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::InvalidInput("labels and scores differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc(format!("{n_pos} positives and {n_neg} negatives")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Count correctly ordered pairs group by group of tied scores.
    let mut negatives_below = 0u64;
    let mut twice_correct = 0u64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let pos = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        let neg = (j - i) as u64 - pos;
        twice_correct += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
        i = j;
    }
    Ok(twice_correct as f64 / 2.0 / (n_pos as f64 * n_neg as f64))
}

/// ROC points `(fpr, tpr)` from the strictest threshold to the loosest.
pub fn roc_curve(labels: &[u8], scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::UndefinedAuc("ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            j += 1;
        }
        pts.push((fp / n_neg, tp / n_pos));
        i = j;
    }
    Ok(pts)
}

/// Full report on one set of predictions.
pub fn evaluate(tag: &str, fold: Option<usize>, labels: &[u8], probabilities: &[f64]) -> Result<MetricReport> {
    let cm = confusion(labels, probabilities, 0.5)?;
    let mut r = metrics(&cm);
    r.auc = auc_roc(labels, probabilities)?;
    r.tag = tag.to_string();
    r.fold = fold;
    Ok(r)
}
