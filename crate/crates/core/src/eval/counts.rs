use std::collections::BTreeSet;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::{EvalError, GroundTruth};
use crate::config::ParameterPath;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |mut acc, c| {
            acc += c;
            acc
        })
    }
}

/// Precision, recall and F1 as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when some ratio had a zero denominator and was reported as 0.
    #[serde(default)]
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64, degenerate: &mut bool) -> f64 {
    if den == 0.0 {
        *degenerate = true;
        0.0
    } else {
        num / den
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> Metrics {
    let mut degenerate = false;
    let precision = ratio(c.tp as f64, (c.tp + c.fp) as f64, &mut degenerate);
    let recall = ratio(c.tp as f64, (c.tp + c.fn_) as f64, &mut degenerate);
    let f1 = f1_score(precision, recall).unwrap_or_else(|| {
        degenerate = true;
        0.0
    });
    Metrics { precision, recall, f1, degenerate }
}

/// Harmonic mean; `None` when both inputs are zero.
pub fn f1_score(precision: f64, recall: f64) -> Option<f64> {
    let den = precision + recall;
    (den != 0.0).then(|| 2.0 * precision * recall / den)
}

/// Scores one file.
///
/// Detected paths that are not parameters of the document count like
/// unmatched findings: false positives with no true-negative slot behind
/// them, so `tp + fn + fp + tn = |all_params| + unmatched + stray`.
pub fn classify(
    detected: &[ParameterPath],
    unmatched: usize,
    truth: &GroundTruth,
    all_params: &[ParameterPath],
) -> Result<ConfusionCounts, EvalError> {
    let all: BTreeSet<&ParameterPath> = all_params.iter().collect();
    let labeled: BTreeSet<&ParameterPath> = truth.paths().into_iter().collect();
    if let Some(p) = labeled.iter().find(|p| !all.contains(**p)) {
        return Err(EvalError::TruthPathMissing { origin: truth.origin.clone(), path: p.to_string() });
    }
    let flagged: BTreeSet<&ParameterPath> = detected.iter().collect();
    let stray = flagged.iter().filter(|p| !all.contains(**p)).count();
    let real: BTreeSet<&ParameterPath> = flagged.into_iter().filter(|p| all.contains(*p)).collect();
    let tp = real.intersection(&labeled).count();
    let fn_ = labeled.len() - tp;
    let wrong = real.len() - tp;
    Ok(ConfusionCounts { tp, fn_, fp: wrong + unmatched + stray, tn: all.len() - tp - fn_ - wrong })
}
