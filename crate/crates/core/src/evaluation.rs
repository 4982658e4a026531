//! Accuracy, F1, confusion counts and ROC analysis with real as the positive class.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// F1 of the positive class; zero when there are no positives at all.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            log::warn!("F1 undefined: no positive labels or predictions; reporting 0");
            return 0.0;
        }
        2.0 * self.tp as f64 / denom as f64
    }
}

pub fn confusion(labels: &[Label], predictions: &[Label]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::mismatch(labels.len(), predictions.len()));
    }
    if labels.is_empty() {
        return Err(Error::Empty("label list"));
    }
    let mut cm = ConfusionMatrix::default();
    for (truth, pred) in labels.iter().zip(predictions) {
        match (truth, pred) {
            (Label::Real, Label::Real) => cm.tp += 1,
            (Label::Fake, Label::Real) => cm.fp += 1,
            (Label::Fake, Label::Fake) => cm.tn += 1,
            (Label::Real, Label::Fake) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    cm.accuracy()
}

pub fn f1(cm: &ConfusionMatrix) -> f64 {
    cm.f1()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fpr,tpr")?;
        for (fpr, tpr) in &self.points {
            writeln!(out, "{fpr},{tpr}")?;
        }
        Ok(())
    }
}

/// Sweeps the threshold down through the distinct scores; tied scores move
/// the curve in one diagonal step. AUC is the trapezoidal area.
pub fn roc(labels: &[Label], scores: &[f64]) -> Result<RocCurve> {
    if labels.len() != scores.len() {
        return Err(Error::mismatch(labels.len(), scores.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("scores must not be NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l == Label::Real).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let threshold = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == threshold {
            match labels[order[idx]] {
                Label::Real => tp += 1,
                Label::Fake => fp += 1,
            }
            idx += 1;
        }
        let (prev_fpr, prev_tpr) = *points.last().unwrap();
        let next = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (next.0 - prev_fpr) * (next.1 + prev_tpr) / 2.0;
        points.push(next);
    }
    Ok(RocCurve { points, auc })
}

/// Key=value report lines for a set of predictions.
pub fn metrics_report(cm: &ConfusionMatrix, auc: Option<f64>) -> String {
    let mut s = format!(
        "accuracy={}\nf1={}\ntp={}\nfp={}\ntn={}\nfn={}\n",
        cm.accuracy(),
        cm.f1(),
        cm.tp,
        cm.fp,
        cm.tn,
        cm.fn_
    );
    if let Some(auc) = auc {
        s.push_str(&format!("auc={auc}\n"));
    }
    s
}
