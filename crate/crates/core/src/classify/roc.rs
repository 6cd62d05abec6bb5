use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Operating points swept over distinct score thresholds, highest first.
/// The first point is `(0, 0)` at threshold `+∞`; the last is `(1, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve<T> {
    /// `(fpr, tpr)` per threshold.
    pub points: Vec<(T, T)>,
    pub thresholds: Vec<T>,
    pub positive_label: String,
}

/// A score predicts positive when it is `≥` the threshold.
pub fn roc_curve<T: Scalar>(
    scores: &[T],
    labels: &[bool],
    positive_label: &str,
) -> Result<RocCurve<T>> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Domain(format!(
            "ROC for {positive_label} needs both classes, got {pos} positive and {neg} negative"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let (pf, nf) = (T::of(pos as f64), T::of(neg as f64));
    let mut points = vec![(T::zero(), T::zero())];
    let mut thresholds = vec![T::infinity()];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((T::of(fp as f64) / nf, T::of(tp as f64) / pf));
        thresholds.push(t);
    }
    Ok(RocCurve {
        points,
        thresholds,
        positive_label: positive_label.to_string(),
    })
}

/// Trapezoidal area under the curve.
pub fn auc<T: Scalar>(curve: &RocCurve<T>) -> T {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * T::of(0.5))
        .sum()
}

/// Threshold maximising `tpr − fpr`, and that maximum. Ties go to the lowest threshold.
pub fn youden_cutoff<T: Scalar>(curve: &RocCurve<T>) -> (T, T) {
    let mut best = (curve.thresholds[0], T::neg_infinity());
    for (&(fpr, tpr), &t) in curve.points.iter().zip(&curve.thresholds) {
        let j = tpr - fpr;
        if j >= best.1 {
            best = (t, j);
        }
    }
    best
}

/// `threshold,fpr,tpr`, one row per operating point.
pub fn write_roc_csv<T: Scalar, W: Write>(curve: &RocCurve<T>, mut out: W) -> Result<()> {
    writeln!(out, "threshold,fpr,tpr")?;
    for (&(fpr, tpr), &t) in curve.points.iter().zip(&curve.thresholds) {
        writeln!(out, "{t},{fpr},{tpr}")?;
    }
    Ok(())
}
