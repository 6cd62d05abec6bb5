use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::roc::{auc, roc_curve, youden_cutoff, RocCurve};
use crate::cohort::Group;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoudenPoint {
    pub threshold: f64,
    pub j: f64,
}

/// Binary confusion counts for one class against the rest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class_auc: BTreeMap<Group, f64>,
    /// AUC of all class columns pooled against their one-vs-rest labels.
    pub micro_auc: f64,
    pub macro_auc: f64,
    pub youden: BTreeMap<Group, YoudenPoint>,
    /// At each class's Youden threshold.
    pub confusion: BTreeMap<Group, Confusion>,
    pub split_seed: u64,
    #[serde(skip)]
    pub curves: BTreeMap<Group, RocCurve<f64>>,
    #[serde(skip)]
    pub micro_curve: Option<RocCurve<f64>>,
}

/// One-vs-rest evaluation of `probs` (`n × 3`, columns AD, CN, MCI).
pub fn ovr_report<T: Scalar>(probs: &Mat<T>, labels: &[Group], split_seed: u64) -> Result<EvalReport> {
    if probs.cols() != Group::ALL.len() || probs.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: probs.rows(),
        });
    }
    let mut report = EvalReport {
        per_class_auc: BTreeMap::new(),
        micro_auc: 0.0,
        macro_auc: 0.0,
        youden: BTreeMap::new(),
        confusion: BTreeMap::new(),
        split_seed,
        curves: BTreeMap::new(),
        micro_curve: None,
    };
    let (mut pooled_s, mut pooled_l) = (Vec::new(), Vec::new());
    for g in Group::ALL {
        let c = g.class_index();
        let scores: Vec<f64> = (0..probs.rows()).map(|i| probs[(i, c)].as_f64()).collect();
        let truth: Vec<bool> = labels.iter().map(|&l| l == g).collect();
        let curve = roc_curve(&scores, &truth, g.as_str())?;
        let (threshold, j) = youden_cutoff(&curve);
        let mut cm = Confusion::default();
        for (&s, &t) in scores.iter().zip(&truth) {
            match (s >= threshold, t) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (false, true) => cm.fn_ += 1,
            }
        }
        report.per_class_auc.insert(g, auc(&curve));
        report.youden.insert(g, YoudenPoint { threshold, j });
        report.confusion.insert(g, cm);
        report.curves.insert(g, curve);
        pooled_s.extend(scores);
        pooled_l.extend(truth);
    }
    let micro = roc_curve(&pooled_s, &pooled_l, "micro")?;
    report.micro_auc = auc(&micro);
    report.micro_curve = Some(micro);
    report.macro_auc = report.per_class_auc.values().sum::<f64>() / Group::ALL.len() as f64;
    Ok(report)
}
