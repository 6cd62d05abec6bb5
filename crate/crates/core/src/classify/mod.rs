//! Discrimination scoring for a pivotal node set.
//!
//! Patients are vectorised by the upper triangle (diagonal included) of their
//! pivotal-restricted differential graph, split 80/20 per class, fitted with
//! an L2-penalised softmax regression, and scored one-vs-rest with ROC/AUC,
//! micro/macro averages and Youden-optimal confusion matrices.

mod features;
mod model;
mod report;
mod roc;

pub use features::{stratified_split, vectorize, FeatureMatrix, Split};
pub use model::{loss_and_gradient, predict_proba, train, LinearModel, TrainParams};
pub use report::{ovr_report, Confusion, EvalReport, YoudenPoint};
pub use roc::{auc, roc_curve, write_roc_csv, youden_cutoff, RocCurve};
