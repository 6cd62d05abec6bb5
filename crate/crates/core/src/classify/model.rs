use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::cohort::Group;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

const NUM_CLASSES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    /// Penalty strength `α`: the objective is mean cross-entropy plus
    /// `α/(2n)·‖W‖²` over the non-bias weights.
    pub l2: f64,
    pub step: f64,
    pub max_iter: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            step: 0.1,
            max_iter: 2000,
        }
    }
}

/// Softmax regression over standardised features, classes in the order AD, CN, MCI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<T> {
    /// `3 × (p + 1)`; the last column is the bias.
    pub weights: Mat<T>,
    pub means: Vec<T>,
    pub stds: Vec<T>,
    /// Input columns used, ascending.
    pub kept_columns: Vec<usize>,
    /// Input columns with zero variance on the training rows.
    pub dropped_columns: Vec<usize>,
    pub n_features_in: usize,
    pub params: TrainParams,
    pub loss_trace: Vec<T>,
}

fn one_hot(labels: &[Group]) -> Vec<usize> {
    labels.iter().map(|g| g.class_index()).collect()
}

fn softmax_in_place<T: Scalar>(z: &mut [T]) {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn logits<T: Scalar>(weights: &Mat<T>, x: &[T], out: &mut [T]) {
    let p = x.len();
    for (c, o) in out.iter_mut().enumerate() {
        let w = weights.row(c);
        *o = w[p] + w[..p].iter().zip(x).map(|(&a, &b)| a * b).sum::<T>();
    }
}

/// Objective and its gradient at `weights` (`3 × (p + 1)`, bias last) for the
/// design `x` (`n × p`) and class indices `y`.
pub fn loss_and_gradient<T: Scalar>(
    weights: &Mat<T>,
    x: &Mat<T>,
    y: &[usize],
    l2: T,
) -> (T, Mat<T>) {
    let (n, p) = (x.rows(), x.cols());
    let nf = T::of(n as f64);
    let mut grad = Mat::zeros(NUM_CLASSES, p + 1);
    let mut loss = T::zero();
    let mut z = [T::zero(); NUM_CLASSES];
    for i in 0..n {
        let xi = x.row(i);
        logits(weights, xi, &mut z);
        softmax_in_place(&mut z);
        loss -= z[y[i]].max(T::min_positive_value()).ln();
        for c in 0..NUM_CLASSES {
            let r = z[c] - if c == y[i] { T::one() } else { T::zero() };
            let g = grad.row_mut(c);
            for j in 0..p {
                g[j] += r * xi[j];
            }
            g[p] += r;
        }
    }
    let mut penalty = T::zero();
    for c in 0..NUM_CLASSES {
        let w = weights.row(c);
        let g = grad.row_mut(c);
        for j in 0..=p {
            g[j] /= nf;
            if j < p {
                penalty += w[j] * w[j];
                g[j] += l2 * w[j] / nf;
            }
        }
    }
    (loss / nf + l2 * penalty / (T::of(2.0) * nf), grad)
}

fn standardize<T: Scalar>(rows: &Mat<T>, kept: &[usize], means: &[T], stds: &[T]) -> Mat<T> {
    Mat::from_fn(rows.rows(), kept.len(), |i, j| {
        (rows[(i, kept[j])] - means[j]) / stds[j]
    })
}

/// Fits by gradient descent; a step that raises the objective is halved and retried.
pub fn train<T: Scalar>(data: &FeatureMatrix<T>, params: &TrainParams) -> Result<LinearModel<T>> {
    let n = data.len();
    if n == 0 {
        return Err(Error::Config("no training rows".into()));
    }
    if !(params.l2 >= 0.0 && params.step > 0.0) {
        return Err(Error::Config("l2 must be ≥ 0 and step > 0".into()));
    }
    let mut seen = data.labels.clone();
    seen.sort();
    seen.dedup();
    if seen.len() < 2 {
        return Err(Error::Config("training rows must cover at least two classes".into()));
    }
    if !data.rows.is_finite() {
        return Err(Error::NonFinite);
    }
    let nf = T::of(n as f64);
    let p_in = data.rows.cols();
    let (mut kept, mut dropped, mut means, mut stds) = (vec![], vec![], vec![], vec![]);
    for j in 0..p_in {
        let mean = (0..n).map(|i| data.rows[(i, j)]).sum::<T>() / nf;
        let var = (0..n)
            .map(|i| (data.rows[(i, j)] - mean).powi(2))
            .sum::<T>()
            / nf;
        let sd = var.sqrt();
        if sd > T::of(1e-12) * (T::one() + mean.abs()) {
            kept.push(j);
            means.push(mean);
            stds.push(sd);
        } else {
            dropped.push(j);
        }
    }
    let x = standardize(&data.rows, &kept, &means, &stds);
    let y = one_hot(&data.labels);
    let l2 = T::of(params.l2);

    let mut w = Mat::zeros(NUM_CLASSES, kept.len() + 1);
    let (mut loss, mut grad) = loss_and_gradient(&w, &x, &y, l2);
    let mut step = T::of(params.step);
    let mut trace = vec![loss];
    for _ in 0..params.max_iter {
        if grad.max_abs() < T::of(1e-12) {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = w.clone();
            cand.add_scaled(-step, &grad)?;
            let (cl, cg) = loss_and_gradient(&cand, &x, &y, l2);
            if cl <= loss {
                w = cand;
                loss = cl;
                grad = cg;
                accepted = true;
                break;
            }
            step *= T::of(0.5);
        }
        if !accepted {
            break;
        }
        trace.push(loss);
    }
    Ok(LinearModel {
        weights: w,
        means,
        stds,
        kept_columns: kept,
        dropped_columns: dropped,
        n_features_in: p_in,
        params: params.clone(),
        loss_trace: trace,
    })
}

/// Class probabilities, `n × 3`, columns AD, CN, MCI.
pub fn predict_proba<T: Scalar>(model: &LinearModel<T>, rows: &Mat<T>) -> Result<Mat<T>> {
    if rows.cols() != model.n_features_in {
        return Err(Error::DimensionMismatch {
            expected: model.n_features_in,
            found: rows.cols(),
        });
    }
    let x = standardize(rows, &model.kept_columns, &model.means, &model.stds);
    let mut out = Mat::zeros(rows.rows(), NUM_CLASSES);
    for i in 0..x.rows() {
        let z = out.row_mut(i);
        logits(&model.weights, x.row(i), z);
        softmax_in_place(z);
    }
    Ok(out)
}
