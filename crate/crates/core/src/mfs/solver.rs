use serde::{Deserialize, Serialize};

use super::weights::ViewWeighting;
use crate::diffgraph::DiffGraph;
use crate::error::{Error, Result};
use crate::linalg::{orthonormality_defect, trace_quadratic, Mat};
use crate::scalar::Scalar;
use crate::spectral::{laplacian, sym_eig, SYMMETRY_TOL};

/// Eigenvalue gap at the k-th boundary below which a result is flagged degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfsConfig {
    pub lambda: f64,
    pub k: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_epsilon() -> f64 {
    1e-10
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    100
}

impl Default for MfsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            k: 1,
            epsilon: default_epsilon(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl MfsConfig {
    pub fn new(lambda: f64, k: usize) -> Self {
        Self {
            lambda,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if self.k > d {
            return Err(Error::KTooLarge { k: self.k, d });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Iterate of the reweighting loop, kept for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState<T> {
    pub w: Mat<T>,
    pub d_diag: Vec<T>,
    pub iteration: usize,
    /// `F(W) = Tr(WᵀMW) + λ Σ_i √(‖W^i‖² + ε)` after each eigen-step.
    pub objective_trace: Vec<T>,
    /// `‖WᵀW − I‖_F` after each eigen-step.
    pub orthonormality_trace: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult<T> {
    pub config: MfsConfig,
    /// `‖W^i‖₂` per node.
    pub scores: Vec<T>,
    /// Node indices by descending score, ties by ascending index.
    pub ranking: Vec<usize>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Final eigenvalue gap at the k-th boundary was below [`DEGENERACY_GAP`];
    /// scores then average over the tied cluster.
    pub degenerate: bool,
    pub objective: T,
}

impl<T: Scalar> SelectionResult<T> {
    pub fn top(&self, k: usize) -> &[usize] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}

/// Ranked entry of a serialised [`SelectionResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedNode {
    pub node_index: usize,
    pub region_name: String,
    pub score: f64,
}

/// JSON form of a [`SelectionResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub lambda: f64,
    pub k: usize,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub converged: bool,
    pub iterations_used: usize,
    pub degenerate: bool,
    pub objective: f64,
    pub ranking: Vec<RankedNode>,
}

impl<T: Scalar> SelectionResult<T> {
    pub fn to_record(&self, node_names: &[String]) -> SelectionRecord {
        SelectionRecord {
            lambda: self.config.lambda,
            k: self.config.k,
            epsilon: self.config.epsilon,
            tol: self.config.tol,
            max_iter: self.config.max_iter,
            converged: self.converged,
            iterations_used: self.iterations_used,
            degenerate: self.degenerate,
            objective: self.objective.as_f64(),
            ranking: self
                .ranking
                .iter()
                .map(|&i| RankedNode {
                    node_index: i,
                    region_name: node_names.get(i).cloned().unwrap_or_default(),
                    score: self.scores[i].as_f64(),
                })
                .collect(),
        }
    }
}

/// Indices sorted by descending value, ties broken by ascending index.
pub fn rank_descending<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// `M = Σ_v α_v L_v` over the views that carry a weight.
pub fn aggregate_laplacian<T: Scalar>(
    graphs: &[DiffGraph<T>],
    weights: &ViewWeighting,
) -> Result<Mat<T>> {
    let d = graphs.first().map_or(0, DiffGraph::dim);
    let mut m = Mat::zeros(d, d);
    for g in graphs {
        if g.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: g.dim(),
            });
        }
        let Some(alpha) = weights.weight(&g.patient_id) else {
            continue;
        };
        if alpha == 0.0 {
            continue;
        }
        let l = laplacian(&g.matrix)?;
        m.add_scaled(T::of(alpha), &l.matrix)?;
    }
    Ok(m)
}

fn objective<T: Scalar>(m: &Mat<T>, w: &Mat<T>, scores: &[T], lambda: T, eps: T) -> Result<T> {
    let smooth: T = scores.iter().map(|&s| (s * s + eps).sqrt()).sum();
    Ok(trace_quadratic(m, w)? + lambda * smooth)
}

/// Row scores when the eigenvalue cluster around position `k` straddles the
/// cut. Any orthonormal basis of the cluster is an equally good minimiser, so
/// the cluster's share `(k − a)/(b − a)` is spread evenly over its projector
/// instead of following whichever basis the eigensolver returned. The sum of
/// squared scores is still `k`.
fn boundary_averaged_scores<T: Scalar>(values: &[T], vectors: &Mat<T>, k: usize) -> Vec<T> {
    let d = values.len();
    let scale = values.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let tie = T::of(DEGENERACY_GAP) * scale;
    let pivot = values[k - 1];
    let mut a = k - 1;
    while a > 0 && (values[a - 1] - pivot).abs() <= tie {
        a -= 1;
    }
    let mut b = k;
    while b < d && (values[b] - pivot).abs() <= tie {
        b += 1;
    }
    let share = T::of((k - a) as f64 / (b - a) as f64);
    (0..d)
        .map(|i| {
            let row = vectors.row(i);
            let head: T = row[..a].iter().map(|&v| v * v).sum();
            let cluster: T = row[a..b].iter().map(|&v| v * v).sum();
            (head + share * cluster).sqrt()
        })
        .collect()
}

/// Reweighted eigen-iteration for one (λ, k).
///
/// Stops when `max_i |s_i − s_i'| / max_i s_i < tol` for consecutive score
/// vectors, or after `max_iter` eigen-steps.
pub fn mfs_solve<T: Scalar>(
    m: &Mat<T>,
    config: &MfsConfig,
) -> Result<(SelectionResult<T>, SolverState<T>)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    m.check_symmetric(SYMMETRY_TOL)?;
    let d = m.rows();
    config.validate(d)?;

    let lambda = T::of(config.lambda);
    let eps = T::of(config.epsilon);
    let tol = T::of(config.tol);
    let half = T::of(0.5);

    let mut d_diag = vec![T::one(); d];
    let mut prev: Option<Vec<T>> = None;
    let mut objective_trace = Vec::new();
    let mut orthonormality_trace = Vec::new();
    let mut converged = false;
    let mut degenerate = false;
    let mut iteration = 0;
    let mut w = Mat::zeros(d, config.k);
    let mut scores = vec![T::zero(); d];

    while iteration < config.max_iter {
        iteration += 1;
        let mut a = m.clone();
        for (i, &di) in d_diag.iter().enumerate() {
            a[(i, i)] += lambda * di;
        }
        let eig = sym_eig(&a)?;
        w = eig.smallest(config.k)?;
        degenerate = eig
            .gap_after(config.k)
            .is_some_and(|g| g < T::of(DEGENERACY_GAP));

        scores = if degenerate {
            boundary_averaged_scores(&eig.values, &eig.vectors, config.k)
        } else {
            w.row_norms()
        };
        objective_trace.push(objective(m, &w, &scores, lambda, eps)?);
        orthonormality_trace.push(orthonormality_defect(&w));

        for (di, &s) in d_diag.iter_mut().zip(&scores) {
            *di = half / (s * s + eps).sqrt();
        }

        if let Some(p) = &prev {
            let top = scores.iter().fold(T::zero(), |a, &b| a.max(b));
            let change = scores
                .iter()
                .zip(p)
                .fold(T::zero(), |a, (&s, &q)| a.max((s - q).abs()));
            if top > T::zero() && change / top < tol {
                converged = true;
                break;
            }
        }
        prev = Some(scores.clone());
    }

    let ranking = rank_descending(&scores);
    let result = SelectionResult {
        config: config.clone(),
        scores,
        ranking,
        converged,
        iterations_used: iteration,
        degenerate,
        objective: *objective_trace.last().expect("at least one iteration"),
    };
    let state = SolverState {
        w,
        d_diag,
        iteration,
        objective_trace,
        orthonormality_trace,
    };
    Ok((result, state))
}
