//! Per-patient differential graphs built from relative volume change.
//!
//! For patient `v` and region `j` the ratio change is
//! `r_j = (vol_T1 − vol_T0) / vol_T0`, and the graph is the outer product
//! `S_jk = r_j · r_k`. Signs are kept: a positive entry is a concordant pair
//! (both regions move the same way), a negative entry a discordant one.

use std::io::Write;

use rayon::prelude::*;

use crate::cohort::{CohortDataset, Group};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// `(vol_t1 − vol_t0) / vol_t0`.
pub fn ratio_change<T: Scalar>(vol_t0: T, vol_t1: T) -> Result<T> {
    if !(vol_t0 > T::zero()) || !vol_t0.is_finite() {
        return Err(Error::Domain(format!(
            "baseline volume must be positive, got {vol_t0}"
        )));
    }
    Ok((vol_t1 - vol_t0) / vol_t0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioVector<T> {
    pub patient_id: String,
    pub group: Group,
    /// Relative change per region; zero wherever `mask` is false.
    pub values: Vec<T>,
    pub mask: Vec<bool>,
}

impl<T: Scalar> RatioVector<T> {
    /// Ratio vector of the `index`-th patient of `dataset`. Regions that are
    /// not valid for this patient are masked out.
    pub fn from_dataset(dataset: &CohortDataset, index: usize) -> Self {
        let p = &dataset.patients[index];
        let mut values = Vec::with_capacity(dataset.num_regions());
        let mut mask = Vec::with_capacity(dataset.num_regions());
        for r in 0..dataset.num_regions() {
            let v = if p.region_valid(r) {
                ratio_change(T::of(p.t0[r].unwrap()), T::of(p.t1[r].unwrap())).ok()
            } else {
                None
            };
            let v = v.filter(|x| x.is_finite());
            mask.push(v.is_some());
            values.push(v.unwrap_or_else(T::zero));
        }
        Self {
            patient_id: p.id.clone(),
            group: p.group,
            values,
            mask,
        }
    }

    /// Unmasked vector, convenient for tests and synthetic inputs.
    pub fn dense(patient_id: impl Into<String>, group: Group, values: Vec<T>) -> Self {
        let mask = vec![true; values.len()];
        Self {
            patient_id: patient_id.into(),
            group,
            values,
            mask,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One patient's `d × d` differential graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffGraph<T> {
    pub patient_id: String,
    pub group: Group,
    pub matrix: Mat<T>,
    /// Original region index of each row; the identity until the graph is restricted.
    pub node_map: Vec<usize>,
}

impl<T: Scalar> DiffGraph<T> {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Outer product of the masked ratio vector. Masked-out rows and columns are zero.
pub fn build_differential_graph<T: Scalar>(ratios: &RatioVector<T>) -> Result<DiffGraph<T>> {
    let d = ratios.len();
    if ratios.mask.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: ratios.mask.len(),
        });
    }
    let r: Vec<T> = ratios
        .values
        .iter()
        .zip(&ratios.mask)
        .map(|(&v, &m)| if m { v } else { T::zero() })
        .collect();
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut m = Mat::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let s = r[j] * r[k];
            m[(j, k)] = s;
            m[(k, j)] = s;
        }
    }
    Ok(DiffGraph {
        patient_id: ratios.patient_id.clone(),
        group: ratios.group,
        matrix: m,
        node_map: (0..d).collect(),
    })
}

/// Principal submatrix on `nodes` (sorted, distinct, in range).
pub fn restrict_graph<T: Scalar>(graph: &DiffGraph<T>, nodes: &[usize]) -> Result<DiffGraph<T>> {
    check_indices(nodes, graph.dim())?;
    Ok(DiffGraph {
        patient_id: graph.patient_id.clone(),
        group: graph.group,
        matrix: graph.matrix.principal_submatrix(nodes),
        node_map: nodes.iter().map(|&i| graph.node_map[i]).collect(),
    })
}

pub(crate) fn check_indices(nodes: &[usize], len: usize) -> Result<()> {
    if let Some(&bad) = nodes.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index: bad, len });
    }
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedIndices);
    }
    Ok(())
}

/// Differential graphs for every patient, in dataset order.
pub fn dataset_graphs<T: Scalar>(dataset: &CohortDataset) -> Vec<DiffGraph<T>> {
    (0..dataset.num_patients())
        .into_par_iter()
        .map(|i| {
            build_differential_graph(&RatioVector::from_dataset(dataset, i))
                .expect("masked ratios are finite")
        })
        .collect()
}

/// Differential graphs restricted to `nodes`, in dataset order.
pub fn restricted_graphs<T: Scalar>(
    dataset: &CohortDataset,
    nodes: &[usize],
) -> Result<Vec<DiffGraph<T>>> {
    check_indices(nodes, dataset.num_regions())?;
    (0..dataset.num_patients())
        .into_par_iter()
        .map(|i| {
            let g = build_differential_graph(&RatioVector::from_dataset(dataset, i))?;
            restrict_graph(&g, nodes)
        })
        .collect()
}

/// Writes the matrix as CSV, `d` rows by `d` columns, shortest round-trip decimals.
pub fn write_matrix_csv<T: Scalar, W: Write>(m: &Mat<T>, mut out: W) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
