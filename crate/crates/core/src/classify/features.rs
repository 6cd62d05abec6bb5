use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cohort::Group;
use crate::diffgraph::DiffGraph;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mfs::PivotalNodeSet;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix<T> {
    /// One row per patient, in the order of the input graphs.
    pub rows: Mat<T>,
    pub labels: Vec<Group>,
    pub patient_ids: Vec<String>,
    /// `(region_j, region_k)` per column.
    pub feature_names: Vec<String>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows() == 0
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let cols = self.rows.cols();
        Self {
            rows: Mat::from_fn(idx.len(), cols, |i, j| self.rows[(idx[i], j)]),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            patient_ids: idx.iter().map(|&i| self.patient_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Flattens each graph's pivotal block, `j ≤ k` in lexicographic order
/// (`j < k` when `include_diagonal` is false).
pub fn vectorize<T: Scalar>(
    graphs: &[DiffGraph<T>],
    nodes: &PivotalNodeSet,
    include_diagonal: bool,
) -> Result<FeatureMatrix<T>> {
    if nodes.is_empty() {
        return Err(Error::Config("pivotal node set is empty".into()));
    }
    let d = nodes.node_names.len();
    let pairs: Vec<(usize, usize)> = nodes
        .indices
        .iter()
        .enumerate()
        .flat_map(|(pos, &j)| {
            let start = if include_diagonal { pos } else { pos + 1 };
            nodes.indices[start..].iter().map(move |&k| (j, k))
        })
        .collect();
    let mut data = Vec::with_capacity(graphs.len() * pairs.len());
    for g in graphs {
        if g.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: g.dim(),
            });
        }
        data.extend(pairs.iter().map(|&(j, k)| g.matrix[(j, k)]));
    }
    Ok(FeatureMatrix {
        rows: Mat::from_vec(graphs.len(), pairs.len(), data)?,
        labels: graphs.iter().map(|g| g.group).collect(),
        patient_ids: graphs.iter().map(|g| g.patient_id.clone()).collect(),
        feature_names: pairs
            .iter()
            .map(|&(j, k)| format!("({}, {})", nodes.node_names[j], nodes.node_names[k]))
            .collect(),
    })
}

/// Row indices of a stratified split, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class, `⌊fraction · n_c⌋` rows go to training and the rest to test,
/// chosen by a seeded shuffle. Classes are processed in the fixed class order
/// from one ChaCha8 stream.
pub fn stratified_split(labels: &[Group], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for g in Group::ALL {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == g).collect();
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::Config(format!("class {g} has fewer than 2 rows")));
        }
        let n_train = (train_fraction * rows.len() as f64 + 1e-9).floor() as usize;
        rows.shuffle(&mut rng);
        train.extend_from_slice(&rows[..n_train]);
        test.extend_from_slice(&rows[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgraph::{build_differential_graph, RatioVector};

    fn pivotal(idx: &[usize], d: usize) -> PivotalNodeSet {
        PivotalNodeSet {
            indices: idx.to_vec(),
            pass_counts: Default::default(),
            node_names: (0..d).map(|i| format!("r{i}")).collect(),
            provenance: vec![],
        }
    }

    fn labels(counts: [usize; 3]) -> Vec<Group> {
        let mut out = Vec::new();
        for (g, n) in [Group::Mci, Group::Ad, Group::Cn].into_iter().zip(counts) {
            out.extend(std::iter::repeat_n(g, n));
        }
        out
    }

    #[test]
    fn two_nodes_three_columns() {
        let g = build_differential_graph(&RatioVector::dense("p", Group::Ad, vec![0.1f64, 0.2, 0.3]))
            .unwrap();
        let f = vectorize(&[g], &pivotal(&[0, 2], 3), true).unwrap();
        assert_eq!(f.feature_names, ["(r0, r0)", "(r0, r2)", "(r2, r2)"]);
        let row = f.rows.row(0);
        assert!((row[0] - 0.01).abs() < 1e-15);
        assert!((row[1] - 0.03).abs() < 1e-15);
        assert!((row[2] - 0.09).abs() < 1e-15);

        let off = vectorize(&[f64_graph()], &pivotal(&[0, 2], 3), false).unwrap();
        assert_eq!(off.feature_names, ["(r0, r2)"]);
    }

    fn f64_graph() -> DiffGraph<f64> {
        build_differential_graph(&RatioVector::dense("q", Group::Cn, vec![0.0; 3])).unwrap()
    }

    #[test]
    fn forty_nodes_820_columns_and_zero_rows() {
        let g = build_differential_graph(&RatioVector::dense("z", Group::Cn, vec![0.0f64; 50]))
            .unwrap();
        let idx: Vec<usize> = (0..40).collect();
        let f = vectorize(&[g], &pivotal(&idx, 50), true).unwrap();
        assert_eq!(f.rows.cols(), 820);
        assert!(f.rows.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_pivotal_rejected() {
        assert!(vectorize(&[f64_graph()], &pivotal(&[], 3), true).is_err());
    }

    #[test]
    fn split_ten_each() {
        let l = labels([10, 10, 10]);
        let s = stratified_split(&l, 0.8, 7).unwrap();
        assert_eq!(s.train.len(), 24);
        assert_eq!(s.test.len(), 6);
        for g in Group::ALL {
            assert_eq!(s.train.iter().filter(|&&i| l[i] == g).count(), 8);
        }
        assert_eq!(s, stratified_split(&l, 0.8, 7).unwrap());
        assert_ne!(s, stratified_split(&l, 0.8, 8).unwrap());
    }

    #[test]
    fn split_table_sizes() {
        let mut l = Vec::new();
        for (g, n) in [(Group::Ad, 213), (Group::Mci, 322), (Group::Cn, 322)] {
            l.extend(std::iter::repeat_n(g, n));
        }
        let s = stratified_split(&l, 0.8, 1).unwrap();
        let count = |rows: &[usize], g| rows.iter().filter(|&&i| l[i] == g).count();
        assert_eq!(count(&s.train, Group::Ad), 170);
        assert_eq!(count(&s.train, Group::Mci), 257);
        assert_eq!(count(&s.train, Group::Cn), 257);
        assert_eq!(count(&s.test, Group::Ad), 43);
        assert_eq!(count(&s.test, Group::Mci), 65);
        assert_eq!(count(&s.test, Group::Cn), 65);
    }

    #[test]
    fn split_errors() {
        assert!(stratified_split(&labels([1, 5, 5]), 0.8, 0).is_err());
        assert!(stratified_split(&labels([5, 5, 5]), 1.0, 0).is_err());
    }
}
