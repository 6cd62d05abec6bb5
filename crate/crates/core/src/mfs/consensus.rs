use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{aggregate_laplacian, mfs_solve, MfsConfig, SelectionResult};
use super::weights::ViewWeighting;
use crate::diffgraph::DiffGraph;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub top_k: usize,
    pub min_pass_count: usize,
    pub lambda_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            top_k: 20,
            min_pass_count: 41,
            lambda_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            k_grid: vec![15, 20, 25, 30, 35, 40, 45, 50, 55],
        }
    }
}

impl ConsensusConfig {
    pub fn grid_size(&self) -> usize {
        self.lambda_grid.len() * self.k_grid.len()
    }

    /// Sets `min_pass_count = ⌈ratio · grid size⌉`.
    pub fn with_pass_ratio(mut self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Config(format!("pass ratio must lie in (0, 1], got {ratio}")));
        }
        // Guard against 0.9111.. * 45 landing a hair above an integer.
        let raw = ratio * self.grid_size() as f64;
        self.min_pass_count = ((raw - 1e-9).ceil() as usize).max(1);
        Ok(self)
    }

    pub fn pass_ratio(&self) -> f64 {
        self.min_pass_count as f64 / self.grid_size() as f64
    }

    pub fn validate(&self, active_nodes: usize) -> Result<()> {
        if self.lambda_grid.is_empty() || self.k_grid.is_empty() {
            return Err(Error::Config("lambda and k grids must be non-empty".into()));
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k > active_nodes) {
            return Err(Error::Config(format!(
                "k exceeds node count: k = {k} > {active_nodes} active nodes"
            )));
        }
        if self.top_k == 0 || self.top_k > active_nodes {
            return Err(Error::Config(format!(
                "top_k = {} must lie in 1..={active_nodes}",
                self.top_k
            )));
        }
        if self.min_pass_count == 0 || self.min_pass_count > self.grid_size() {
            return Err(Error::Config(format!(
                "min_pass_count = {} must lie in 1..={}",
                self.min_pass_count,
                self.grid_size()
            )));
        }
        if let Some(&l) = self.lambda_grid.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(Error::Config(format!("lambda must be non-negative, got {l}")));
        }
        Ok(())
    }
}

/// Solves every (λ, k) grid point on the aggregated Laplacian of `graphs`.
pub fn run_grid<T: Scalar>(
    graphs: &[DiffGraph<T>],
    weights: &ViewWeighting,
    consensus: &ConsensusConfig,
    template: &MfsConfig,
) -> Result<Vec<SelectionResult<T>>> {
    let m = aggregate_laplacian(graphs, weights)?;
    run_grid_on_matrix(&m, consensus, template)
}

/// Grid points are solved in parallel on the current rayon pool and returned
/// in (λ index, k index) order.
pub fn run_grid_on_matrix<T: Scalar>(
    m: &Mat<T>,
    consensus: &ConsensusConfig,
    template: &MfsConfig,
) -> Result<Vec<SelectionResult<T>>> {
    consensus.validate(m.rows())?;
    let points: Vec<MfsConfig> = consensus
        .lambda_grid
        .iter()
        .flat_map(|&lambda| {
            consensus.k_grid.iter().map(move |&k| MfsConfig {
                lambda,
                k,
                ..template.clone()
            })
        })
        .collect();
    points
        .par_iter()
        .map(|cfg| {
            mfs_solve(m, cfg)
                .map(|(r, _)| r)
                .map_err(|e| Error::GridPoint {
                    lambda: cfg.lambda,
                    k: cfg.k,
                    source: Box::new(e),
                })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub weighting: String,
    pub consensus: ConsensusConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotalNodeSet {
    /// Sorted node indices in the space named by `node_names`.
    pub indices: Vec<usize>,
    pub pass_counts: BTreeMap<usize, usize>,
    pub node_names: Vec<String>,
    pub provenance: Vec<Provenance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotalNode {
    pub node_index: usize,
    pub region_name: String,
    pub pass_count: usize,
}

#[derive(Serialize, Deserialize)]
struct PivotalDocument {
    schema_version: u32,
    nodes: Vec<PivotalNode>,
    node_space: Vec<String>,
    provenance: Vec<Provenance>,
}

impl PivotalNodeSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nodes(&self) -> Vec<PivotalNode> {
        self.indices
            .iter()
            .map(|&i| PivotalNode {
                node_index: i,
                region_name: self.node_names.get(i).cloned().unwrap_or_default(),
                pass_count: self.pass_counts.get(&i).copied().unwrap_or(0),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = PivotalDocument {
            schema_version: SCHEMA_VERSION,
            nodes: self.nodes(),
            node_space: self.node_names.clone(),
            provenance: self.provenance.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PivotalDocument = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        let mut indices: Vec<usize> = doc.nodes.iter().map(|n| n.node_index).collect();
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= doc.node_space.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: doc.node_space.len(),
            });
        }
        for n in &doc.nodes {
            if doc.node_space[n.node_index] != n.region_name {
                return Err(Error::Config(format!(
                    "node {} is named {:?} but the node space says {:?}",
                    n.node_index, n.region_name, doc.node_space[n.node_index]
                )));
            }
        }
        Ok(Self {
            indices,
            pass_counts: doc.nodes.iter().map(|n| (n.node_index, n.pass_count)).collect(),
            node_names: doc.node_space,
            provenance: doc.provenance,
        })
    }
}

/// Counts, per node, the grid points at which it ranks in the top K, and
/// keeps nodes with at least `min_pass_count` passes.
pub fn consensus_pivotal<T: Scalar>(
    results: &[SelectionResult<T>],
    consensus: &ConsensusConfig,
    node_names: &[String],
    weighting: &str,
) -> Result<PivotalNodeSet> {
    let d = node_names.len();
    let mut counts = vec![0usize; d];
    for r in results {
        if r.ranking.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.ranking.len(),
            });
        }
        for &i in r.top(consensus.top_k) {
            counts[i] += 1;
        }
    }
    let indices: Vec<usize> = (0..d)
        .filter(|&i| counts[i] >= consensus.min_pass_count)
        .collect();
    Ok(PivotalNodeSet {
        pass_counts: indices.iter().map(|&i| (i, counts[i])).collect(),
        indices,
        node_names: node_names.to_vec(),
        provenance: vec![Provenance {
            weighting: weighting.to_string(),
            consensus: consensus.clone(),
        }],
    })
}

/// Set union; pass counts merge by max, provenance is concatenated.
pub fn union_pivotal(sets: &[PivotalNodeSet]) -> Result<PivotalNodeSet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Config("union of zero pivotal sets".into()))?;
    let mut indices = BTreeSet::new();
    let mut pass_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut provenance = Vec::new();
    for s in sets {
        if s.node_names != first.node_names {
            return Err(Error::Config("pivotal sets use different node spaces".into()));
        }
        indices.extend(s.indices.iter().copied());
        for (&i, &c) in &s.pass_counts {
            let e = pass_counts.entry(i).or_insert(0);
            *e = (*e).max(c);
        }
        provenance.extend(s.provenance.iter().cloned());
    }
    Ok(PivotalNodeSet {
        indices: indices.into_iter().collect(),
        pass_counts,
        node_names: first.node_names.clone(),
        provenance,
    })
}
