//! Multi-view l2,1-regularised spectral selection of pivotal nodes.
//!
//! Each patient's differential graph is one view. Views are combined into a
//! single weighted Laplacian `M = Σ_v α_v L_v`, and the selection matrix `W`
//! (d × k, orthonormal columns) minimises
//!
//! ```text
//! Tr(Wᵀ M W) + λ Σ_i ‖W^i‖₂
//! ```
//!
//! by iterative reweighting: `W` is the k smallest eigenvectors of
//! `M + λ·diag(D)`, then `D_ii = 1 / (2 √(‖W^i‖² + ε))`, starting from
//! `D = I`. Node `i` is scored by the row norm `‖W^i‖₂`. Running the solver
//! over a (λ, k) grid and counting how often each node lands in the top K
//! gives the consensus pivotal set.

mod consensus;
mod solver;
mod weights;

pub use consensus::{
    consensus_pivotal, run_grid, run_grid_on_matrix, union_pivotal, ConsensusConfig, PivotalNode,
    SCHEMA_VERSION,
    PivotalNodeSet, Provenance,
};
pub use solver::{
    aggregate_laplacian, mfs_solve, rank_descending, MfsConfig, RankedNode, SelectionRecord,
    SelectionResult, SolverState,
    DEGENERACY_GAP,
};
pub use weights::{make_view_weights, ViewWeighting, WeightScheme};
