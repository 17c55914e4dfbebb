//! HybridSVD collaborative filtering.
//!
//! Core pieces:
//! - [`sparse`] / [`dense`]: the linear-algebra substrate (CSR matrices,
//!   column-major factor blocks).
//! - [`svd`]: operator-defined Lanczos truncated SVD plus a dense oracle.
//! - [`cholesky`]: sparse Cholesky with reusable symbolic analysis.
//! - [`similarity`]: side-similarity construction from categorical features.
//! - [`model`]: the HybridSVD model itself with folding-in and cold start.
//! - [`eval`]: splits, ranking metrics, and the cross-validation harness.

pub mod cholesky;
pub mod dense;
pub mod error;
pub mod eval;
pub mod linop;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod similarity;
pub mod sparse;
pub mod svd;
pub mod synth;

pub use cholesky::{symbolic_analysis_count, CholeskyFactor, CholeskyOptions};
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use linop::LinearOperator;
pub use model::{
    fit, rank_top_n, AuxiliaryOperator, ColdStartMap, HybridSvdModel, ModelContainer,
    Recommendations,
};
pub use similarity::{
    blend, common_neighbors, definiteness_guard, load_features, side_similarity, Definiteness,
    FeatureCatalog, SideSimilarity,
};
pub use sparse::SparseMatrix;
pub use svd::{dense_svd, principal_angles, truncated_svd, SvdFactors, SvdOptions};
