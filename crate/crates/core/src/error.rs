//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("triplet ({row}, {col}) = {value} is out of range for a {n_rows}x{n_cols} matrix")]
    TripletOutOfRange {
        row: usize,
        col: usize,
        value: f64,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("scaling exponent d = {0} outside [0, 1]")]
    ScalingOutOfRange(f64),

    #[error("blending weight alpha = {0} outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("rank k = {k} outside 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error(
        "matrix is not positive definite: non-positive pivot at index {pivot} \
         (when factoring a blended similarity this signals alpha/beta is too large)"
    )]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric: max |S - S^T| = {max_asymmetry:.3e} exceeds {tol:.3e}")]
    NotSymmetric { max_asymmetry: f64, tol: f64 },

    #[error("sparsity pattern of the new matrix is not contained in the symbolic pattern (entry ({row}, {col}))")]
    PatternMismatch { row: usize, col: usize },

    #[error("SVD did not converge: {converged} of {requested} singular triplets converged within {iterations} iterations")]
    SvdNotConverged {
        converged: usize,
        requested: usize,
        iterations: usize,
    },

    #[error("operator failed the linearity check: relative deviation {deviation:.3e}")]
    NotLinear { deviation: f64 },

    #[error("invalid similarity matrix: {0}")]
    InvalidSimilarity(String),

    #[error("feature catalog is empty or has no assignments")]
    EmptyFeatures,

    #[error("cold item has no features")]
    ColdItemNoFeatures,

    #[error("entities missing from the feature catalog: {}", missing.join(", "))]
    MissingFeatures { missing: Vec<String> },

    #[error("interaction data is empty after thresholding and core filtering")]
    EmptyAfterFilter,

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("fold {fold} out of range 0..{folds}")]
    FoldOutOfRange { fold: usize, folds: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("unknown items in history: {}", unknown.join(", "))]
    UnknownItems { unknown: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical kind (as opposed to configuration
    /// or I/O problems); used to choose process exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::SvdNotConverged { .. }
                | Error::NotSymmetric { .. }
                | Error::NotLinear { .. }
        ) || matches!(self, Error::Fold { source, .. } if source.is_numerical())
    }

    /// True for failures while reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::MalformedRow { .. }
        ) || matches!(self, Error::Fold { source, .. } if source.is_io())
    }
}
