use thiserror::Error;

use crate::graph::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(ValidationReport),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("block shape mismatch at vertex `{vertex}`: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    ShapeMismatch {
        vertex: String,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("missing block for vertex `{0}`")]
    MissingBlock(String),

    #[error("near-singular Krein form: eigenvalue {eigenvalue:e} below {threshold:e}")]
    NearSingularForm { eigenvalue: f64, threshold: f64 },

    #[error("no Krein-unitary exists at vertex `{vertex}`: dim mismatch {right_dim} vs {left_dim}")]
    UnbalancedVertex {
        vertex: String,
        right_dim: usize,
        left_dim: usize,
    },

    #[error("edge `{0}` is semi-infinite; truncate it before discretizing")]
    SemiInfiniteEdge(String),

    #[error("polynomial degree {0} too small (need at least 8)")]
    TooFewPoints(usize),

    #[error("constraint matrix is rank deficient at vertex `{vertex}` (rank {rank} of {expected})")]
    RankDeficient {
        vertex: String,
        rank: usize,
        expected: usize,
    },

    #[error("singular solve in time stepping (dt = {dt:e}); try a smaller dt")]
    SingularSolve { dt: f64 },

    #[error("dense exponential capped at dimension {cap}, got {dim}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("quadrature order too low: {0} (need at least 4)")]
    QuadratureOrder(usize),

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fourier path requires a single-edge loop with identity boundary operator: {0}")]
    NotPeriodicLoop(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
