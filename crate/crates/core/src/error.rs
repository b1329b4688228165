use thiserror::Error;

/// Everything that can go wrong across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("loop edge at vertex {0}")]
    LoopEdge(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge ({u}, {v}) has nonpositive weight {w}")]
    NonPositiveWeight { u: usize, v: usize, w: f64 },

    #[error("vertex id {id} out of range for n = {n}")]
    VertexOutOfRange { id: usize, n: usize },

    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("operation requires an unweighted graph")]
    Weighted,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (|a[{i}][{j}] - a[{j}][{i}]| = {diff:e})")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("matrix is not square or has inconsistent dimensions")]
    NotSquare,

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("eigendecomposition residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("no nonzero eigenvalue at or below delta = {0}")]
    TrivialEmbedding(f64),

    #[error("ball selection exhausted the vertex set after {found} of {wanted} centers")]
    BallSelectionExhausted { found: usize, wanted: usize },

    #[error("linear solve residual {residual:e} exceeds tolerance {tol:e}")]
    SolveResidual { residual: f64, tol: f64 },

    #[error("mixing-time scan exceeded {limit} steps")]
    MixingScanLimit { limit: u64 },

    #[error("graph too large for this operation: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("spectrum is inconsistent: {0}")]
    SpectrumInconsistent(String),

    #[error("oracle degree {degree} violates 2w(y) <= n^2 for n = {n}")]
    DegreeTooLarge { degree: f64, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
