use thiserror::Error;

use crate::mgda::MgdaSolution;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the library. Numerical routines fail
/// loudly on contract violations instead of propagating garbage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("node {node} is out of range for a graph on {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop at node {0} is not allowed")]
    SelfLoop(usize),

    #[error("negative weight {weight} on edge ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("node {0} has zero degree; normalized Laplacian is undefined")]
    ZeroDegree(usize),

    #[error("matrix order {n} exceeds the dense eigensolver cap {cap}")]
    MatrixTooLarge { n: usize, cap: usize },

    #[error("matrix is not symmetric: |M[{i}][{j}] - M[{j}][{i}]| = {delta:e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("eigensolver did not converge in {sweeps} sweeps (off-diagonal norm {offdiag:e})")]
    EigNoConvergence { sweeps: usize, offdiag: f64 },

    #[error(
        "filter response must be non-increasing on [0, 2]: p({lo}) = {p_lo} but p({hi}) = {p_hi}"
    )]
    IncreasingResponse { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },

    #[error(
        "min-norm solver stalled at KKT residual {residual:e} after {iterations} iterations"
    )]
    MinNormStalled {
        residual: f64,
        iterations: usize,
        /// Best iterate found; callers may inspect or discard it.
        best: Box<MgdaSolution>,
    },

    #[error("loss scales are uninitialized; run warm-up before updating normalized losses")]
    ScaleUninitialized,

    #[error("iterate diverged during {context} (norm {norm:e})")]
    Diverged { context: String, norm: f64 },

    #[error("task {task} has non-positive reference slack {slack}; log-hypervolume undefined")]
    NonPositiveSlack { task: usize, slack: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}; refusing to serialize")]
    NotFinite(String),

    #[error("{path}:{line}: {msg}")]
    ConfigParse { path: String, line: usize, msg: String },

    #[error("config field `{key}`: {msg}")]
    ConfigInvalid { key: String, msg: String },

    #[error("{path}:{line}: malformed trace line: {msg}")]
    TraceParse { path: String, line: usize, msg: String },

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
