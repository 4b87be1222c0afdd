//! Error type shared by all solver and geometry routines.

/// Errors produced by geometry kernels, calculus combinators, subproblem
/// solvers and descent methods.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric positive semidefinite (violation {violation:.3e})")]
    NotPsd { violation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge: gap {gap:.3e} after {iters} iterations")]
    NoConvergence {
        what: &'static str,
        gap: f64,
        iters: usize,
        /// Last iterate (simplex weights or point, depending on `what`).
        last: Vec<f64>,
    },

    #[error(
        "vertex budget exceeded ({needed} > {cap}); use a support-oracle representation instead"
    )]
    VertexCapExceeded { cap: usize, needed: usize },

    #[error("invalid hypodifferential: {0}")]
    InvalidHypodifferential(String),

    #[error("point lies outside the feasible box (coordinate {coord})")]
    OutsideBox { coord: usize },

    #[error("empty feasible box (lower[{coord}] > upper[{coord}])")]
    EmptyBox { coord: usize },

    #[error("objective increased by {increase:.3e} in an accepted step; declared Lipschitz constant or exactness flag is inconsistent with the function")]
    MetadataInconsistency { increase: f64 },

    #[error("line search bracket exceeded {0:.1e}; the function appears unbounded below")]
    Divergence(f64),

    #[error("exactness violated: a_k = {a:.3e} while |v_k| = {v_norm:.3e} > 0; the exactness flag appears to be wrong")]
    ExactnessViolation { a: f64, v_norm: f64 },

    #[error("normalization error: {0}")]
    Normalization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
