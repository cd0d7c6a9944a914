//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// `lambda` lies outside the interior of the domain of the partition function.
    #[error("lambda outside the dual feasible interior: {0}")]
    DomainViolation(String),

    /// Tensor-product quadrature on a box is limited to three dimensions.
    #[error("box quadrature supports at most 3 dimensions, got {0}")]
    QuadratureUnsupported(usize),

    /// An operation required a converged dual solve.
    #[error("dual solve did not converge: {0}")]
    NotConverged(String),

    /// Constraint matrix has deficient row rank.
    #[error("matrix is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    /// Exact fiber quadrature is limited to codimension one and two.
    #[error("exact fiber quadrature supports codimension 1 or 2, got {0}")]
    CodimUnsupported(usize),

    /// The parameter polytope of the fiber is lower-dimensional.
    #[error("parameter polytope is lower-dimensional")]
    DegenerateFiber,

    /// The codimension-2 parameter polytope has a nontrivial recession cone.
    #[error("fiber is unbounded in codimension 2; exact quadrature unavailable")]
    UnboundedFiber,

    /// The backend has no direct sampler.
    #[error("sampling is not implemented for this backend: {0}")]
    SamplingUnsupported(String),

    /// No strictly interior dual point was found during normalization.
    #[error("no strictly interior dual point found")]
    NoInteriorDual,

    /// Dual iterates blew up: the target is outside the moment cone interior.
    #[error("dual iterates diverged; target outside the moment cone interior")]
    Unbounded,

    /// The polytope `{x >= 0 : Ax = y}` is empty.
    #[error("no feasible basis: the polytope {{x >= 0 : Ax = y}} is empty")]
    Infeasible,

    /// Exhaustive basis enumeration would exceed the combinatorial budget.
    #[error("basis enumeration budget exceeded: C({d},{m}) > {budget}")]
    TooLarge { d: usize, m: usize, budget: u128 },

    /// A basic variable vanishes, so the vertex formula has a removable pole.
    #[error("degenerate vertex: a basic variable vanishes")]
    DegenerateVertex,

    /// A reduced cost sits too close to zero for the vertex formula.
    #[error("reduced cost within {0:e} of zero (pole in the vertex formula)")]
    NearPole(f64),

    /// Partial-fraction expansion of the partition function needs m = 1.
    #[error("partial-fraction expansion implemented for m = 1 only, got m = {0}")]
    UnsupportedDimension(usize),

    /// A pole term `pi_sigma - lambda` is not positive.
    #[error("pole violation: pi_sigma - lambda = {0:e} is not positive")]
    PoleViolation(f64),

    /// Symmetric factorization failed: the matrix is not positive definite.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// The Gram matrix of the constraint matrices is numerically singular.
    #[error("constraint matrices are linearly dependent (det Gram = {0:e})")]
    DependentConstraints(f64),

    /// The Monte-Carlo cone integral is limited to small matrix orders.
    #[error("Monte-Carlo cone integral supports d <= 3, got {0}")]
    DimensionUnsupported(usize),

    /// Exponential sampling needs strictly positive rates.
    #[error("exponential rate must be positive, got {0}")]
    InvalidRate(f64),

    /// A finite-difference probe left the function domain.
    #[error("finite-difference step leaves the function domain")]
    StepTooLarge,

    /// The epsilon = 0 perspective limit is not defined for this backend.
    #[error("epsilon = 0 limit unsupported for this backend")]
    LimitUnsupported,

    /// Problem data violates a structural invariant.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// Malformed caller input (file contents, flags, grids).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
