//! Row-action reconstruction methods built on relaxed incremental proximal
//! gradient (R-IPG) iterations.
//!
//! The crate provides:
//!
//! * [`sparse`] — CSR matrices with canonical storage, block-row views and
//!   small SPD solves with a tridiagonal fast path.
//! * [`prox`] — a catalog of proximal operators and projections (hyperplane,
//!   damped row residual, distance, absolute/Huber residual, block least
//!   squares, TV denoising).
//! * [`ripg`] — the generic R-IPG1/R-IPG2 drivers over component lists, with
//!   cyclic, random and shuffled index control and step-size schedules.
//! * [`rowaction`] — fused sweeps for the classical methods (ART, damped ART,
//!   block Kaczmarz, robust ART) plus a diagonally preconditioned variant,
//!   each reproducing a generic driver configuration bit for bit.
//! * [`tv`] — discrete total-variation machinery (difference operator,
//!   seminorm, smoothed subgradient).
//! * [`theory`] — the convergence constants alpha/beta and an empirical
//!   harness for the per-cycle descent bound.
//! * [`tomo`] — a parallel-beam test-problem factory (Shepp-Logan phantom,
//!   sparse projector, inverse-crime-avoiding sinogram synthesis).
//! * [`reference`] — a Chambolle-Pock primal-dual solver used to manufacture
//!   ground-truth solutions of the TV-regularized least-squares problem.
//!
//! All floating-point reductions use a fixed summation order so that runs are
//! bit-reproducible and algebraically equivalent formulations of the same
//! method produce identical iterates.

pub mod prox;
pub mod reference;
pub mod ripg;
pub mod rowaction;
pub mod sparse;
pub mod theory;
pub mod tomo;
pub mod tv;

/// Errors shared by all modules of this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not symmetric positive definite (nonpositive pivot during factorization)")]
    NotSpd,

    #[error("block has {rows} rows which exceeds the dense-solve cap of {cap}")]
    BlockTooLarge { rows: usize, cap: usize },

    #[error("rank-deficient block encountered in undamped block Kaczmarz; use the damped variant (finite t)")]
    RankDeficientBlock,

    #[error("row vector has zero norm; callers must route zero rows to the identity update")]
    ZeroRow,

    #[error("columns {0:?} have zero norm; column equilibration is undefined")]
    ZeroColumns(Vec<usize>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite iterate detected at step {step}")]
    NonFiniteIterate { step: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
