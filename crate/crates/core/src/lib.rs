//! Self-concordant smoothing of nonsmooth regularizers and the proximal
//! Newton-type solvers built on top of it.
//!
//! The crate is `no_std` (it needs `alloc`) so the numerical core can be
//! embedded anywhere; file formats, data generation and the command line
//! live in the companion `scorch` crate.
//!
//! Layout:
//!
//! - [`kernels`]: catalog of generalized self-concordant univariate kernels,
//!   construction of smoothed regularizers `g_s = g □ μ h(·/μ)` and a
//!   brute-force infimal-convolution oracle.
//! - [`prox`]: scaled proximal operators under a diagonal metric, plus a
//!   derivative-free oracle used to validate them.
//! - [`problems`]: composite problems (logistic, least squares), residual
//!   models and the augmented Jacobian used by the Gauss-Newton variant.
//! - [`solvers`]: Prox-N-SCORE, Prox-GGN-SCORE, proximal gradient and its
//!   accelerated variant, with per-iteration tracing.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod error;
pub mod groups;
pub mod kernels;
pub mod linalg;
pub(crate) mod math;
pub mod problems;
pub mod prox;
pub mod search;
pub mod solvers;

pub use error::{Error, Result};
pub use groups::GroupStructure;
pub use kernels::{
    catalog_kernel, infconv_oracle, self_concordance_check, smooth_l1, smooth_l2_groups,
    SeparableKernel, SmoothedRegularizer, SmoothingKernel,
};
pub use linalg::{CsrMatrix, Matrix};
pub use problems::{
    build_augmented_jacobian, least_squares_problem, logistic_problem, subgradient_residual,
    AugmentedJacobian, CompositeProblem, GlmLoss, ResidualModel, SmoothLoss,
};
pub use prox::{DiagonalMetric, PenaltyKind, PenaltySpec, ProxScaling};
pub use solvers::{solve, Algorithm, Solution, SolverConfig, Status, TraceRecord};
