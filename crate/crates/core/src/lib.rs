//! Exact ℓ0-Bregman relaxations of sparse regression.
//!
//! This crate implements the machinery for replacing the ℓ0-regularized
//! objective
//!
//! ```text
//! J0(x) = G_y(A x) + λ0 ‖x‖0
//! ```
//!
//! with its continuous *B-rex* relaxation
//!
//! ```text
//! JΨ(x) = G_y(A x) + BΨ(x),      BΨ(x) = Σ_i β_i(x_i),
//! ```
//!
//! where each scalar penalty `β_i` is built from a Bregman generator `ψ_i`
//! (quadratic or smoothed-KL) so that, under a concavity condition tying the
//! generator curvature to the data term, the relaxation is *exact*: both
//! objectives share their global minimizers while the relaxation removes
//! spurious local ones.
//!
//! | Module | What it provides |
//! |--------|------------------|
//! | [`lambert`] | Principal-branch Lambert W (needed by the smoothed-KL threshold) |
//! | [`generator`] | Scalar generator calculus ψ, ψ', ψ'', Bregman distances, thresholds α |
//! | [`penalty`] | The B-rex penalty β, its subdifferentials, and the scalar prox |
//! | [`fidelity`] | Least-squares and generalized-KL data terms, Lipschitz data, concavity calibration |
//! | [`linalg`] | Small dense kernels: mat-vec, Gram, Jacobi eigensolver, spectral norm |
//! | [`objective`] | Assembled problems, criticality tests, isolation and uniqueness thresholds |
//! | [`solvers`] | Forward–backward minimization, restricted convex solves, brute-force ℓ0 oracle |
//! | [`landscape`] | LRIP/BRSC constants, safe oracle regions, certified λ0 intervals |
//!
//! # Quick start
//!
//! ```
//! use bregman_l0::prelude::*;
//!
//! // A 2x2 identity problem with least-squares fit and quadratic generators.
//! let a = Matrix::identity(2);
//! let y = vec![1.0, 0.1];
//! let p = Problem::least_squares(a, y, 0.3, DEFAULT_CC_SAFETY).unwrap();
//!
//! // The brute-force oracle over all supports of size <= 2.
//! let bf = brute_force_l0(&p, 2).unwrap();
//! assert_eq!(bf.best_support.indices(), &[0]);
//! assert!((bf.j0_value - 0.305).abs() < 1e-12);
//!
//! // The relaxation's forward-backward solver reaches the same point from zero.
//! let run = prox_gradient(&p, &[0.0, 0.0], &SolveOptions::default()).unwrap();
//! assert!(run.converged);
//! assert!((run.objective - 0.305).abs() < 1e-9);
//! ```
//!
//! # What can go wrong
//!
//! Every fallible operation returns [`Error`]:
//!
//! - [`Error::InvalidParameter`] — non-positive curvature weights, λ0 = 0,
//!   mismatched dimensions, malformed supports;
//! - [`Error::Domain`] — evaluating a generator or fidelity outside its
//!   domain (negative point for a nonnegative constraint set, KL fit with
//!   `w_j + b_j ≤ 0`, Lambert W below −1/e);
//! - [`Error::ZeroColumn`] — calibration against an operator with an
//!   identically zero column;
//! - [`Error::RankDeficient`] — restricted solves on supports whose columns
//!   are numerically dependent;
//! - [`Error::Guard`] — brute-force/enumeration guards (N ≤ 24, K ≤ 20);
//! - [`Error::Numerical`] — iteration caps exhausted without reaching the
//!   required residual;
//! - [`Error::NotApplicable`] — a certificate that does not exist (empty
//!   count support, zero BRSC constant).

pub mod fidelity;
pub mod generator;
pub mod lambert;
pub mod landscape;
pub mod linalg;
pub mod objective;
pub mod penalty;
pub mod solvers;

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received parameters violating its contract.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point lies outside the domain of the function being evaluated.
    #[error("domain violation: {0}")]
    Domain(String),

    /// Column `{0}` of the operator is identically zero.
    #[error("column {0} of the operator is identically zero")]
    ZeroColumn(usize),

    /// An enumeration guard was hit (problem too large for brute force).
    #[error("guard violation: {0}")]
    Guard(String),

    /// A restricted support is not identifiable (rank-deficient columns).
    #[error("support not identifiable: {0}")]
    RankDeficient(String),

    /// An iterative routine failed to reach its required residual.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A requested certificate does not exist for the given data.
    #[error("certificate unavailable: {0}")]
    NotApplicable(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Default multiplicative headroom for concavity-condition calibration.
///
/// The concavity condition is a strict inequality; calibrated curvature
/// weights are multiplied by this factor so the condition holds with a
/// margin without visibly inflating the penalty.
pub const DEFAULT_CC_SAFETY: f64 = 1.0 + 1e-6;

/// Default criticality tolerance τ (absolute, in z-units, before the
/// per-coordinate `1 + |ψ'(α)|` scaling).
pub const DEFAULT_CRITICALITY_TOL: f64 = 1e-8;

/// Everything most users need, re-exported flat.
pub mod prelude {
    pub use crate::fidelity::{
        cc_calibrate_kl, cc_calibrate_quadratic, Fidelity, LipschitzInfo,
    };
    pub use crate::generator::{BregmanGenerator, ConstraintSet, Threshold};
    pub use crate::lambert::lambert_w0;
    pub use crate::landscape::{
        brsc_empirical, brsc_empirical_oracle_region, brsc_kl_constructive, brsc_ls,
        carlsson_interval, f_kl,
        g1kl_sublevel_upper, global_optimality_check, interval_kl, interval_l2, interval_ls,
        interval_ls_from_stats, kl_region_membership, lrip_delta, safe_ball, BrscCertificate,
        BrscProvenance, CkRegime, ConditionCheck, ConditionId, GlobalOptimalityReport,
        KlIntervalWork, LambdaInterval, SafeRegion, SamplingSummary,
    };
    pub use crate::linalg::{jacobi_eigh, Matrix};
    pub use crate::objective::{
        zero_pad, CriticalityReport, IsolationReport, Problem, Support,
    };
    pub use crate::penalty::{BrexPenalty, SubgradInterval};
    pub use crate::solvers::{
        brute_force_from_table, brute_force_l0, oracle_solve, prox_gradient,
        restricted_convex_solve, support_table, BruteForceOutcome, OracleSolution, SolveOptions,
        SolveResult, SupportEntry,
    };
    pub use crate::{Error, Result, DEFAULT_CC_SAFETY, DEFAULT_CRITICALITY_TOL};
}
