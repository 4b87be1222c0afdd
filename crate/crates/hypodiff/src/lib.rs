//! Hypodifferential calculus for nonsmooth convex optimization.
//!
//! A hypodifferential is a convex compact family of affine minorants that
//! locally approximates a convex function through its pointwise maximum.
//! In contrast to subdifferentials, well-chosen hypodifferential maps are
//! Lipschitz continuous in the Pompeiu-Hausdorff distance and admit a
//! quadratic model-error bound, which makes gradient-style convergence
//! analysis possible in the nonsmooth case.
//!
//! The crate provides:
//!
//! - a finite-dimensional geometric kernel ([`geometry`]): simplex
//!   projection and QP, minimum-norm point in a polytope,
//!   Pompeiu-Hausdorff distances;
//! - core representations ([`hypo`]): explicit polytopes and support
//!   oracles, the max-affine model, structural validation;
//! - calculus rules ([`calculus`]): conic combinations, finite maxima,
//!   affine precomposition, outer composition, positive powers, with
//!   Lipschitz-constant propagation;
//! - builtin functions ([`atoms`]): |x|, polyhedral and sublinear
//!   functions, ‖Ax + b‖, λ_max, the distance to the nonnegative
//!   orthant, smooth quadratics, and bundle-based constructions;
//! - the per-iteration subproblems ([`subproblems`]): minimum-norm
//!   element and proximal step, with certified duality gaps;
//! - three descent methods ([`solvers`]): constant step, exact step and
//!   exact line search, the proximal variant, and the accelerated
//!   proximal method with its O(1/k²) envelope;
//! - property checkers ([`verify`]): finite-difference, consistency,
//!   Lipschitz-approximation and Hausdorff-Lipschitz sampling tests,
//!   plus rate-bound certification of solver traces.

// NaN-rejecting guards like !(x > 0.0) are deliberate on float inputs
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]
#![allow(clippy::too_many_arguments)]

pub mod atoms;
pub mod calculus;
pub mod error;
pub mod geometry;
pub mod hypo;
pub mod linalg;
pub mod solvers;
pub mod subproblems;
pub mod verify;

pub use error::{Error, Result};
pub use hypo::{HypoElement, HypoFunction, HypoMeta, Hypodifferential};
pub use solvers::{SolverTrace, StopRule};
pub use subproblems::{BoxConstraint, ProximalSolution};
