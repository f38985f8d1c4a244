//! Minimization of smooth scalar objectives over Stiefel manifolds — the sets
//! `{W ∈ ℝ^{d×p} : WᵀW = I_p}` of matrices with orthonormal columns.
//!
//! The solver is Riemannian steepest descent: the Euclidean gradient (by
//! default from central finite differences) is projected onto the tangent
//! space at the current point, a step is taken along the negated projection,
//! and the result is pulled back onto the manifold by a QR retraction. Step
//! sizes come from Armijo backtracking, so accepted objective values are
//! monotone non-increasing.
//!
//! Everything here is deterministic: the same objective, settings, and seed
//! (or explicit initial point) reproduce the exact same trajectory bitwise.

mod descent;
mod error;
mod stiefel;

pub use descent::{minimize, minimize_with_gradient, numeric_gradient, DescentSettings, MinimizeOutcome};
pub use error::ManifoldError;
pub use stiefel::{random_stiefel, retract, tangent_project, StiefelPoint};
