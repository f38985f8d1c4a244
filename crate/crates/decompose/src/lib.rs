//! Discovery of the exogenous subspace of an MDP's state space from logged
//! transitions.
//!
//! A linear subspace is *exogenous* when the projection of the next state
//! onto it is conditionally independent of the action (and of the rest of
//! the state) given the projection of the current state — its dynamics run
//! on their own, uncontrolled. This crate finds an orthonormal basis for the
//! largest such subspace it can certify from data, using the conditional
//! correlation coefficient (CCC) as the independence score:
//!
//! * [`grds`] — scan candidate ranks from d downward, solving one manifold
//!   optimization per rank; first verified rank wins. Rank maximality cannot
//!   be bisected because valid subspaces are not closed under taking
//!   subspaces.
//! * [`sras`] — grow the basis one unit column at a time with a cheap
//!   action-only screen per step, promoting the working basis whenever it
//!   passes the full criterion.
//! * [`oracle_grds_tabular`] — exact enumeration ground truth for small
//!   finite models, using conditional mutual information instead of the CCC.
//!
//! [`verify_projection`] re-scores any claimed projection on a dataset, and
//! [`ExoProjection`] splits states into exogenous and endogenous components.

mod dataset;
mod error;
mod grds;
mod objective;
mod options;
mod oracle;
mod projection;
mod sras;

pub use dataset::TransitionDataset;
pub use error::DecomposeError;
pub use grds::{grds, grds_with_options, GrdsObjective};
pub use options::DiscoveryOptions;
pub use oracle::{oracle_grds_tabular, subset_nonclosure_witness};
pub use projection::{
    verify_projection, ConstraintMode, DecompositionReport, ExoProjection,
};
pub use sras::{sras, sras_with_options};
