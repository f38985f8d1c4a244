//! Statistical tests of exogeneity: covariance estimation, the conditional
//! correlation coefficient (CCC), and exact conditional mutual information
//! (CMI) over tabular joint distributions.
//!
//! The CCC is a Gaussian-calibrated conditional-independence score: for
//! centered sample blocks `X`, `Y`, `Z` it measures how much cross-covariance
//! between `X` and `Y` survives after linearly conditioning on `Z`. A value of
//! zero is equivalent to conditional independence when the joint distribution
//! is Gaussian, and small values are treated as approximate independence
//! elsewhere. The tabular CMI is the exact information-theoretic counterpart
//! for finite models and is used as the ground-truth oracle.
//!
//! All operations are pure functions; nothing here holds mutable state, so
//! every entry point is safe to call concurrently.

mod ccc;
mod cmi;
mod covariance;
mod error;
mod sample;
mod tabular;

pub use ccc::{ccc, ccc_from_covariances, CccParams};
pub use cmi::{cmi_tabular, CmiEstimate, CmiMode};
pub use covariance::{covariance, cross_covariance};
pub use error::StatError;
pub use sample::SampleMatrix;
pub use tabular::TabularModel;
