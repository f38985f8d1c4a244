use statcore::CccParams;

use crate::error::{DecomposeError, Result};

/// Extended discovery knobs beyond the shared CCC parameters.
///
/// The acceptance threshold in `ccc` governs the *full-objective
/// verification*; `simplified_epsilon` governs the cheaper action-only
/// screen used by the stepwise scheme. They default to the same value.
#[derive(Debug, Clone, Copy)]
pub struct DiscoveryOptions {
    pub ccc: CccParams,
    /// Acceptance threshold for the simplified (action-only) screen.
    pub simplified_epsilon: f64,
    /// Independent random restarts per manifold optimization; the restart
    /// with the lowest final objective wins. The default of 1 matches the
    /// one-solve-per-rank scan; raising it hedges against local minima in
    /// large problems.
    pub multi_start: usize,
}

impl DiscoveryOptions {
    /// Equal-thresholds, single-start options derived from CCC parameters.
    pub fn from_params(params: CccParams) -> Self {
        Self {
            ccc: params,
            simplified_epsilon: params.threshold_epsilon,
            multi_start: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ccc.validate().map_err(DecomposeError::Stat)?;
        if !(self.simplified_epsilon > 0.0 && self.simplified_epsilon.is_finite()) {
            return Err(DecomposeError::InvalidParam(format!(
                "simplified_epsilon must be a positive real, got {}",
                self.simplified_epsilon
            )));
        }
        if self.multi_start == 0 {
            return Err(DecomposeError::InvalidParam("multi_start must be ≥ 1".into()));
        }
        Ok(())
    }
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        Self::from_params(CccParams::default())
    }
}

/// Deterministic per-subproblem seed derivation, so each (rank, restart)
/// pair explores a distinct but reproducible starting point.
pub(crate) fn derived_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
