use std::time::Instant;

use manifold::{minimize, DescentSettings, MinimizeOutcome, StiefelPoint};
use nalgebra::DMatrix;
use statcore::CccParams;

use crate::dataset::TransitionDataset;
use crate::error::{DecomposeError, Result};
use crate::objective;
use crate::options::{derived_seed, DiscoveryOptions};
use crate::projection::{canonical_columns, ConstraintMode, DecompositionReport, ExoProjection};

/// Which CCC objective the rank scan minimizes at each rank. Verification
/// always uses the full (or diachronic) criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrdsObjective {
    /// Minimize the full criterion CCC(S′W; [S−SWWᵀ, A] | SW).
    Full,
    /// As `Full`, with the next endogenous state stacked into the
    /// conditioned-out block.
    Diachronic,
    /// Minimize only the action screen CCC(S′W; A | SW); cheaper per
    /// evaluation, then verify with the full criterion.
    Simplified,
}

impl GrdsObjective {
    fn label(self) -> &'static str {
        match self {
            GrdsObjective::Full => "grds-full",
            GrdsObjective::Diachronic => "grds-diachronic",
            GrdsObjective::Simplified => "grds-simplified",
        }
    }

    fn constraint_mode(self) -> ConstraintMode {
        match self {
            GrdsObjective::Diachronic => ConstraintMode::Diachronic,
            GrdsObjective::Full | GrdsObjective::Simplified => ConstraintMode::Full,
        }
    }
}

/// Global rank-descending discovery (GRDS): scan candidate exogenous ranks
/// from d down to 1, minimizing the selected CCC objective over orthonormal
/// d×rank bases, and return the first basis whose full-criterion score clears
/// the acceptance threshold. If no rank qualifies, the rank-zero projection
/// is returned so downstream consumers degrade gracefully to the undecomposed
/// problem.
pub fn grds(
    data: &TransitionDataset,
    params: &CccParams,
    settings: &DescentSettings,
    objective_mode: GrdsObjective,
    seed: u64,
) -> Result<DecompositionReport> {
    grds_with_options(
        data,
        &DiscoveryOptions::from_params(*params),
        settings,
        objective_mode,
        seed,
    )
}

/// As [`grds`], with independent thresholds and restart count exposed.
pub fn grds_with_options(
    data: &TransitionDataset,
    options: &DiscoveryOptions,
    settings: &DescentSettings,
    objective_mode: GrdsObjective,
    seed: u64,
) -> Result<DecompositionReport> {
    options.validate()?;
    settings.validate()?;
    check_sample_floor(data)?;
    let start_time = Instant::now();

    let d = data.d();
    let blocks = data.blocks();
    let lambda = options.ccc.tikhonov_lambda;
    let epsilon = options.ccc.threshold_epsilon;
    let mode = objective_mode.constraint_mode();
    let diachronic = mode == ConstraintMode::Diachronic;

    let mut per_rank_ccc: Vec<(usize, f64)> = Vec::new();
    let mut diagnostics: Vec<String> = Vec::new();

    for rank in (1..=d).rev() {
        let objective_fn = |w: &DMatrix<f64>| -> f64 {
            let value = match objective_mode {
                GrdsObjective::Simplified => objective::ccc_simplified(blocks, w, lambda),
                GrdsObjective::Full | GrdsObjective::Diachronic => {
                    objective::ccc_full(blocks, w, lambda, diachronic)
                }
            };
            value.unwrap_or(f64::NAN)
        };

        let best = best_of_restarts(&objective_fn, d, rank, seed, options.multi_start, settings);
        let outcome = match best {
            Ok(outcome) => outcome,
            Err(err) => {
                per_rank_ccc.push((rank, f64::INFINITY));
                diagnostics.push(format!("rank {rank}: optimization failed: {err}"));
                continue;
            }
        };

        // Verification always applies the full (or diachronic) criterion to
        // the minimizer, regardless of which objective was minimized.
        let verification =
            objective::ccc_full(blocks, outcome.point.matrix(), lambda, diachronic);
        let verification = match verification {
            Ok(v) => v,
            Err(err) => {
                per_rank_ccc.push((rank, f64::INFINITY));
                diagnostics.push(format!("rank {rank}: verification failed: {err}"));
                continue;
            }
        };
        per_rank_ccc.push((rank, verification));

        if verification < epsilon {
            let canonical = canonical_columns(outcome.point.matrix(), &blocks.c_ss);
            let achieved = objective::ccc_full(blocks, &canonical, lambda, diachronic)?;
            let projection = ExoProjection::new(StiefelPoint::new(canonical)?, achieved, mode)?;
            return Ok(DecompositionReport {
                projection,
                per_rank_ccc,
                wall_time: start_time.elapsed().as_secs_f64(),
                algorithm: objective_mode.label().into(),
                diagnostics,
            });
        }
    }

    Ok(DecompositionReport {
        projection: ExoProjection::zero_rank(d, mode),
        per_rank_ccc,
        wall_time: start_time.elapsed().as_secs_f64(),
        algorithm: objective_mode.label().into(),
        diagnostics,
    })
}

/// Runs `multi_start` independently seeded descents and keeps the outcome
/// with the lowest final objective value.
pub(crate) fn best_of_restarts<F>(
    objective_fn: &F,
    d: usize,
    rank: usize,
    seed: u64,
    multi_start: usize,
    settings: &DescentSettings,
) -> Result<MinimizeOutcome>
where
    F: Fn(&DMatrix<f64>) -> f64,
{
    let mut best: Option<MinimizeOutcome> = None;
    let mut last_err: Option<DecomposeError> = None;
    for restart in 0..multi_start {
        let restart_seed = derived_seed(seed, rank as u64, restart as u64);
        match minimize(objective_fn, d, rank, None, restart_seed, settings) {
            Ok(outcome) => {
                if best
                    .as_ref()
                    .map_or(true, |b| outcome.final_value < b.final_value)
                {
                    best = Some(outcome);
                }
            }
            Err(err) => last_err = Some(err.into()),
        }
    }
    match best {
        Some(outcome) => Ok(outcome),
        None => Err(last_err.unwrap_or_else(|| {
            DecomposeError::InvalidParam("no restarts were attempted".into())
        })),
    }
}

pub(crate) fn check_sample_floor(data: &TransitionDataset) -> Result<()> {
    let floor = data.d() + 10;
    if data.n() < floor {
        return Err(DecomposeError::InsufficientData(format!(
            "discovery on a {}-dimensional state space needs at least {floor} transitions, got {}",
            data.d(),
            data.n()
        )));
    }
    Ok(())
}
