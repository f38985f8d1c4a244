use std::time::Instant;

use manifold::{DescentSettings, StiefelPoint};
use nalgebra::{DMatrix, DVector};
use statcore::CccParams;

use crate::dataset::TransitionDataset;
use crate::error::{DecomposeError, Result};
use crate::grds::{best_of_restarts, check_sample_floor};
use crate::objective;
use crate::options::DiscoveryOptions;
use crate::projection::{canonical_columns, ConstraintMode, DecompositionReport, ExoProjection};

/// Stepwise rank-ascending discovery (SRAS): grow the exogenous basis one
/// column at a time. Each step minimizes the cheap action screen
/// CCC(S′[W,c]; A | S[W,c]) over unit candidates `c` orthogonal to every
/// candidate generated so far; a candidate that passes the screen joins the
/// working basis, and the working basis is promoted to the answer whenever it
/// also passes the full criterion.
///
/// Rejected candidates still constrain later steps: every generated column is
/// retired from the search space whether or not it was accepted, so the scan
/// always terminates after d steps. Because valid exogenous subspaces are not
/// closed under taking subspaces, the working basis may fail the full
/// criterion at some intermediate size and pass again later — hence promotion
/// is re-checked at every growth step rather than stopping at the first
/// failure.
pub fn sras(
    data: &TransitionDataset,
    params: &CccParams,
    settings: &DescentSettings,
    seed: u64,
) -> Result<DecompositionReport> {
    sras_with_options(data, &DiscoveryOptions::from_params(*params), settings, seed)
}

/// As [`sras`], with independent thresholds and restart count exposed.
pub fn sras_with_options(
    data: &TransitionDataset,
    options: &DiscoveryOptions,
    settings: &DescentSettings,
    seed: u64,
) -> Result<DecompositionReport> {
    options.validate()?;
    settings.validate()?;
    check_sample_floor(data)?;
    let start_time = Instant::now();

    let d = data.d();
    let blocks = data.blocks();
    let lambda = options.ccc.tikhonov_lambda;

    let mut candidates: Vec<DVector<f64>> = Vec::new();
    let mut w_temp = DMatrix::<f64>::zeros(d, 0);
    let mut promoted: Option<DMatrix<f64>> = None;
    let mut per_rank_ccc: Vec<(usize, f64)> = Vec::new();
    let mut diagnostics: Vec<String> = Vec::new();

    for k in 0..d {
        let basis = match null_space_basis(d, &candidates) {
            Ok(b) => b,
            Err(err) => {
                diagnostics.push(format!(
                    "step {k}: null-space basis failed ({err}); stopping early"
                ));
                break;
            }
        };

        let current = w_temp.clone();
        let screen_basis = basis.clone();
        let screen = move |w: &DMatrix<f64>| -> f64 {
            let candidate = &screen_basis * w;
            let joint = append_column(&current, &candidate);
            objective::ccc_simplified(blocks, &joint, lambda).unwrap_or(f64::NAN)
        };

        let outcome = match best_of_restarts(&screen, d - k, 1, seed, options.multi_start, settings)
        {
            Ok(outcome) => outcome,
            Err(err) => {
                diagnostics.push(format!(
                    "step {k}: screen optimization failed ({err}); stopping early"
                ));
                break;
            }
        };

        let new_column = &basis * outcome.point.matrix();
        let ccc_sim = outcome.final_value;
        // Every candidate is retired from the remaining search space,
        // accepted or not.
        candidates.push(DVector::from_column_slice(new_column.as_slice()));

        if ccc_sim < options.simplified_epsilon {
            w_temp = append_column(&w_temp, &new_column);
            match objective::ccc_full(blocks, &w_temp, lambda, false) {
                Ok(ccc_full) => {
                    per_rank_ccc.push((w_temp.ncols(), ccc_full));
                    if ccc_full < options.ccc.threshold_epsilon {
                        promoted = Some(w_temp.clone());
                    }
                }
                Err(err) => {
                    per_rank_ccc.push((w_temp.ncols(), f64::INFINITY));
                    diagnostics.push(format!(
                        "step {k}: full-criterion evaluation failed ({err})"
                    ));
                }
            }
        }
    }

    let projection = match promoted {
        Some(w) => {
            let canonical = canonical_columns(&w, &blocks.c_ss);
            let achieved = objective::ccc_full(blocks, &canonical, lambda, false)?;
            // Promotion required this exact criterion to clear the
            // threshold, and column reordering does not change it.
            assert!(
                achieved < options.ccc.threshold_epsilon,
                "stepwise scan produced a basis failing its own verification: CCC {achieved}"
            );
            ExoProjection::new(StiefelPoint::new(canonical)?, achieved, ConstraintMode::Full)?
        }
        None => ExoProjection::zero_rank(d, ConstraintMode::Full),
    };

    Ok(DecompositionReport {
        projection,
        per_rank_ccc,
        wall_time: start_time.elapsed().as_secs_f64(),
        algorithm: "sras".into(),
        diagnostics,
    })
}

/// Orthonormal basis for the orthogonal complement of a set of (mutually
/// orthonormal) candidate vectors, computed as the trailing columns of a full
/// QR factorization of `[candidates | I]`.
fn null_space_basis(d: usize, candidates: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let k = candidates.len();
    if k == 0 {
        return Ok(DMatrix::identity(d, d));
    }
    if k >= d {
        return Err(DecomposeError::Numeric(format!(
            "null space of {k} candidates in {d} dimensions is empty"
        )));
    }
    let mut padded = DMatrix::zeros(d, k + d);
    for (j, c) in candidates.iter().enumerate() {
        padded.set_column(j, c);
    }
    padded.view_mut((0, k), (d, d)).copy_from(&DMatrix::identity(d, d));
    let q = padded.qr().q();
    let basis = q.columns(k, d - k).into_owned();

    // The candidates are orthonormal by construction, so the leading QR
    // columns span them and the trailing block must be their complement;
    // verify rather than trust in case accumulated drift broke that premise.
    let gram = basis.transpose() * &basis - DMatrix::identity(d - k, d - k);
    if gram.iter().any(|v| v.abs() > 1e-8) {
        return Err(DecomposeError::Numeric(
            "complement basis lost orthonormality".into(),
        ));
    }
    for c in candidates {
        let overlap = basis.transpose() * c;
        if overlap.iter().any(|v| v.abs() > 1e-8) {
            return Err(DecomposeError::Numeric(
                "complement basis overlaps a retired candidate".into(),
            ));
        }
    }
    Ok(basis)
}

fn append_column(m: &DMatrix<f64>, column: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(column.ncols(), 1);
    debug_assert_eq!(m.nrows(), column.nrows());
    let mut out = DMatrix::zeros(m.nrows(), m.ncols() + 1);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out.set_column(m.ncols(), &column.column(0));
    out
}
