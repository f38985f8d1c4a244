//! CCC objectives evaluated from precomputed covariance blocks.
//!
//! Discovery needs thousands of objective evaluations (finite-difference
//! gradients probe every entry of the candidate projection), so the blocks
//! among `(s, s′, a)` are computed once per dataset and every evaluation
//! assembles the projected covariances by sandwiching with the candidate `W`
//! — an O(d³) operation independent of the sample count.

use nalgebra::DMatrix;
use statcore::ccc_from_covariances;

use crate::dataset::CovarianceBlocks;
use crate::error::Result;

/// CCC(S′U; A | SU) — the screen that only forbids the action from driving
/// the projected next state.
pub(crate) fn ccc_simplified(blocks: &CovarianceBlocks, u: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    if u.ncols() == 0 {
        return Ok(0.0);
    }
    let sigma_xx = u.transpose() * &blocks.c_nn * u;
    let sigma_zz = u.transpose() * &blocks.c_ss * u;
    let sigma_xz = u.transpose() * &blocks.c_ns * u;
    let sigma_xy = u.transpose() * &blocks.c_na;
    let sigma_zy = u.transpose() * &blocks.c_sa;
    ccc_from_covariances(
        &sigma_xx,
        &sigma_xy,
        &sigma_xz,
        &sigma_zz,
        &sigma_zy,
        &blocks.c_aa,
        lambda,
    )
    .map_err(Into::into)
}

/// CCC(S′W; [S−SWWᵀ, A] | SW), the validity criterion for a candidate
/// exogenous projection. With `diachronic` set, the conditioned-out block
/// additionally stacks the next endogenous state S′−S′WWᵀ.
pub(crate) fn ccc_full(
    blocks: &CovarianceBlocks,
    w: &DMatrix<f64>,
    lambda: f64,
    diachronic: bool,
) -> Result<f64> {
    if w.ncols() == 0 {
        return Ok(0.0);
    }
    let d = w.nrows();
    let l = blocks.c_aa.nrows();
    // Complement projector onto the endogenous side.
    let p = DMatrix::identity(d, d) - w * w.transpose();

    let sigma_xx = w.transpose() * &blocks.c_nn * w;
    let sigma_zz = w.transpose() * &blocks.c_ss * w;
    let sigma_xz = w.transpose() * &blocks.c_ns * w;

    // Y columns: [S·P, (S′·P when diachronic), A].
    let y_cols = if diachronic { 2 * d + l } else { d + l };
    let mut sigma_xy = DMatrix::zeros(w.ncols(), y_cols);
    let mut sigma_zy = DMatrix::zeros(w.ncols(), y_cols);
    let mut sigma_yy = DMatrix::zeros(y_cols, y_cols);

    let ns_p = &blocks.c_ns * &p;
    let ss_p = &blocks.c_ss * &p;
    sigma_xy.view_mut((0, 0), (w.ncols(), d)).copy_from(&(w.transpose() * &ns_p));
    sigma_zy.view_mut((0, 0), (w.ncols(), d)).copy_from(&(w.transpose() * &ss_p));
    sigma_yy.view_mut((0, 0), (d, d)).copy_from(&(&p * &ss_p));
    let p_sa = &p * &blocks.c_sa;
    let a_off = if diachronic {
        let nn_p = &blocks.c_nn * &p;
        let sn_p = blocks.c_ns.transpose() * &p;
        sigma_xy.view_mut((0, d), (w.ncols(), d)).copy_from(&(w.transpose() * &nn_p));
        sigma_zy.view_mut((0, d), (w.ncols(), d)).copy_from(&(w.transpose() * &sn_p));
        sigma_yy.view_mut((0, d), (d, d)).copy_from(&(&p * &sn_p));
        sigma_yy.view_mut((d, 0), (d, d)).copy_from(&(&p * &ns_p));
        sigma_yy.view_mut((d, d), (d, d)).copy_from(&(&p * &nn_p));
        let p_na = &p * &blocks.c_na;
        sigma_yy.view_mut((d, 2 * d), (d, l)).copy_from(&p_na);
        sigma_yy.view_mut((2 * d, d), (l, d)).copy_from(&p_na.transpose());
        2 * d
    } else {
        d
    };
    sigma_xy
        .view_mut((0, a_off), (w.ncols(), l))
        .copy_from(&(w.transpose() * &blocks.c_na));
    sigma_zy
        .view_mut((0, a_off), (w.ncols(), l))
        .copy_from(&(w.transpose() * &blocks.c_sa));
    sigma_yy.view_mut((0, a_off), (d, l)).copy_from(&p_sa);
    sigma_yy.view_mut((a_off, 0), (l, d)).copy_from(&p_sa.transpose());
    sigma_yy.view_mut((a_off, a_off), (l, l)).copy_from(&blocks.c_aa);

    ccc_from_covariances(&sigma_xx, &sigma_xy, &sigma_xz, &sigma_zz, &sigma_zy, &sigma_yy, lambda)
        .map_err(Into::into)
}
