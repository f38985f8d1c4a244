//! Closed-form analysis companions to the decomposition pipeline: exact
//! value / variance / covariance recursions on tabular MDPs, the exo/endo
//! Bellman split, sample-complexity bounds, structural (DBN-template)
//! characterizations of exogeneity, and subspace geometry helpers
//! (principal angles, orthogonal complements).

pub mod angles;
pub mod dbn;
pub mod dp;
pub mod error;
pub mod tabular;

pub use angles::{orthogonal_complement, principal_angles, PrincipalAngles};
pub use dbn::{action_disconnected, template_match, DbnNode, DbnTemplate, TemplateMatch};
pub use dp::{
    bellman_split_check, chebychev_n, covariance_condition, covariance_dp, endo_value_dp,
    exo_value_dp, value_dp, variance_dp, CovarianceCondition,
};
pub use error::{AnalysisError, Result};
pub use tabular::{random_factored, FactoredTabularMdp, TabularMdp, ROW_TOLERANCE};

/// Renders named columns as a tab-separated table (header + one row per
/// index). Columns must share a length.
pub fn columns_to_tsv(names: &[&str], columns: &[Vec<f64>]) -> Result<String> {
    if names.len() != columns.len() {
        return Err(AnalysisError::Dimension(format!(
            "{} names for {} columns",
            names.len(),
            columns.len()
        )));
    }
    let rows = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != rows) {
        return Err(AnalysisError::Dimension("columns have unequal lengths".into()));
    }
    let mut out = names.join("\t");
    out.push('\n');
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format!("{}", c[r])).collect();
        out.push_str(&line.join("\t"));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_rendering_includes_header_and_rows() {
        let text =
            columns_to_tsv(&["a", "b"], &[vec![1.0, 2.5], vec![3.0, -0.125]]).unwrap();
        assert_eq!(text, "a\tb\n1\t3\n2.5\t-0.125\n");
    }

    #[test]
    fn mismatched_columns_are_rejected() {
        assert!(columns_to_tsv(&["a"], &[vec![1.0], vec![2.0]]).is_err());
        assert!(columns_to_tsv(&["a", "b"], &[vec![1.0], vec![2.0, 3.0]]).is_err());
    }
}
