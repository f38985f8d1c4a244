use nalgebra::{DMatrix, DVector};

use crate::error::{Result, StatError};

/// An N×p matrix of observations (rows are samples, columns are variables)
/// together with a flag recording whether its columns have been centered.
///
/// Construction enforces N ≥ 2 and p ≥ 1; a matrix claiming to be centered is
/// verified (each column mean must vanish within `1e-9 · (column std + 1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
    centered: bool,
}

impl SampleMatrix {
    /// Wraps raw observations without centering them.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        Self::from_raw(data, false)
    }

    /// Wraps observations and centers each column to zero mean.
    pub fn centered(data: DMatrix<f64>) -> Result<Self> {
        Ok(Self::new(data)?.center().0)
    }

    /// Wraps raw observations, validating the claimed centered flag.
    pub fn from_raw(data: DMatrix<f64>, centered: bool) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(StatError::Dimension(format!(
                "need at least 2 sample rows, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(StatError::Dimension("need at least 1 column".into()));
        }
        if centered {
            for j in 0..data.ncols() {
                let col = data.column(j);
                let mean = col.mean();
                let std = column_std(&col.into_owned());
                if mean.abs() > 1e-9 * (std + 1.0) {
                    return Err(StatError::InvalidParam(format!(
                        "column {j} claims to be centered but has mean {mean:.3e}"
                    )));
                }
            }
        }
        Ok(Self { data, centered })
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Returns a centered copy (no-op when already centered) along with the
    /// column means that were subtracted.
    pub fn center(&self) -> (SampleMatrix, DVector<f64>) {
        if self.centered {
            return (self.clone(), DVector::zeros(self.n_cols()));
        }
        let mut data = self.data.clone();
        let mut means = DVector::zeros(self.n_cols());
        for j in 0..data.ncols() {
            let mean = data.column(j).mean();
            means[j] = mean;
            for i in 0..data.nrows() {
                data[(i, j)] -= mean;
            }
        }
        (
            SampleMatrix {
                data,
                centered: true,
            },
            means,
        )
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

fn column_std(col: &DVector<f64>) -> f64 {
    let mean = col.mean();
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
    var.sqrt()
}
