//! Ordinary least squares through an orthogonal (Givens) QR factorisation.
//!
//! Rows are folded into an upper-triangular `R` and the rotated target
//! `Qᵀy` one at a time, so a model retrained on a growing window only pays
//! for the new rows. The triangular system is solved through an SVD of `R`,
//! which yields the minimum-norm solution when the design is rank deficient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: Vec<String>,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(columns: Vec<String>) -> Self {
        DesignMatrix {
            columns,
            data: Vec::new(),
        }
    }

    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = DesignMatrix::new(columns);
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "row of width {} for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.data.len() / self.columns.len()
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_cols();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols().max(1))
    }
}

/// Incremental QR state for a least-squares problem.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    n: usize,
    /// Upper triangle of R, row-major n×n.
    r: Vec<f64>,
    qty: Vec<f64>,
    /// Squared norm of the target component outside the column space.
    rss: f64,
    rows: usize,
}

impl LeastSquares {
    pub fn new(n_cols: usize) -> Self {
        LeastSquares {
            n: n_cols,
            r: vec![0.0; n_cols * n_cols],
            qty: vec![0.0; n_cols],
            rss: 0.0,
            rows: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, row: &[f64], target: f64) -> Result<()> {
        if row.len() != self.n {
            return Err(Error::Shape(format!(
                "row of width {} for {} columns",
                row.len(),
                self.n
            )));
        }
        if !target.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "non-finite value in regression row".into(),
            ));
        }
        let n = self.n;
        let mut x = row.to_vec();
        let mut y = target;
        for j in 0..n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let rjj = self.r[j * n + j];
            let h = rjj.hypot(xj);
            let (c, s) = (rjj / h, xj / h);
            self.r[j * n + j] = h;
            x[j] = 0.0;
            let r_row = &mut self.r[j * n + j + 1..(j + 1) * n];
            for (a, b) in r_row.iter_mut().zip(&mut x[j + 1..]) {
                let (ra, xb) = (*a, *b);
                *a = c * ra + s * xb;
                *b = c * xb - s * ra;
            }
            let a = self.qty[j];
            self.qty[j] = c * a + s * y;
            y = c * y - s * a;
        }
        self.rss += y * y;
        self.rows += 1;
        Ok(())
    }

    /// Residual sum of squares at coefficients `x`.
    pub fn rss_at(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let in_span: f64 = (0..n)
            .map(|i| {
                let rx: f64 = (i..n).map(|j| self.r[i * n + j] * x[j]).sum();
                (rx - self.qty[i]).powi(2)
            })
            .sum();
        self.rss + in_span
    }

    /// Minimum-norm least-squares coefficients.
    pub fn solve(&self) -> Result<Vec<f64>> {
        if self.rows == 0 {
            return Err(Error::Empty("least-squares problem has no rows".into()));
        }
        let n = self.n;
        let r = DMatrix::from_row_slice(n, n, &self.r);
        let svd = r.svd(true, true);
        let smax = svd.singular_values.max();
        let eps = (RANK_TOLERANCE * smax).max(f64::MIN_POSITIVE);
        let x = svd
            .solve(&DVector::from_column_slice(&self.qty), eps)
            .map_err(|e| Error::InvalidData(format!("least-squares solve failed: {e}")))?;
        Ok(x.iter().copied().collect())
    }
}

/// Fitted linear model: one coefficient per design column, no implicit intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub training_rows: usize,
    /// Root mean squared training residual, kW.
    pub residual_rmse: f64,
}

impl LinearModel {
    pub fn from_least_squares(columns: Vec<String>, ls: &LeastSquares) -> Result<Self> {
        if columns.len() != ls.n_cols() {
            return Err(Error::Shape(
                "schema width differs from problem width".into(),
            ));
        }
        let coefficients = ls.solve()?;
        let rss = ls.rss_at(&coefficients);
        Ok(LinearModel {
            columns,
            coefficients,
            training_rows: ls.rows(),
            residual_rmse: (rss / ls.rows() as f64).sqrt(),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.coefficients.len() {
            return Err(Error::Shape(format!(
                "row of width {} for a model with {} coefficients",
                row.len(),
                self.coefficients.len()
            )));
        }
        Ok(row.iter().zip(&self.coefficients).map(|(x, a)| x * a).sum())
    }
}

pub fn fit_ols(design: &DesignMatrix, target: &[f64]) -> Result<LinearModel> {
    if design.n_rows() == 0 || design.n_cols() == 0 {
        return Err(Error::Empty("design matrix is empty".into()));
    }
    if design.n_rows() != target.len() {
        return Err(Error::Shape(format!(
            "{} design rows but {} targets",
            design.n_rows(),
            target.len()
        )));
    }
    let mut ls = LeastSquares::new(design.n_cols());
    for (row, &y) in design.rows().zip(target) {
        ls.push(row, y)?;
    }
    LinearModel::from_least_squares(design.columns().to_vec(), &ls)
}
