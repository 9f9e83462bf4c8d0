//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let lu = a.lu();
    let pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(pivot >= PIVOT_FLOOR) {
        return Err(Error::SingularSystem { pivot });
    }
    lu.solve(b).ok_or(Error::SingularSystem { pivot })
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Max-norm of `a - b` over the first `count` entries.
pub fn max_gap(a: &DVector<f64>, b: &DVector<f64>, count: usize) -> f64 {
    max_abs((0..count).map(|i| a[i] - b[i]))
}

/// Principal submatrix on `idx` rows and columns.
pub fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}
