//! Small dense linear-algebra helpers shared by the estimators.
//!
//! Everything here works on `nalgebra` dynamic matrices; the state and
//! measurement dimensions in this crate are tiny, so no sparse or blocked
//! storage is used.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance used by [`is_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-9;

fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `max|A - A^T| <= 1e-9 * (1 + max|A|)`.
pub fn is_symmetric(a: &Matrix) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.nrows();
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    asym <= SYMMETRY_TOL * (1.0 + max_abs(a))
}

/// `(A + A^T) / 2`. The result is exactly symmetric bit for bit.
pub fn symmetrize(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Cholesky factorization, or `None` when the matrix is not (numerically)
/// positive definite.
pub fn cholesky(a: &Matrix) -> Option<Cholesky<f64, Dyn>> {
    if !a.is_square() || a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Cholesky::new(a.clone())
}

pub fn is_positive_definite(a: &Matrix) -> bool {
    cholesky(a).is_some()
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_eigenvalue(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(a))
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(*v))
}

pub fn is_positive_semidefinite(a: &Matrix) -> bool {
    min_eigenvalue(a) >= -SYMMETRY_TOL * (1.0 + max_abs(a))
}

/// Checks symmetry then definiteness, naming `what` in the error.
pub fn check_spd(a: &Matrix, what: &str) -> Result<()> {
    if !is_symmetric(a) {
        return Err(Error::NotSymmetric(what.to_string()));
    }
    if !is_positive_definite(a) {
        return Err(Error::NotPositiveDefinite(what.to_string()));
    }
    Ok(())
}

pub fn check_square(a: &Matrix, dim: usize, what: &str) -> Result<()> {
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::dims(
            what,
            format!("{dim}x{dim}"),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    Ok(())
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn spd_solve(a: &Matrix, b: &Vector, what: &str) -> Result<Vector> {
    let chol = cholesky(a).ok_or_else(|| Error::Singular(what.to_string()))?;
    Ok(chol.solve(b))
}

/// Inverse of a symmetric positive definite matrix as a solve against the
/// identity, symmetrized on the way out.
pub fn spd_inverse(a: &Matrix, what: &str) -> Result<Matrix> {
    let chol = cholesky(a).ok_or_else(|| Error::Singular(what.to_string()))?;
    Ok(symmetrize(&chol.inverse()))
}

/// Block-diagonal concatenation.
pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Row-major matrix from nested slices; handy in tests and scenario defaults.
pub fn matrix_from_rows(rows: &[&[f64]]) -> Matrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

pub fn diag(entries: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(entries))
}
