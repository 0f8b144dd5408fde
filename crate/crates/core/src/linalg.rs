//! Small dense helpers shared by the tangent-program solver and the diagnostics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn norm_inf(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Orthonormal basis (as columns) of the null space of `rows`, which has `ncols` columns.
///
/// Rows may be empty, in which case the identity is returned.
pub fn null_space(rows: &Matrix, ncols: usize, rel_tol: f64) -> Matrix {
    if rows.nrows() == 0 {
        return Matrix::identity(ncols, ncols);
    }
    // Pad to at least square so the SVD returns a full right basis.
    let m = rows.nrows().max(ncols);
    let mut padded = Matrix::zeros(m, ncols);
    padded.view_mut((0, 0), (rows.nrows(), ncols)).copy_from(rows);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = rel_tol * smax.max(1.0);
    let keep: Vec<usize> = (0..ncols)
        .filter(|&i| svd.singular_values[i] <= tol)
        .collect();
    let mut basis = Matrix::zeros(ncols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).transpose());
    }
    basis
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_norm(m: &Matrix) -> f64 {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(0.0, |acc, e| acc.max(e.abs()))
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}
