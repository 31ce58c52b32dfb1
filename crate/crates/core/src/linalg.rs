//! Small dense helpers on top of nalgebra.

use crate::{CMatrix, Error, Result, C64};

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |U^H U - I|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

/// `max |A - A^H|`.
pub fn hermitian_error(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// Fractional power of a Hermitian positive semi-definite matrix through its
/// eigendecomposition. Eigenvalues are floored at `floor_rel * lambda_max`
/// before the power is applied. Fails when an eigenvalue is more negative than
/// `-neg_tol * lambda_max`.
pub fn hermitian_power(a: &CMatrix, power: f64, floor_rel: f64, neg_tol: f64) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    // Symmetrize so round-off does not leak into the eigensolver.
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if !(lmax > 0.0) {
        return Err(Error::Numerical(
            "matrix has no positive eigenvalue".to_string(),
        ));
    }
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin < -neg_tol * lmax {
        return Err(Error::Numerical(format!(
            "matrix is not positive semi-definite (eigenvalue {lmin:e}, max {lmax:e})"
        )));
    }
    let floor = floor_rel * lmax;
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let w = lam.max(floor).powf(power);
        for i in 0..n {
            scaled[(i, j)] *= w;
        }
    }
    Ok(scaled * v.adjoint())
}

/// Frobenius norm squared.
pub fn frob2(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn diag_real(a: &CMatrix) -> Vec<f64> {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).collect()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
