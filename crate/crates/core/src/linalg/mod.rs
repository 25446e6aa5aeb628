//! Symmetric eigensolvers, truncated SVD, matrix sign function and norms.

mod dense;
mod eigen;
mod lanczos;
mod matrix;
mod norms;
mod sign;
mod svd;

pub use dense::symmetric_eigen;
pub use eigen::{
    top_eigenpairs, top_eigenpairs_op, EigenOptions, Solver, SpectralSubspace, DENSE_LIMIT,
};
pub use matrix::{Dilation, RectMatrix, SymOperator, SymmetricMatrix};
pub use norms::{frobenius, max_abs, norms, operator_norm, row_norms, two_to_inf, Norms};
pub use sign::{matrix_sign, Aligner};
pub use svd::{jacobi_svd, truncated_svd, TruncatedSvd};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
