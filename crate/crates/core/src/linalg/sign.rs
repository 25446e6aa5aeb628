use ndarray::{Array2, ArrayView2};

use super::svd::jacobi_svd;
use crate::error::{Error, Result};

/// Smallest singular value of `H` accepted by [`matrix_sign`].
pub const MIN_ALIGNMENT_SINGULAR_VALUE: f64 = 1e-12;

/// `sgn(H) = Ū V̄ᵀ` where `H = Ū Σ̄ V̄ᵀ`: the orthogonal matrix closest to `H`.
pub fn matrix_sign(h: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (r, c) = h.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: c,
        });
    }
    let (u, s, v) = jacobi_svd(h)?;
    let min = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if r > 0 && min < MIN_ALIGNMENT_SINGULAR_VALUE {
        return Err(Error::DegenerateAlignment {
            min_singular_value: min,
        });
    }
    Ok(u.dot(&v.t()))
}

/// Alignment between an estimated basis `U` and a reference basis `U*`:
/// `H = UᵀU*` and its matrix sign.
#[derive(Debug, Clone)]
pub struct Aligner {
    h: Array2<f64>,
    sign: Array2<f64>,
}

impl Aligner {
    pub fn new(u: ArrayView2<f64>, u_star: ArrayView2<f64>) -> Result<Self> {
        if u.dim() != u_star.dim() {
            return Err(Error::DimensionMismatch {
                expected: u_star.len(),
                found: u.len(),
            });
        }
        Self::from_h(u.t().dot(&u_star))
    }

    pub fn from_h(h: Array2<f64>) -> Result<Self> {
        let sign = matrix_sign(h.view())?;
        Ok(Aligner { h, sign })
    }

    pub fn h(&self) -> ArrayView2<'_, f64> {
        self.h.view()
    }

    pub fn sign(&self) -> ArrayView2<'_, f64> {
        self.sign.view()
    }

    /// `U sgn(H)`.
    pub fn align(&self, u: ArrayView2<f64>) -> Array2<f64> {
        u.dot(&self.sign)
    }
}
