use ndarray::{Array1, ArrayView2};

use super::eigen::{top_eigenpairs_op, EigenOptions};
use super::matrix::SymOperator;
use crate::error::Result;
use crate::rng::{self, SOLVER_SEED};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// Power-iteration estimate of `‖X‖₂`; always a lower bound.
    pub spectral_estimate: f64,
    pub frobenius: f64,
    pub max_abs: f64,
    /// Largest row ℓ2 norm.
    pub two_to_inf: f64,
}

pub fn frobenius(x: ArrayView2<f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs(x: ArrayView2<f64>) -> f64 {
    x.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn row_norms(x: ArrayView2<f64>) -> Array1<f64> {
    x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

pub fn two_to_inf(x: ArrayView2<f64>) -> f64 {
    row_norms(x).iter().fold(0.0, |a, &v| a.max(v))
}

/// Power iteration on `XᵀX`, stopped when the estimate changes by less than
/// `1e-6` relative. The returned value is `‖Xv‖` for a unit `v`, hence a
/// certified lower bound on `‖X‖₂`.
fn spectral_estimate(x: ArrayView2<f64>) -> f64 {
    let (m, n) = x.dim();
    if m == 0 || n == 0 {
        return 0.0;
    }
    let mut g = rng::stream(SOLVER_SEED, "power", &[m as u64, n as u64], 0);
    let mut v: Array1<f64> = (0..n).map(|_| rng::std_normal(&mut g)).collect();
    let norm = v.dot(&v).sqrt();
    v /= norm;
    let mut est = 0.0;
    for _ in 0..10_000 {
        let xv = x.dot(&v);
        let next = xv.dot(&xv).sqrt();
        if next == 0.0 {
            return est;
        }
        let w = x.t().dot(&xv);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            return next;
        }
        let converged = (next - est).abs() <= 1e-6 * next;
        est = next;
        if converged {
            break;
        }
        v = w / wn;
    }
    est
}

pub fn norms(x: ArrayView2<f64>) -> Norms {
    Norms {
        spectral_estimate: spectral_estimate(x),
        frobenius: frobenius(x),
        max_abs: max_abs(x),
        two_to_inf: two_to_inf(x),
    }
}

struct Negated<'a>(&'a dyn SymOperator);

impl SymOperator for Negated<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }
}

/// `‖A‖₂ = max(|λ_max|, |λ_min|)` for a symmetric operator.
pub fn operator_norm(op: &dyn SymOperator, opts: &EigenOptions) -> Result<f64> {
    if op.dim() == 0 {
        return Ok(0.0);
    }
    let top = top_eigenpairs_op(op, 1, 0, opts)?.values()[0];
    let bottom = -top_eigenpairs_op(&Negated(op), 1, 0, opts)?.values()[0];
    Ok(top.abs().max(bottom.abs()))
}
