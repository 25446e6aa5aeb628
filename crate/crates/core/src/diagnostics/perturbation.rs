use ndarray::{Array1, Array2, ArrayView1};

use crate::ensembles::PopulationModel;
use crate::error::{Error, Result};
use crate::estimators::linearize;
use crate::linalg::{two_to_inf, Aligner, SpectralSubspace, SymOperator};

/// Error decomposition `u − u* = (Au*/λ* − u*) + (u − Au*/λ*)` for one trial.
///
/// The three scalar errors are scaled by `√n`. For a one-dimensional window
/// they are sup-norms minimized over a global sign; for wider windows they
/// are `2→∞` norms after alignment by `sgn(UᵀU*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationReport {
    /// `√n · min_s ‖u − s u*‖_∞`.
    pub err_raw: f64,
    /// `√n · min_s ‖Au*/λ* − s u*‖_∞`.
    pub err_linearization_vs_truth: f64,
    /// `√n · min_s ‖u − s Au*/λ*‖_∞`.
    pub err_residual: f64,
    /// `‖U sgn(H) − U*‖_{2→∞}`.
    pub subspace_raw: f64,
    /// `‖U sgn(H) − A U* (Λ*)⁻¹‖_{2→∞}`.
    pub subspace_residual: f64,
    /// `‖U‖_{2→∞}`.
    pub u_two_to_inf: f64,
    /// `‖u − s Au*/λ*‖_∞ / ‖u*‖_∞` (unscaled ratio).
    pub residual_ratio: f64,
    /// `√n · min_i s·sgn(u*_i)·u_i`; one-dimensional windows only.
    pub margin: Option<f64>,
    /// The sign `s` (one-dimensional windows) minimizing the residual term;
    /// all signed quantities above that are not separately minimized use it.
    pub sign: f64,
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |a, x| a.max(x.abs()))
}

fn sup_diff(a: ArrayView1<f64>, s: f64, b: ArrayView1<f64>) -> f64 {
    sup(a.iter().zip(b).map(|(x, y)| x - s * y))
}

pub fn perturbation_report(
    sub: &SpectralSubspace,
    pop: &PopulationModel,
    a: &dyn SymOperator,
) -> Result<PerturbationReport> {
    let n = pop.dim();
    if sub.dim() != n || a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sub.dim(),
        });
    }
    if sub.rank() != pop.rank() {
        return Err(Error::DimensionMismatch {
            expected: pop.rank(),
            found: sub.rank(),
        });
    }
    let root_n = (n as f64).sqrt();
    let u = sub.basis();
    let u_star = pop.u_star();
    let lin = linearize(a, pop)?;
    let u_two_to_inf = two_to_inf(u);

    if sub.rank() == 1 {
        let (u1, us, l1) = (u.column(0), u_star.column(0), lin.column(0));
        let min_over =
            |a: ArrayView1<f64>, b: ArrayView1<f64>| sup_diff(a, 1.0, b).min(sup_diff(a, -1.0, b));
        let res_pos = sup_diff(u1, 1.0, l1);
        let res_neg = sup_diff(u1, -1.0, l1);
        let sign = if res_neg < res_pos { -1.0 } else { 1.0 };
        let res = res_pos.min(res_neg);
        let aligned: Array2<f64> = u.mapv(|x| sign * x);
        let margin = us
            .iter()
            .zip(u1)
            .map(|(&t, &x)| sign * t.signum() * x)
            .fold(f64::INFINITY, f64::min)
            * root_n;
        let star_inf = sup(us.iter().copied());
        return Ok(PerturbationReport {
            err_raw: root_n * min_over(u1, us),
            err_linearization_vs_truth: root_n * min_over(l1, us),
            err_residual: root_n * res,
            subspace_raw: two_to_inf((&aligned - &u_star).view()),
            subspace_residual: two_to_inf((&aligned - &lin).view()),
            u_two_to_inf,
            residual_ratio: res / star_inf,
            margin: Some(margin),
            sign,
        });
    }

    let aligner = Aligner::new(u, u_star)?;
    let aligned = aligner.align(u);
    let raw = two_to_inf((&aligned - &u_star).view());
    let res = two_to_inf((&aligned - &lin).view());
    let lin_err = two_to_inf((&lin - &u_star).view());
    let star_rows: Array1<f64> = crate::linalg::row_norms(u_star);
    let star_inf = star_rows.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(PerturbationReport {
        err_raw: root_n * raw,
        err_linearization_vs_truth: root_n * lin_err,
        err_residual: root_n * res,
        subspace_raw: raw,
        subspace_residual: res,
        u_two_to_inf,
        residual_ratio: res / star_inf,
        margin: None,
        sign: 1.0,
    })
}
