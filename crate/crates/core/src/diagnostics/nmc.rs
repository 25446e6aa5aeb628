use ndarray::Array2;

use crate::ensembles::LowRankSignal;
use crate::error::{Error, Result};
use crate::estimators::CompletionEstimate;
use crate::linalg::{frobenius, max_abs, two_to_inf, Aligner};

/// Ratios are reported only when their denominator exceeds this.
pub const RATIO_DENOMINATOR_FLOOR: f64 = 1e-14;

/// Errors below this fraction of the reference norm count as exact, and the
/// ratio built on them is reported as degenerate.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-10;

/// Entrywise versus Frobenius errors of the completion estimate.
///
/// `log n` inside the ratios uses `n = max(n1, n2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmcReport {
    /// `‖UΣVᵀ − M*‖_max`.
    pub max_err: f64,
    /// `‖UΣVᵀ − M*‖_F`.
    pub frob_err: f64,
    /// `max(‖U sgn(H) − U*‖_{2→∞}, ‖V sgn(H) − V*‖_{2→∞})`.
    pub vec_max_err: f64,
    /// `max(‖U sgn(H) − U*‖_F, ‖V sgn(H) − V*‖_F)`.
    pub vec_frob_err: f64,
    /// `‖U*‖_{2→∞} ∨ ‖V*‖_{2→∞}`.
    pub eta: f64,
    /// `max_err / (η² √log n · frob_err)`; `None` if the denominator or the
    /// error itself is numerically zero.
    pub r_mat: Option<f64>,
    /// `vec_max_err / (η √log n · vec_frob_err)`; `None` if degenerate.
    pub r_vec: Option<f64>,
}

impl NmcReport {
    pub fn degenerate(&self) -> bool {
        self.r_mat.is_none() || self.r_vec.is_none()
    }
}

fn ratio(num: f64, den: f64, err: f64, reference: f64) -> Option<f64> {
    (den > RATIO_DENOMINATOR_FLOOR && err > RELATIVE_ERROR_FLOOR * reference).then(|| num / den)
}

pub fn nmc_report(est: &CompletionEstimate, truth: &LowRankSignal) -> Result<NmcReport> {
    let (n1, n2) = truth.shape();
    let (u, v) = (est.left().basis(), est.right().basis());
    if u.nrows() != n1 || v.nrows() != n2 {
        return Err(Error::DimensionMismatch {
            expected: n1 * n2,
            found: u.nrows() * v.nrows(),
        });
    }
    if u.ncols() != truth.rank() || v.ncols() != truth.rank() {
        return Err(Error::DimensionMismatch {
            expected: truth.rank(),
            found: u.ncols(),
        });
    }
    let (us, vs) = (truth.u(), truth.v());

    let diff: Array2<f64> = match est.reconstruction.as_dense() {
        Some(d) => &d - &truth.m_star(),
        None => &est.reconstruction.to_dense() - &truth.m_star(),
    };
    let max_err = max_abs(diff.view());
    let frob_err = frobenius(diff.view());

    let h = (u.t().dot(&us) + v.t().dot(&vs)) * 0.5;
    let aligner = Aligner::from_h(h)?;
    let du = &aligner.align(u) - &us;
    let dv = &aligner.align(v) - &vs;
    let vec_max_err = two_to_inf(du.view()).max(two_to_inf(dv.view()));
    let vec_frob_err = frobenius(du.view()).max(frobenius(dv.view()));

    let eta = two_to_inf(us).max(two_to_inf(vs));
    let log_n = (n1.max(n2) as f64).ln().sqrt();
    Ok(NmcReport {
        max_err,
        frob_err,
        vec_max_err,
        vec_frob_err,
        eta,
        r_mat: ratio(
            max_err,
            eta * eta * log_n * frob_err,
            frob_err,
            frobenius(truth.m_star()),
        ),
        r_vec: ratio(
            vec_max_err,
            eta * log_n * vec_frob_err,
            vec_frob_err,
            (truth.rank() as f64).sqrt(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{nmc_entry_scale, planted_signal, sample, EnsembleSpec, NmcSpec};
    use crate::estimators::nmc_estimate;
    use crate::linalg::{jacobi_svd, EigenOptions, SpectralSubspace};
    use crate::rng;
    use std::sync::Arc;

    fn estimate(
        n: usize,
        r: usize,
        p: f64,
        sigma: f64,
        seed: u64,
    ) -> (CompletionEstimate, Arc<LowRankSignal>) {
        let signal =
            Arc::new(planted_signal(n, r, nmc_entry_scale(n), &mut rng::seeded(seed)).unwrap());
        let spec = EnsembleSpec::Nmc(NmcSpec {
            signal: signal.clone(),
            p,
            sigma,
        });
        let (obs, _) = sample(&spec, seed + 1).unwrap();
        let est = nmc_estimate(obs.rect().unwrap(), r, &EigenOptions::default()).unwrap();
        (est, signal)
    }

    #[test]
    fn noiseless_full_observation_is_exact() {
        let (est, signal) = estimate(60, 3, 1.0, 0.0, 1);
        let rep = nmc_report(&est, &signal).unwrap();
        assert!(rep.max_err < 1e-8 && rep.vec_max_err < 1e-8, "{rep:?}");
        assert!(rep.degenerate());
    }

    #[test]
    fn joint_rotation_is_absorbed() {
        let (est, signal) = estimate(200, 3, 0.3, 1.0, 2);
        let base = nmc_report(&est, &signal).unwrap();
        let mut gen = rng::seeded(9);
        let g = Array2::from_shape_fn((3, 3), |_| rng::std_normal(&mut gen));
        let (q, _, _) = jacobi_svd(g.view()).unwrap();
        let rotate = |s: &SpectralSubspace| s.with_basis(s.basis().dot(&q)).unwrap();
        let mut rotated = est.clone();
        rotated.svd.left = rotate(est.left());
        rotated.svd.right = rotate(est.right());
        let rep = nmc_report(&rotated, &signal).unwrap();
        assert!((rep.vec_max_err - base.vec_max_err).abs() < 1e-10);
        assert!((rep.vec_frob_err - base.vec_frob_err).abs() < 1e-10);
    }

    #[test]
    fn row_relabeling_leaves_ratios() {
        let n = 120;
        let (est, signal) = estimate(n, 2, 0.5, 0.5, 3);
        let base = nmc_report(&est, &signal).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        rng::shuffle(&mut perm, &mut rng::seeded(4));
        let m_star = signal.m_star().select(ndarray::Axis(0), &perm);
        let permuted_signal = LowRankSignal::from_matrix(m_star, 2).unwrap();
        let recon = est.reconstruction.permute_rows(&perm).unwrap();
        let left = est
            .left()
            .with_basis(est.left().basis().select(ndarray::Axis(0), &perm))
            .unwrap();
        let mut moved = est.clone();
        moved.reconstruction = recon;
        moved.svd.left = left;
        let rep = nmc_report(&moved, &permuted_signal).unwrap();
        assert!((rep.r_mat.unwrap() - base.r_mat.unwrap()).abs() < 1e-12);
        assert!((rep.r_vec.unwrap() - base.r_vec.unwrap()).abs() < 1e-12);
    }
}
