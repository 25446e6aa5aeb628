//! Entrywise error functionals, misclassification, completion ratios,
//! leave-one-out probes and Monte Carlo checks of tail bounds.

mod loo;
mod nmc;
mod perturbation;
mod tails;

pub use loo::{leave_one_out_probe, LooProbe, LOO_MAX_DIM};
pub use nmc::{nmc_report, NmcReport};
pub use perturbation::{perturbation_report, PerturbationReport};
pub use tails::{
    passes_slack_rule, tail_audit_binom_diff, tail_audit_chernoff, tail_audit_large_deviation,
    tail_audit_row_concentration, TailAudit,
};

use crate::ensembles::PopulationModel;
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, EigenOptions, SymOperator};

/// `r(ẑ, z) = min_{s ∈ {±1}} n⁻¹ Σ_i 1{ẑ_i ≠ s z_i}`.
pub fn misclassification(est: &[i8], truth: &[i8]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: est.len(),
        });
    }
    if est.is_empty() {
        return Ok(0.0);
    }
    let wrong = est.iter().zip(truth).filter(|(e, t)| e != t).count();
    let n = est.len();
    Ok(wrong.min(n - wrong) as f64 / n as f64)
}

struct Deviation<'a> {
    a: &'a dyn SymOperator,
    pop: &'a PopulationModel,
}

impl SymOperator for Deviation<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply(x, y);
        let mut z = vec![0.0; x.len()];
        self.pop.a_star().apply(x, &mut z);
        y.iter_mut().zip(&z).for_each(|(a, b)| *a -= b);
    }
}

/// `‖A − A*‖₂`, computed without forming the difference.
pub fn spectral_deviation(
    a: &dyn SymOperator,
    pop: &PopulationModel,
    opts: &EigenOptions,
) -> Result<f64> {
    if a.dim() != pop.dim() {
        return Err(Error::DimensionMismatch {
            expected: pop.dim(),
            found: a.dim(),
        });
    }
    operator_norm(&Deviation { a, pop }, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misclassification_examples() {
        let t = [1, 1, -1, -1, 1, -1, 1, 1, -1, 1];
        assert_eq!(misclassification(&t, &t).unwrap(), 0.0);
        let neg: Vec<i8> = t.iter().map(|v| -v).collect();
        assert_eq!(misclassification(&neg, &t).unwrap(), 0.0);
        let mut three = t;
        for i in [0, 4, 7] {
            three[i] = -three[i];
        }
        assert!((misclassification(&three, &t).unwrap() - 0.3).abs() < 1e-15);
        assert!(misclassification(&t[..3], &t).is_err());
    }
}
