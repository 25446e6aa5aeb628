use super::population::{population, PopulationModel};
use super::{ln, EnsembleSpec};
use crate::error::Result;

/// The function `φ` of the row-concentration assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiKind {
    /// `φ(x) = slope · x` (Gaussian noise).
    LinearGaussian { slope: f64 },
    /// `φ(x) = scale · (1 ∨ log(1/x))⁻¹`, `φ(0) = 0` (Bernoulli noise).
    LogBernoulli { scale: f64 },
    /// `φ(x) = coef · ((x ∨ floor) + offset)` (sparse sampling with noise).
    /// Unlike the other two kinds, `φ(0) = coef · (floor + offset) > 0`.
    SparseCompletion { coef: f64, floor: f64, offset: f64 },
}

impl PhiKind {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            PhiKind::LinearGaussian { slope } => slope * x,
            PhiKind::LogBernoulli { scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    scale / (1.0f64).max((1.0 / x).ln())
                }
            }
            PhiKind::SparseCompletion {
                coef,
                floor,
                offset,
            } => coef * (x.max(floor) + offset),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhiKind::LinearGaussian { .. } => "linear-gaussian",
            PhiKind::LogBernoulli { .. } => "log-bernoulli",
            PhiKind::SparseCompletion { .. } => "sparse-completion",
        }
    }
}

/// Evaluation of the incoherence (`‖A*‖_{2→∞} ≤ γΔ*`) and scaling
/// (`32κ·max{γ, φ(γ)} ≤ 1`) conditions for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionAudit {
    pub gamma: f64,
    pub phi: PhiKind,
    /// Spectral concentration constant used for `γ`, when the model needs one.
    pub c1: Option<f64>,
    pub gap: f64,
    pub kappa: f64,
    /// `‖A*‖_{2→∞}`.
    pub incoherence_lhs: f64,
    /// `γΔ*`.
    pub incoherence_rhs: f64,
    pub incoherence_ok: bool,
    /// `32κ·max{γ, φ(γ)}`.
    pub scaling_value: f64,
    pub scaling_ok: bool,
}

/// Default concentration constant: `‖A − A*‖₂ ≈ 2√(max row variance)`,
/// expressed in the units the model's `γ` uses.
pub fn default_c1(spec: &EnsembleSpec) -> Option<f64> {
    match spec {
        EnsembleSpec::Z2(_) => None,
        EnsembleSpec::Sbm2(s) => Some(2.0 * ((s.a + s.b) / 2.0).sqrt()),
        EnsembleSpec::Sbm3(s) => Some(2.0 * ((s.a + 2.0 * s.b) / 3.0).sqrt()),
        EnsembleSpec::Nmc(_) => Some(2.0),
    }
}

pub fn audit(spec: &EnsembleSpec) -> Result<AssumptionAudit> {
    audit_with_c1(spec, default_c1(spec))
}

/// Audit with an explicit concentration constant (ignored for Z2).
pub fn audit_with_c1(spec: &EnsembleSpec, c1: Option<f64>) -> Result<AssumptionAudit> {
    let pop = population(spec)?;
    let c1 = c1.or_else(|| default_c1(spec));
    let (gamma, phi) = gamma_phi(spec, &pop, c1.unwrap_or(0.0));
    let incoherence_lhs = pop.a_star().two_to_inf();
    let incoherence_rhs = gamma * pop.gap();
    let scaling_value = 32.0 * pop.kappa() * gamma.max(phi.eval(gamma));
    Ok(AssumptionAudit {
        gamma,
        phi,
        c1: if matches!(spec, EnsembleSpec::Z2(_)) {
            None
        } else {
            c1
        },
        gap: pop.gap(),
        kappa: pop.kappa(),
        incoherence_lhs,
        incoherence_rhs,
        incoherence_ok: incoherence_lhs <= incoherence_rhs,
        scaling_value,
        scaling_ok: scaling_value <= 1.0,
    })
}

fn gamma_phi(spec: &EnsembleSpec, pop: &PopulationModel, c1: f64) -> (f64, PhiKind) {
    match spec {
        EnsembleSpec::Z2(s) => {
            let n = s.n as f64;
            let gamma = (3.0 / n.ln().sqrt()).max(1.0 / n.sqrt());
            (gamma, PhiKind::LinearGaussian { slope: 1.0 })
        }
        EnsembleSpec::Sbm2(s) => {
            let m = s.b.min((s.a - s.b) / 2.0);
            let gamma = c1 / (m * ln(s.n).sqrt());
            (
                gamma,
                PhiKind::LogBernoulli {
                    scale: (2.0 * s.a + 4.0) / m,
                },
            )
        }
        EnsembleSpec::Sbm3(s) => {
            let m = s.b.min((s.a - s.b) / 3.0);
            let gamma = c1 / (m * ln(s.n).sqrt());
            (
                gamma,
                PhiKind::LogBernoulli {
                    scale: (2.0 * s.a + 4.0) / m,
                },
            )
        }
        EnsembleSpec::Nmc(s) => {
            let n = pop.dim() as f64;
            let max = s.signal.max_abs();
            let kbar = n * max / pop.gap();
            let t = (n.ln() / (n * s.p)).sqrt();
            let offset = s.sigma / max;
            let gamma = c1 * kbar / (n * s.p).sqrt() * (1.0 + offset);
            let phi = PhiKind::SparseCompletion {
                coef: 4.0 * kbar * t,
                floor: t,
                offset,
            };
            (gamma, phi)
        }
    }
}
