//! Generative models, their population counterparts and assumption audits.
//!
//! All four ensembles carry their planted signal inside the spec, so
//! `sample` and `population` are pure functions of the spec (and seed).

mod audit;
mod io;
mod population;
mod signal;

use std::sync::Arc;

use rand::RngCore;

pub use audit::{audit, audit_with_c1, default_c1, AssumptionAudit, PhiKind};
pub use io::{read_instance, write_instance};
pub use population::{eigen_gap, population, PopulationModel};
pub use signal::{nmc_entry_scale, planted_lowrank, planted_signal, LowRankSignal};

use crate::error::{Error, Result};
use crate::linalg::{RectMatrix, SymmetricMatrix};
use crate::rng::{self, Stream};

/// Z2 synchronization `Y = xxᵀ + σW` with `W` symmetric standard Gaussian
/// off the diagonal and `W_ii = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Z2Spec {
    pub n: usize,
    pub sigma: f64,
    pub x: Vec<i8>,
}

/// Two-block SBM with within-block probability `a log n / n` and
/// between-block probability `b log n / n`. `labels[i] = +1` marks `i ∈ J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sbm2Spec {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub labels: Vec<i8>,
    /// Sample diagonal entries (the default). When false, `A_ii = 0`.
    pub self_loops: bool,
}

/// Three-block SBM; `labels[i] ∈ {1, 2, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sbm3Spec {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub labels: Vec<u8>,
    pub self_loops: bool,
}

/// Noisy matrix completion: each entry `M*_ij + ε_ij` is observed with
/// probability `p` and the observation matrix is rescaled by `1/p`.
#[derive(Debug, Clone)]
pub struct NmcSpec {
    pub signal: Arc<LowRankSignal>,
    pub p: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub enum EnsembleSpec {
    Z2(Z2Spec),
    Sbm2(Sbm2Spec),
    Sbm3(Sbm3Spec),
    Nmc(NmcSpec),
}

/// The planted signal of a sampled instance.
#[derive(Debug, Clone)]
pub enum GroundTruth {
    Z2 { x: Vec<i8> },
    Sbm2 { labels: Vec<i8> },
    Sbm3 { labels: Vec<u8> },
    Nmc(Arc<LowRankSignal>),
}

impl GroundTruth {
    /// ±1 labels for the two-class models.
    pub fn signs(&self) -> Option<&[i8]> {
        match self {
            GroundTruth::Z2 { x } => Some(x),
            GroundTruth::Sbm2 { labels } => Some(labels),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Observation {
    Symmetric(SymmetricMatrix),
    Rect(RectMatrix),
}

impl Observation {
    pub fn symmetric(&self) -> Option<&SymmetricMatrix> {
        match self {
            Observation::Symmetric(a) => Some(a),
            Observation::Rect(_) => None,
        }
    }

    pub fn rect(&self) -> Option<&RectMatrix> {
        match self {
            Observation::Rect(m) => Some(m),
            Observation::Symmetric(_) => None,
        }
    }
}

/// `log n` as used in the `a log n / n` scaling.
pub(crate) fn ln(n: usize) -> f64 {
    (n as f64).ln()
}

fn probability(coef: f64, name: &str, n: usize) -> Result<f64> {
    let p = coef * ln(n) / n as f64;
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::invalid(format!(
            "{name} = {coef} gives probability {name}·log n/n = {p:.4} outside [0, 1] at n = {n}"
        )));
    }
    Ok(p)
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("b must be positive, got {b}")));
    }
    if !(a > b) || !a.is_finite() {
        return Err(Error::invalid(format!(
            "a must exceed b, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

impl Z2Spec {
    /// Spec with a uniformly random sign vector drawn from `rng`.
    pub fn random(n: usize, sigma: f64, rng: &mut Stream) -> Self {
        let x = (0..n).map(|_| rng::rademacher(rng) as i8).collect();
        Z2Spec { n, sigma, x }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if self.x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.x.len(),
            });
        }
        if self.x.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::invalid("x must have entries ±1"));
        }
        Ok(())
    }
}

/// Balanced labels: the first `n/k` indices in block 1 and so on, then
/// randomly permuted.
fn balanced_blocks(n: usize, k: usize, rng: &mut Stream) -> Vec<usize> {
    let mut blocks: Vec<usize> = (0..n).map(|i| i * k / n).collect();
    rng::shuffle(&mut blocks, rng);
    blocks
}

impl Sbm2Spec {
    /// Balanced membership `J` chosen by a random permutation from `rng`.
    pub fn random(n: usize, a: f64, b: f64, rng: &mut Stream) -> Self {
        let labels = balanced_blocks(n, 2, rng)
            .into_iter()
            .map(|k| if k == 0 { 1 } else { -1 })
            .collect();
        Sbm2Spec {
            n,
            a,
            b,
            labels,
            self_loops: true,
        }
    }

    pub fn p(&self) -> f64 {
        self.a * ln(self.n) / self.n as f64
    }

    pub fn q(&self) -> f64 {
        self.b * ln(self.n) / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::invalid(format!(
                "n must be even and at least 2, got {}",
                self.n
            )));
        }
        check_ab(self.a, self.b)?;
        probability(self.a, "a", self.n)?;
        probability(self.b, "b", self.n)?;
        if self.labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.labels.len(),
            });
        }
        if self.labels.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::invalid("labels must be ±1"));
        }
        let in_j = self.labels.iter().filter(|&&v| v == 1).count();
        if in_j != self.n / 2 {
            return Err(Error::invalid(format!(
                "|J| must be n/2 = {}, got {in_j}",
                self.n / 2
            )));
        }
        Ok(())
    }
}

impl Sbm3Spec {
    pub fn random(n: usize, a: f64, b: f64, rng: &mut Stream) -> Self {
        let labels = balanced_blocks(n, 3, rng)
            .into_iter()
            .map(|k| k as u8 + 1)
            .collect();
        Sbm3Spec {
            n,
            a,
            b,
            labels,
            self_loops: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n % 3 != 0 {
            return Err(Error::invalid(format!(
                "n must be a positive multiple of 3, got {}",
                self.n
            )));
        }
        check_ab(self.a, self.b)?;
        probability(self.a, "a", self.n)?;
        probability(self.b, "b", self.n)?;
        if self.labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.labels.len(),
            });
        }
        for k in 1..=3u8 {
            let c = self.labels.iter().filter(|&&v| v == k).count();
            if c != self.n / 3 {
                return Err(Error::invalid(format!(
                    "block {k} must have n/3 = {} members, got {c}",
                    self.n / 3
                )));
            }
        }
        Ok(())
    }
}

impl NmcSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::invalid(format!(
                "p must lie in (0, 1], got {}",
                self.p
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnsembleSpec::Z2(s) => s.validate(),
            EnsembleSpec::Sbm2(s) => s.validate(),
            EnsembleSpec::Sbm3(s) => s.validate(),
            EnsembleSpec::Nmc(s) => s.validate(),
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            EnsembleSpec::Z2(_) => "z2",
            EnsembleSpec::Sbm2(_) => "sbm2",
            EnsembleSpec::Sbm3(_) => "sbm3",
            EnsembleSpec::Nmc(_) => "nmc",
        }
    }

    /// Side length of the (symmetric) observation; `n1 + n2` for NMC.
    pub fn dim(&self) -> usize {
        match self {
            EnsembleSpec::Z2(s) => s.n,
            EnsembleSpec::Sbm2(s) => s.n,
            EnsembleSpec::Sbm3(s) => s.n,
            EnsembleSpec::Nmc(s) => {
                let (n1, n2) = s.signal.shape();
                n1 + n2
            }
        }
    }

    pub fn truth(&self) -> GroundTruth {
        match self {
            EnsembleSpec::Z2(s) => GroundTruth::Z2 { x: s.x.clone() },
            EnsembleSpec::Sbm2(s) => GroundTruth::Sbm2 {
                labels: s.labels.clone(),
            },
            EnsembleSpec::Sbm3(s) => GroundTruth::Sbm3 {
                labels: s.labels.clone(),
            },
            EnsembleSpec::Nmc(s) => GroundTruth::Nmc(Arc::clone(&s.signal)),
        }
    }
}

/// Draw one instance. The result is a deterministic function of `(spec, seed)`.
pub fn sample(spec: &EnsembleSpec, seed: u64) -> Result<(Observation, GroundTruth)> {
    let mut rng = rng::seeded(seed);
    sample_with(spec, &mut rng)
}

/// As [`sample`] but drawing from a caller-supplied stream.
pub fn sample_with(spec: &EnsembleSpec, rng: &mut Stream) -> Result<(Observation, GroundTruth)> {
    spec.validate()?;
    let obs = match spec {
        EnsembleSpec::Z2(s) => Observation::Symmetric(sample_z2(s, rng)),
        EnsembleSpec::Sbm2(s) => {
            let blocks: Vec<usize> = s.labels.iter().map(|&v| usize::from(v != 1)).collect();
            Observation::Symmetric(sample_blocks(
                s.n,
                &blocks,
                2,
                s.p(),
                s.q(),
                s.self_loops,
                rng,
            )?)
        }
        EnsembleSpec::Sbm3(s) => {
            let blocks: Vec<usize> = s.labels.iter().map(|&v| (v - 1) as usize).collect();
            let p = probability(s.a, "a", s.n)?;
            let q = probability(s.b, "b", s.n)?;
            Observation::Symmetric(sample_blocks(s.n, &blocks, 3, p, q, s.self_loops, rng)?)
        }
        EnsembleSpec::Nmc(s) => Observation::Rect(sample_nmc(s, rng)?),
    };
    Ok((obs, spec.truth()))
}

fn sample_z2(s: &Z2Spec, rng: &mut Stream) -> SymmetricMatrix {
    let x = &s.x;
    SymmetricMatrix::from_lower_fn(s.n, |i, j| {
        let signal = f64::from(x[i] * x[j]);
        if i == j {
            signal
        } else {
            signal + s.sigma * rng::std_normal(rng)
        }
    })
}

/// Visit each index of the sorted list `idx` independently with probability
/// `p`, using geometric skips so the cost is proportional to the number of hits.
fn bernoulli_subset(idx: &[usize], p: f64, rng: &mut impl RngCore, mut hit: impl FnMut(usize)) {
    if p <= 0.0 || idx.is_empty() {
        return;
    }
    if p >= 1.0 {
        idx.iter().for_each(|&j| hit(j));
        return;
    }
    let lq = (1.0 - p).ln();
    let mut pos = 0usize;
    loop {
        let gap = rng::geometric_gap(rng, lq);
        pos = match pos.checked_add(gap) {
            Some(v) if v < idx.len() => v,
            _ => return,
        };
        hit(idx[pos]);
        pos += 1;
    }
}

fn sample_blocks(
    n: usize,
    blocks: &[usize],
    k: usize,
    p: f64,
    q: f64,
    self_loops: bool,
    rng: &mut Stream,
) -> Result<SymmetricMatrix> {
    let members: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..n).filter(|&i| blocks[i] == c).collect())
        .collect();
    let mut triplets = Vec::new();
    for i in 0..n {
        for (c, list) in members.iter().enumerate() {
            let start = if self_loops {
                list.partition_point(|&j| j < i)
            } else {
                list.partition_point(|&j| j <= i)
            };
            let prob = if c == blocks[i] { p } else { q };
            bernoulli_subset(&list[start..], prob, rng, |j| triplets.push((i, j, 1.0)));
        }
    }
    SymmetricMatrix::from_upper_triplets(n, &triplets)
}

fn sample_nmc(s: &NmcSpec, rng: &mut Stream) -> Result<RectMatrix> {
    let m = s.signal.m_star();
    let (n1, n2) = m.dim();
    let cols: Vec<usize> = (0..n2).collect();
    let mut triplets = Vec::new();
    for i in 0..n1 {
        let mut hits = Vec::new();
        bernoulli_subset(&cols, s.p, rng, |j| hits.push(j));
        for j in hits {
            let noise = if s.sigma > 0.0 {
                s.sigma * rng::std_normal(rng)
            } else {
                0.0
            };
            triplets.push((i, j, (m[(i, j)] + noise) / s.p));
        }
    }
    RectMatrix::from_triplets(n1, n2, triplets)
}
