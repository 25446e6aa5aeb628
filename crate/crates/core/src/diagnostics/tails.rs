use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Samples drawn from one derived stream.
const CHUNK: u64 = 4096;

/// Minimum Monte Carlo sample count for the tail audits.
pub const MIN_SAMPLES: u64 = 10_000;

/// Monte Carlo frequency of a tail event next to the analytic bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TailAudit {
    pub name: String,
    pub bound_formula_value: f64,
    pub empirical_probability: f64,
    /// `√(p̂(1−p̂)/samples)`.
    pub std_error: f64,
    pub samples: u64,
    pub pass: bool,
}

/// `empirical ≤ bound·(1 + 3·se/empirical) + 3·se`.
pub fn passes_slack_rule(bound: f64, empirical: f64, se: f64) -> bool {
    let rel = if empirical > 0.0 { se / empirical } else { 0.0 };
    empirical <= bound * (1.0 + 3.0 * rel) + 3.0 * se
}

fn finish(name: String, bound: f64, hits: u64, samples: u64) -> TailAudit {
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    TailAudit {
        name,
        bound_formula_value: bound,
        empirical_probability: p,
        std_error: se,
        samples,
        pass: passes_slack_rule(bound, p, se),
    }
}

/// Counts hits of `event` over `samples` draws split into independent
/// chunks; the total does not depend on how rayon schedules them.
fn count_hits<F>(samples: u64, seed: u64, tag: &str, event: F) -> u64
where
    F: Fn(&mut Stream) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut g = rng::stream(seed, tag, &[c], 0);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).filter(|_| event(&mut g)).count() as u64
        })
        .sum()
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "samples = {samples} is below the minimum {MIN_SAMPLES}"
        )));
    }
    Ok(())
}

fn binomial(n: u64, p: f64) -> Result<Binomial> {
    Binomial::new(n, p).map_err(|e| Error::invalid(format!("binomial(n = {n}, p = {p}): {e}")))
}

/// `W ~ Bin(n/2, a log n/n)`, `Z ~ Bin(n/2, b log n/n)`:
/// `P(W − Z ≤ ε log n) ≤ n^{−(√a−√b)²/2 + ε log(a/b)/2}`.
pub fn tail_audit_binom_diff(
    a: f64,
    b: f64,
    eps: f64,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<TailAudit> {
    if !(b > 0.0 && a > b) {
        return Err(Error::invalid(format!(
            "need a > b > 0, got a = {a}, b = {b}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    check_samples(samples)?;
    let ln_n = (n as f64).ln();
    let (p, q) = (a * ln_n / n as f64, b * ln_n / n as f64);
    if p > 1.0 {
        return Err(Error::invalid(format!(
            "a = {a} gives probability {p} > 1 at n = {n}"
        )));
    }
    let (wd, zd) = (binomial(n / 2, p)?, binomial(n / 2, q)?);
    let exponent = -(a.sqrt() - b.sqrt()).powi(2) / 2.0 + eps * (a / b).ln() / 2.0;
    let bound = (n as f64).powf(exponent);
    let threshold = eps * ln_n;
    let hits = count_hits(samples, seed, "tail-binom-diff", |g| {
        (wd.sample(g) as f64 - zd.sample(g) as f64) <= threshold
    });
    Ok(finish(
        format!("binom-diff a={a} b={b} eps={eps} n={n}"),
        bound,
        hits,
        samples,
    ))
}

/// `X_i ~ Bern(p)` independent, `n = w.len()`:
/// `P(|Σ w_i(X_i − p)| ≥ (2+α)pn/(1 ∨ log(√n‖w‖∞/‖w‖₂))·‖w‖∞) ≤ 2e^{−αnp}`.
///
/// For `w = 0` the sum vanishes identically and the event is taken to be empty.
pub fn tail_audit_row_concentration(
    w: &[f64],
    p: f64,
    alpha: f64,
    samples: u64,
    seed: u64,
) -> Result<TailAudit> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p = {p} outside (0, 1]")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!(
            "alpha = {alpha} must be nonnegative"
        )));
    }
    if w.is_empty() {
        return Err(Error::invalid("weight vector is empty"));
    }
    check_samples(samples)?;
    let n = w.len() as f64;
    let bound = 2.0 * (-alpha * n * p).exp();
    let name = format!("row-concentration n={} p={p} alpha={alpha}", w.len());
    let w_inf = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if w_inf == 0.0 {
        return Ok(finish(name, bound, 0, samples));
    }
    let w_2 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = (n.sqrt() * w_inf / w_2).ln().max(1.0);
    let threshold = (2.0 + alpha) * p * n / denom * w_inf;
    let centre = p * w.iter().sum::<f64>();
    let ln_q = (-p).ln_1p();
    let hits = count_hits(samples, seed, "tail-row-concentration", |g| {
        let mut s = 0.0;
        if p >= 0.5 {
            for &wi in w {
                if rng::bernoulli(g, p) {
                    s += wi;
                }
            }
        } else {
            let mut pos = 0usize;
            loop {
                pos = match pos.checked_add(rng::geometric_gap(g, ln_q)) {
                    Some(v) if v < w.len() => v,
                    _ => break,
                };
                s += w[pos];
                pos += 1;
            }
        }
        (s - centre).abs() >= threshold
    });
    Ok(finish(name, bound, hits, samples))
}

/// `S ~ Bin(n, p)`, `μ = np`: `P(S ≥ (1+ε)μ) ≤ e^{−ε²μ/(2+ε)}`.
pub fn tail_audit_chernoff(n: u64, p: f64, eps: f64, samples: u64, seed: u64) -> Result<TailAudit> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps = {eps} must be positive")));
    }
    check_samples(samples)?;
    let d = binomial(n, p)?;
    let mu = n as f64 * p;
    let bound = (-eps * eps * mu / (2.0 + eps)).exp();
    let threshold = (1.0 + eps) * mu;
    let hits = count_hits(samples, seed, "tail-chernoff", |g| {
        d.sample(g) as f64 >= threshold
    });
    Ok(finish(
        format!("chernoff n={n} p={p} eps={eps}"),
        bound,
        hits,
        samples,
    ))
}

/// `S ~ Bin(N, p)`: the event `S ≥ ηNp` against `e^{−Np·h(η)}` with
/// `h(η) = η log η − η + 1`. The bound holds at every `N`; the large-deviation
/// lower bound says its exponent is attained as `N → ∞`, which callers can
/// read off `log(empirical)/(Np)`.
pub fn tail_audit_large_deviation(
    n: u64,
    p: f64,
    eta: f64,
    samples: u64,
    seed: u64,
) -> Result<TailAudit> {
    if !(eta > 1.0) {
        return Err(Error::invalid(format!("eta = {eta} must exceed 1")));
    }
    check_samples(samples)?;
    let d = binomial(n, p)?;
    let mu = n as f64 * p;
    let h = eta * eta.ln() - eta + 1.0;
    let bound = (-mu * h).exp();
    let threshold = eta * mu;
    let hits = count_hits(samples, seed, "tail-large-deviation", |g| {
        d.sample(g) as f64 >= threshold
    });
    Ok(finish(
        format!("large-deviation n={n} p={p} eta={eta}"),
        bound,
        hits,
        samples,
    ))
}
