use std::sync::Arc;

use super::table::{fmt_f64, fmt_opt};
use super::{mean, par_map, ExperimentKind, GridSpec, RunOptions, Table};
use crate::diagnostics::{nmc_report, NmcReport};
use crate::ensembles::{ln, nmc_entry_scale, planted_signal, sample_with, EnsembleSpec, NmcSpec};
use crate::error::{Error, Result};
use crate::estimators::nmc_estimate;
use crate::rng;

/// Trial averages of [`NmcReport`] for one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NmcCell {
    pub n: usize,
    pub p: f64,
    pub trials: usize,
    pub mean_max_err: f64,
    pub mean_frob_err: f64,
    pub mean_vec_max_err: f64,
    pub mean_vec_frob_err: f64,
    pub mean_eta: f64,
    /// Averages over the trials whose ratio was defined.
    pub mean_r_mat: Option<f64>,
    pub mean_r_vec: Option<f64>,
    pub degenerate_trials: usize,
}

/// Square `n × n` completion with `p = p_factor·log n/n`, rank `r` signal
/// `M_L M_Rᵀ` and Gaussian noise of level `noise`; `p` is capped at 1.
pub fn run_nmc_ratios(grid: &GridSpec, opts: &RunOptions) -> Result<Vec<NmcCell>> {
    grid.validate()?;
    if grid.kind != ExperimentKind::NmcRatios {
        return Err(Error::Config(format!(
            "expected a nmc-ratios grid, got {}",
            grid.kind.name()
        )));
    }
    let ns = grid.n.sizes()?;
    let (r, noise, pf) = (
        grid.rank.expect("validated"),
        grid.noise.expect("validated"),
        grid.p_factor.expect("validated"),
    );
    let ps: Vec<f64> = ns
        .iter()
        .map(|&n| (pf * ln(n) / n as f64).min(1.0))
        .collect();
    for (&n, &p) in ns.iter().zip(&ps) {
        if !(p > 0.0) {
            return Err(Error::invalid(format!(
                "p_factor = {pf} gives p = {p} at n = {n}"
            )));
        }
        if r > n {
            return Err(Error::invalid(format!("rank {r} exceeds n = {n}")));
        }
    }
    let t = grid.trials;
    let reports: Vec<NmcReport> = par_map(opts.workers, ns.len() * t, |k| {
        let (i, trial) = (k / t, k % t);
        let n = ns[i];
        let mut g = rng::stream(grid.master_seed, "nmc-ratios", &[i as u64], trial as u64);
        let signal = Arc::new(planted_signal(n, r, nmc_entry_scale(n), &mut g)?);
        let spec = EnsembleSpec::Nmc(NmcSpec {
            signal: Arc::clone(&signal),
            p: ps[i],
            sigma: noise,
        });
        let (obs, _) = sample_with(&spec, &mut g)?;
        let est = nmc_estimate(obs.rect().expect("nmc is rectangular"), r, &opts.eigen)?;
        nmc_report(&est, &signal)
    })?;
    Ok(reports
        .chunks(t)
        .enumerate()
        .map(|(i, reps)| {
            let avg = |f: fn(&NmcReport) -> f64| mean(reps.iter().map(f)).unwrap_or(f64::NAN);
            NmcCell {
                n: ns[i],
                p: ps[i],
                trials: t,
                mean_max_err: avg(|r| r.max_err),
                mean_frob_err: avg(|r| r.frob_err),
                mean_vec_max_err: avg(|r| r.vec_max_err),
                mean_vec_frob_err: avg(|r| r.vec_frob_err),
                mean_eta: avg(|r| r.eta),
                mean_r_mat: mean(reps.iter().filter_map(|r| r.r_mat)),
                mean_r_vec: mean(reps.iter().filter_map(|r| r.r_vec)),
                degenerate_trials: reps.iter().filter(|r| r.degenerate()).count(),
            }
        })
        .collect())
}

pub fn nmc_table(cells: &[NmcCell]) -> Table {
    let mut t = Table::new(&[
        "n",
        "p",
        "trials",
        "mean_max_err",
        "mean_frob_err",
        "mean_vec_max_err",
        "mean_vec_frob_err",
        "mean_eta",
        "r_mat",
        "r_vec",
        "degenerate_trials",
    ])
    .comment("nmc-ratios: r_mat = max_err / (eta^2 sqrt(ln n) frob_err), r_vec = vec_max_err / (eta sqrt(ln n) vec_frob_err), averaged over trials");
    for c in cells {
        t.push(vec![
            c.n.to_string(),
            fmt_f64(c.p),
            c.trials.to_string(),
            fmt_f64(c.mean_max_err),
            fmt_f64(c.mean_frob_err),
            fmt_f64(c.mean_vec_max_err),
            fmt_f64(c.mean_vec_frob_err),
            fmt_f64(c.mean_eta),
            fmt_opt(c.mean_r_mat),
            fmt_opt(c.mean_r_vec),
            c.degenerate_trials.to_string(),
        ]);
    }
    t
}
