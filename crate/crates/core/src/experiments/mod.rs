//! Seeded, parallel Monte Carlo drivers and their CSV tables.
//!
//! Every `(cell, trial)` pair draws from its own stream derived from
//! `(master_seed, experiment, cell indices, trial)`, work items run on a
//! rayon pool of the requested size, and results are gathered in grid order.
//! Output is therefore byte-identical for any worker count. Wall time is
//! deliberately not written.

mod audits;
mod completion;
mod grid;
mod linearization;
mod phase;
mod table;

pub use audits::{
    audit_table, default_audits, run_audits, tail_preset, AuditRow, AuditSpec, ModelParams,
    Weights, TAIL_PRESETS,
};
pub use completion::{nmc_table, run_nmc_ratios, NmcCell};
pub use grid::{Axis, ExperimentKind, GridSpec, DEFAULT_SEED};
pub use linearization::{
    histogram_table, linearization_table, run_sbm_linearization, LinearizationRun,
    LinearizationTrial,
};
pub use phase::{
    miscl_table, run_sbm_misclassification, run_sbm_phase, run_z2_phase, sbm_phase_table,
    z2_boundary, z2_table, MisclCell, SbmCell, Z2Cell,
};
pub use table::{fmt_f64, fmt_opt, Table};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::EigenOptions;

/// Execution settings shared by all drivers.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Pool size; 0 lets rayon decide.
    pub workers: usize,
    pub eigen: EigenOptions,
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        RunOptions {
            workers,
            ..Default::default()
        }
    }
}

/// Evaluates `f(0..count)` on a pool of `workers` threads and returns the
/// results in index order.
pub(crate) fn par_map<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Runs one grid and returns its tables keyed by file suffix (`""` for the
/// main table, `"_hist"` for the linearization histogram).
pub fn run_grid(grid: &GridSpec, opts: &RunOptions) -> Result<Vec<(&'static str, Table)>> {
    grid.validate()?;
    Ok(match grid.kind {
        ExperimentKind::Z2Phase => vec![("", z2_table(&run_z2_phase(grid, opts)?))],
        ExperimentKind::SbmPhase => vec![("", sbm_phase_table(&run_sbm_phase(grid, opts)?))],
        ExperimentKind::SbmMiscl => {
            vec![("", miscl_table(&run_sbm_misclassification(grid, opts)?))]
        }
        ExperimentKind::SbmLinearization => {
            let run = run_sbm_linearization(grid, opts)?;
            vec![
                ("", linearization_table(&run)),
                ("_hist", histogram_table(&run)),
            ]
        }
        ExperimentKind::NmcRatios => vec![("", nmc_table(&run_nmc_ratios(grid, opts)?))],
    })
}

pub(crate) fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut k) = (0.0, 0usize);
    for x in xs {
        s += x;
        k += 1;
    }
    (k > 0).then(|| s / k as f64)
}

pub(crate) fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
