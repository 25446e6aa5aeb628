use super::table::{fmt_f64, fmt_opt};
use super::{mean, par_map, ExperimentKind, GridSpec, RunOptions, Table};
use crate::diagnostics::misclassification;
use crate::ensembles::{sample_with, EnsembleSpec, Sbm2Spec, Z2Spec};
use crate::error::{Error, Result};
use crate::estimators::{sbm_estimate, z2_estimate, SbmMode};
use crate::linalg::EigenOptions;
use crate::rng::{self, Stream};

/// `σ = √(n / (2 log n))`.
pub fn z2_boundary(n: usize) -> f64 {
    let n = n as f64;
    (n / (2.0 * n.ln())).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Z2Cell {
    pub n: usize,
    pub sigma: f64,
    pub trials: usize,
    pub successes: usize,
}

impl Z2Cell {
    pub fn proportion(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

fn expect_kind(grid: &GridSpec, kind: ExperimentKind) -> Result<()> {
    grid.validate()?;
    if grid.kind != kind {
        return Err(Error::Config(format!(
            "expected a {} grid, got {}",
            kind.name(),
            grid.kind.name()
        )));
    }
    Ok(())
}

fn z2_trial(n: usize, sigma: f64, g: &mut Stream, eigen: &EigenOptions) -> Result<bool> {
    let spec = EnsembleSpec::Z2(Z2Spec::random(n, sigma, g));
    let (obs, truth) = sample_with(&spec, g)?;
    let x = truth.signs().expect("z2 truth has signs");
    let est = z2_estimate(obs.symmetric().expect("z2 is symmetric"), None, eigen)?;
    Ok(misclassification(&est.labels, x)? == 0.0)
}

/// Proportion of exact recoveries `x̂ = ±x` per `(n, σ)` cell.
pub fn run_z2_phase(grid: &GridSpec, opts: &RunOptions) -> Result<Vec<Z2Cell>> {
    expect_kind(grid, ExperimentKind::Z2Phase)?;
    let ns = grid.n.sizes()?;
    let sigmas = grid.sigma.as_ref().expect("validated").values();
    let t = grid.trials;
    let per_cell = sigmas.len() * t;
    let outcomes = par_map(opts.workers, ns.len() * per_cell, |k| {
        let (i, rest) = (k / per_cell, k % per_cell);
        let (j, trial) = (rest / t, rest % t);
        let mut g = rng::stream(
            grid.master_seed,
            "z2-phase",
            &[i as u64, j as u64],
            trial as u64,
        );
        z2_trial(ns[i], sigmas[j], &mut g, &opts.eigen)
    })?;
    let mut cells = Vec::with_capacity(ns.len() * sigmas.len());
    for (c, chunk) in outcomes.chunks(t).enumerate() {
        cells.push(Z2Cell {
            n: ns[c / sigmas.len()],
            sigma: sigmas[c % sigmas.len()],
            trials: t,
            successes: chunk.iter().filter(|&&s| s).count(),
        });
    }
    Ok(cells)
}

pub fn z2_table(cells: &[Z2Cell]) -> Table {
    let mut t = Table::new(&[
        "n",
        "sigma",
        "boundary",
        "trials",
        "successes",
        "proportion",
    ])
    .comment("z2-phase: success means x_hat = +-x; boundary = sqrt(n / (2 ln n))");
    for c in cells {
        t.push(vec![
            c.n.to_string(),
            fmt_f64(c.sigma),
            fmt_f64(z2_boundary(c.n)),
            c.trials.to_string(),
            c.successes.to_string(),
            fmt_f64(c.proportion()),
        ]);
    }
    t
}

/// Validity of an SBM cell; invalid cells are reported, not run.
fn sbm_cell_check(n: usize, a: f64, b: f64) -> Option<String> {
    let labels = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
    let spec = Sbm2Spec {
        n,
        a,
        b,
        labels,
        self_loops: true,
    };
    spec.validate().err().map(|e| match e {
        Error::InvalidArgument(m) => m,
        other => other.to_string(),
    })
}

fn sbm_rate(n: usize, a: f64, b: f64, g: &mut Stream, eigen: &EigenOptions) -> Result<f64> {
    let spec = EnsembleSpec::Sbm2(Sbm2Spec::random(n, a, b, g));
    let (obs, truth) = sample_with(&spec, g)?;
    let z = truth.signs().expect("sbm truth has signs");
    let est = sbm_estimate(
        obs.symmetric().expect("sbm is symmetric"),
        None,
        SbmMode::Raw,
        eigen,
    )?;
    misclassification(&est.labels, z)
}

struct SbmGrid {
    cells: Vec<(usize, f64, f64, [u64; 3], Option<String>)>,
}

fn sbm_grid(grid: &GridSpec) -> Result<SbmGrid> {
    let ns = grid.n.sizes()?;
    let av = grid.a.as_ref().expect("validated").values();
    let bv = grid.b.as_ref().expect("validated").values();
    let mut cells = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        for (j, &a) in av.iter().enumerate() {
            for (k, &b) in bv.iter().enumerate() {
                let skip = sbm_cell_check(n, a, b);
                cells.push((n, a, b, [i as u64, j as u64, k as u64], skip));
            }
        }
    }
    Ok(SbmGrid { cells })
}

/// Per-trial misclassification rates for every runnable cell, in grid order.
fn sbm_rates(grid: &GridSpec, tag: &str, opts: &RunOptions) -> Result<(SbmGrid, Vec<Vec<f64>>)> {
    let sg = sbm_grid(grid)?;
    let t = grid.trials;
    let live: Vec<usize> = (0..sg.cells.len())
        .filter(|&c| sg.cells[c].4.is_none())
        .collect();
    let flat = par_map(opts.workers, live.len() * t, |k| {
        let (n, a, b, coords, _) = &sg.cells[live[k / t]];
        let mut g = rng::stream(grid.master_seed, tag, coords, (k % t) as u64);
        sbm_rate(*n, *a, *b, &mut g, &opts.eigen)
    })?;
    let mut rates = vec![Vec::new(); sg.cells.len()];
    for (slot, chunk) in live.iter().zip(flat.chunks(t)) {
        rates[*slot] = chunk.to_vec();
    }
    Ok((sg, rates))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmCell {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    /// 0 for skipped cells.
    pub trials: usize,
    pub successes: usize,
    /// Why the cell was not run.
    pub skipped: Option<String>,
}

impl SbmCell {
    pub fn proportion(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.successes as f64 / self.trials as f64)
    }
}

/// Proportion of exact recoveries `ẑ = ±z` per `(n, a, b)` cell. Cells
/// violating `a > b > 0` or giving probabilities above 1 are kept as
/// skipped rows so the grid stays rectangular.
pub fn run_sbm_phase(grid: &GridSpec, opts: &RunOptions) -> Result<Vec<SbmCell>> {
    expect_kind(grid, ExperimentKind::SbmPhase)?;
    let (sg, rates) = sbm_rates(grid, "sbm-phase", opts)?;
    Ok(sg
        .cells
        .into_iter()
        .zip(rates)
        .map(|((n, a, b, _, skipped), r)| SbmCell {
            n,
            a,
            b,
            trials: r.len(),
            successes: r.iter().filter(|&&x| x == 0.0).count(),
            skipped,
        })
        .collect())
}

pub fn sbm_phase_table(cells: &[SbmCell]) -> Table {
    let mut t = Table::new(&[
        "n",
        "a",
        "b",
        "sqrt_a_minus_sqrt_b",
        "trials",
        "successes",
        "proportion",
        "status",
    ])
    .comment("sbm-phase: success means z_hat = +-z; boundaries sqrt(a) - sqrt(b) = +-sqrt(2)");
    for c in cells {
        t.push(vec![
            c.n.to_string(),
            fmt_f64(c.a),
            fmt_f64(c.b),
            fmt_f64(c.a.sqrt() - c.b.sqrt()),
            c.trials.to_string(),
            c.successes.to_string(),
            fmt_opt(c.proportion()),
            status(&c.skipped),
        ]);
    }
    t
}

fn status(skipped: &Option<String>) -> String {
    match skipped {
        None => "ok".into(),
        Some(r) => format!("skipped: {r}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisclCell {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub trials: usize,
    /// Mean misclassification rate over trials.
    pub mean_rate: Option<f64>,
    pub zero_trials: usize,
    pub skipped: Option<String>,
}

impl MisclCell {
    /// `log(mean rate) / log n`; `-inf` when every trial recovered exactly.
    pub fn log_mean_over_log_n(&self) -> Option<f64> {
        self.mean_rate.map(|m| m.ln() / (self.n as f64).ln())
    }

    /// `−(√a − √b)² / 2`.
    pub fn theory_exponent(&self) -> f64 {
        -(self.a.sqrt() - self.b.sqrt()).powi(2) / 2.0
    }
}

/// Mean misclassification rate per `(n, a, b)` cell; the log column takes
/// the mean over trials before the logarithm.
pub fn run_sbm_misclassification(grid: &GridSpec, opts: &RunOptions) -> Result<Vec<MisclCell>> {
    expect_kind(grid, ExperimentKind::SbmMiscl)?;
    let (sg, rates) = sbm_rates(grid, "sbm-miscl", opts)?;
    Ok(sg
        .cells
        .into_iter()
        .zip(rates)
        .map(|((n, a, b, _, skipped), r)| MisclCell {
            n,
            a,
            b,
            trials: r.len(),
            mean_rate: mean(r.iter().copied()),
            zero_trials: r.iter().filter(|&&x| x == 0.0).count(),
            skipped,
        })
        .collect())
}

pub fn miscl_table(cells: &[MisclCell]) -> Table {
    let mut t = Table::new(&[
        "n",
        "a",
        "b",
        "trials",
        "mean_rate",
        "zero_rate_trials",
        "log_mean_rate_over_log_n",
        "theory_exponent",
        "status",
    ])
    .comment("sbm-miscl: log_mean_rate_over_log_n = ln(mean over trials of r(z_hat, z)) / ln(n), mean taken before the log; -inf when every trial has rate 0")
    .comment("theory_exponent = -(sqrt(a) - sqrt(b))^2 / 2");
    for c in cells {
        t.push(vec![
            c.n.to_string(),
            fmt_f64(c.a),
            fmt_f64(c.b),
            c.trials.to_string(),
            fmt_opt(c.mean_rate),
            c.zero_trials.to_string(),
            fmt_opt(c.log_mean_over_log_n()),
            fmt_f64(c.theory_exponent()),
            status(&c.skipped),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::super::Axis;
    use super::*;

    fn z2_grid(n: usize, sigma: Vec<f64>, trials: usize) -> GridSpec {
        GridSpec {
            sigma: Some(Axis::Values { values: sigma }),
            trials,
            n: Axis::single(n as f64),
            ..GridSpec::desk(ExperimentKind::Z2Phase)
        }
    }

    #[test]
    fn z2_extremes() {
        let n = 1024;
        let bd = z2_boundary(n);
        let cells = run_z2_phase(
            &z2_grid(n, vec![0.0, 0.5 * bd, 2.0 * bd], 50),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(cells[0].proportion(), 1.0);
        assert!(cells[1].proportion() >= 0.95, "{cells:?}");
        assert!(cells[2].proportion() <= 0.05, "{cells:?}");
    }

    #[test]
    fn sbm_phase_skips_invalid_cells() {
        let grid = GridSpec {
            a: Some(Axis::Values {
                values: vec![4.0, 25.0],
            }),
            b: Some(Axis::Values {
                values: vec![0.0, 4.0],
            }),
            trials: 10,
            ..GridSpec::desk(ExperimentKind::SbmPhase)
        };
        let cells = run_sbm_phase(&grid, &RunOptions::default()).unwrap();
        assert_eq!(cells.len(), 4);
        assert!(
            cells[0].skipped.is_some() && cells[1].skipped.is_some() && cells[2].skipped.is_some()
        );
        assert_eq!(cells[3].trials, 10);
        let table = sbm_phase_table(&cells);
        table.check_rows(4).unwrap();
        assert!(table.rows[1][7].starts_with("skipped: a must exceed b"));
    }

    #[test]
    fn miscl_log_column() {
        let c = MisclCell {
            n: 100,
            a: 8.0,
            b: 2.0,
            trials: 5,
            mean_rate: Some(0.0),
            zero_trials: 5,
            skipped: None,
        };
        assert_eq!(c.log_mean_over_log_n(), Some(f64::NEG_INFINITY));
        assert!((c.theory_exponent() + 1.0).abs() < 1e-12);
        assert_eq!(miscl_table(&[c]).rows[0][6], "-inf");
    }
}
