use super::table::{fmt_f64, fmt_opt};
use super::{median, par_map, ExperimentKind, GridSpec, RunOptions, Table};
use crate::diagnostics::{misclassification, perturbation_report, PerturbationReport};
use crate::ensembles::{population, sample_with, EnsembleSpec, Sbm2Spec};
use crate::error::{Error, Result};
use crate::estimators::sign_labels;
use crate::linalg::top_eigenpairs;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationTrial {
    pub trial: usize,
    pub report: PerturbationReport,
    pub exact_recovery: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationRun {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub trials: Vec<LinearizationTrial>,
    /// `(z_i, √n·s·u2_i)` for every node of the first trial, with `s` the
    /// sign that aligns `u2` with `u2*`.
    pub histogram: Vec<(i8, f64)>,
}

impl LinearizationRun {
    fn column(&self, f: impl Fn(&PerturbationReport) -> f64) -> Vec<f64> {
        self.trials.iter().map(|t| f(&t.report)).collect()
    }

    /// Medians of `(err_raw, err_linearization_vs_truth, err_residual)`.
    pub fn medians(&self) -> (f64, f64, f64) {
        let m = |f: fn(&PerturbationReport) -> f64| median(&self.column(f)).unwrap_or(f64::NAN);
        (
            m(|r| r.err_raw),
            m(|r| r.err_linearization_vs_truth),
            m(|r| r.err_residual),
        )
    }
}

/// Per-trial entrywise errors of the second eigenvector of a two-block SBM.
pub fn run_sbm_linearization(grid: &GridSpec, opts: &RunOptions) -> Result<LinearizationRun> {
    grid.validate()?;
    if grid.kind != ExperimentKind::SbmLinearization {
        return Err(Error::Config(format!(
            "expected a sbm-linearization grid, got {}",
            grid.kind.name()
        )));
    }
    let n = grid.n.sizes()?[0];
    let a = grid.a.as_ref().expect("validated").values()[0];
    let b = grid.b.as_ref().expect("validated").values()[0];
    let results = par_map(opts.workers, grid.trials, |trial| {
        let mut g = rng::stream(grid.master_seed, "sbm-linearization", &[], trial as u64);
        let spec = EnsembleSpec::Sbm2(Sbm2Spec::random(n, a, b, &mut g));
        let (obs, truth) = sample_with(&spec, &mut g)?;
        let pop = population(&spec)?;
        let adj = obs.symmetric().expect("sbm is symmetric");
        let sub = top_eigenpairs(adj, 1, 1, &opts.eigen)?;
        let report = perturbation_report(&sub, &pop, adj)?;
        let z = truth.signs().expect("sbm truth has signs");
        let exact_recovery = misclassification(&sign_labels(sub.column(0)), z)? == 0.0;
        let hist = (trial == 0).then(|| {
            let scale = (n as f64).sqrt() * report.sign;
            z.iter()
                .zip(sub.column(0))
                .map(|(&l, &u)| (l, scale * u))
                .collect()
        });
        Ok((
            LinearizationTrial {
                trial,
                report,
                exact_recovery,
            },
            hist,
        ))
    })?;
    let mut histogram = Vec::new();
    let mut trials = Vec::with_capacity(results.len());
    for (t, h) in results {
        if let Some(h) = h {
            histogram = h;
        }
        trials.push(t);
    }
    Ok(LinearizationRun {
        n,
        a,
        b,
        trials,
        histogram,
    })
}

pub fn linearization_table(run: &LinearizationRun) -> Table {
    let (raw, lin, res) = run.medians();
    let mut t = Table::new(&[
        "trial",
        "err_raw",
        "err_linearization_vs_truth",
        "err_residual",
        "subspace_raw",
        "subspace_residual",
        "u_two_to_inf",
        "residual_ratio",
        "margin",
        "exact_recovery",
    ])
    .comment(format!(
        "sbm-linearization: n={} a={} b={}; errors are sqrt(n)-scaled sup norms minimized over a global sign",
        run.n,
        fmt_f64(run.a),
        fmt_f64(run.b)
    ))
    .comment(format!(
        "medians: err_raw={} err_linearization_vs_truth={} err_residual={}",
        fmt_f64(raw),
        fmt_f64(lin),
        fmt_f64(res)
    ));
    for tr in &run.trials {
        let r = &tr.report;
        t.push(vec![
            tr.trial.to_string(),
            fmt_f64(r.err_raw),
            fmt_f64(r.err_linearization_vs_truth),
            fmt_f64(r.err_residual),
            fmt_f64(r.subspace_raw),
            fmt_f64(r.subspace_residual),
            fmt_f64(r.u_two_to_inf),
            fmt_f64(r.residual_ratio),
            fmt_opt(r.margin),
            tr.exact_recovery.to_string(),
        ]);
    }
    t
}

pub fn histogram_table(run: &LinearizationRun) -> Table {
    let mut t = Table::new(&["node", "label", "sqrt_n_u2"])
        .comment("sbm-linearization histogram: coordinates of sqrt(n) * u2 for trial 0, sign-aligned with u2*");
    for (i, (l, v)) in run.histogram.iter().enumerate() {
        t.push(vec![i.to_string(), l.to_string(), fmt_f64(*v)]);
    }
    t
}
