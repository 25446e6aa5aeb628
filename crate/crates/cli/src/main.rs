use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use entrywise::diagnostics::{
    leave_one_out_probe, misclassification, nmc_report, perturbation_report,
};
use entrywise::ensembles::{
    audit_with_c1, nmc_entry_scale, planted_signal, population, sample, write_instance,
    EnsembleSpec, GroundTruth, NmcSpec, Observation, Sbm2Spec, Sbm3Spec, Z2Spec,
};
use entrywise::estimators::{nmc_estimate, sbm3_embed, sbm_estimate, z2_estimate, SbmMode};
use entrywise::experiments::{
    audit_table, default_audits, fmt_f64, run_audits, run_grid, tail_preset, AuditSpec,
    ExperimentKind, GridSpec, RunOptions, Table, TAIL_PRESETS,
};
use entrywise::linalg::{top_eigenpairs, EigenOptions, Solver, SymmetricMatrix};
use entrywise::rng;

#[derive(Parser)]
#[command(
    name = "entrywise",
    version,
    about = "Spectral estimators and entrywise eigenvector diagnostics"
)]
struct Cli {
    /// Master seed; each command derives its own streams from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "ENTRYWISE_THREADS", default_value_t = 0)]
    threads: usize,
    /// Relative residual tolerance of the eigensolver.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Operator applications allowed per eigensolve (default 5n).
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = SolverArg::Auto)]
    solver: SolverArg,
    /// Print progress and warnings to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one instance and write it as `i j value` lines.
    Sample {
        #[command(subcommand)]
        model: Model,
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Run the spectral estimator on a fresh instance and score it.
    Estimate {
        #[command(subcommand)]
        model: Model,
    },
    /// Entrywise error diagnostics on a fresh instance.
    Diagnose {
        #[command(subcommand)]
        what: Diagnose,
    },
    /// Assumption checks and Monte Carlo tail-bound audits.
    Audit {
        #[command(subcommand)]
        what: AuditCmd,
    },
    /// Monte Carlo experiments writing CSV tables.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand, Clone)]
enum Model {
    /// Y = x xᵀ + σW.
    Z2 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sigma: f64,
    },
    /// Two-block SBM with p = a log n/n, q = b log n/n.
    Sbm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Use the leading eigenvector of A − (d̂/n)11ᵀ instead of u2 of A.
        #[arg(long)]
        centered: bool,
    },
    /// Three-block SBM.
    Sbm3 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Noisy completion of an n×n rank-r matrix observed with p = p_factor log n/n.
    Nmc {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        rank: usize,
        #[arg(long, default_value_t = 10.0)]
        p_factor: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
    },
}

#[derive(Subcommand)]
enum Diagnose {
    /// Raw, linearization and residual errors of the informative eigenvectors.
    Perturbation {
        #[command(subcommand)]
        model: Model,
    },
    /// Entrywise and Frobenius errors of the completion estimate.
    Nmc {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        rank: usize,
        #[arg(long, default_value_t = 10.0)]
        p_factor: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
    },
    /// Distance between eigenvectors of A and of A with row/column m zeroed (n ≤ 512).
    Loo {
        /// Node indices to probe.
        #[arg(long = "m", default_values_t = [0usize])]
        nodes: Vec<usize>,
        #[command(subcommand)]
        model: Model,
    },
}

#[derive(Subcommand)]
enum AuditCmd {
    /// Incoherence and scaling conditions; default models when none is given.
    Assumptions {
        /// Concentration constant in γ (model default when omitted).
        #[arg(long)]
        c1: Option<f64>,
        #[command(subcommand)]
        model: Option<Model>,
    },
    /// Monte Carlo frequency of tail events against the analytic bounds.
    /// Exits with status 1 if any audit fails the 3-standard-error rule.
    Tails {
        /// Named configuration; repeatable. All presets when omitted.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(TAIL_PRESETS))]
        preset: Vec<String>,
        /// Override the Monte Carlo sample count.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: KindArg,
    /// Full-size grids (hours at the largest sizes).
    #[arg(long, conflicts_with_all = ["desk_scale", "config"])]
    full_scale: bool,
    /// Coarse grids that finish in minutes (the default).
    #[arg(long, conflicts_with = "config")]
    desk_scale: bool,
    /// TOML grid file; see `--print-config` for the format.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Print the grid as TOML and exit.
    #[arg(long)]
    print_config: bool,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Z2Phase,
    SbmPhase,
    SbmMiscl,
    SbmLinearization,
    NmcRatios,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Z2Phase => ExperimentKind::Z2Phase,
            KindArg::SbmPhase => ExperimentKind::SbmPhase,
            KindArg::SbmMiscl => ExperimentKind::SbmMiscl,
            KindArg::SbmLinearization => ExperimentKind::SbmLinearization,
            KindArg::NmcRatios => ExperimentKind::NmcRatios,
        }
    }
}

struct Ctx {
    seed: u64,
    eigen: EigenOptions,
    run: RunOptions,
    verbose: u8,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn build_spec(model: &Model, seed: u64) -> Result<EnsembleSpec> {
    let g = &mut rng::stream(seed, "cli-model", &[], 0);
    let spec = match *model {
        Model::Z2 { n, sigma } => EnsembleSpec::Z2(Z2Spec::random(n, sigma, g)),
        Model::Sbm { n, a, b, .. } => EnsembleSpec::Sbm2(Sbm2Spec::random(n, a, b, g)),
        Model::Sbm3 { n, a, b } => EnsembleSpec::Sbm3(Sbm3Spec::random(n, a, b, g)),
        Model::Nmc {
            n,
            rank,
            p_factor,
            noise,
        } => {
            if rank == 0 || rank > n {
                bail!("rank must lie in 1..={n}, got {rank}");
            }
            EnsembleSpec::Nmc(NmcSpec {
                signal: Arc::new(planted_signal(n, rank, nmc_entry_scale(n), g)?),
                p: p_factor * (n as f64).ln() / n as f64,
                sigma: noise,
            })
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn draw(model: &Model, ctx: &Ctx) -> Result<(EnsembleSpec, Observation, GroundTruth)> {
    let spec = build_spec(model, ctx.seed)?;
    let (obs, truth) = sample(&spec, ctx.seed)?;
    Ok((spec, obs, truth))
}

fn kv(out: &mut impl Write, key: &str, value: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{key}: {value}")?;
    Ok(())
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")
}

fn symmetric(obs: &Observation) -> &SymmetricMatrix {
    obs.symmetric().expect("symmetric model")
}

fn cmd_sample(model: &Model, output: Option<&PathBuf>, ctx: &Ctx) -> Result<()> {
    let (spec, obs, _) = draw(model, ctx)?;
    match output {
        Some(p) => {
            let f =
                std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_instance(std::io::BufWriter::new(f), &spec, &obs)?;
            ctx.log(format!("wrote {}", p.display()));
        }
        None => write_instance(std::io::stdout().lock(), &spec, &obs)?,
    }
    Ok(())
}

fn cmd_estimate(model: &Model, ctx: &Ctx, out: &mut impl Write) -> Result<()> {
    let (spec, obs, truth) = draw(model, ctx)?;
    kv(out, "model", spec.variant())?;
    match model {
        Model::Z2 { .. } | Model::Sbm { .. } => {
            let z = truth.signs().expect("two-class truth");
            let est = match model {
                Model::Z2 { .. } => z2_estimate(symmetric(&obs), Some(z), &ctx.eigen)?,
                Model::Sbm { centered, .. } => {
                    let mode = if *centered {
                        SbmMode::Centered
                    } else {
                        SbmMode::Raw
                    };
                    sbm_estimate(symmetric(&obs), Some(z), mode, &ctx.eigen)?
                }
                _ => unreachable!(),
            };
            for w in &est.warnings {
                ctx.log(format!("warning: {w}"));
            }
            let rate = misclassification(&est.labels, z)?;
            kv(out, "eigen_index", est.source_eigen_index)?;
            kv(out, "eigenvalue", fmt_f64(est.eigenvalue))?;
            kv(out, "exact_recovery", rate == 0.0)?;
            kv(out, "misclassification", fmt_f64(rate))?;
            kv(out, "margin", est.margin.map(fmt_f64).unwrap_or_default())?;
        }
        Model::Sbm3 { .. } => {
            let GroundTruth::Sbm3 { labels } = &truth else {
                unreachable!()
            };
            let emb = sbm3_embed(symmetric(&obs), labels, &ctx.eigen)?;
            let n = labels.len() as f64;
            let good = emb.separation.iter().filter(|&&s| s > 0.0).count();
            kv(out, "eigenvalues", list(&emb.eigenvalues))?;
            kv(out, "all_separated", emb.all_separated())?;
            kv(out, "separated_nodes", format!("{good}/{}", labels.len()))?;
            kv(
                out,
                "min_separation_sqrt_n",
                fmt_f64(emb.min_separation() * n.sqrt()),
            )?;
        }
        Model::Nmc { rank, .. } => {
            let GroundTruth::Nmc(signal) = &truth else {
                unreachable!()
            };
            let est = nmc_estimate(obs.rect().expect("rectangular"), *rank, &ctx.eigen)?;
            let rep = nmc_report(&est, signal)?;
            kv(out, "singular_values", list(est.values()))?;
            kv(out, "true_singular_values", list(signal.sigma()))?;
            kv(out, "max_err", fmt_f64(rep.max_err))?;
            kv(
                out,
                "rmse",
                fmt_f64(rep.frob_err / (signal.shape().0 as f64)),
            )?;
        }
    }
    Ok(())
}

fn window(model: &Model) -> Result<(usize, usize)> {
    Ok(match model {
        Model::Z2 { .. } => (0, 1),
        Model::Sbm {
            centered: false, ..
        } => (1, 1),
        Model::Sbm { centered: true, .. } => bail!("diagnostics use the raw adjacency matrix"),
        Model::Sbm3 { .. } => (1, 2),
        Model::Nmc { .. } => bail!("use `diagnose nmc` for completion"),
    })
}

fn cmd_diagnose(what: &Diagnose, ctx: &Ctx, out: &mut impl Write) -> Result<()> {
    match what {
        Diagnose::Perturbation { model } => {
            let (ws, k) = window(model)?;
            let (spec, obs, _) = draw(model, ctx)?;
            let pop = population(&spec)?;
            let a = symmetric(&obs);
            let sub = top_eigenpairs(a, k, ws, &ctx.eigen)?;
            let r = perturbation_report(&sub, &pop, a)?;
            kv(out, "model", spec.variant())?;
            kv(out, "eigenvalues", list(sub.values()))?;
            kv(out, "population_eigenvalues", list(pop.lambda_star()))?;
            kv(out, "err_raw", fmt_f64(r.err_raw))?;
            kv(
                out,
                "err_linearization_vs_truth",
                fmt_f64(r.err_linearization_vs_truth),
            )?;
            kv(out, "err_residual", fmt_f64(r.err_residual))?;
            kv(out, "subspace_raw", fmt_f64(r.subspace_raw))?;
            kv(out, "subspace_residual", fmt_f64(r.subspace_residual))?;
            kv(out, "u_two_to_inf", fmt_f64(r.u_two_to_inf))?;
            kv(out, "residual_ratio", fmt_f64(r.residual_ratio))?;
            kv(out, "margin", r.margin.map(fmt_f64).unwrap_or_default())?;
        }
        Diagnose::Nmc {
            n,
            rank,
            p_factor,
            noise,
        } => {
            let model = Model::Nmc {
                n: *n,
                rank: *rank,
                p_factor: *p_factor,
                noise: *noise,
            };
            let (_, obs, truth) = draw(&model, ctx)?;
            let GroundTruth::Nmc(signal) = &truth else {
                unreachable!()
            };
            let est = nmc_estimate(obs.rect().expect("rectangular"), *rank, &ctx.eigen)?;
            for w in &est.warnings {
                ctx.log(format!("warning: {w}"));
            }
            let r = nmc_report(&est, signal)?;
            kv(out, "max_err", fmt_f64(r.max_err))?;
            kv(out, "frob_err", fmt_f64(r.frob_err))?;
            kv(out, "vec_max_err", fmt_f64(r.vec_max_err))?;
            kv(out, "vec_frob_err", fmt_f64(r.vec_frob_err))?;
            kv(out, "eta", fmt_f64(r.eta))?;
            kv(
                out,
                "r_mat",
                r.r_mat.map(fmt_f64).unwrap_or_else(|| "degenerate".into()),
            )?;
            kv(
                out,
                "r_vec",
                r.r_vec.map(fmt_f64).unwrap_or_else(|| "degenerate".into()),
            )?;
        }
        Diagnose::Loo { nodes, model } => {
            window(model)?;
            let (spec, obs, _) = draw(model, ctx)?;
            let pop = population(&spec)?;
            writeln!(out, "m,dist_u,subspace_dist,u_two_to_inf")?;
            for &m in nodes {
                let p = leave_one_out_probe(symmetric(&obs), &pop, m, &ctx.eigen)?;
                writeln!(
                    out,
                    "{m},{},{},{}",
                    fmt_f64(p.dist_u),
                    fmt_f64(p.subspace_dist),
                    fmt_f64(p.u_two_to_inf)
                )?;
            }
        }
    }
    Ok(())
}

fn emit(table: &Table, output: Option<&PathBuf>, out: &mut impl Write) -> Result<()> {
    match output {
        Some(p) => table
            .save(p)
            .with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(&table.to_bytes()?)?,
    }
    Ok(())
}

fn cmd_audit(what: &AuditCmd, ctx: &Ctx, out: &mut impl Write) -> Result<bool> {
    match what {
        AuditCmd::Assumptions {
            c1,
            model: Some(model),
        } => {
            let spec = build_spec(model, ctx.seed)?;
            let a = audit_with_c1(&spec, *c1)?;
            kv(out, "model", spec.variant())?;
            kv(out, "gap", fmt_f64(a.gap))?;
            kv(out, "kappa", fmt_f64(a.kappa))?;
            kv(out, "gamma", fmt_f64(a.gamma))?;
            kv(out, "c1", a.c1.map(fmt_f64).unwrap_or_default())?;
            kv(out, "phi", a.phi.name())?;
            kv(out, "phi_gamma", fmt_f64(a.phi.eval(a.gamma)))?;
            kv(
                out,
                "incoherence",
                format!(
                    "{} <= {} : {}",
                    fmt_f64(a.incoherence_lhs),
                    fmt_f64(a.incoherence_rhs),
                    a.incoherence_ok
                ),
            )?;
            kv(
                out,
                "scaling",
                format!("{} <= 1 : {}", fmt_f64(a.scaling_value), a.scaling_ok),
            )?;
            Ok(true)
        }
        AuditCmd::Assumptions { model: None, .. } => {
            let specs: Vec<AuditSpec> = default_audits()
                .into_iter()
                .filter(|s| matches!(s, AuditSpec::Assumptions(_)))
                .collect();
            let rows = run_audits(&specs, ctx.seed, &ctx.run)?;
            emit(&audit_table(&rows), None, out)?;
            Ok(true)
        }
        AuditCmd::Tails {
            preset,
            samples,
            output,
        } => {
            let names: Vec<&str> = if preset.is_empty() {
                TAIL_PRESETS.to_vec()
            } else {
                preset.iter().map(String::as_str).collect()
            };
            let specs: Vec<AuditSpec> = names
                .iter()
                .map(|p| {
                    let mut s = tail_preset(p).expect("validated by clap");
                    if let Some(k) = samples {
                        match &mut s {
                            AuditSpec::BinomDiff { samples, .. }
                            | AuditSpec::RowConcentration { samples, .. }
                            | AuditSpec::Chernoff { samples, .. }
                            | AuditSpec::LargeDeviation { samples, .. } => *samples = *k,
                            AuditSpec::Assumptions(_) => {}
                        }
                    }
                    s
                })
                .collect();
            let rows = run_audits(&specs, ctx.seed, &ctx.run)?;
            let mut table = audit_table(&rows);
            table.header.insert(0, "preset".into());
            for (row, name) in table.rows.iter_mut().zip(&names) {
                row.insert(0, name.to_string());
            }
            emit(&table, output.as_ref(), out)?;
            Ok(rows.iter().all(|r| r.pass))
        }
    }
}

fn cmd_experiment(
    args: &ExperimentArgs,
    seed: Option<u64>,
    ctx: &Ctx,
    out: &mut impl Write,
) -> Result<()> {
    let kind: ExperimentKind = args.kind.into();
    let mut grid = match &args.config {
        Some(path) => {
            let g = GridSpec::load(path)?;
            if g.kind != kind {
                bail!(
                    "{} describes a {} grid, not {}",
                    path.display(),
                    g.kind.name(),
                    kind.name()
                );
            }
            g
        }
        None if args.full_scale => GridSpec::full(kind),
        None => GridSpec::desk(kind),
    };
    if let Some(s) = seed {
        grid.master_seed = s;
    }
    if let Some(t) = args.trials {
        grid.trials = t;
    }
    grid.validate()?;
    if args.print_config {
        write!(out, "{}", grid.to_toml())?;
        return Ok(());
    }
    let start = Instant::now();
    let tables = run_grid(&grid, &ctx.run)?;
    ctx.log(format!(
        "{} finished in {:.1}s",
        kind.name(),
        start.elapsed().as_secs_f64()
    ));
    let stem = grid
        .output
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| kind.name().replace('-', "_"));
    for (suffix, table) in tables {
        let path = args.output.join(format!("{stem}{suffix}.csv"));
        table
            .save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "{} ({} rows)", path.display(), table.rows.len())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let eigen = EigenOptions {
        tol: cli.tol,
        max_iter: cli.max_iter,
        solver: match cli.solver {
            SolverArg::Auto => Solver::Auto,
            SolverArg::Dense => Solver::Dense,
            SolverArg::Lanczos => Solver::Lanczos,
        },
    };
    if !(cli.tol > 0.0) {
        bail!("--tol must be positive");
    }
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(1),
        eigen,
        run: RunOptions {
            workers: cli.threads,
            eigen,
        },
        verbose: cli.verbose,
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Sample { model, output } => cmd_sample(model, output.as_ref(), &ctx)?,
        Command::Estimate { model } => cmd_estimate(model, &ctx, &mut out)?,
        Command::Diagnose { what } => cmd_diagnose(what, &ctx, &mut out)?,
        Command::Audit { what } => {
            if !cmd_audit(what, &ctx, &mut out)? {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Experiment(args) => cmd_experiment(args, cli.seed, &ctx, &mut out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
