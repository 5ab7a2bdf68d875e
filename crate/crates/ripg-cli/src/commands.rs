//! Command implementations shared by the binary and the test suite.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};

use ripg::prox::ConstraintSet;
use ripg::ripg::{
    block_ls_components, block_tv_components, quadratic_tv_components, run, step_size,
    tv_prox_component, Control, IterationTrace, Schedule, SolveConfig, Variant,
};
use ripg::rowaction::{run_method, MethodKind, MethodSpec};
use ripg::sparse::BlockPartition;
use ripg::theory::{run_bound_suite, BoundSuiteConfig};
use ripg::tomo::{make_sinogram, Geometry, TomoProblem};
use ripg::tv::{build_diff_operator, default_tau};
use ripg::Error as RipgError;

use crate::formats::{
    fmt_float, read_matrix, read_vector, write_history_csv, write_matrix, write_pgm,
    write_vector, HistoryRow,
};
use crate::manifest::{
    BoundcheckParams, CommandSpec, GenerateParams, ImageMeta, ReferenceParams, RunManifest,
    SolveParams, MANIFEST_FILE,
};

pub const PROJECTOR_FILE: &str = "projector.rpx";
pub const X_EXACT_FILE: &str = "x_exact.rpv";
pub const B_EXACT_FILE: &str = "b_exact.rpv";
pub const B_FILE: &str = "b.rpv";

fn ensure_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

/// Writes a problem bundle: manifest, projector and the three vectors.
pub fn cmd_generate(params: &GenerateParams, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let geometry = Geometry::parallel(params.n, params.projections, params.rays)?;
    let problem = make_sinogram(&geometry, params.eta, params.seed)?;
    write_matrix(&out.join(PROJECTOR_FILE), &problem.a)?;
    write_vector(&out.join(X_EXACT_FILE), &problem.x_exact)?;
    write_vector(&out.join(B_EXACT_FILE), &problem.b_exact)?;
    write_vector(&out.join(B_FILE), &problem.b)?;
    let mut manifest = RunManifest::new(CommandSpec::Generate(params.clone()), None);
    let scaling = write_pgm(&out.join("x_exact.pgm"), &problem.x_exact, params.n)?;
    manifest.images.push(ImageMeta {
        file: "x_exact.pgm".into(),
        scaling,
    });
    manifest.save(out)?;
    Ok(())
}

/// Reads a problem bundle written by [`cmd_generate`].
pub fn load_problem(dir: &Path) -> Result<TomoProblem> {
    let manifest = RunManifest::load(dir)?;
    let params = match manifest.command {
        CommandSpec::Generate(p) => p,
        _ => bail!("{} is not a problem bundle", dir.display()),
    };
    let geometry = Geometry::parallel(params.n, params.projections, params.rays)?;
    let a = read_matrix(&dir.join(PROJECTOR_FILE))?;
    let x_exact = read_vector(&dir.join(X_EXACT_FILE))?;
    let b_exact = read_vector(&dir.join(B_EXACT_FILE))?;
    let b = read_vector(&dir.join(B_FILE))?;
    if a.nrows() != geometry.num_rows() || a.ncols() != geometry.num_pixels() {
        bail!("projector shape does not match the bundle geometry");
    }
    Ok(TomoProblem {
        a,
        x_exact,
        b_exact,
        b,
        eta: params.eta,
        seed: params.seed,
        geometry,
    })
}

pub fn parse_constraint(spec: &str, n: usize) -> Result<ConstraintSet> {
    match spec {
        "none" => Ok(ConstraintSet::AllSpace),
        "nonneg" => Ok(ConstraintSet::NonNeg),
        other => {
            let parts: Vec<&str> = other.split(':').collect();
            if parts.len() == 3 && parts[0] == "box" {
                let lo: f64 = parts[1].parse().context("box lower bound")?;
                let hi: f64 = parts[2].parse().context("box upper bound")?;
                Ok(ConstraintSet::uniform_box(lo, hi, n)?)
            } else {
                bail!("unknown constraint {other:?}; use none, nonneg or box:lo:hi")
            }
        }
    }
}

fn parse_schedule(name: &str, t0: f64) -> Result<Schedule> {
    match name {
        "constant" => Ok(Schedule::Constant(t0)),
        "diminishing" => Ok(Schedule::Diminishing(t0)),
        other => bail!("unknown schedule {other:?}; use constant or diminishing"),
    }
}

fn parse_control(name: &str, seed: u64) -> Result<Control> {
    match name {
        "cyclic" => Ok(Control::Cyclic),
        "random" => Ok(Control::Random { seed }),
        "shuffled" => Ok(Control::Shuffled { seed }),
        other => bail!("unknown control {other:?}; use cyclic, random or shuffled"),
    }
}

fn parse_variant(name: &str) -> Result<Variant> {
    match name {
        "ripg1" => Ok(Variant::Ripg1),
        "ripg2" => Ok(Variant::Ripg2),
        other => bail!("unknown variant {other:?}; use ripg1 or ripg2"),
    }
}

fn fused_kind(method: &str, mu: f64) -> Option<MethodKind> {
    match method {
        "art" => Some(MethodKind::Art),
        "damped-art" => Some(MethodKind::DampedArt),
        "block-kaczmarz" => Some(MethodKind::BlockKaczmarz),
        "damped-block" => Some(MethodKind::DampedBlock),
        "l1-art" => Some(MethodKind::L1Art),
        "huber-art" => Some(MethodKind::HuberArt { mu }),
        "dist-art" => Some(MethodKind::DistArt),
        "dist-sq-art" => Some(MethodKind::DistSqArt),
        _ => None,
    }
}

fn block_partition(
    problem: &TomoProblem,
    requested: Option<usize>,
) -> Result<BlockPartition> {
    match requested {
        Some(p) => Ok(BlockPartition::uniform(problem.a.nrows(), p)?),
        None => Ok(problem.projection_blocks()),
    }
}

struct SolveOutcome {
    trace: Option<IterationTrace>,
    diverged: Option<usize>,
    m: usize,
}

fn execute_solve(problem: &TomoProblem, params: &SolveParams) -> Result<SolveOutcome> {
    let n = problem.a.ncols();
    let constraint = parse_constraint(&params.constraint, n)?;
    let schedule = parse_schedule(&params.schedule, params.t0)?;
    let control = parse_control(&params.control, params.seed)?;
    let variant = parse_variant(&params.variant)?;
    let x0 = vec![0.0f64; n];
    let reference = Some(problem.x_exact.as_slice());

    let handle = |result: ripg::Result<IterationTrace>, m: usize| -> Result<SolveOutcome> {
        match result {
            Ok(trace) => Ok(SolveOutcome {
                trace: Some(trace),
                diverged: None,
                m,
            }),
            Err(RipgError::NonFiniteIterate { step }) => Ok(SolveOutcome {
                trace: None,
                diverged: Some(step),
                m,
            }),
            Err(e) => Err(e.into()),
        }
    };

    if let Some(kind) = fused_kind(&params.method, params.mu) {
        let needs_blocks = matches!(
            kind,
            MethodKind::BlockKaczmarz | MethodKind::DampedBlock
        );
        let partition = if needs_blocks {
            Some(block_partition(problem, params.blocks)?)
        } else {
            None
        };
        let m = partition
            .as_ref()
            .map_or(problem.a.nrows(), BlockPartition::num_blocks);
        let spec = MethodSpec {
            kind,
            rho: params.rho,
            schedule,
            control,
            constraint,
        };
        return handle(
            run_method(
                &problem.a,
                &problem.b,
                &spec,
                partition.as_ref(),
                &x0,
                params.cycles,
                reference,
            ),
            m,
        );
    }

    // TV-regularized methods run through the generic driver.
    let side = problem.geometry.n;
    let op = Arc::new(build_diff_operator(side, side));
    let tau = params.tau.unwrap_or_else(|| default_tau(&x0));
    let a = Arc::new(problem.a.clone());
    let b = Arc::new(problem.b.clone());
    let components = match params.method.as_str() {
        "tv-art" => quadratic_tv_components(&a, &b, Arc::clone(&op), params.lambda, tau)?,
        "block-tv" => {
            let partition = block_partition(problem, params.blocks)?;
            block_tv_components(
                Arc::clone(&a),
                Arc::clone(&b),
                &partition,
                Arc::clone(&op),
                params.lambda,
                tau,
            )?
        }
        "block-tv-prox" => {
            let partition = block_partition(problem, params.blocks)?;
            let mut comps = block_ls_components(Arc::clone(&a), Arc::clone(&b), &partition)?;
            comps.push(tv_prox_component(Arc::clone(&op), params.lambda)?);
            comps
        }
        other => bail!("unknown method {other:?}"),
    };
    let m = components.len();
    let mut cfg = SolveConfig::new(
        params.rho,
        schedule,
        control,
        constraint,
        params.cycles,
        variant,
    )?;
    cfg.snapshot_stride = params.snapshot_stride;
    handle(run(&components, &x0, &cfg, reference), m)
}

/// Runs a solver on a problem bundle; writes the per-cycle history CSV, the
/// final image and a manifest.
pub fn cmd_solve(problem_dir: &Path, params: &SolveParams, out: &Path) -> Result<()> {
    let problem = load_problem(problem_dir)?;
    ensure_out_dir(out)?;
    let n = problem.a.ncols();
    let schedule = parse_schedule(&params.schedule, params.t0)?;

    let mut manifest = RunManifest::new(
        CommandSpec::Solve(params.clone()),
        Some(problem_dir.display().to_string()),
    );

    let x0 = vec![0.0f64; n];
    let initial_error = ripg::ripg::relative_error(&x0, &problem.x_exact);

    let mut rows = Vec::new();
    let mut final_x = x0;

    if params.cycles == 0 {
        rows.push(HistoryRow {
            cycle: 0,
            relative_error: initial_error,
            objective: f64::NAN,
            t_k: step_size(&schedule, 0, 1),
        });
        // An empty run has no meaningful objective; record it as the
        // initial relative error row only.
        rows[0].objective = 0.0;
    } else {
        let outcome = execute_solve(&problem, params)?;
        let m = outcome.m.max(1);
        match (outcome.trace, outcome.diverged) {
            (Some(trace), None) => {
                rows.push(HistoryRow {
                    cycle: 0,
                    relative_error: trace.initial_relative_error.unwrap_or(initial_error),
                    objective: trace.initial_objective,
                    t_k: step_size(&schedule, 0, m),
                });
                for (i, &err) in trace.relative_errors.iter().enumerate() {
                    rows.push(HistoryRow {
                        cycle: i + 1,
                        relative_error: err,
                        objective: trace.objectives[i],
                        t_k: trace.step_sizes[i],
                    });
                }
                for (cycle, snap) in &trace.snapshots {
                    write_vector(&out.join(format!("snapshot_{cycle:05}.rpv")), snap)?;
                }
                final_x = trace.final_x;
            }
            (None, Some(step)) => {
                manifest.diverged = true;
                rows.push(HistoryRow {
                    cycle: 0,
                    relative_error: initial_error,
                    objective: 0.0,
                    t_k: step_size(&schedule, 0, m),
                });
                eprintln!(
                    "run diverged at step {step}; partial output recorded in the manifest"
                );
            }
            _ => unreachable!(),
        }
    }

    write_history_csv(&out.join("history.csv"), &rows)?;
    if !manifest.diverged {
        write_vector(&out.join("x_final.rpv"), &final_x)?;
        let scaling = write_pgm(&out.join("x_final.pgm"), &final_x, problem.geometry.n)?;
        manifest.images.push(ImageMeta {
            file: "x_final.pgm".into(),
            scaling,
        });
    }
    manifest.save(out)?;
    Ok(())
}

/// Reference sweep: solves the TV-regularized problem for every lambda in
/// the grid, writes per-lambda images and a summary CSV, and records the
/// best lambda (smallest relative error) in the manifest.
pub fn cmd_reference(problem_dir: &Path, params: &ReferenceParams, out: &Path) -> Result<()> {
    use ripg::reference::{estimate_opnorm, solve_tv_ls, PdConfig};

    if params.lambdas.is_empty() {
        bail!("reference sweep needs at least one lambda");
    }
    let problem = load_problem(problem_dir)?;
    ensure_out_dir(out)?;
    let side = problem.geometry.n;
    let op = build_diff_operator(side, side);
    let constraint = parse_constraint(&params.constraint, problem.a.ncols())?;
    let stack = problem.a.vstack(op.matrix())?;
    let l = estimate_opnorm(&stack, 100, 0);
    let mut cfg = PdConfig::auto(l);
    cfg.max_iters = params.max_iters;
    cfg.tol = params.tol;

    let mut manifest = RunManifest::new(
        CommandSpec::Reference(params.clone()),
        Some(problem_dir.display().to_string()),
    );

    let mut summary = String::from("lambda,relative_error,objective,iterations,converged\n");
    let mut best: Option<(f64, f64)> = None;
    for (k, &lambda) in params.lambdas.iter().enumerate() {
        let result = solve_tv_ls(&problem.a, &problem.b, &op, lambda, &constraint, &cfg)?;
        let err = ripg::ripg::relative_error(&result.x_ref, &problem.x_exact);
        let objective = *result.objectives.last().expect("objective recorded");
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_float(lambda),
            fmt_float(err),
            fmt_float(objective),
            result.iterations,
            result.converged
        ));
        write_vector(&out.join(format!("ref_{k:02}.rpv")), &result.x_ref)?;
        let scaling = write_pgm(&out.join(format!("ref_{k:02}.pgm")), &result.x_ref, side)?;
        manifest.images.push(ImageMeta {
            file: format!("ref_{k:02}.pgm"),
            scaling,
        });
        if best.map_or(true, |(_, e)| err < e) {
            best = Some((lambda, err));
        }
    }
    if let Some((lambda, err)) = best {
        manifest.best_lambda = Some(lambda);
        manifest.best_relative_error = Some(err);
    }
    fs::write(out.join("summary.csv"), summary)?;
    manifest.save(out)?;
    Ok(())
}

/// Runs the randomized descent-bound suite and writes the pass/fail table.
pub fn cmd_boundcheck(params: &BoundcheckParams, out: &Path) -> Result<()> {
    ensure_out_dir(out)?;
    let cfg = BoundSuiteConfig {
        cases: params.cases,
        seed: params.seed,
        ..BoundSuiteConfig::default()
    };
    let cases = run_bound_suite(&cfg)?;
    let mut table = String::from("case,variant,rho,m,n,t,beta,c_empirical,lhs,rhs,slack,holds\n");
    for case in &cases {
        let variant = match case.variant {
            Variant::Ripg1 => "ripg1",
            Variant::Ripg2 => "ripg2",
        };
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            case.case_index,
            variant,
            fmt_float(case.rho),
            case.m,
            case.n,
            fmt_float(case.t),
            fmt_float(case.beta),
            fmt_float(case.report.c_empirical),
            fmt_float(case.report.lhs),
            fmt_float(case.report.rhs),
            fmt_float(case.report.slack),
            case.report.holds
        ));
    }
    fs::write(out.join("report.csv"), table)?;
    let manifest = RunManifest::new(CommandSpec::Boundcheck(params.clone()), None);
    manifest.save(out)?;
    let violations = cases.iter().filter(|c| !c.report.holds).count();
    if violations > 0 {
        eprintln!("{violations} bound violations recorded in report.csv");
    }
    Ok(())
}

/// Re-executes the command recorded in a manifest into a new directory.
pub fn cmd_replay(manifest_path: &Path, out: &Path) -> Result<()> {
    let manifest = RunManifest::load(manifest_path)?;
    let problem = manifest.problem.clone();
    match manifest.command {
        CommandSpec::Generate(p) => cmd_generate(&p, out),
        CommandSpec::Solve(p) => {
            let dir = problem.ok_or_else(|| anyhow!("solve manifest lacks a problem path"))?;
            cmd_solve(Path::new(&dir), &p, out)
        }
        CommandSpec::Reference(p) => {
            let dir = problem.ok_or_else(|| anyhow!("reference manifest lacks a problem path"))?;
            cmd_reference(Path::new(&dir), &p, out)
        }
        CommandSpec::Boundcheck(p) => cmd_boundcheck(&p, out),
    }
}

/// Convenience for tests: path of the manifest inside an output directory.
pub fn manifest_path(dir: &Path) -> std::path::PathBuf {
    dir.join(MANIFEST_FILE)
}
