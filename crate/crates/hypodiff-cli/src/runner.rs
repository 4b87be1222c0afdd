//! Orchestration: build the problem, run the configured solver, run the
//! requested checks, and write the machine-readable trace and summary.

use std::path::{Path, PathBuf};

use hypodiff::hypo::HypoFunction;
use hypodiff::solvers::{
    aphd, mhd_constant, mhd_exact_step, mhd_line_search, phd, SolverTrace, StepSchedule, StopRule,
};
use hypodiff::subproblems::BoxConstraint;
use hypodiff::verify::{
    consistency_check, direction_mesh, fd_check, lip_approx_check, lip_map_check, optimality_check,
    rate_certify, CheckReport, DomainBox, RateConstants, RateMethod,
};

use crate::config::{ProblemConfig, SolverSpec, VerifySpec};
use crate::{build, CliError};

pub const DEFAULT_TOL_SUB: f64 = 1e-10;

/// Runtime options shared by all configs of one invocation.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides every config's seed when set.
    pub seed: Option<u64>,
    /// Write measured wall-clock milliseconds into the trace CSV instead
    /// of the deterministic default 0.
    pub timing: bool,
    /// Skip the solver even when one is configured.
    pub verify_only: bool,
}

#[derive(Debug, serde::Serialize)]
pub struct SolverSummary {
    pub method: &'static str,
    pub stop_reason: hypodiff::solvers::StopReason,
    pub iterations: usize,
    pub final_x: Vec<f64>,
    pub final_f: f64,
    pub final_dist0: f64,
    pub gap_to_fstar: Option<f64>,
}

#[derive(Debug, serde::Serialize)]
pub struct Summary {
    pub name: String,
    pub dimension: usize,
    pub seed: u64,
    pub solver: Option<SolverSummary>,
    pub checks: Vec<CheckReport>,
    pub all_checks_passed: bool,
    pub trace_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_wall_ms: Option<f64>,
}

/// Outcome of one config run, before mapping to an exit code.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub certification_failed: bool,
    /// Full path of the written trace CSV, when a solver ran.
    pub trace_path: Option<PathBuf>,
}

fn resolve_tol_sub(spec: &SolverSpec) -> f64 {
    spec.tol_sub().unwrap_or_else(|| {
        std::env::var("HYPODIFF_TOL")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_TOL_SUB)
    })
}

fn stop_rule(spec: &SolverSpec) -> Result<StopRule, CliError> {
    let s = spec.stop();
    StopRule::new(s.eps_value, s.eps_dist, s.max_iters).map_err(CliError::Solver)
}

fn feasible_box(config: &ProblemConfig) -> Result<BoxConstraint, CliError> {
    match &config.feasible_box {
        Some(b) => BoxConstraint::new(b.lower.clone(), b.upper.clone()).map_err(CliError::Solver),
        None => Ok(BoxConstraint::free(config.dimension)),
    }
}

/// Apply config-level constants on top of tree-derived metadata.
fn apply_constants(mut f: HypoFunction, config: &ProblemConfig) -> HypoFunction {
    let mut meta = f.meta().clone();
    if let Some(l) = config.constants.l {
        meta.lip_approx_l = Some(l);
    }
    if let Some(k) = config.constants.k {
        meta.lip_map_k = Some(k);
    }
    if let Some(c) = config.constants.c {
        meta.bound_c = Some(c);
    }
    f = f.with_meta(meta);
    f
}

fn run_solver(
    f: &HypoFunction,
    config: &ProblemConfig,
    spec: &SolverSpec,
) -> Result<SolverTrace, CliError> {
    let stop = stop_rule(spec)?;
    let tol_sub = resolve_tol_sub(spec);
    let q = feasible_box(config)?;
    let trace = match spec {
        SolverSpec::MhdConstant { alpha, .. } => mhd_constant(
            f,
            &config.x0,
            *alpha,
            config.constants.epsilon,
            &stop,
            tol_sub,
        ),
        SolverSpec::MhdExactStep { .. } => mhd_exact_step(f, &config.x0, &stop, tol_sub),
        SolverSpec::MhdLineSearch { tol_ls, .. } => {
            mhd_line_search(f, &config.x0, &stop, tol_sub, tol_ls.unwrap_or(1e-10))
        }
        SolverSpec::Phd { gamma, alpha, .. } => phd(
            f,
            &config.x0,
            *gamma,
            &StepSchedule::Constant(*alpha),
            &q,
            &stop,
            tol_sub,
        ),
        SolverSpec::Aphd { alpha0, .. } => {
            aphd(f, &config.x0, *alpha0, &q, &stop, tol_sub).map(|run| run.trace)
        }
    };
    trace.map_err(CliError::Solver)
}

fn rate_method(spec: &SolverSpec) -> Option<RateMethod> {
    match spec {
        SolverSpec::MhdConstant { alpha, .. } => Some(RateMethod::MhdConstant { alpha: *alpha }),
        SolverSpec::MhdExactStep { .. } => Some(RateMethod::MhdExact),
        SolverSpec::Aphd { .. } => Some(RateMethod::Aphd),
        _ => None,
    }
}

fn run_checks(
    f: &HypoFunction,
    config: &ProblemConfig,
    verify: &VerifySpec,
    trace: Option<(&SolverTrace, &SolverSpec)>,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let mut reports = Vec::new();
    let domain =
        DomainBox::new(verify.lower.clone(), verify.upper.clone()).map_err(CliError::Solver)?;
    for check in &verify.checks {
        match check.as_str() {
            "fd" => {
                use rand::Rng;
                let mut rng = rand_seed(seed ^ 0xfd);
                let alphas = [0.1, 0.03, 0.01, 0.003];
                for _ in 0..5 {
                    let x: Vec<f64> = (0..f.dim())
                        .map(|j| rng.gen_range(verify.lower[j]..=verify.upper[j]))
                        .collect();
                    let d: Vec<f64> = (0..f.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    reports.push(fd_check(f, &x, &d, &alphas));
                }
            }
            "consistency" => reports.push(consistency_check(f, &domain, verify.samples, seed)),
            "lip_approx" => {
                let l = f.meta().lip_approx_l.ok_or_else(|| {
                    CliError::Schema(vec![
                        "lip_approx check requires constants.L or a tree that derives it".into(),
                    ])
                })?;
                reports.push(lip_approx_check(f, &domain, l, verify.samples, seed ^ 1));
            }
            "lip_map" => {
                let k = f.meta().lip_map_k.ok_or_else(|| {
                    CliError::Schema(vec![
                        "lip_map check requires constants.K or a tree that derives it".into(),
                    ])
                })?;
                let mesh = direction_mesh(f.dim(), verify.mesh_directions, seed ^ 2);
                // the Hausdorff sweep is quadratic in the sample count;
                // cap it independently of the box-sampling budget
                let pairs = verify.samples.min(200);
                reports.push(lip_map_check(
                    f,
                    &domain,
                    k,
                    pairs,
                    &mesh,
                    verify.mesh_slack,
                    seed ^ 3,
                ));
            }
            "optimality" => {
                let x_star = config.constants.x_star.as_ref().ok_or_else(|| {
                    CliError::Schema(vec!["optimality check requires constants.x_star".into()])
                })?;
                reports.push(optimality_check(f, x_star, 1e-9));
            }
            "rate" => {
                let (trace, spec) = trace.ok_or_else(|| {
                    CliError::Schema(vec![
                        "rate check requires a solver run (not available in verify-only mode)"
                            .into(),
                    ])
                })?;
                let method = rate_method(spec).ok_or_else(|| {
                    CliError::Schema(vec![format!(
                        "rate check has no envelope for method {:?}",
                        spec.method_name()
                    )])
                })?;
                let f_star = config.constants.f_star.ok_or_else(|| {
                    CliError::Schema(vec!["rate check requires constants.f_star".into()])
                })?;
                let delta0 = trace.records.first().map(|r| r.f - f_star);
                let x_star_dist = config.constants.x_star.as_ref().map(|xs| {
                    config
                        .x0
                        .iter()
                        .zip(xs)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                });
                let gamma0 = match spec {
                    SolverSpec::Aphd { alpha0, .. } => {
                        f.meta().lip_approx_l.map(|l| l * alpha0 * alpha0)
                    }
                    _ => None,
                };
                let consts = RateConstants {
                    f_star,
                    l: f.meta().lip_approx_l,
                    r: config.constants.r,
                    delta0,
                    gamma0,
                    x_star_dist,
                };
                reports.push(rate_certify(trace, method, &consts).map_err(CliError::Solver)?);
            }
            other => {
                return Err(CliError::Schema(vec![format!("unknown check {other:?}")]));
            }
        }
    }
    Ok(reports)
}

fn rand_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Floats in the trace CSV carry 17 significant digits so that a reread
/// reproduces them bit-exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_trace_csv(
    path: &Path,
    trace: &SolverTrace,
    f_star: Option<f64>,
    timing: bool,
) -> Result<(), CliError> {
    let mut out = String::from("k,f,gap_to_fstar,dist0,alpha,subproblem_iters,wall_ms\n");
    for rec in &trace.records {
        let gap = match f_star {
            Some(fs) => fmt17(rec.f - fs),
            None => "nan".to_string(),
        };
        let wall = if timing {
            fmt17(rec.wall_seconds * 1e3)
        } else {
            fmt17(0.0)
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            rec.k,
            fmt17(rec.f),
            gap,
            fmt17(rec.dist0),
            fmt17(rec.alpha),
            rec.sub_iters,
            wall
        ));
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Run one configuration end to end. Solver failures surface as
/// `CliError::Solver`; failed checks are reported in the outcome, not as
/// errors.
pub fn run(config: &ProblemConfig, options: &RunOptions) -> Result<RunOutcome, CliError> {
    let f = build::build(&config.problem, "problem")?;
    if f.dim() != config.dimension {
        return Err(CliError::Schema(vec![format!(
            "problem tree has dimension {}, config declares {}",
            f.dim(),
            config.dimension
        )]));
    }
    let f = apply_constants(f, config);
    let seed = options.seed.unwrap_or(config.seed);

    let started = std::time::Instant::now();
    let mut trace_name = None;
    let mut trace_path = None;
    let solver_result = match (&config.solver, options.verify_only) {
        (Some(spec), false) => {
            let trace = run_solver(&f, config, spec)?;
            let csv_name = config
                .output
                .trace_csv
                .clone()
                .unwrap_or_else(|| format!("{}.trace.csv", config.name));
            let path = options.out_dir.join(&csv_name);
            write_trace_csv(&path, &trace, config.constants.f_star, options.timing)?;
            trace_name = Some(csv_name);
            trace_path = Some(path);
            Some((trace, spec))
        }
        _ => None,
    };

    let checks = match &config.verify {
        Some(v) => run_checks(
            &f,
            config,
            v,
            solver_result.as_ref().map(|(t, s)| (t, *s)),
            seed,
        )?,
        None => Vec::new(),
    };
    let all_checks_passed = checks.iter().all(|c| c.passed);

    let solver_summary = solver_result.as_ref().map(|(trace, spec)| {
        let last = trace.records.last().expect("nonempty trace");
        SolverSummary {
            method: spec.method_name(),
            stop_reason: trace.stop_reason,
            iterations: last.k,
            final_x: last.x.clone(),
            final_f: last.f,
            final_dist0: last.dist0,
            gap_to_fstar: config.constants.f_star.map(|fs| last.f - fs),
        }
    });

    let summary = Summary {
        name: config.name.clone(),
        dimension: config.dimension,
        seed,
        solver: solver_summary,
        checks,
        all_checks_passed,
        trace_csv: trace_name,
        total_wall_ms: options
            .timing
            .then(|| started.elapsed().as_secs_f64() * 1e3),
    };
    let summary_name = config
        .output
        .summary_json
        .clone()
        .unwrap_or_else(|| format!("{}.summary.json", config.name));
    let path = options.out_dir.join(summary_name);
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Io(format!("summary serialization: {e}")))?;
    std::fs::write(&path, json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;

    Ok(RunOutcome {
        certification_failed: !summary.all_checks_passed,
        summary,
        trace_path,
    })
}

/// Re-check a stored trace CSV against a method's theoretical envelope.
pub fn certify_trace(config: &ProblemConfig, trace_csv: &Path) -> Result<CheckReport, CliError> {
    let spec = config.solver.as_ref().ok_or_else(|| {
        CliError::Schema(vec![
            "certify requires a solver section in the config".into()
        ])
    })?;
    let method = rate_method(spec).ok_or_else(|| {
        CliError::Schema(vec![format!(
            "no rate envelope for method {:?}",
            spec.method_name()
        )])
    })?;
    let f = build::build(&config.problem, "problem")?;
    let f = apply_constants(f, config);
    let text = std::fs::read_to_string(trace_csv)
        .map_err(|e| CliError::Io(format!("{}: {e}", trace_csv.display())))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(CliError::Schema(vec![format!(
                "{}: line {} has {} columns, expected 7",
                trace_csv.display(),
                i + 1,
                cols.len()
            )]));
        }
        let parse = |s: &str, what: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| {
                CliError::Schema(vec![format!(
                    "{}: line {}: bad {what} value {s:?}",
                    trace_csv.display(),
                    i + 1
                )])
            })
        };
        records.push(hypodiff::solvers::TraceRecord {
            k: parse(cols[0], "k")? as usize,
            x: Vec::new(),
            f: parse(cols[1], "f")?,
            dist0: parse(cols[3], "dist0")?,
            alpha: parse(cols[4], "alpha")?,
            sub_iters: 0,
            wall_seconds: 0.0,
        });
    }
    let trace = SolverTrace {
        records,
        stop_reason: hypodiff::solvers::StopReason::MaxIters,
    };
    let f_star = config
        .constants
        .f_star
        .ok_or_else(|| CliError::Schema(vec!["certify requires constants.f_star".into()]))?;
    let delta0 = trace.records.first().map(|r| r.f - f_star);
    let gamma0 = match spec {
        SolverSpec::Aphd { alpha0, .. } => f.meta().lip_approx_l.map(|l| l * alpha0 * alpha0),
        _ => None,
    };
    let x_star_dist = config.constants.x_star.as_ref().map(|xs| {
        config
            .x0
            .iter()
            .zip(xs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    });
    let consts = RateConstants {
        f_star,
        l: f.meta().lip_approx_l,
        r: config.constants.r,
        delta0,
        gamma0,
        x_star_dist,
    };
    rate_certify(&trace, method, &consts).map_err(CliError::Solver)
}
