//! `hypodiff` — solve and certify nonsmooth convex problems described by
//! JSON configurations.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use hypodiff_cli::{certify_trace, parse_config, run, RunOptions};

#[derive(Parser)]
#[command(
    name = "hypodiff",
    version,
    about = "Hypodifferential descent solvers and certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Problem configuration file(s); may be repeated.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Output directory for trace CSVs and summary JSONs.
    #[arg(long = "out", default_value = ".")]
    out: PathBuf,
    /// Override the seed of every configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Run up to N configurations concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Record measured wall-clock milliseconds in trace CSVs (off by
    /// default so identical runs produce byte-identical output).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured solver and checks, writing trace and summary.
    Solve(CommonRunArgs),
    /// Run only the verification checks, even when a solver is configured.
    Verify(CommonRunArgs),
    /// Re-check a stored trace CSV against the configured rate envelope.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// List the builtin atoms and combinators.
    Atoms,
}

fn run_configs(args: &CommonRunArgs, verify_only: bool) -> i32 {
    let options = RunOptions {
        out_dir: args.out.clone(),
        seed: args.seed,
        timing: args.timing,
        verify_only,
    };
    if let Err(e) = std::fs::create_dir_all(&options.out_dir) {
        eprintln!(
            "i/o error: cannot create {}: {e}",
            options.out_dir.display()
        );
        return 4;
    }
    let jobs: Vec<PathBuf> = args.configs.clone();
    let parallel = args.parallel.max(1);
    let results = std::sync::Mutex::new(Vec::<(PathBuf, i32)>::new());
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..parallel.min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let path = &jobs[i];
                let code = run_one(path, &options);
                results.lock().unwrap().push((path.clone(), code));
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|(_, code)| code)
        .max()
        .unwrap_or(0)
}

fn run_one(path: &std::path::Path, options: &RunOptions) -> i32 {
    let config = match parse_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return e.exit_code();
        }
    };
    match run(&config, options) {
        Ok(outcome) => {
            let status = if outcome.certification_failed {
                "CERTIFICATION FAILED"
            } else {
                "ok"
            };
            println!(
                "{}: {} ({} checks, solver: {})",
                config.name,
                status,
                outcome.summary.checks.len(),
                outcome
                    .summary
                    .solver
                    .as_ref()
                    .map(|s| s.method)
                    .unwrap_or("none")
            );
            for check in &outcome.summary.checks {
                println!(
                    "  [{}] {} (worst {:.3e} vs tol {:.3e})",
                    if check.passed { "pass" } else { "FAIL" },
                    check.name,
                    check.worst_violation,
                    check.tolerance
                );
            }
            if outcome.certification_failed {
                hypodiff_cli::EXIT_CERTIFICATION_FAILED
            } else {
                hypodiff_cli::EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            e.exit_code()
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Solve(args) => run_configs(args, false),
        Command::Verify(args) => run_configs(args, true),
        Command::Certify { config, trace } => {
            match parse_config(config).and_then(|c| certify_trace(&c, trace)) {
                Ok(report) => {
                    println!(
                        "[{}] {} (worst {:.3e} vs tol {:.3e})",
                        if report.passed { "pass" } else { "FAIL" },
                        report.name,
                        report.worst_violation,
                        report.tolerance
                    );
                    if report.passed {
                        0
                    } else {
                        hypodiff_cli::EXIT_CERTIFICATION_FAILED
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
            }
        }
        Command::Atoms => {
            for (name, desc) in hypodiff_cli::build::KNOWN_OPS {
                println!("{name:16} {desc}");
            }
            0
        }
    };
    std::process::exit(code);
}
