//! `sprite-check`: refinement type checking from the command line.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use sprite::check::CheckOptions;
use sprite::cli::{
    exit_code, read_qualifier_files, render, run_check, run_horn, suite_files, RunConfig, Status,
    DEFAULT_MAX_QUAL_PARAMS,
};
use sprite::smt::SolverConfig;

#[derive(Parser)]
#[command(name = "sprite-check", version, about = "Refinement type checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type check source files.
    Check(CheckArgs),
    /// Solve a textual Horn constraint file.
    Horn(HornArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Solver command line.
    #[arg(long, default_value = "z3 -in")]
    solver: String,
    /// Per-query solver timeout.
    #[arg(long, default_value_t = 10_000)]
    smt_timeout_ms: u64,
    /// Directory receiving an SMT-LIB transcript per solver session.
    #[arg(long, value_name = "DIR")]
    emit_smt: Option<PathBuf>,
    /// Extra qualifier file (repeatable).
    #[arg(long = "qualifiers", short = 'q', value_name = "FILE")]
    qualifiers: Vec<PathBuf>,
    /// Maximum number of non-value qualifier parameters.
    #[arg(long, default_value_t = DEFAULT_MAX_QUAL_PARAMS)]
    max_qual_params: usize,
    /// Print machine-readable JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Expect {
    Accept,
    Reject,
}

#[derive(Args)]
struct CheckArgs {
    /// Source files.
    inputs: Vec<PathBuf>,
    /// Skip termination checking of recursive functions.
    #[arg(long)]
    no_termination: bool,
    /// Enable reflection (default).
    #[arg(long, overrides_with = "no_reflection")]
    reflection: bool,
    /// Disable reflection.
    #[arg(long, action = ArgAction::SetTrue)]
    no_reflection: bool,
    /// Write the Horn constraint (a file, or a directory for several inputs).
    #[arg(long, value_name = "PATH")]
    emit_horn: Option<PathBuf>,
    /// Replace the built-in prelude.
    #[arg(long, value_name = "FILE")]
    prelude: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, short = 'j', default_value_t = 1)]
    jobs: usize,
    /// Check every `.re` file in a directory.
    #[arg(long, value_name = "DIR", requires = "expect")]
    suite: Option<PathBuf>,
    /// Expected outcome for every file of `--suite`.
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct HornArgs {
    /// Horn constraint file.
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

fn solver_config(a: &SolverArgs) -> SolverConfig {
    SolverConfig {
        timeout_ms: a.smt_timeout_ms,
        emit_dir: a.emit_smt.clone(),
        ..SolverConfig::default()
    }
    .with_command(&a.solver)
}

fn check(args: CheckArgs) -> i32 {
    let mut inputs = args.inputs.clone();
    if let Some(dir) = &args.suite {
        match suite_files(dir) {
            Ok(files) => inputs.extend(files),
            Err(e) => {
                eprintln!("error: {}: {e}", dir.display());
                return 2;
            }
        }
    }
    let cfg = RunConfig {
        inputs,
        check: CheckOptions {
            termination: !args.no_termination,
            reflection: !args.no_reflection,
        },
        solver: solver_config(&args.solver),
        qual_files: args.solver.qualifiers.clone(),
        max_qual_params: args.solver.max_qual_params,
        emit_horn: args.emit_horn.clone(),
        prelude: args.prelude.clone(),
        jobs: args.jobs,
    };
    let results = run_check(&cfg);
    let reports: Vec<_> = results.iter().map(|(r, _)| r.clone()).collect();

    if args.solver.json {
        println!("{}", serde_json::to_string_pretty(&reports).expect("serializable"));
    } else {
        for (r, src) in &results {
            let tag = match r.status {
                Status::Safe => "SAFE",
                Status::Unsafe => "UNSAFE",
                Status::Error => "ERROR",
            };
            println!("{tag} {} ({} ms)", r.file, r.millis);
            for d in &r.diagnostics {
                print!("{}", render(d, src));
            }
        }
    }

    match args.expect {
        None => exit_code(&reports),
        Some(expect) => {
            let want = if expect == Expect::Accept { Status::Safe } else { Status::Unsafe };
            let bad: Vec<_> = reports.iter().filter(|r| r.status != want).collect();
            if !args.solver.json {
                println!("suite: {}/{} as expected", reports.len() - bad.len(), reports.len());
                for r in &bad {
                    println!("  unexpected: {}", r.file);
                }
            }
            if bad.iter().any(|r| r.status == Status::Error) {
                2
            } else {
                i32::from(!bad.is_empty())
            }
        }
    }
}

fn horn(args: HornArgs) -> i32 {
    let text = match fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.input.display());
            return 2;
        }
    };
    let extra = match read_qualifier_files(&args.solver.qualifiers) {
        Ok(q) => q,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cfg = RunConfig {
        solver: solver_config(&args.solver),
        max_qual_params: args.solver.max_qual_params,
        ..RunConfig::default()
    };
    match run_horn(&text, &extra, &cfg) {
        Ok(report) => {
            if args.solver.json {
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            } else {
                print!("{}", report.render());
            }
            i32::from(!report.sat)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", args.input.display());
            2
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Cli::parse().command {
        Command::Check(a) => check(a),
        Command::Horn(a) => horn(a),
    };
    ExitCode::from(code as u8)
}
