use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use peetre::cli::{self, Command, Outcome};

/// Reconstruct, classify and locality-check linear operators on C^m.
///
/// Exit status: 0 when every check passes, 1 when a check fails,
/// 2 when the scenario cannot be read or run.
#[derive(Parser)]
#[command(name = "peetre", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Recover coefficients from a black box and check the residual.
    Reconstruct(RunArgs),
    /// Decide the regime for source class m and target class r.
    Classify(RunArgs),
    /// Partition of unity, support and flatness-transfer checks.
    CheckLocality(RunArgs),
    /// Run the built-in scenarios.
    Demo(Common),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Include wall-clock timings (makes reports run-dependent).
    #[arg(long)]
    timings: bool,
}

fn execute(cmd: &Cmd) -> Result<Outcome, String> {
    match cmd {
        Cmd::Demo(c) => cli::run_demo(c.seed, c.tolerance, c.timings).map_err(|e| e.to_string()),
        Cmd::Reconstruct(a) | Cmd::Classify(a) | Cmd::CheckLocality(a) => {
            let command = match cmd {
                Cmd::Reconstruct(_) => Command::Reconstruct,
                Cmd::Classify(_) => Command::Classify,
                _ => Command::CheckLocality,
            };
            let text = fs::read_to_string(&a.scenario)
                .map_err(|e| format!("cannot read {}: {e}", a.scenario.display()))?;
            let run = || {
                let s = cli::parse_scenario(&text)?;
                let s = cli::with_overrides(s, a.common.seed, a.common.tolerance)?;
                cli::run(command, &s, a.common.timings)
            };
            run().map_err(|e| format!("{}: {e}", a.scenario.display()))
        }
    }
}

fn common(cmd: &Cmd) -> &Common {
    match cmd {
        Cmd::Demo(c) => c,
        Cmd::Reconstruct(a) | Cmd::Classify(a) | Cmd::CheckLocality(a) => &a.common,
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let outcome = match execute(&args.command) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes") + "\n";
    match &common(&args.command).out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            eprintln!("{}", if outcome.pass { "pass" } else { "fail" });
        }
        None => print!("{text}"),
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
