use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use tsvar::cli::{run, Command, Flags};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    /// Inner integrals and objective of a trajectory
    Eval,
    /// Euler-Lagrange, transversality and isoperimetric residuals of a trajectory
    Residual,
    /// Minimize or maximize the objective
    Solve,
    /// Check the derivative and integral interchange identities on the scale
    Verify,
}

/// Variational problems on time scales.
#[derive(Parser)]
#[command(name = "tsvar", version)]
struct Args {
    command: Cmd,
    problem_file: PathBuf,
    /// Print the JSON report instead of the text report
    #[arg(long)]
    json: bool,
    /// Write the trajectory CSV here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the per-node residual trace CSV here
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the dense-segment resolution
    #[arg(long, value_name = "N")]
    resolution: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let command = match args.command {
        Cmd::Eval => Command::Eval,
        Cmd::Residual => Command::Residual,
        Cmd::Solve => Command::Solve,
        Cmd::Verify => Command::Verify,
    };
    let flags = Flags {
        out: args.out,
        trace: args.trace,
        seed: args.seed,
        resolution: args.resolution,
    };
    let outcome = run(command, &args.problem_file, &flags);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&outcome.json).expect("report serializes"));
    } else if outcome.json.get("error").is_some() {
        eprint!("{}", outcome.human);
    } else {
        print!("{}", outcome.human);
    }
    ExitCode::from(outcome.code as u8)
}
