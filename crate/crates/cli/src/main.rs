use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tot_cli::benchmark::{benchmark_command, BenchmarkArgs};
use tot_cli::solve::{run_solve, SolveArgs};
use tot_cli::verify::{verify_command, VerifyArgs};
use tot_cli::CliError;

/// Interior point solver for multi-marginal optimal transport.
#[derive(Parser)]
#[command(name = "tot-ipm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file and print a JSON report.
    Solve(SolveArgs),
    /// Run seeded random instances and print a CSV table of iteration counts.
    Benchmark(BenchmarkArgs),
    /// Run the property suites.
    Verify(VerifyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result: Result<(), CliError> = match &cli.command {
        Command::Solve(args) => run_solve(args).map(drop),
        Command::Benchmark(args) => benchmark_command(args).map(drop),
        Command::Verify(args) => verify_command(args).map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
