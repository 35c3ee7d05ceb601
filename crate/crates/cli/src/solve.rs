//! `solve`: run the short-step solver on one instance file.

use std::path::PathBuf;
use std::time::Instant;

use tot_core::ipm::{DEFAULT_BETA, DEFAULT_GAMMA, DEFAULT_MAX_ITERATIONS};
use tot_core::{short_step_solve, solve_exact, SolverConfig};

use crate::instance::InstanceFile;
use crate::report::ReportFile;
use crate::{write_output, CliError};

#[derive(Debug, Clone, clap::Args)]
pub struct SolveArgs {
    /// Instance JSON file.
    pub instance: PathBuf,
    /// Additive precision: the solver stops once `theta / eta <= epsilon`.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Path-parameter growth constant, in (0, 1/8].
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Centering proximity for the Newton decrement, in (0, 1/4].
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Constant multiplying the predicted iteration bound.
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
    /// Include the per-iteration trace.
    #[arg(long)]
    pub trace: bool,
    /// Also solve with the simplex oracle and report the gap.
    #[arg(long)]
    pub oracle: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_solve(args: &SolveArgs) -> Result<ReportFile, CliError> {
    let instance = InstanceFile::load(&args.instance)?;
    let (problem, warnings) = instance.to_problem()?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let mut config = SolverConfig::new(args.epsilon);
    config.step_gamma = args.gamma;
    config.decrement_beta = args.beta;
    config.max_iterations = args.max_iterations;
    if let Some(c0) = args.c0 {
        config.iteration_constant = c0;
    }
    config
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;

    let start = Instant::now();
    let solved =
        short_step_solve(&problem, &config).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut report = ReportFile::new(&solved, args.trace, start.elapsed().as_secs_f64());
    if args.oracle {
        let start = Instant::now();
        let exact = solve_exact(&problem).map_err(|e| CliError::Solver(format!("oracle: {e}")))?;
        report = report.with_oracle(exact.value, start.elapsed().as_secs_f64());
    }
    write_output(args.out.as_deref(), &report.to_json())?;
    Ok(report)
}
