//! `benchmark`: iteration counts over seeded random instances.
//!
//! Output is a CSV table with one row per `(n, trial)`, followed by comment lines
//! `# slope=<s>` (least-squares slope of `ln iterations` against `ln n`) and
//! `# c0_fit=<c>` (smallest constant for which every row stays within its predicted bound).
//! Either value is left empty when it is undefined.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tot_core::ipm::DEFAULT_C0;
use tot_core::{short_step_solve, solve_exact, SolverConfig};

use crate::generate::{random_instance, trial_seed, InstanceRng, MarginalKind};
use crate::instance::VariantTag;
use crate::{write_output, CliError};

pub const THREADS_ENV: &str = "TOT_IPM_THREADS";

#[derive(Debug, Clone, clap::Args)]
pub struct BenchmarkArgs {
    /// Tensor order.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Mode sizes; every mode of an instance has the same size.
    #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [4, 8, 16])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = MarginalKind::Uniform)]
    pub marginals: MarginalKind,
    #[arg(long, value_parser = parse_variant, default_value = "U")]
    pub variant: VariantTag,
    /// Constant multiplying the predicted iteration bound.
    #[arg(long, default_value_t = DEFAULT_C0)]
    pub c0: f64,
    /// Skip the simplex oracle; the `oracle_value` column stays empty.
    #[arg(long)]
    pub no_oracle: bool,
    /// Fill the `seconds` column. Timings make the output vary between runs.
    #[arg(long)]
    pub timing: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<VariantTag, String> {
    match s {
        "U" => Ok(VariantTag::U),
        "V" => Ok(VariantTag::V),
        _ => Err(format!("expected U or V, got {s:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub d: usize,
    pub n: usize,
    pub trial: usize,
    pub iterations: usize,
    pub predicted_bound: f64,
    pub value: f64,
    pub oracle_value: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub slope: Option<f64>,
    pub c0_fit: Option<f64>,
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record([
            "d",
            "n",
            "trial",
            "iterations",
            "predicted_bound",
            "value",
            "oracle_value",
            "seconds",
        ])
        .expect("in-memory write");
        for row in &self.rows {
            w.serialize(row).expect("in-memory write");
        }
        let mut text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        if !self.rows.is_empty() {
            let show = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            text.push_str(&format!("# slope={}\n", show(self.slope)));
            text.push_str(&format!("# c0_fit={}\n", show(self.c0_fit)));
        }
        text
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` without two distinct `x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Input(format!(
                "{THREADS_ENV} must be a positive integer, got {s:?}"
            ))),
        },
    }
}

fn run_trial(args: &BenchmarkArgs, n: usize, trial: usize) -> Result<BenchRow, CliError> {
    let fail =
        |e: tot_core::TotError| CliError::Solver(format!("d={} n={n} trial={trial}: {e}", args.d));
    let dims = vec![n; args.d];
    let mut rng = InstanceRng::new(trial_seed(args.seed, args.d, n, trial));
    let problem =
        random_instance(&mut rng, &dims, args.marginals, args.variant.into()).map_err(fail)?;
    let mut config = SolverConfig::new(args.epsilon);
    config.iteration_constant = args.c0;
    let start = Instant::now();
    let report = short_step_solve(&problem, &config).map_err(fail)?;
    let seconds = start.elapsed().as_secs_f64();
    let oracle_value = if args.no_oracle {
        None
    } else {
        Some(solve_exact(&problem).map_err(fail)?.value)
    };
    Ok(BenchRow {
        d: args.d,
        n,
        trial,
        iterations: report.iterations,
        predicted_bound: report.predicted_bound,
        value: report.value,
        oracle_value,
        seconds: args.timing.then_some(seconds),
    })
}

pub fn run_benchmark(args: &BenchmarkArgs) -> Result<BenchTable, CliError> {
    if args.d == 0 {
        return Err(CliError::Input("--d must be at least 1".into()));
    }
    if let Some(&n) = args.sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Input(format!(
            "--sizes entries must be at least 2, got {n}"
        )));
    }
    SolverConfig::new(args.epsilon)
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let jobs: Vec<(usize, usize)> = args
        .sizes
        .iter()
        .flat_map(|&n| (0..args.trials).map(move |t| (n, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Solver(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, t)| run_trial(args, n, t))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.n as f64, r.iterations as f64))
        .collect();
    let slope = if rows.is_empty() {
        None
    } else {
        log_log_slope(&points)
    };
    let c0_fit = rows
        .iter()
        .map(|r| r.iterations as f64 * args.c0 / r.predicted_bound)
        .reduce(f64::max);
    Ok(BenchTable {
        rows,
        slope,
        c0_fit,
    })
}

pub fn benchmark_command(args: &BenchmarkArgs) -> Result<BenchTable, CliError> {
    let table = run_benchmark(args)?;
    write_output(args.out.as_deref(), &table.to_csv())?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(1.5)))
            .collect();
        assert!((log_log_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&[(4.0, 10.0), (4.0, 12.0)]), None);
    }

    #[test]
    fn header_only_without_rows() {
        let t = BenchTable {
            rows: vec![],
            slope: None,
            c0_fit: None,
        };
        assert_eq!(
            t.to_csv(),
            "d,n,trial,iterations,predicted_bound,value,oracle_value,seconds\n"
        );
    }

    #[test]
    fn empty_optionals_are_blank() {
        let t = BenchTable {
            rows: vec![BenchRow {
                d: 2,
                n: 4,
                trial: 0,
                iterations: 10,
                predicted_bound: 20.5,
                value: 0.25,
                oracle_value: None,
                seconds: None,
            }],
            slope: None,
            c0_fit: Some(16.0),
        };
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "2,4,0,10,20.5,0.25,,");
        assert_eq!(lines[2], "# slope=");
        assert_eq!(lines[3], "# c0_fit=16");
    }
}
