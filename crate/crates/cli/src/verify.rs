//! `verify`: property suites over seeded random instances.
//!
//! Every check prints one `PASS`/`FAIL` line; the last line summarizes the suites. The
//! output only depends on the seed and the optional fixture.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use tot_core::barrier::{
    check_self_concordance, directional_forms, pseudo_quadratic, unrestricted_complexity,
    SliceBarrier,
};
use tot_core::polytope::{basis_matrix, null_basis, null_dimension, residual};
use tot_core::{
    short_step_solve, solve_exact, start_point, DenseTensor, MarginalProblem, Shape, SolverConfig,
    Variant,
};

use crate::generate::{random_instance, InstanceRng, MarginalKind};
use crate::instance::InstanceFile;
use crate::{write_output, CliError};

/// Solver precision used by the oracle suite.
pub const VERIFY_EPSILON: f64 = 1e-7;
pub const VALUE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Oracle,
    Barrier,
    Nullspace,
    All,
}

impl Suite {
    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Oracle, Suite::Barrier, Suite::Nullspace],
            s => vec![s],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Barrier => "barrier",
            Suite::Nullspace => "nullspace",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra instance file checked by the oracle suite.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Write the summary here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}/{}: {}", self.suite.name(), self.name, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub failed_suites: Vec<Suite>,
}

impl VerifyOutcome {
    pub fn render(&self) -> String {
        let mut text = String::new();
        for c in &self.checks {
            text.push_str(&c.line());
            text.push('\n');
        }
        if self.failed_suites.is_empty() {
            text.push_str("all suites passed\n");
        } else {
            let names: Vec<&str> = self.failed_suites.iter().map(|s| s.name()).collect();
            text.push_str(&format!("failed suites: {}\n", names.join(", ")));
        }
        text
    }
}

struct Recorder {
    suite: Suite,
    checks: Vec<Check>,
}

impl Recorder {
    fn record(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

pub fn run_verify(args: &VerifyArgs) -> VerifyOutcome {
    let mut checks = Vec::new();
    let mut failed_suites = Vec::new();
    for suite in args.suite.members() {
        let mut rec = Recorder {
            suite,
            checks: Vec::new(),
        };
        let mut rng = InstanceRng::new(args.seed ^ suite_salt(suite));
        match suite {
            Suite::Oracle => oracle_suite(&mut rec, &mut rng, args.fixture.as_deref()),
            Suite::Barrier => barrier_suite(&mut rec, &mut rng),
            Suite::Nullspace => nullspace_suite(&mut rec),
            Suite::All => unreachable!(),
        }
        if rec.checks.iter().any(|c| !c.passed) {
            failed_suites.push(suite);
        }
        checks.append(&mut rec.checks);
    }
    VerifyOutcome {
        checks,
        failed_suites,
    }
}

pub fn verify_command(args: &VerifyArgs) -> Result<VerifyOutcome, CliError> {
    let outcome = run_verify(args);
    write_output(args.out.as_deref(), &outcome.render())?;
    if outcome.failed_suites.is_empty() {
        Ok(outcome)
    } else {
        let names: Vec<&str> = outcome.failed_suites.iter().map(|s| s.name()).collect();
        Err(CliError::Property(format!(
            "failed suites: {}",
            names.join(", ")
        )))
    }
}

fn suite_salt(suite: Suite) -> u64 {
    match suite {
        Suite::Oracle => 0x6f72_6163_6c65,
        Suite::Barrier => 0x6261_7272_6965,
        Suite::Nullspace | Suite::All => 0,
    }
}

/// Largest violation of the solver guarantees for one instance, or a failure message.
fn solve_against_oracle(problem: &MarginalProblem) -> Result<(f64, f64), String> {
    let report =
        short_step_solve(problem, &SolverConfig::new(VERIFY_EPSILON)).map_err(|e| e.to_string())?;
    let exact = solve_exact(problem).map_err(|e| format!("oracle: {e}"))?;
    let gap = (report.value - exact.value).abs();
    let beta = tot_core::ipm::DEFAULT_BETA;
    let mut path_excess = f64::NEG_INFINITY;
    for row in &report.trace {
        if !(row.decrement <= beta && row.residual <= 1e-8 && row.min_entry > 0.0) {
            return Err(format!(
                "trace row at eta={:e}: decrement {:e}, residual {:e}, min entry {:e}",
                row.eta, row.decrement, row.residual, row.min_entry
            ));
        }
        path_excess = path_excess.max(row.objective - exact.value - row.gap_bound);
    }
    Ok((gap, path_excess))
}

fn oracle_suite(rec: &mut Recorder, rng: &mut InstanceRng, fixture: Option<&Path>) {
    let shapes: [(&[usize], Variant); 12] = [
        (&[2, 2], Variant::Marginal),
        (&[2, 3], Variant::Marginal),
        (&[3, 4], Variant::Marginal),
        (&[4, 4], Variant::Marginal),
        (&[5, 3], Variant::Marginal),
        (&[2, 2, 2], Variant::Marginal),
        (&[2, 3, 2], Variant::Marginal),
        (&[3, 3, 3], Variant::Marginal),
        (&[2, 2], Variant::ModeSum),
        (&[3, 3], Variant::ModeSum),
        (&[2, 2, 2], Variant::ModeSum),
        (&[3, 2, 3], Variant::ModeSum),
    ];
    for variant in [Variant::Marginal, Variant::ModeSum] {
        let name = match variant {
            Variant::Marginal => "u-equivalence",
            Variant::ModeSum => "v-equivalence",
        };
        let (mut worst_gap, mut worst_path) = (0.0f64, f64::NEG_INFINITY);
        let mut count = 0;
        let mut failure = None;
        for (i, (dims, _)) in shapes.iter().filter(|s| s.1 == variant).enumerate() {
            let kind = if i % 2 == 0 {
                MarginalKind::Uniform
            } else {
                MarginalKind::Random
            };
            let outcome = random_instance(rng, dims, kind, variant)
                .map_err(|e| e.to_string())
                .and_then(|p| solve_against_oracle(&p));
            match outcome {
                Ok((gap, path)) => {
                    worst_gap = worst_gap.max(gap);
                    worst_path = worst_path.max(path);
                    if gap > VALUE_TOL || path > 1e-8 {
                        failure.get_or_insert(format!(
                            "dims {dims:?}: gap {gap:.3e}, path excess {path:.3e}"
                        ));
                    }
                }
                Err(e) => {
                    failure.get_or_insert(format!("dims {dims:?}: {e}"));
                }
            }
            count += 1;
        }
        match failure {
            None => rec.record(
                name,
                true,
                format!(
                    "{count} instances, max gap {worst_gap:.3e}, max path excess {worst_path:.3e}"
                ),
            ),
            Some(msg) => rec.record(name, false, msg),
        }
    }

    if let Some(path) = fixture {
        let label = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let outcome = InstanceFile::load(path)
            .map_err(|e| e.to_string())
            .and_then(|inst| inst.to_problem().map_err(|e| e.to_string()))
            .and_then(|(p, _)| solve_against_oracle(&p));
        match outcome {
            Ok((gap, _)) if gap <= VALUE_TOL => {
                rec.record("fixture", true, format!("{label}: gap {gap:.3e}"))
            }
            Ok((gap, _)) => rec.record("fixture", false, format!("{label}: gap {gap:.3e}")),
            Err(e) => rec.record("fixture", false, format!("{label}: {e}")),
        }
    }
}

fn random_point(rng: &mut InstanceRng, dims: &[usize], lo: f64, hi: f64) -> DenseTensor {
    let shape = Shape::new(dims.to_vec()).expect("valid dims");
    let values = (0..shape.len()).map(|_| rng.range(lo, hi)).collect();
    DenseTensor::from_values(shape, values).expect("sizes agree")
}

/// Random strictly positive point of the feasible slice through the start point.
fn interior_point(
    problem: &MarginalProblem,
    basis: &[DenseTensor],
    rng: &mut InstanceRng,
) -> DenseTensor {
    let mut point = start_point(problem);
    if basis.is_empty() {
        return point;
    }
    let mut dir = DenseTensor::zeros(problem.shape().clone());
    for b in basis {
        dir.axpy(rng.range(-1.0, 1.0), b).expect("shapes agree");
    }
    let t_max = point
        .values()
        .iter()
        .zip(dir.values())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&u, &d)| -u / d)
        .fold(f64::INFINITY, f64::min);
    let t = if t_max.is_finite() {
        0.95 * rng.unit() * t_max
    } else {
        rng.unit()
    };
    point.axpy(t, &dir).expect("shapes agree");
    point
}

fn barrier_suite(rec: &mut Recorder, rng: &mut InstanceRng) {
    let mut worst = 0.0f64;
    for &dims in &[&[2, 2][..], &[2, 2, 2], &[3, 3, 3]] {
        for _ in 0..30 {
            let u = random_point(rng, dims, 1e-3, 10.0);
            let n = u.len() as f64;
            worst = worst.max((unrestricted_complexity(&u).unwrap_or(f64::NAN) - n).abs());
        }
    }
    rec.record(
        "theta-exact",
        worst <= 1e-10,
        format!("max deviation {worst:.3e}"),
    );

    let mut min_slack = f64::INFINITY;
    let mut max_single = 0.0f64;
    for i in 0..1000 {
        let dims = [1 + i % 5, 1 + (i / 5) % 4];
        let u = random_point(rng, &dims, 0.01, 2.0);
        let v = random_point(rng, &dims, -1.0, 1.0);
        let sample = directional_forms(&u, &v).expect("positive point");
        min_slack = min_slack.min(check_self_concordance(&sample, 1.0).slack);

        let mut e = DenseTensor::zeros(u.shape().clone());
        let k = (rng.next_u64() % u.len() as u64) as usize;
        e.values_mut()[k] = rng.range(-1.0, 1.0);
        let sample = directional_forms(&u, &e).expect("positive point");
        max_single = max_single.max(check_self_concordance(&sample, 1.0).slack.abs());
    }
    rec.record(
        "self-concordance",
        min_slack >= -1e-12,
        format!("min slack {min_slack:.3e}"),
    );
    rec.record(
        "single-coordinate",
        max_single <= 1e-12,
        format!("max |slack| {max_single:.3e}"),
    );

    let mut worst = 0.0f64;
    let mut failure = None;
    for i in 0..60 {
        let n = 1 + i % 6;
        let r = 1 + (i / 6) % n;
        let g = DMatrix::from_fn(n, r, |_, _| rng.range(-1.0, 1.0));
        let z = DVector::from_fn(r, |_, _| rng.range(-1.0, 1.0));
        let z = &z / (z.norm() * (1.0 + rng.unit()));
        let y = &g * &z;
        let a = &g * g.transpose();
        match pseudo_quadratic(&a, &y) {
            Ok(q) => worst = worst.max((q - z.norm_squared()).abs()),
            Err(e) => {
                failure.get_or_insert(format!("n={n} rank={r}: {e}"));
            }
        }
    }
    match failure {
        None => rec.record(
            "pseudo-quadratic",
            worst <= 1e-6,
            format!("max deviation {worst:.3e}"),
        ),
        Some(msg) => rec.record("pseudo-quadratic", false, msg),
    }

    let mut worst = 0.0f64;
    let mut failure = None;
    for (dims, variant) in [
        (&[3, 3][..], Variant::Marginal),
        (&[2, 2, 2], Variant::Marginal),
        (&[3, 3], Variant::ModeSum),
    ] {
        let problem =
            random_instance(rng, dims, MarginalKind::Random, variant).expect("valid dims");
        let basis = null_basis(&problem);
        let slice = SliceBarrier::new(basis_matrix(&basis, problem.size()));
        let bound = problem.size() as f64;
        for _ in 0..30 {
            let u = interior_point(&problem, &basis, rng);
            match slice.complexity_value_sample(&u) {
                Ok(v) => worst = worst.max(v - bound),
                Err(e) => {
                    failure.get_or_insert(format!("dims {dims:?}: {e}"));
                }
            }
        }
    }
    match failure {
        None => rec.record(
            "theta-bound",
            worst <= 1e-8,
            format!("max excess over prod n_k {worst:.3e}"),
        ),
        Some(msg) => rec.record("theta-bound", false, msg),
    }
}

fn nullspace_suite(rec: &mut Recorder) {
    let mut shapes: Vec<Vec<usize>> = Vec::new();
    for a in 2..=3 {
        for b in 2..=3 {
            shapes.push(vec![a, b]);
            for c in 2..=3 {
                shapes.push(vec![a, b, c]);
            }
        }
    }
    for variant in [Variant::Marginal, Variant::ModeSum] {
        let name = match variant {
            Variant::Marginal => "u-basis",
            Variant::ModeSum => "v-basis",
        };
        let mut failure = None;
        let mut worst = 0.0f64;
        for dims in &shapes {
            let shape = Shape::new(dims.clone()).expect("valid dims");
            let marginals = dims.iter().map(|&n| vec![1.0 / n as f64; n]).collect();
            let problem = MarginalProblem::new(DenseTensor::zeros(shape), marginals, variant)
                .expect("valid problem");
            let basis = null_basis(&problem);
            let expected = match variant {
                Variant::Marginal => problem.size() - 1 - dims.iter().map(|n| n - 1).sum::<usize>(),
                Variant::ModeSum => dims.iter().map(|n| n - 1).product(),
            };
            if basis.len() != expected || null_dimension(&problem) != expected {
                failure.get_or_insert(format!(
                    "dims {dims:?}: {} elements, expected {expected}",
                    basis.len()
                ));
                continue;
            }
            let rank = basis_matrix(&basis, problem.size())
                .svd(false, false)
                .rank(1e-9);
            if rank != expected {
                failure.get_or_insert(format!("dims {dims:?}: rank {rank}, expected {expected}"));
            }
            let start = start_point(&problem);
            for b in &basis {
                let mut moved = start.clone();
                moved.axpy(1.0, b).expect("shapes agree");
                let r = residual(&problem, &moved).expect("shapes agree").max_abs();
                worst = worst.max(r);
            }
        }
        match failure {
            None => rec.record(
                name,
                worst <= 1e-12,
                format!("{} shapes, max constraint change {worst:.3e}", shapes.len()),
            ),
            Some(msg) => rec.record(name, false, msg),
        }
    }
}
