//! Short-step path following for `min ⟨C, U⟩` over the marginal polytopes.
//!
//! The central path minimizes `f_η(U) = η⟨C, U⟩ + σ(U)` over the affine slice. Phase I
//! centers the product start point at `η = 1` with damped Newton steps. Phase II multiplies
//! `η` by `1 + γ/√θ` and takes one full Newton step per iteration until `θ/η ≤ ε`.

use nalgebra::{DMatrix, DVector};

use crate::barrier::check_domain;
use crate::error::{Result, TotError};
use crate::polytope::{
    basis_matrix, min_entry_product, null_basis, residual, start_point, MarginalProblem,
    MarginalRows, Variant,
};
use crate::tensor::{inner, DenseTensor};

pub const DEFAULT_GAMMA: f64 = 1.0 / 16.0;
pub const DEFAULT_BETA: f64 = 0.25;
pub const DEFAULT_CENTER_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;
/// Iteration-bound constant. Phase II needs at most `(√θ/γ + 1)·ln(θ/(η₀ε))` steps, and the
/// logarithm in the bound is never smaller than `ln(θ/ε)`, so `2/γ` leaves half the budget
/// for centering.
pub const DEFAULT_C0: f64 = 2.0 / DEFAULT_GAMMA;
/// Largest decrement, right after a path-parameter update, from which one full Newton step
/// is still guaranteed to recenter.
pub const STEP_SAFETY_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub step_gamma: f64,
    pub decrement_beta: f64,
    pub center_tol: f64,
    pub max_iterations: usize,
    /// Barrier parameter bound; `None` means `prod n_k`.
    pub theta: Option<f64>,
    pub iteration_constant: f64,
}

impl SolverConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            step_gamma: DEFAULT_GAMMA,
            decrement_beta: DEFAULT_BETA,
            center_tol: DEFAULT_CENTER_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            theta: None,
            iteration_constant: DEFAULT_C0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(TotError::InvalidInput(what.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(self.step_gamma > 0.0 && self.step_gamma <= 0.125) {
            return bad("step_gamma must lie in (0, 1/8]");
        }
        if !(self.decrement_beta > 0.0 && self.decrement_beta <= 0.25) {
            return bad("decrement_beta must lie in (0, 1/4]");
        }
        if !(self.center_tol > 0.0 && self.center_tol <= self.decrement_beta) {
            return bad("center_tol must lie in (0, decrement_beta]");
        }
        if matches!(self.theta, Some(t) if !(t >= 1.0 && t.is_finite())) {
            return bad("theta must be at least 1");
        }
        Ok(())
    }

    pub fn theta_for(&self, problem: &MarginalProblem) -> f64 {
        self.theta.unwrap_or(problem.size() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktStrategy {
    /// Schur complement `A H⁻¹ A⊤` on the reduced marginal rows, factored through a thin QR
    /// (marginal variant only).
    Schur,
    /// Reduced Hessian `B⊤ H B` over an explicit null-space basis.
    NullBasis,
}

#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub direction: DenseTensor,
    /// `√(Δ⊤ H Δ)`
    pub decrement: f64,
}

enum Kkt {
    Schur,
    NullBasis(DMatrix<f64>),
}

/// Equality-constrained Newton steps for `f_η` on one problem.
pub struct NewtonSystem<'a> {
    problem: &'a MarginalProblem,
    kkt: Kkt,
    /// Constraint rows as columns (`N × m`): the reduced marginal rows on the Schur route,
    /// an independent row set on the null-basis route.
    rows_t: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl<'a> NewtonSystem<'a> {
    /// Schur complement for the marginal variant, null basis for the mode-sum variant.
    pub fn new(problem: &'a MarginalProblem) -> Self {
        let strategy = match problem.variant() {
            Variant::Marginal => KktStrategy::Schur,
            Variant::ModeSum => KktStrategy::NullBasis,
        };
        Self::with_strategy(problem, strategy).expect("default strategy fits the variant")
    }

    pub fn with_strategy(problem: &'a MarginalProblem, strategy: KktStrategy) -> Result<Self> {
        match strategy {
            KktStrategy::Schur => {
                if problem.variant() != Variant::Marginal {
                    return Err(TotError::InvalidInput(
                        "the Schur route needs the reduced marginal rows".into(),
                    ));
                }
                let rows = MarginalRows::new(problem.shape().clone());
                let rhs = DVector::from_vec(rows.rhs(problem.marginals()));
                Ok(Self {
                    problem,
                    kkt: Kkt::Schur,
                    rows_t: rows.dense().transpose(),
                    rhs,
                })
            }
            KktStrategy::NullBasis => {
                let (rows, rhs) = problem.constraints().independent_rows(problem.marginals());
                Ok(Self {
                    problem,
                    kkt: Kkt::NullBasis(basis_matrix(&null_basis(problem), problem.size())),
                    rows_t: rows.transpose(),
                    rhs: DVector::from_vec(rhs),
                })
            }
        }
    }

    pub fn problem(&self) -> &MarginalProblem {
        self.problem
    }

    /// Factors the weighted constraint system at `u`; the factor serves [`Self::direction_with`]
    /// at any `η` and [`Self::restore_with`].
    pub fn factor(&self, u: &DenseTensor) -> Result<Factor> {
        check_domain(u)?;
        if u.shape() != self.problem.shape() {
            return Err(TotError::ShapeMismatch {
                expected: self.problem.dims().to_vec(),
                got: u.dims().to_vec(),
            });
        }
        let weights = u.values().to_vec();
        let (q, r) = match &self.kkt {
            Kkt::Schur => weighted_qr(&self.rows_t, &weights)?,
            Kkt::NullBasis(b) => {
                let inverse: Vec<f64> = weights.iter().map(|x| 1.0 / x).collect();
                weighted_qr(b, &inverse)?
            }
        };
        Ok(Factor { weights, q, r })
    }

    /// Minimizer of `g⊤Δ + ½Δ⊤HΔ` over the constraint null space at `u`, with
    /// `g = ηC + ∇σ(u)` and `H = ∂²σ(u)`.
    ///
    /// On the Schur route the step also cancels whatever residual `u` carries, so rounding
    /// drift in the iterates does not accumulate.
    pub fn direction(&self, u: &DenseTensor, eta: f64) -> Result<NewtonStep> {
        let factor = self.factor(u)?;
        self.direction_with(&factor, u, eta)
    }

    /// [`Self::direction`] with a factor computed at the same `u`.
    pub fn direction_with(&self, factor: &Factor, u: &DenseTensor, eta: f64) -> Result<NewtonStep> {
        let uv = u.values();
        let cost = self.problem.cost().values();
        // D g with D = diag(u)
        let dg = DVector::from_iterator(
            uv.len(),
            uv.iter().zip(cost).map(|(&x, &c)| eta * c * x - 1.0),
        );
        let scaled_step = match &self.kkt {
            Kkt::Schur => {
                let r = self.residual_vector(u);
                let coeff = factor.q.tr_mul(&dg) + solve_transposed(&factor.r, &r)?;
                -(dg - &factor.q * coeff)
            }
            Kkt::NullBasis(_) => -(&factor.q * factor.q.tr_mul(&dg)),
        };
        let decrement = scaled_step.norm();
        let delta: Vec<f64> = uv
            .iter()
            .zip(scaled_step.iter())
            .map(|(x, s)| x * s)
            .collect();
        Ok(NewtonStep {
            direction: DenseTensor::from_values(u.shape().clone(), delta)?,
            decrement,
        })
    }

    /// Largest absolute residual of the constraint rows used by this system.
    pub fn row_residual(&self, u: &DenseTensor) -> f64 {
        self.residual_vector(u).amax()
    }

    fn residual_vector(&self, u: &DenseTensor) -> DVector<f64> {
        &self.rhs - self.rows_t.tr_mul(&DVector::from_column_slice(u.values()))
    }

    /// Moves `u` back onto the affine slice with the correction of least `H`-norm,
    /// `Δ = H⁻¹A⊤(AH⁻¹A⊤)⁻¹ r`. Long runs of large-`η` steps otherwise let rounding in the
    /// multipliers accumulate in the constraint residual.
    pub fn restore_feasibility(&self, u: &mut DenseTensor) -> Result<()> {
        let r = self.residual_vector(u);
        if r.amax() <= RESTORE_TOL {
            return Ok(());
        }
        let weights = u.values().to_vec();
        let (q, rf) = weighted_qr(&self.rows_t, &weights)?;
        apply_correction(u, &weights, &q, &rf, &r)
    }

    /// [`Self::restore_feasibility`] weighted by a factor from a nearby point. The row
    /// residual is still cancelled exactly; only the norm being minimized changes.
    pub fn restore_with(&self, factor: &Factor, u: &mut DenseTensor) -> Result<()> {
        match self.kkt {
            Kkt::Schur => {
                let r = self.residual_vector(u);
                if r.amax() <= RESTORE_TOL {
                    return Ok(());
                }
                apply_correction(u, &factor.weights, &factor.q, &factor.r, &r)
            }
            Kkt::NullBasis(_) => self.restore_feasibility(u),
        }
    }
}

/// Weighted QR data of one iterate.
#[derive(Debug, Clone)]
pub struct Factor {
    weights: Vec<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

/// `u += W Q R⁻⊤ r`, where `W A⊤ = QR`; then `A` times the correction is `r`.
fn apply_correction(
    u: &mut DenseTensor,
    weights: &[f64],
    q: &DMatrix<f64>,
    rf: &DMatrix<f64>,
    r: &DVector<f64>,
) -> Result<()> {
    let correction = q * solve_transposed(rf, r)?;
    for ((x, w), c) in u
        .values_mut()
        .iter_mut()
        .zip(weights)
        .zip(correction.iter())
    {
        *x += w * c;
    }
    check_domain(u)
}

/// Row residuals at or below this are left alone.
const RESTORE_TOL: f64 = 1e-14;

/// Thin QR of `diag(w) M`. On the Schur route `M = A⊤` and `R⊤R` is the Schur complement
/// `A diag(u²) A⊤`, factored without squaring its condition number. On the null-basis
/// route `M = B`, `w = 1/u` and `R⊤R = B⊤HB`.
fn weighted_qr(rows_t: &DMatrix<f64>, u: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if rows_t.ncols() == 0 {
        return Ok((DMatrix::zeros(rows_t.nrows(), 0), DMatrix::zeros(0, 0)));
    }
    let mut scaled = rows_t.clone();
    for (mut row, &x) in scaled.row_iter_mut().zip(u) {
        row *= x;
    }
    let qr = scaled.qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    if r.diagonal()
        .iter()
        .any(|d| d.is_nan() || d.abs() <= 1e-15 * scale)
    {
        return Err(TotError::Numerical("Schur complement is singular".into()));
    }
    Ok((qr.q(), r))
}

/// `R⁻⊤ r`.
fn solve_transposed(rf: &DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    rf.tr_solve_upper_triangular(r)
        .ok_or_else(|| TotError::Numerical("Schur complement is singular".into()))
}

/// Newton direction with the default strategy for the problem's variant.
pub fn newton_direction(
    problem: &MarginalProblem,
    u: &DenseTensor,
    eta: f64,
) -> Result<NewtonStep> {
    NewtonSystem::new(problem).direction(u, eta)
}

#[derive(Debug, Clone)]
pub struct PathState {
    pub eta: f64,
    pub point: DenseTensor,
    pub decrement: f64,
    /// Newton steps taken so far.
    pub iteration: usize,
}

/// Damped Newton steps `U += Δ/(1+δ)` while `δ > β`, then full steps until `δ ≤ center_tol`.
pub fn center(
    problem: &MarginalProblem,
    start: &DenseTensor,
    eta: f64,
    config: &SolverConfig,
) -> Result<PathState> {
    config.validate()?;
    center_with(&NewtonSystem::new(problem), start.clone(), eta, config, 0)
}

fn center_with(
    system: &NewtonSystem<'_>,
    mut point: DenseTensor,
    eta: f64,
    config: &SolverConfig,
    mut iteration: usize,
) -> Result<PathState> {
    loop {
        let factor = system.factor(&point)?;
        let step = system.direction_with(&factor, &point, eta)?;
        if step.decrement <= config.center_tol {
            return Ok(PathState {
                eta,
                point,
                decrement: step.decrement,
                iteration,
            });
        }
        if iteration >= config.max_iterations {
            return Err(TotError::NonConvergence {
                iterations: iteration,
            });
        }
        let t = if step.decrement > config.decrement_beta {
            1.0 / (1.0 + step.decrement)
        } else {
            1.0
        };
        point.axpy(t, &step.direction)?;
        system.restore_with(&factor, &mut point)?;
        iteration += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub eta: f64,
    /// Decrement after the Newton step, at the row's `eta`.
    pub decrement: f64,
    pub objective: f64,
    /// `θ/η`
    pub gap_bound: f64,
    /// Largest absolute constraint residual of the iterate.
    pub residual: f64,
    pub min_entry: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub value: f64,
    pub optimizer: DenseTensor,
    /// Total Newton steps, both phases.
    pub iterations: usize,
    pub centering_iterations: usize,
    /// First row is the centered start; one row per path-following step after it.
    pub trace: Vec<TraceRow>,
    pub predicted_bound: f64,
    pub theta: f64,
    pub eta_final: f64,
    pub gap_bound: f64,
    pub sym_bound: f64,
}

pub fn short_step_solve(problem: &MarginalProblem, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let theta = config.theta_for(problem);
    let system = NewtonSystem::new(problem);
    let growth = 1.0 + config.step_gamma / theta.sqrt();

    let centered = center_with(&system, start_point(problem), 1.0, config, 0)?;
    let centering_iterations = centered.iteration;
    let mut eta = centered.eta;
    let mut point = centered.point;
    let mut iterations = centering_iterations;
    let mut trace = vec![trace_row(problem, &point, eta, centered.decrement, theta)?];
    let mut factor = system.factor(&point)?;

    while theta / eta > config.epsilon {
        if iterations >= config.max_iterations {
            return Err(TotError::NonConvergence { iterations });
        }
        eta *= growth;
        let step = system.direction_with(&factor, &point, eta)?;
        if step.decrement > STEP_SAFETY_LIMIT {
            return Err(TotError::StepViolation {
                iteration: iterations,
                decrement: step.decrement,
                limit: STEP_SAFETY_LIMIT,
            });
        }
        point.axpy(1.0, &step.direction)?;
        system.restore_with(&factor, &mut point)?;
        iterations += 1;
        factor = system.factor(&point)?;
        let after = system.direction_with(&factor, &point, eta)?.decrement;
        if after > config.decrement_beta {
            return Err(TotError::StepViolation {
                iteration: iterations,
                decrement: after,
                limit: config.decrement_beta,
            });
        }
        trace.push(trace_row(problem, &point, eta, after, theta)?);
    }

    Ok(SolveReport {
        value: inner(problem.cost(), &point)?,
        optimizer: point,
        iterations,
        centering_iterations,
        trace,
        predicted_bound: predicted_iterations(problem, config.epsilon, config.iteration_constant),
        theta,
        eta_final: eta,
        gap_bound: theta / eta,
        sym_bound: crate::polytope::sym_lower_bound(problem),
    })
}

fn trace_row(
    problem: &MarginalProblem,
    point: &DenseTensor,
    eta: f64,
    decrement: f64,
    theta: f64,
) -> Result<TraceRow> {
    Ok(TraceRow {
        eta,
        decrement,
        objective: inner(problem.cost(), point)?,
        gap_bound: theta / eta,
        residual: residual(problem, point)?.max_abs(),
        min_entry: point.min_entry(),
    })
}

/// `C0 · √N · ln(√2 N / (ε · prod_k min_i p_{i,k}))`
pub fn predicted_iterations(problem: &MarginalProblem, epsilon: f64, c0: f64) -> f64 {
    let n = problem.size() as f64;
    let arg = std::f64::consts::SQRT_2 * n / (epsilon * min_entry_product(problem));
    c0 * n.sqrt() * arg.ln()
}

/// Largest `K` for which `p` is a weak `K`–`ℓ` uniform distribution:
/// `min(n^ℓ · min_j p_j, n^{ℓ-1})`.
pub fn classify_weak_uniform(p: &[f64], ell: f64) -> f64 {
    let n = p.len() as f64;
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    (n.powf(ell) * min).min(n.powf(ell - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::barrier_value;
    use crate::polytope::{feasible, null_basis};
    use crate::tensor::Shape;
    use approx::assert_abs_diff_eq;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn problem(dims: &[usize], cost: Vec<f64>, m: Vec<Vec<f64>>, v: Variant) -> MarginalProblem {
        let c = DenseTensor::from_values(Shape::new(dims.to_vec()).unwrap(), cost).unwrap();
        MarginalProblem::new(c, m, v).unwrap()
    }

    fn random_marginal(rng: &mut StdRng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    fn random_problem(rng: &mut StdRng, dims: &[usize], v: Variant) -> MarginalProblem {
        let n: usize = dims.iter().product();
        let cost = (0..n).map(|_| rng.random_range(0..10) as f64).collect();
        let m = dims.iter().map(|&k| random_marginal(rng, k)).collect();
        problem(dims, cost, m, v)
    }

    /// Interior point: start plus a random null-space move pulled back to stay positive.
    fn random_interior(rng: &mut StdRng, p: &MarginalProblem) -> DenseTensor {
        let start = start_point(p);
        let mut dir = DenseTensor::zeros(p.shape().clone());
        for e in null_basis(p) {
            dir.axpy(rng.random_range(-1.0..1.0), &e).unwrap();
        }
        let limit = start
            .values()
            .iter()
            .zip(dir.values())
            .filter(|(_, &d)| d < 0.0)
            .map(|(&s, &d)| -s / d)
            .fold(f64::INFINITY, f64::min);
        let t = rng.random_range(0.0..0.9) * limit.min(1e3);
        let mut u = start;
        u.axpy(t, &dir).unwrap();
        u
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(1e-6).validate().is_ok());
        let mut c = SolverConfig::new(1e-6);
        c.step_gamma = 0.2;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::new(1e-6);
        c.decrement_beta = 0.3;
        assert!(c.validate().is_err());
        assert!(SolverConfig::new(0.0).validate().is_err());
    }

    #[test]
    fn uniform_start_is_analytic_center() {
        let p = problem(
            &[2, 2],
            vec![0., 1., 1., 0.],
            vec![vec![0.5, 0.5]; 2],
            Variant::Marginal,
        );
        let s = newton_direction(&p, &start_point(&p), 0.0).unwrap();
        assert!(s.decrement <= 1e-14);
        assert!(s.direction.values().iter().all(|v| v.abs() <= 1e-14));

        let state = center(&p, &start_point(&p), 0.0, &SolverConfig::new(1e-6)).unwrap();
        assert_eq!(state.iteration, 0);
        assert_eq!(state.point, start_point(&p));
    }

    #[test]
    fn schur_and_null_basis_routes_agree() {
        let mut rng = StdRng::seed_from_u64(41);
        for dims in [vec![2, 2], vec![3, 3], vec![2, 3, 2]] {
            let p = random_problem(&mut rng, &dims, Variant::Marginal);
            let schur = NewtonSystem::with_strategy(&p, KktStrategy::Schur).unwrap();
            let basis = NewtonSystem::with_strategy(&p, KktStrategy::NullBasis).unwrap();
            for _ in 0..5 {
                let u = random_interior(&mut rng, &p);
                let eta = rng.random_range(0.0..5.0);
                let a = schur.direction(&u, eta).unwrap();
                let b = basis.direction(&u, eta).unwrap();
                assert_abs_diff_eq!(a.decrement.powi(2), b.decrement.powi(2), epsilon = 1e-10);
                let diff = a.direction.sub(&b.direction).unwrap();
                assert!(crate::tensor::frobenius_norm(&diff) <= 1e-10);
            }
        }
        let v = random_problem(&mut rng, &[2, 2], Variant::ModeSum);
        assert!(NewtonSystem::with_strategy(&v, KktStrategy::Schur).is_err());
    }

    #[test]
    fn direction_stays_in_null_space() {
        let mut rng = StdRng::seed_from_u64(42);
        for variant in [Variant::Marginal, Variant::ModeSum] {
            let p = random_problem(&mut rng, &[3, 2, 2], variant);
            let u = random_interior(&mut rng, &p);
            let base = residual(&p, &u).unwrap().max_abs();
            let s = newton_direction(&p, &u, 2.0).unwrap();
            for t in [-1.0, 0.3, 2.0] {
                let mut w = u.clone();
                w.axpy(t, &s.direction).unwrap();
                assert!((residual(&p, &w).unwrap().max_abs() - base).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn direction_matches_dense_kkt() {
        let mut rng = StdRng::seed_from_u64(43);
        let p = random_problem(&mut rng, &[3, 3], Variant::Marginal);
        let u = random_interior(&mut rng, &p);
        let eta = 1.7;
        // full KKT [H Aᵀ; A 0][Δ; -λ] = [-g; 0] with all 6 marginal rows minus one
        let a = MarginalRows::new(p.shape().clone()).dense();
        let (m, n) = (a.nrows(), a.ncols());
        let mut k = DMatrix::zeros(n + m, n + m);
        let mut rhs = DVector::zeros(n + m);
        for i in 0..n {
            let x = u.values()[i];
            k[(i, i)] = 1.0 / (x * x);
            rhs[i] = -(eta * p.cost().values()[i] - 1.0 / x);
        }
        for r in 0..m {
            for c in 0..n {
                k[(n + r, c)] = a[(r, c)];
                k[(c, n + r)] = a[(r, c)];
            }
        }
        let sol = k.lu().solve(&rhs).unwrap();
        let s = newton_direction(&p, &u, eta).unwrap();
        let diff = (0..n)
            .map(|i| (sol[i] - s.direction.values()[i]).powi(2))
            .sum::<f64>();
        assert!(diff.sqrt() <= 1e-8);
    }

    #[test]
    fn centering_skewed_marginals() {
        let p = problem(
            &[2, 2],
            vec![0.0; 4],
            vec![vec![0.3, 0.7], vec![0.5, 0.5]],
            Variant::Marginal,
        );
        let state = center(&p, &start_point(&p), 0.0, &SolverConfig::new(1e-6)).unwrap();
        assert!(state.decrement <= 1e-10);
        assert!(feasible(&p, &state.point, 1e-12).unwrap());
    }

    /// Maximize Σ log u over the slice by gradient ascent in orthonormal null-space
    /// coordinates with backtracking.
    fn projected_gradient_log_max(p: &MarginalProblem) -> f64 {
        let basis = null_basis(p);
        let q = basis_matrix(&basis, p.size()).qr().q();
        let mut u = DVector::from_column_slice(start_point(p).values());
        let f = |u: &DVector<f64>| u.iter().map(|v| v.ln()).sum::<f64>();
        for _ in 0..20_000 {
            let grad = DVector::from_iterator(u.len(), u.iter().map(|v| 1.0 / v));
            let step_dir = &q * (q.tr_mul(&grad));
            if step_dir.norm() < 1e-13 {
                break;
            }
            let mut t = 1.0;
            let f0 = f(&u);
            loop {
                let cand = &u + &step_dir * t;
                if cand.iter().all(|&v| v > 0.0)
                    && f(&cand) >= f0 + 1e-4 * t * step_dir.norm_squared()
                {
                    u = cand;
                    break;
                }
                t *= 0.5;
                if t < 1e-20 {
                    return f0;
                }
            }
        }
        f(&u)
    }

    #[test]
    fn centering_maximizes_log_sum() {
        let mut rng = StdRng::seed_from_u64(44);
        for dims in [vec![2, 3], vec![3, 3], vec![2, 2, 2]] {
            let p = random_problem(&mut rng, &dims, Variant::Marginal);
            let state = center(&p, &start_point(&p), 0.0, &SolverConfig::new(1e-6)).unwrap();
            let ours = -barrier_value(&state.point).unwrap();
            assert_abs_diff_eq!(ours, projected_gradient_log_max(&p), epsilon = 1e-6);
        }
    }

    #[test]
    fn solves_zero_diagonal_examples() {
        let c = vec![0., 1., 1., 0.];
        let cfg = SolverConfig::new(1e-6);
        let p = problem(
            &[2, 2],
            c.clone(),
            vec![vec![0.5, 0.5]; 2],
            Variant::Marginal,
        );
        let r = short_step_solve(&p, &cfg).unwrap();
        assert!(r.value <= 1e-6 && r.value >= 0.0);

        let p = problem(
            &[2, 2],
            c,
            vec![vec![0.5, 0.5], vec![0.25, 0.75]],
            Variant::Marginal,
        );
        let r = short_step_solve(&p, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 0.25, epsilon = 1e-6);
        assert!(r.gap_bound <= 1e-6);
        assert!(r.iterations as f64 <= r.predicted_bound);
    }

    #[test]
    fn path_parameter_grows_by_exact_factor() {
        let mut rng = StdRng::seed_from_u64(45);
        let p = random_problem(&mut rng, &[3, 2], Variant::Marginal);
        let cfg = SolverConfig::new(1e-4);
        let r = short_step_solve(&p, &cfg).unwrap();
        let growth = 1.0 + cfg.step_gamma / (6f64).sqrt();
        for w in r.trace.windows(2) {
            assert_eq!(w[1].eta, w[0].eta * growth);
            assert!(w[1].gap_bound < w[0].gap_bound);
        }
        for row in &r.trace {
            assert!(row.decrement <= cfg.decrement_beta);
            assert!(row.residual <= 1e-8 && row.min_entry > 0.0);
        }
        let again = short_step_solve(&p, &cfg).unwrap();
        assert_eq!(r.trace, again.trace);
        assert_eq!(r.iterations, r.centering_iterations + r.trace.len() - 1);
    }

    #[test]
    fn predicted_iteration_examples() {
        let uniform = |d: usize, n: usize| {
            problem(
                &vec![n; d],
                vec![0.0; n.pow(d as u32)],
                vec![vec![1.0 / n as f64; n]; d],
                Variant::Marginal,
            )
        };
        // 4 · ln(√2 · 16 / (1e-3 · 1/16))
        let p = uniform(2, 4);
        let v = predicted_iterations(&p, 1e-3, 1.0);
        assert_abs_diff_eq!(v, 51.198_025_255, epsilon = 1e-6);

        // weak-uniform form with K = ℓ = 1 for several (d, n)
        for (d, n) in [(2, 3), (3, 2), (3, 4), (4, 2)] {
            let p = uniform(d, n);
            let nf = n as f64;
            let corollary = nf.powf(d as f64 / 2.0)
                * (std::f64::consts::SQRT_2 / 1e-4 * nf.powi(2 * d as i32)).ln();
            assert_abs_diff_eq!(
                predicted_iterations(&p, 1e-4, 1.0),
                corollary,
                epsilon = 1e-9
            );
        }

        let mut last = f64::INFINITY;
        for eps in [1e-8, 1e-4, 1e-1, 1.0, 10.0] {
            let v = predicted_iterations(&p, eps, 1.0);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn weak_uniform_examples() {
        assert_abs_diff_eq!(classify_weak_uniform(&[0.25; 4], 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            classify_weak_uniform(&[0.5, 0.25, 0.25], 1.0),
            0.75,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            classify_weak_uniform(&[0.9, 0.1], 2.0),
            0.4,
            epsilon = 1e-15
        );
    }
}
