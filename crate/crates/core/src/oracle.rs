//! Dense two-phase simplex with Bland's rule, used as ground truth for the barrier solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TotError};
use crate::polytope::{MarginalProblem, MarginalRows, Variant};
use crate::tensor::DenseTensor;

/// Ratio-test ties and pivot candidates are compared at this tolerance.
pub const DEGENERACY_TOL: f64 = 1e-11;
const REDUCED_COST_TOL: f64 = 1e-11;
const PHASE_ONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// `min c⊤x  s.t.  Ax = b, x ≥ 0`
#[derive(Debug, Clone)]
pub struct StandardFormLP {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl StandardFormLP {
    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    /// Smallest entry of `c - A⊤y` and the dual objective `b⊤y`.
    pub fn dual_slack(&self, y: &[f64]) -> (f64, f64) {
        let y = DVector::from_column_slice(y);
        let s = DVector::from_column_slice(&self.c) - self.a.tr_mul(&y);
        let value = DVector::from_column_slice(&self.b).dot(&y);
        (s.min(), value)
    }
}

pub fn to_lp(problem: &MarginalProblem) -> StandardFormLP {
    let (a, b) = problem.constraints().independent_rows(problem.marginals());
    StandardFormLP {
        a,
        b,
        c: problem.cost().values().to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    /// Multipliers `y` with `A⊤y ≤ c` and `b⊤y = value`.
    pub duals: Vec<f64>,
    /// Indices of the basic columns; entries `≥ num_cols` are artificial.
    pub basis: Vec<usize>,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r]);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, &pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.reduced[c];
        if f != 0.0 {
            for (v, &pv) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.reduced[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        self.reduced = costs.to_vec();
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = costs[j];
            if cb != 0.0 {
                for (v, &t) in self.reduced.iter_mut().zip(&self.rows[i]) {
                    *v -= cb * t;
                }
            }
        }
    }

    /// Bland's rule: lowest-index improving column, lowest-index basic variable among ties.
    fn run(&mut self, eligible: usize, max_pivots: usize) -> LpStatus {
        loop {
            let Some(c) = (0..eligible).find(|&j| self.reduced[j] < -REDUCED_COST_TOL) else {
                return LpStatus::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a <= DEGENERACY_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - DEGENERACY_TOL
                            || (ratio <= br + DEGENERACY_TOL && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, _)) = best else {
                return LpStatus::Unbounded;
            };
            if self.pivots >= max_pivots {
                return LpStatus::IterationLimit;
            }
            self.pivot(r, c);
        }
    }
}

pub fn simplex_solve(lp: &StandardFormLP) -> Result<LpSolution> {
    let (m, n) = (lp.num_rows(), lp.num_cols());
    if lp.b.len() != m || lp.c.len() != n {
        return Err(TotError::InvalidInput(format!(
            "LP with {m}x{n} matrix has |b| = {} and |c| = {}",
            lp.b.len(),
            lp.c.len()
        )));
    }
    let max_pivots = 200 * (m + n).max(10);
    let width = n + m;
    let mut sign = vec![1.0; m];
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        if lp.b[i] < 0.0 {
            sign[i] = -1.0;
        }
        let mut row = vec![0.0; width];
        for (j, r) in row.iter_mut().take(n).enumerate() {
            *r = sign[i] * lp.a[(i, j)];
        }
        row[n + i] = 1.0;
        rows.push(row);
        rhs.push(sign[i] * lp.b[i]);
    }
    let mut tab = Tableau {
        rows,
        rhs,
        reduced: Vec::new(),
        basis: (n..n + m).collect(),
        pivots: 0,
    };

    let phase_one: Vec<f64> = (0..width).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    tab.set_costs(&phase_one);
    match tab.run(n, max_pivots) {
        LpStatus::Optimal => {}
        status => return Err(TotError::Lp(status)),
    }
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v)
        .sum();
    if infeasibility > PHASE_ONE_TOL {
        return Err(TotError::Lp(LpStatus::Infeasible));
    }
    // drive zero-level artificials out; a row with no usable entry is redundant and keeps its
    // artificial basic at zero
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(c) = (0..n).find(|&j| tab.rows[r][j].abs() > 1e-9) {
                tab.pivot(r, c);
            }
        }
    }

    let mut phase_two = lp.c.clone();
    phase_two.resize(width, 0.0);
    tab.set_costs(&phase_two);
    match tab.run(n, max_pivots) {
        LpStatus::Optimal => {}
        status => return Err(TotError::Lp(status)),
    }

    // recompute the basic solution and the duals from the basis matrix
    let column = |j: usize, i: usize| {
        if j < n {
            lp.a[(i, j)]
        } else if j - n == i {
            sign[i]
        } else {
            0.0
        }
    };
    let bmat = DMatrix::from_fn(m, m, |i, k| column(tab.basis[k], i));
    let lu = bmat.clone().lu();
    let xb = lu
        .solve(&DVector::from_column_slice(&lp.b))
        .ok_or_else(|| TotError::Numerical("singular optimal basis".into()))?;
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&j| phase_two[j]));
    let y = bmat
        .transpose()
        .lu()
        .solve(&cb)
        .ok_or_else(|| TotError::Numerical("singular optimal basis".into()))?;
    let mut x = vec![0.0; n];
    for (k, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = xb[k].max(0.0);
        }
    }
    let value = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
        duals: y.iter().copied().collect(),
        basis: tab.basis,
        pivots: tab.pivots,
    })
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub value: f64,
    pub optimizer: DenseTensor,
    pub lp: LpSolution,
}

/// Solve the transport problem exactly with the simplex oracle.
pub fn solve_exact(problem: &MarginalProblem) -> Result<OracleSolution> {
    let lp = to_lp(problem);
    let sol = simplex_solve(&lp)?;
    let optimizer = DenseTensor::from_values(problem.shape().clone(), sol.x.clone())?;
    Ok(OracleSolution {
        value: sol.value,
        optimizer,
        lp: sol,
    })
}

/// Dual potentials of the marginal problem: `φ_k` has length `n_k`, plus a global scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub potentials: Vec<Vec<f64>>,
    pub total: f64,
}

impl DualCertificate {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            potentials: dims.iter().map(|&n| vec![0.0; n]).collect(),
            total: 0.0,
        }
    }

    /// Potentials from simplex duals of the reduced marginal rows (last entry per mode is 0).
    pub fn from_reduced_duals(problem: &MarginalProblem, duals: &[f64]) -> Result<Self> {
        if problem.variant() != Variant::Marginal {
            return Err(TotError::InvalidInput(
                "potentials exist only for the marginal variant".into(),
            ));
        }
        let rows = MarginalRows::new(problem.shape().clone());
        if duals.len() != rows.num_rows() {
            return Err(TotError::InvalidInput(format!(
                "expected {} duals, got {}",
                rows.num_rows(),
                duals.len()
            )));
        }
        let mut next = 1;
        let potentials = problem
            .dims()
            .iter()
            .map(|&n| {
                let mut phi = duals[next..next + n - 1].to_vec();
                phi.push(0.0);
                next += n - 1;
                phi
            })
            .collect();
        Ok(Self {
            potentials,
            total: duals[0],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCheck {
    pub feasible: bool,
    /// `min (c - Σ_k φ_k[i_k] - μ)` over all entries.
    pub min_slack: f64,
    /// `Σ_k φ_k⊤p_k + μ`, a lower bound on every feasible objective when feasible.
    pub dual_value: f64,
}

pub fn dual_feasible(
    problem: &MarginalProblem,
    certificate: &DualCertificate,
    tol: f64,
) -> Result<DualCheck> {
    let dims = problem.dims();
    if certificate.potentials.len() != dims.len()
        || certificate
            .potentials
            .iter()
            .zip(dims)
            .any(|(p, &n)| p.len() != n)
    {
        return Err(TotError::InvalidInput(
            "potential lengths must match the modes".into(),
        ));
    }
    let shape = problem.shape();
    let strides = shape.strides();
    let mut min_slack = f64::INFINITY;
    for (flat, &c) in problem.cost().values().iter().enumerate() {
        let lhs: f64 = certificate.total
            + (0..dims.len())
                .map(|k| certificate.potentials[k][(flat / strides[k]) % dims[k]])
                .sum::<f64>();
        min_slack = min_slack.min(c - lhs);
    }
    let dual_value = certificate.total
        + certificate
            .potentials
            .iter()
            .zip(problem.marginals())
            .map(|(phi, p)| phi.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
            .sum::<f64>();
    Ok(DualCheck {
        feasible: min_slack >= -tol,
        min_slack,
        dual_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{feasible, start_point};
    use crate::tensor::Shape;
    use approx::assert_abs_diff_eq;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn problem(dims: &[usize], cost: Vec<f64>, marginals: Vec<Vec<f64>>) -> MarginalProblem {
        let c = DenseTensor::from_values(Shape::new(dims.to_vec()).unwrap(), cost).unwrap();
        MarginalProblem::new(c, marginals, Variant::Marginal).unwrap()
    }

    fn random_marginal(rng: &mut StdRng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    fn random_problem(rng: &mut StdRng, dims: &[usize]) -> MarginalProblem {
        let n: usize = dims.iter().product();
        let cost = (0..n).map(|_| rng.random_range(0..10) as f64).collect();
        let m = dims.iter().map(|&k| random_marginal(rng, k)).collect();
        problem(dims, cost, m)
    }

    /// Minimum over every basic feasible solution: each choice of `rows` columns with an
    /// invertible submatrix and a nonnegative solution.
    fn enumerate_vertices(lp: &StandardFormLP) -> f64 {
        let (m, n) = (lp.num_rows(), lp.num_cols());
        let mut best = f64::INFINITY;
        let mut cols: Vec<usize> = (0..m).collect();
        loop {
            let b = DMatrix::from_fn(m, m, |i, k| lp.a[(i, cols[k])]);
            if b.clone().determinant().abs() > 1e-9 {
                let x = b.lu().solve(&DVector::from_column_slice(&lp.b)).unwrap();
                if x.iter().all(|&v| v >= -1e-12) {
                    let v: f64 = cols.iter().zip(x.iter()).map(|(&j, xj)| lp.c[j] * xj).sum();
                    best = best.min(v);
                }
            }
            // next combination
            let mut i = m;
            while i > 0 && cols[i - 1] == n - m + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return best;
            }
            cols[i - 1] += 1;
            for j in i..m {
                cols[j] = cols[j - 1] + 1;
            }
        }
    }

    #[test]
    fn lp_dimensions() {
        let p = problem(&[2, 2], vec![0.0; 4], vec![vec![0.5, 0.5]; 2]);
        let lp = to_lp(&p);
        assert_eq!((lp.num_rows(), lp.num_cols()), (3, 4));
        let p = problem(&[2, 2, 2], vec![0.0; 8], vec![vec![0.5, 0.5]; 3]);
        let lp = to_lp(&p);
        assert_eq!((lp.num_rows(), lp.num_cols()), (4, 8));
        let x = DVector::from_column_slice(start_point(&p).values());
        assert!((&lp.a * x - DVector::from_vec(lp.b.clone())).amax() <= 1e-12);
    }

    #[test]
    fn zero_diagonal_uniform() {
        let p = problem(&[2, 2], vec![0., 1., 1., 0.], vec![vec![0.5, 0.5]; 2]);
        let s = solve_exact(&p).unwrap();
        assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-12);
        for (a, b) in s.optimizer.values().iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_diagonal_skewed_matches_one_parameter_family() {
        let p = problem(
            &[2, 2],
            vec![0., 1., 1., 0.],
            vec![vec![0.5, 0.5], vec![0.25, 0.75]],
        );
        // u00 = t, u01 = 0.5 - t, u10 = 0.25 - t, u11 = 0.25 + t for t in [0, 0.25]
        let brute = (0..=10_000)
            .map(|i| {
                let t = 0.25 * i as f64 / 10_000.0;
                (0.5 - t) + (0.25 - t)
            })
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(brute, 0.25, epsilon = 1e-12);
        let s = solve_exact(&p).unwrap();
        assert_abs_diff_eq!(s.value, brute, epsilon = 1e-9);
        assert!(feasible(&p, &s.optimizer, 1e-8).unwrap());
    }

    #[test]
    fn random_three_by_three_matches_vertex_enumeration() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..20 {
            let p = random_problem(&mut rng, &[3, 3]);
            let lp = to_lp(&p);
            let s = simplex_solve(&lp).unwrap();
            assert_abs_diff_eq!(s.value, enumerate_vertices(&lp), epsilon = 1e-9);
            assert!(feasible(&p, &s.optimizer_tensor(&p), 1e-8).unwrap());
        }
    }

    impl LpSolution {
        fn optimizer_tensor(&self, p: &MarginalProblem) -> DenseTensor {
            DenseTensor::from_values(p.shape().clone(), self.x.clone()).unwrap()
        }
    }

    #[test]
    fn strong_duality_and_vertex_support() {
        let mut rng = StdRng::seed_from_u64(32);
        for dims in [vec![3, 4], vec![2, 3, 2], vec![3, 3, 3], vec![5, 2]] {
            let p = random_problem(&mut rng, &dims);
            let s = solve_exact(&p).unwrap();
            let cert = DualCertificate::from_reduced_duals(&p, &s.lp.duals).unwrap();
            let check = dual_feasible(&p, &cert, 1e-9).unwrap();
            assert!(check.feasible, "min slack {}", check.min_slack);
            assert_abs_diff_eq!(check.dual_value, s.value, epsilon = 1e-9);
            let rows = to_lp(&p).num_rows();
            assert!(s.optimizer.values().iter().filter(|&&v| v > 1e-12).count() <= rows);
        }
    }

    #[test]
    fn mode_sum_oracle_strong_duality() {
        let mut rng = StdRng::seed_from_u64(33);
        for dims in [vec![2, 3], vec![3, 2, 3], vec![2, 2, 2]] {
            let p = random_problem(&mut rng, &dims).with_variant(Variant::ModeSum);
            let lp = to_lp(&p);
            let s = simplex_solve(&lp).unwrap();
            let (slack, dual) = lp.dual_slack(&s.duals);
            assert!(slack >= -1e-9);
            assert_abs_diff_eq!(dual, s.value, epsilon = 1e-9);
            assert!(feasible(&p, &s.optimizer_tensor(&p), 1e-8).unwrap());
        }
    }

    #[test]
    fn identity_coupling_for_metric_cost() {
        let mut rng = StdRng::seed_from_u64(34);
        for n in [2, 3, 5] {
            let pts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let cost = (0..n * n)
                .map(|f| (pts[f / n] - pts[f % n]).abs())
                .collect();
            let pm = random_marginal(&mut rng, n);
            let p = problem(&[n, n], cost, vec![pm.clone(), pm.clone()]);
            let s = solve_exact(&p).unwrap();
            assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-12);
            for i in 0..n {
                assert_abs_diff_eq!(s.optimizer.get(&[i, i]), pm[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dual_check_examples() {
        let p = problem(&[2, 2], vec![0., 1., 1., 0.], vec![vec![0.5, 0.5]; 2]);
        let zero = DualCertificate::zeros(&[2, 2]);
        let c = dual_feasible(&p, &zero, 1e-12).unwrap();
        assert!(c.feasible);
        assert_eq!(c.dual_value, 0.0);

        let mut inflated = zero.clone();
        inflated.potentials[0].iter_mut().for_each(|v| *v += 1.0);
        assert!(!dual_feasible(&p, &inflated, 1e-12).unwrap().feasible);

        let bad = DualCertificate::zeros(&[2, 3]);
        assert!(dual_feasible(&p, &bad, 1e-12).is_err());
    }

    #[test]
    fn infeasible_and_unbounded_statuses() {
        let lp = StandardFormLP {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            b: vec![1.0, 2.0],
            c: vec![0.0, 0.0],
        };
        assert!(matches!(
            simplex_solve(&lp),
            Err(TotError::Lp(LpStatus::Infeasible))
        ));
        let lp = StandardFormLP {
            a: DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            b: vec![1.0],
            c: vec![0.0, -1.0],
        };
        assert!(matches!(
            simplex_solve(&lp),
            Err(TotError::Lp(LpStatus::Unbounded))
        ));
    }
}
