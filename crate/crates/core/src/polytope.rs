//! Feasible sets of the transport problem.
//!
//! Two polytopes share the cost, the marginals and the product start point:
//!
//! * [`Variant::Marginal`]: nonnegative tensors whose mode-`k` marginal equals `p_k`.
//! * [`Variant::ModeSum`]: nonnegative tensors whose mode-`k` sum `U ×_k 1` equals the
//!   outer product of the other marginals.

use nalgebra::DMatrix;

use crate::error::{Result, TotError};
use crate::tensor::{self, marginal, mode_contract, outer, DenseTensor, Shape};

/// Marginals must sum to one within this tolerance.
pub const MARGINAL_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `U ×_{k̄} J = p_k` for every mode.
    Marginal,
    /// `U ×_k 1 = ⊗_{j≠k} p_j` for every mode.
    ModeSum,
}

#[derive(Debug, Clone)]
pub struct MarginalProblem {
    cost: DenseTensor,
    marginals: Vec<Vec<f64>>,
    variant: Variant,
}

impl MarginalProblem {
    pub fn new(cost: DenseTensor, marginals: Vec<Vec<f64>>, variant: Variant) -> Result<Self> {
        let dims = cost.dims();
        if marginals.len() != dims.len() {
            return Err(TotError::InvalidInput(format!(
                "cost has {} modes but {} marginals were given",
                dims.len(),
                marginals.len()
            )));
        }
        for (k, (p, &n)) in marginals.iter().zip(dims).enumerate() {
            if p.len() != n {
                return Err(TotError::InvalidInput(format!(
                    "marginal {k} has length {} but mode {k} has length {n}",
                    p.len()
                )));
            }
            if let Some(i) = p.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(TotError::InvalidInput(format!(
                    "marginal {k} entry {i} = {} is not strictly positive",
                    p[i]
                )));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > MARGINAL_SUM_TOL {
                return Err(TotError::InvalidInput(format!(
                    "marginal {k} sums to {s}, not 1"
                )));
            }
        }
        if let Some(i) = cost.values().iter().position(|v| !v.is_finite()) {
            return Err(TotError::InvalidInput(format!(
                "cost entry {i} is not finite"
            )));
        }
        Ok(Self {
            cost,
            marginals,
            variant,
        })
    }

    pub fn cost(&self) -> &DenseTensor {
        &self.cost
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.marginals
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn shape(&self) -> &Shape {
        self.cost.shape()
    }

    pub fn dims(&self) -> &[usize] {
        self.cost.dims()
    }

    /// Number of scalar unknowns `N = prod n_k`, also the barrier parameter bound.
    pub fn size(&self) -> usize {
        self.cost.len()
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }

    pub fn constraints(&self) -> ConstraintSystem {
        match self.variant {
            Variant::Marginal => {
                ConstraintSystem::Marginal(MarginalRows::new(self.shape().clone()))
            }
            Variant::ModeSum => ConstraintSystem::ModeSum(ModeSumRows {
                shape: self.shape().clone(),
            }),
        }
    }

    fn check_shape(&self, u: &DenseTensor) -> Result<()> {
        if u.shape() != self.shape() {
            return Err(TotError::ShapeMismatch {
                expected: self.dims().to_vec(),
                got: u.dims().to_vec(),
            });
        }
        Ok(())
    }
}

/// The product tensor `⊗ p_k`, strictly interior to both polytopes.
pub fn start_point(problem: &MarginalProblem) -> DenseTensor {
    outer(problem.marginals()).expect("marginals validated at construction")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Residual {
    /// Per-mode marginal minus `p_k`.
    Marginal(Vec<Vec<f64>>),
    /// Per-mode `U ×_k 1` minus the product of the other marginals.
    ModeSum(Vec<DenseTensor>),
}

impl Residual {
    pub fn max_abs(&self) -> f64 {
        let it: Box<dyn Iterator<Item = &f64>> = match self {
            Residual::Marginal(r) => Box::new(r.iter().flatten()),
            Residual::ModeSum(r) => Box::new(r.iter().flat_map(|t| t.values().iter())),
        };
        it.fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        match self {
            Residual::Marginal(r) => r.iter().flatten().map(|v| v * v).sum::<f64>().sqrt(),
            Residual::ModeSum(r) => r
                .iter()
                .flat_map(|t| t.values().iter())
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt(),
        }
    }
}

pub fn residual(problem: &MarginalProblem, u: &DenseTensor) -> Result<Residual> {
    problem.check_shape(u)?;
    let p = problem.marginals();
    match problem.variant {
        Variant::Marginal => {
            let per_mode = (0..p.len())
                .map(|k| {
                    let mut m = marginal(u, k)?;
                    for (a, b) in m.iter_mut().zip(&p[k]) {
                        *a -= b;
                    }
                    Ok(m)
                })
                .collect::<Result<_>>()?;
            Ok(Residual::Marginal(per_mode))
        }
        Variant::ModeSum => {
            let per_mode = (0..p.len())
                .map(|k| {
                    let ones = vec![1.0; p[k].len()];
                    let w = mode_contract(u, k, &ones)?;
                    let target = other_marginals_product(p, k)?;
                    w.sub(&target)
                })
                .collect::<Result<_>>()?;
            Ok(Residual::ModeSum(per_mode))
        }
    }
}

fn other_marginals_product(p: &[Vec<f64>], mode: usize) -> Result<DenseTensor> {
    let rest: Vec<&[f64]> = p
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != mode)
        .map(|(_, v)| v.as_slice())
        .collect();
    if rest.is_empty() {
        // order one: U ×_0 1 is the total mass
        return DenseTensor::vector(vec![1.0]);
    }
    outer(&rest)
}

pub fn feasible(problem: &MarginalProblem, u: &DenseTensor, tol: f64) -> Result<bool> {
    let r = residual(problem, u)?;
    Ok(u.min_entry() >= -tol && r.max_abs() <= tol)
}

/// Multipliers of the reduced marginal rows.
///
/// `per_mode[k]` has length `n_k - 1`; the last row of each mode is dropped and `total`
/// multiplies the total-mass row.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalMultipliers {
    pub per_mode: Vec<Vec<f64>>,
    pub total: f64,
}

impl MarginalMultipliers {
    pub fn zeros(shape: &Shape) -> Self {
        Self {
            per_mode: shape.dims().iter().map(|&n| vec![0.0; n - 1]).collect(),
            total: 0.0,
        }
    }

    /// Flatten in row order: total row first, then the rows of mode 0, mode 1, ...
    pub fn to_flat(&self) -> Vec<f64> {
        std::iter::once(self.total)
            .chain(self.per_mode.iter().flatten().copied())
            .collect()
    }

    pub fn from_flat(shape: &Shape, flat: &[f64]) -> Result<Self> {
        let rows = MarginalRows::new(shape.clone()).num_rows();
        if flat.len() != rows {
            return Err(TotError::InvalidInput(format!(
                "expected {rows} multipliers, got {}",
                flat.len()
            )));
        }
        let mut rest = &flat[1..];
        let per_mode = shape
            .dims()
            .iter()
            .map(|&n| {
                let (head, tail) = rest.split_at(n - 1);
                rest = tail;
                head.to_vec()
            })
            .collect();
        Ok(Self {
            per_mode,
            total: flat[0],
        })
    }
}

/// Adjoint of the reduced marginal operator: entry `(i_0, ..., i_{d-1})` is
/// `total + sum_k λ_k[i_k]` with `λ_k[n_k - 1] = 0`.
pub fn adjoint_marginal(shape: &Shape, multipliers: &MarginalMultipliers) -> Result<DenseTensor> {
    let dims = shape.dims();
    if multipliers.per_mode.len() != dims.len()
        || multipliers
            .per_mode
            .iter()
            .zip(dims)
            .any(|(l, &n)| l.len() != n - 1)
    {
        return Err(TotError::InvalidInput(
            "multiplier lengths must be n_k - 1 for every mode".into(),
        ));
    }
    let strides = shape.strides();
    let values = (0..shape.len())
        .map(|flat| {
            multipliers.total
                + (0..dims.len())
                    .map(|k| {
                        let i = (flat / strides[k]) % dims[k];
                        multipliers.per_mode[k].get(i).copied().unwrap_or(0.0)
                    })
                    .sum::<f64>()
        })
        .collect();
    DenseTensor::from_values(shape.clone(), values)
}

/// The reduced marginal system: one total-mass row plus rows `i_k < n_k - 1` of every mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalRows {
    shape: Shape,
    offsets: Vec<usize>,
}

impl MarginalRows {
    pub fn new(shape: Shape) -> Self {
        let mut offsets = Vec::with_capacity(shape.order());
        let mut next = 1;
        for &n in shape.dims() {
            offsets.push(next);
            next += n - 1;
        }
        Self { shape, offsets }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn num_rows(&self) -> usize {
        1 + self.shape.dims().iter().map(|n| n - 1).sum::<usize>()
    }

    /// Rows touching entry `flat`, total-mass row first.
    pub fn rows_of(&self, flat: usize, out: &mut Vec<usize>) {
        out.clear();
        out.push(0);
        for (k, &n) in self.shape.dims().iter().enumerate() {
            let i = self.shape.mode_index(flat, k);
            if i + 1 < n {
                out.push(self.offsets[k] + i);
            }
        }
    }

    pub fn apply(&self, u: &DenseTensor) -> Vec<f64> {
        let mut out = vec![0.0; self.num_rows()];
        let mut rows = Vec::new();
        for (flat, &v) in u.values().iter().enumerate() {
            self.rows_of(flat, &mut rows);
            for &r in &rows {
                out[r] += v;
            }
        }
        out
    }

    pub fn rhs(&self, marginals: &[Vec<f64>]) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(
                marginals
                    .iter()
                    .flat_map(|p| p[..p.len() - 1].iter().copied()),
            )
            .collect()
    }

    pub fn adjoint(&self, flat_multipliers: &[f64]) -> DenseTensor {
        let mut rows = Vec::new();
        let values = (0..self.shape.len())
            .map(|flat| {
                self.rows_of(flat, &mut rows);
                rows.iter().map(|&r| flat_multipliers[r]).sum()
            })
            .collect();
        DenseTensor::from_values(self.shape.clone(), values).expect("sizes agree")
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.num_rows(), self.shape.len());
        let mut rows = Vec::new();
        for flat in 0..self.shape.len() {
            self.rows_of(flat, &mut rows);
            for &r in &rows {
                a[(r, flat)] = 1.0;
            }
        }
        a
    }
}

/// The unreduced mode-sum system: for every mode `k`, one row per multi-index of the
/// other modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSumRows {
    shape: Shape,
}

impl ModeSumRows {
    pub fn num_rows(&self) -> usize {
        let n = self.shape.len();
        self.shape.dims().iter().map(|&nk| n / nk).sum()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.shape.len();
        let mut a = DMatrix::zeros(self.num_rows(), n);
        let mut offset = 0;
        for (k, &nk) in self.shape.dims().iter().enumerate() {
            let stride = self.shape.stride(k);
            for flat in 0..n {
                let outer = flat / (stride * nk);
                let inner = flat % stride;
                a[(offset + outer * stride + inner, flat)] = 1.0;
            }
            offset += n / nk;
        }
        a
    }

    pub fn rhs(&self, marginals: &[Vec<f64>]) -> Vec<f64> {
        (0..marginals.len())
            .flat_map(|k| {
                other_marginals_product(marginals, k)
                    .expect("validated marginals")
                    .into_values()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintSystem {
    Marginal(MarginalRows),
    ModeSum(ModeSumRows),
}

impl ConstraintSystem {
    pub fn num_rows(&self) -> usize {
        match self {
            ConstraintSystem::Marginal(m) => m.num_rows(),
            ConstraintSystem::ModeSum(m) => m.num_rows(),
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        match self {
            ConstraintSystem::Marginal(m) => m.dense(),
            ConstraintSystem::ModeSum(m) => m.dense(),
        }
    }

    pub fn rhs(&self, marginals: &[Vec<f64>]) -> Vec<f64> {
        match self {
            ConstraintSystem::Marginal(m) => m.rhs(marginals),
            ConstraintSystem::ModeSum(m) => m.rhs(marginals),
        }
    }

    /// A linearly independent subset of the rows (with matching right-hand side) that
    /// spans the same row space. Rows are kept greedily in order.
    pub fn independent_rows(&self, marginals: &[Vec<f64>]) -> (DMatrix<f64>, Vec<f64>) {
        let a = self.dense();
        let b = self.rhs(marginals);
        if let ConstraintSystem::Marginal(_) = self {
            return (a, b);
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut keep = Vec::new();
        for r in 0..a.nrows() {
            let row: Vec<f64> = a.row(r).iter().copied().collect();
            let scale = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if orthogonalize_into(&mut basis, row, RANK_TOL * scale.max(1.0)) {
                keep.push(r);
            }
        }
        let reduced = DMatrix::from_fn(keep.len(), a.ncols(), |i, j| a[(keep[i], j)]);
        let rhs = keep.iter().map(|&r| b[r]).collect();
        (reduced, rhs)
    }
}

/// Numerical rank threshold shared by the elimination and kernel constructions.
pub const RANK_TOL: f64 = 1e-8;

/// Gram–Schmidt (two passes) of `v` against the orthonormal set `basis`. Pushes the
/// normalized remainder and returns true when its norm exceeds `tol`.
fn orthogonalize_into(basis: &mut Vec<Vec<f64>>, mut v: Vec<f64>, tol: f64) -> bool {
    for _ in 0..2 {
        for q in basis.iter() {
            let c = tensor::dot(q, &v);
            for (x, qi) in v.iter_mut().zip(q) {
                *x -= c * qi;
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > tol {
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
        true
    } else {
        false
    }
}

/// Expected dimension of the homogeneous solution space.
pub fn null_dimension(problem: &MarginalProblem) -> usize {
    let dims = problem.dims();
    match problem.variant {
        Variant::Marginal => problem.size() - 1 - dims.iter().map(|n| n - 1).sum::<usize>(),
        Variant::ModeSum => dims.iter().map(|n| n - 1).product(),
    }
}

fn difference(n: usize, i: usize) -> Vec<f64> {
    let mut g = vec![0.0; n];
    g[i] = 1.0;
    g[i + 1] = -1.0;
    g
}

/// A basis of the directions that keep every constraint fixed.
///
/// Order-two marginal problems and every mode-sum problem get the Kronecker basis of
/// consecutive differences `⊗_k (e_{i_k} - e_{i_k + 1})`. Marginal problems of order three
/// or more get an orthonormal kernel basis of the reduced rows.
pub fn null_basis(problem: &MarginalProblem) -> Vec<DenseTensor> {
    let dims = problem.dims();
    match (problem.variant, dims.len()) {
        (Variant::Marginal, 1) => Vec::new(),
        (Variant::Marginal, 2) | (Variant::ModeSum, _) => kronecker_basis(dims),
        (Variant::Marginal, _) => kernel_basis(problem),
    }
}

fn kronecker_basis(dims: &[usize]) -> Vec<DenseTensor> {
    if dims.iter().any(|&n| n < 2) {
        return Vec::new();
    }
    let reduced = Shape::new(dims.iter().map(|&n| n - 1).collect()).expect("positive dims");
    (0..reduced.len())
        .map(|t| {
            let idx = reduced.multi_index(t);
            let factors: Vec<Vec<f64>> = idx
                .iter()
                .zip(dims)
                .map(|(&i, &n)| difference(n, i))
                .collect();
            outer(&factors).expect("nonempty factors")
        })
        .collect()
}

fn kernel_basis(problem: &MarginalProblem) -> Vec<DenseTensor> {
    let rows = MarginalRows::new(problem.shape().clone());
    let a = rows.dense();
    let n = problem.size();
    let target = null_dimension(problem);
    let mut row_space = Vec::with_capacity(a.nrows());
    for r in 0..a.nrows() {
        orthogonalize_into(&mut row_space, a.row(r).iter().copied().collect(), RANK_TOL);
    }
    let split = row_space.len();
    let mut all = row_space;
    for j in 0..n {
        if all.len() - split == target {
            break;
        }
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        orthogonalize_into(&mut all, e, 1e-6);
    }
    all.split_off(split)
        .into_iter()
        .map(|v| DenseTensor::from_values(problem.shape().clone(), v).expect("sizes agree"))
        .collect()
}

/// Column matrix (`N × M`) of a basis list.
pub fn basis_matrix(basis: &[DenseTensor], size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, basis.len(), |i, j| basis[j].values()[i])
}

/// `⊗_k (I - J/n_k)` applied to `u`: removes the mean along every mode in turn.
pub fn center_modes(u: &DenseTensor) -> DenseTensor {
    let shape = u.shape().clone();
    let mut values = u.values().to_vec();
    for (k, &nk) in shape.dims().iter().enumerate() {
        let stride = shape.stride(k);
        let block = stride * nk;
        for start in (0..values.len()).step_by(block) {
            for inner in 0..stride {
                let base = start + inner;
                let mean = (0..nk).map(|i| values[base + i * stride]).sum::<f64>() / nk as f64;
                for i in 0..nk {
                    values[base + i * stride] -= mean;
                }
            }
        }
    }
    DenseTensor::from_values(shape, values).expect("sizes agree")
}

/// Lower bound `prod_k min_i p_{i,k} / √2` on the symmetry of the start point.
pub fn sym_lower_bound(problem: &MarginalProblem) -> f64 {
    min_entry_product(problem) / std::f64::consts::SQRT_2
}

pub fn min_entry_product(problem: &MarginalProblem) -> f64 {
    problem
        .marginals()
        .iter()
        .map(|p| p.iter().copied().fold(f64::INFINITY, f64::min))
        .product()
}
