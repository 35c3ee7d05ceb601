//! The logarithmic barrier `σ(U) = -Σ log u` and its calculus.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, TotError};
use crate::tensor::DenseTensor;

/// Eigenvalues at or below this fraction of the largest one are treated as zero.
pub const PINV_REL_TOL: f64 = 1e-10;

/// Entries below this are treated as having left the positive orthant.
pub const MIN_ENTRY: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct BarrierEval {
    pub value: f64,
    /// `-1/u`
    pub gradient: DenseTensor,
    /// `1/u²`, the diagonal of the Hessian.
    pub hessian_diag: DenseTensor,
}

pub(crate) fn check_domain(u: &DenseTensor) -> Result<()> {
    match u
        .values()
        .iter()
        .position(|&v| v.is_nan() || v < MIN_ENTRY || !v.is_finite())
    {
        Some(index) => Err(TotError::Domain {
            index,
            value: u.values()[index],
        }),
        None => Ok(()),
    }
}

pub fn barrier_value(u: &DenseTensor) -> Result<f64> {
    check_domain(u)?;
    Ok(-u.values().iter().map(|v| v.ln()).sum::<f64>())
}

pub fn eval_barrier(u: &DenseTensor) -> Result<BarrierEval> {
    let value = barrier_value(u)?;
    Ok(BarrierEval {
        value,
        gradient: u.map(|v| -1.0 / v),
        hessian_diag: u.map(|v| 1.0 / (v * v)),
    })
}

/// Second and third directional derivatives of `σ` at `point` along `direction`.
#[derive(Debug, Clone)]
pub struct ConcordanceSample {
    pub point: DenseTensor,
    pub direction: DenseTensor,
    /// `v⊤ ∂²σ v = Σ v²/u²`
    pub second_form: f64,
    /// `⟨∂³σ, v⊗v⊗v⟩ = -2 Σ v³/u³`
    pub third_form: f64,
}

pub fn directional_forms(
    point: &DenseTensor,
    direction: &DenseTensor,
) -> Result<ConcordanceSample> {
    check_domain(point)?;
    if point.shape() != direction.shape() {
        return Err(TotError::ShapeMismatch {
            expected: point.dims().to_vec(),
            got: direction.dims().to_vec(),
        });
    }
    let (mut second, mut third) = (0.0, 0.0);
    for (&u, &v) in point.values().iter().zip(direction.values()) {
        let w = v / u;
        second += w * w;
        third += w * w * w;
    }
    Ok(ConcordanceSample {
        point: point.clone(),
        direction: direction.clone(),
        second_form: second,
        third_form: -2.0 * third,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcordanceCheck {
    pub holds: bool,
    /// `2 a^{-1/2} (second)^{3/2} - |third|`
    pub slack: f64,
}

pub fn check_self_concordance(sample: &ConcordanceSample, a: f64) -> ConcordanceCheck {
    let s = sample.second_form;
    let slack = 2.0 / a.sqrt() * s * s.sqrt() - sample.third_form.abs();
    ConcordanceCheck {
        holds: slack >= -1e-12,
        slack,
    }
}

/// `y⊤ A† y` for symmetric positive semidefinite `A`, with `y` orthogonal to `ker A`.
pub fn pseudo_quadratic(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n || y.len() != n {
        return Err(TotError::InvalidInput(format!(
            "matrix is {}x{} and vector has length {}",
            a.nrows(),
            a.ncols(),
            y.len()
        )));
    }
    let scale = a.amax().max(1.0);
    if (a - a.transpose()).amax() > 1e-10 * scale {
        return Err(TotError::InvalidInput("matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(a.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
        return Err(TotError::InvalidInput(
            "matrix is not positive semidefinite".into(),
        ));
    }
    let cutoff = PINV_REL_TOL * lmax;
    let ynorm = y.norm().max(1.0);
    let mut total = 0.0;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let c = eig.eigenvectors.column(i).dot(y);
        if l > cutoff {
            total += c * c / l;
        } else if c.abs() > 1e-8 * ynorm {
            return Err(TotError::Certificate(format!(
                "vector has component {c:e} along the kernel"
            )));
        }
    }
    Ok(total)
}

/// `∇σ⊤ (∂²σ)⁻¹ ∇σ` on the whole orthant; equals the number of entries.
pub fn unrestricted_complexity(point: &DenseTensor) -> Result<f64> {
    let e = eval_barrier(point)?;
    Ok(e.gradient
        .values()
        .iter()
        .zip(e.hessian_diag.values())
        .map(|(g, h)| g * g / h)
        .sum())
}

/// `σ` restricted to an affine slice `U₀ + span(B)`, in the coordinates of the basis `B`.
#[derive(Debug, Clone)]
pub struct SliceBarrier {
    basis: DMatrix<f64>,
}

impl SliceBarrier {
    /// `basis` holds one direction per column (`N × M`).
    pub fn new(basis: DMatrix<f64>) -> Self {
        Self { basis }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Restricted gradient `B⊤g` and Hessian `B⊤DB`.
    pub fn derivatives(&self, point: &DenseTensor) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if point.len() != self.basis.nrows() {
            return Err(TotError::InvalidInput(format!(
                "point has {} entries, basis rows {}",
                point.len(),
                self.basis.nrows()
            )));
        }
        let e = eval_barrier(point)?;
        let g = DVector::from_column_slice(e.gradient.values());
        let d = DVector::from_column_slice(e.hessian_diag.values());
        let gt = self.basis.tr_mul(&g);
        let mut scaled = self.basis.clone();
        for (mut row, &di) in scaled.row_iter_mut().zip(d.iter()) {
            row *= di;
        }
        let ht = self.basis.tr_mul(&scaled);
        Ok((gt, ht))
    }

    /// One sample `g_t⊤ H_t⁻¹ g_t` of the quantity whose supremum is the complexity value.
    ///
    /// Evaluated as `‖Q⊤ H^{-1/2} g‖²` with `H^{1/2} B = QR`, which stays accurate when the
    /// point approaches the boundary of the orthant.
    pub fn complexity_value_sample(&self, point: &DenseTensor) -> Result<f64> {
        if self.basis.ncols() == 0 {
            return Ok(0.0);
        }
        if point.len() != self.basis.nrows() {
            return Err(TotError::InvalidInput(format!(
                "point has {} entries, basis rows {}",
                point.len(),
                self.basis.nrows()
            )));
        }
        let e = eval_barrier(point)?;
        let mut scaled = self.basis.clone();
        for (mut row, &x) in scaled.row_iter_mut().zip(point.values()) {
            row /= x;
        }
        let target = DVector::from_iterator(
            point.len(),
            e.gradient
                .values()
                .iter()
                .zip(point.values())
                .map(|(g, x)| g * x),
        );
        let qr = scaled.qr();
        let r = qr.r();
        let scale = r.diagonal().amax();
        if r.diagonal()
            .iter()
            .any(|d| d.is_nan() || d.abs() <= 1e-13 * scale)
        {
            return Err(TotError::Numerical("restricted Hessian is singular".into()));
        }
        Ok(qr.q().tr_mul(&target).norm_squared())
    }

    pub fn min_hessian_eigenvalue(&self, point: &DenseTensor) -> Result<f64> {
        let (_, h) = self.derivatives(point)?;
        Ok(h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{basis_matrix, null_basis, start_point, MarginalProblem, Variant};
    use crate::tensor::Shape;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn positive(rng: &mut StdRng, dims: &[usize]) -> DenseTensor {
        DenseTensor::from_fn(Shape::new(dims.to_vec()).unwrap(), |_| {
            rng.random_range(0.1..2.0)
        })
    }

    fn shifted(u: &DenseTensor, i: usize, h: f64) -> DenseTensor {
        let mut v = u.clone();
        v.values_mut()[i] += h;
        v
    }

    #[test]
    fn eval_examples() {
        let ones = DenseTensor::ones(Shape::new(vec![2, 2]).unwrap());
        let e = eval_barrier(&ones).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.gradient.values().iter().all(|&g| g == -1.0));
        assert!(e.hessian_diag.values().iter().all(|&h| h == 1.0));

        let q = DenseTensor::filled(Shape::new(vec![2, 2]).unwrap(), 0.25);
        assert_abs_diff_eq!(
            eval_barrier(&q).unwrap().value,
            4.0 * 4f64.ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            eval_barrier(&q).unwrap().value,
            5.545_177_444_479_562,
            epsilon = 1e-12
        );

        let mut bad = q.clone();
        bad.values_mut()[3] = 0.0;
        assert!(matches!(
            eval_barrier(&bad),
            Err(TotError::Domain { index: 3, .. })
        ));
        bad.values_mut()[3] = -1.0;
        assert!(eval_barrier(&bad).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = StdRng::seed_from_u64(21);
        let u = positive(&mut rng, &[2, 3, 2]);
        let e = eval_barrier(&u).unwrap();
        for i in 0..u.len() {
            let x = u.values()[i];
            let h = 1e-5 * (x.abs() + 1.0);
            let fd = (barrier_value(&shifted(&u, i, h)).unwrap()
                - barrier_value(&shifted(&u, i, -h)).unwrap())
                / (2.0 * h);
            assert_relative_eq!(e.gradient.values()[i], fd, max_relative = 1e-6);
            assert_abs_diff_eq!(e.gradient.values()[i] * x, -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn directional_form_examples() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let f = directional_forms(&DenseTensor::ones(s.clone()), &DenseTensor::ones(s.clone()))
            .unwrap();
        assert_eq!((f.second_form, f.third_form), (4.0, -8.0));
        let f = directional_forms(&DenseTensor::ones(s.clone()), &DenseTensor::zeros(s)).unwrap();
        assert_eq!((f.second_form, f.third_form), (0.0, 0.0));
    }

    #[test]
    fn third_form_matches_third_differences() {
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..5 {
            let u = positive(&mut rng, &[3, 2]);
            let v = DenseTensor::from_fn(u.shape().clone(), |_| rng.random_range(-1.0..1.0));
            let f = directional_forms(&u, &v).unwrap();
            let along = |t: f64| {
                let mut w = u.clone();
                w.axpy(t, &v).unwrap();
                barrier_value(&w).unwrap()
            };
            let third = |h: f64| {
                (along(2.0 * h) - 2.0 * along(h) + 2.0 * along(-h) - along(-2.0 * h))
                    / (2.0 * h * h * h)
            };
            // one Richardson step cancels the h² truncation term
            let h = 4e-3;
            let d3 = (4.0 * third(h / 2.0) - third(h)) / 3.0;
            let d2 = (along(h) - 2.0 * along(0.0) + along(-h)) / (h * h);
            assert_relative_eq!(f.third_form, d3, max_relative = 1e-4);
            assert_relative_eq!(f.second_form, d2, max_relative = 1e-3);
        }
    }

    #[test]
    fn third_form_matches_fine_differences_of_the_hessian() {
        // d³σ[v,v,v] is the derivative of v⊤∂²σ(u + tv)v at t = 0
        let mut rng = StdRng::seed_from_u64(23);
        let u = positive(&mut rng, &[2, 2, 2]);
        let v = DenseTensor::from_fn(u.shape().clone(), |_| rng.random_range(-1.0..1.0));
        let f = directional_forms(&u, &v).unwrap();
        let h = 1e-5;
        let at = |t: f64| {
            let mut w = u.clone();
            w.axpy(t, &v).unwrap();
            directional_forms(&w, &v).unwrap().second_form
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        assert_relative_eq!(f.third_form, fd, max_relative = 1e-4);
    }

    #[test]
    fn self_concordance_examples() {
        let mut rng = StdRng::seed_from_u64(24);
        let mut saw_violation = false;
        for _ in 0..200 {
            let u = positive(&mut rng, &[4]);
            let v = DenseTensor::from_fn(u.shape().clone(), |_| rng.random_range(-1.0..1.0));
            let s = directional_forms(&u, &v).unwrap();
            assert!(check_self_concordance(&s, 1.0).holds);
            let c4 = check_self_concordance(&s, 4.0);
            assert_eq!(c4.holds, c4.slack >= -1e-12);
            saw_violation |= !c4.holds;
        }
        assert!(saw_violation);

        let u = positive(&mut rng, &[5]);
        let mut v = DenseTensor::zeros(u.shape().clone());
        v.values_mut()[2] = -0.7;
        let c = check_self_concordance(&directional_forms(&u, &v).unwrap(), 1.0);
        assert!(c.slack.abs() <= 1e-12);
    }

    #[test]
    fn pseudo_quadratic_examples() {
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_abs_diff_eq!(
            pseudo_quadratic(&DMatrix::identity(3, 3), &y).unwrap(),
            y.norm_squared(),
            epsilon = 1e-12
        );
        let a = &y * y.transpose();
        assert_abs_diff_eq!(pseudo_quadratic(&a, &y).unwrap(), 1.0, epsilon = 1e-10);

        let off = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            pseudo_quadratic(&a, &off),
            Err(TotError::Certificate(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(pseudo_quadratic(&asym, &DVector::zeros(2)).is_err());
        let neg = -DMatrix::<f64>::identity(2, 2);
        assert!(pseudo_quadratic(&neg, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn unrestricted_complexity_is_size() {
        let mut rng = StdRng::seed_from_u64(25);
        for dims in [vec![4], vec![2, 2, 2], vec![3, 3, 3]] {
            let u = positive(&mut rng, &dims);
            let n: usize = dims.iter().product();
            assert_abs_diff_eq!(
                unrestricted_complexity(&u).unwrap(),
                n as f64,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn slice_complexity_on_two_by_two_start() {
        let shape = Shape::new(vec![2, 2]).unwrap();
        let p = MarginalProblem::new(
            DenseTensor::zeros(shape),
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            Variant::Marginal,
        )
        .unwrap();
        let slice = SliceBarrier::new(basis_matrix(&null_basis(&p), 4));
        let start = start_point(&p);
        let theta = slice.complexity_value_sample(&start).unwrap();
        // gradient is constant at the uniform point, orthogonal to the slice
        assert_abs_diff_eq!(theta, 0.0, epsilon = 1e-12);
        assert!(theta <= 4.0);
        assert!(slice.min_hessian_eigenvalue(&start).unwrap() > 0.0);
    }
}
