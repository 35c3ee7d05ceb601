//! Dense d-mode tensors in row-major order.
//!
//! Modes are 0-based. The flat position of the multi-index `(i_0, ..., i_{d-1})`
//! is `sum_k i_k * stride_k` with `stride_k = prod_{j > k} n_j`, so the last
//! index varies fastest.

use std::fmt;

use crate::error::{Result, TotError};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(TotError::InvalidInput(
                "shape needs at least one mode".into(),
            ));
        }
        if let Some(k) = dims.iter().position(|&n| n == 0) {
            return Err(TotError::InvalidInput(format!("mode {k} has zero length")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| TotError::InvalidInput("tensor size overflows usize".into()))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Always false: every mode has length at least one.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.dims[mode + 1..].iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        (0..self.order()).map(|k| self.stride(k)).collect()
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order());
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| {
            debug_assert!(i < n);
            acc * n + i
        })
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.order()];
        for (slot, &n) in index.iter_mut().zip(&self.dims).rev() {
            *slot = flat % n;
            flat /= n;
        }
        index
    }

    /// Index of `mode` at flat position `flat`.
    #[inline]
    pub fn mode_index(&self, flat: usize, mode: usize) -> usize {
        (flat / self.stride(mode)) % self.dims[mode]
    }

    /// The shape with `mode` removed. `None` for an order-one shape.
    pub fn without_mode(&self, mode: usize) -> Option<Shape> {
        if self.order() < 2 {
            return None;
        }
        let mut dims = self.dims.clone();
        dims.remove(mode);
        Some(Shape { dims })
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(TotError::InvalidInput(format!(
                "mode {mode} out of range for an order-{} tensor",
                self.order()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Shape{:?}", self.dims)
    }
}

/// Maps a flat index of a tensor to the flat index of its slice with `mode` removed.
#[derive(Clone, Copy)]
struct ModeSplit {
    stride: usize,
    len: usize,
}

impl ModeSplit {
    fn new(shape: &Shape, mode: usize) -> Self {
        Self {
            stride: shape.stride(mode),
            len: shape.dims[mode],
        }
    }

    #[inline]
    fn split(self, flat: usize) -> (usize, usize) {
        let outer = flat / (self.stride * self.len);
        let inner = flat % self.stride;
        let i = (flat / self.stride) % self.len;
        (i, outer * self.stride + inner)
    }
}

#[derive(Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn from_values(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(TotError::InvalidInput(format!(
                "{} values supplied for a tensor of size {}",
                values.len(),
                shape.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        let values = vec![value; shape.len()];
        Self { shape, values }
    }

    pub fn zeros(shape: Shape) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn ones(shape: Shape) -> Self {
        Self::filled(shape, 1.0)
    }

    /// Order-one tensor holding `values`.
    pub fn vector(values: Vec<f64>) -> Result<Self> {
        Self::from_values(Shape::new(vec![values.len()])?, values)
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let values = (0..shape.len())
            .map(|flat| f(&shape.multi_index(flat)))
            .collect();
        Self { shape, values }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.shape.flat_index(index)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &DenseTensor) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(TotError::ShapeMismatch {
                expected: self.dims().to_vec(),
                got: other.dims().to_vec(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("dims", &self.shape.dims)
            .field("values", &self.values)
            .finish()
    }
}

/// Outer product `v_0 ⊗ v_1 ⊗ ... ⊗ v_{d-1}`.
pub fn outer<V: AsRef<[f64]>>(vectors: &[V]) -> Result<DenseTensor> {
    if vectors.is_empty() {
        return Err(TotError::InvalidInput(
            "outer product of zero vectors".into(),
        ));
    }
    let dims = vectors.iter().map(|v| v.as_ref().len()).collect();
    let shape = Shape::new(dims)?;
    let mut values = vec![1.0];
    for v in vectors {
        values = values
            .iter()
            .flat_map(|&a| v.as_ref().iter().map(move |&b| a * b))
            .collect();
    }
    DenseTensor::from_values(shape, values)
}

/// Hilbert–Schmidt inner product.
pub fn inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(dot(&a.values, &b.values))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contraction of `u` with `x` over every mode except `mode`.
///
/// With `x` all ones this is the `mode`-th marginal of `u`.
pub fn contract_all_but(u: &DenseTensor, mode: usize, x: &DenseTensor) -> Result<Vec<f64>> {
    u.shape.check_mode(mode)?;
    let n = u.dims()[mode];
    match u.shape.without_mode(mode) {
        None => {
            if x.len() != 1 {
                return Err(TotError::InvalidInput(
                    "contraction of an order-one tensor takes a scalar".into(),
                ));
            }
            Ok(u.values.iter().map(|&v| v * x.values[0]).collect())
        }
        Some(rest) => {
            if x.shape != rest {
                return Err(TotError::ShapeMismatch {
                    expected: rest.dims,
                    got: x.dims().to_vec(),
                });
            }
            let split = ModeSplit::new(&u.shape, mode);
            let mut y = vec![0.0; n];
            for (flat, &v) in u.values.iter().enumerate() {
                let (i, j) = split.split(flat);
                y[i] += v * x.values[j];
            }
            Ok(y)
        }
    }
}

/// The `mode`-th marginal `u ×_{k̄} J`.
pub fn marginal(u: &DenseTensor, mode: usize) -> Result<Vec<f64>> {
    u.shape.check_mode(mode)?;
    let split = ModeSplit::new(&u.shape, mode);
    let mut y = vec![0.0; u.dims()[mode]];
    for (flat, &v) in u.values.iter().enumerate() {
        y[split.split(flat).0] += v;
    }
    Ok(y)
}

/// Mode-`k` product `u ×_k x`, a tensor over the remaining modes.
///
/// For an order-one tensor the result is the order-one tensor holding the scalar `⟨u, x⟩`.
pub fn mode_contract(u: &DenseTensor, mode: usize, x: &[f64]) -> Result<DenseTensor> {
    u.shape.check_mode(mode)?;
    let n = u.dims()[mode];
    if x.len() != n {
        return Err(TotError::InvalidInput(format!(
            "mode {mode} has length {n} but the vector has length {}",
            x.len()
        )));
    }
    let rest = u
        .shape
        .without_mode(mode)
        .unwrap_or_else(|| Shape { dims: vec![1] });
    let split = ModeSplit::new(&u.shape, mode);
    let mut w = vec![0.0; rest.len()];
    for (flat, &v) in u.values.iter().enumerate() {
        let (i, j) = split.split(flat);
        w[j] += v * x[i];
    }
    DenseTensor::from_values(rest, w)
}

pub fn frobenius_norm(u: &DenseTensor) -> f64 {
    u.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}
