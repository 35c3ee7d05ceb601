//! Fixed instances shared by the benchmarks.

use tot_core::{DenseTensor, MarginalProblem, Shape, Variant};

/// Order-`d` instance with every mode of size `n`, cost `(Σ_k i_k) mod 10 · (i_0 + 1) mod 7`,
/// and marginals proportional to `1, 2, …, n`.
pub fn fixture(d: usize, n: usize, variant: Variant) -> MarginalProblem {
    let shape = Shape::new(vec![n; d]).expect("positive dims");
    let cost = DenseTensor::from_fn(shape, |idx| {
        let s: usize = idx.iter().sum();
        ((s % 10) * ((idx[0] + 1) % 7)) as f64
    });
    let total = (n * (n + 1) / 2) as f64;
    let p: Vec<f64> = (1..=n).map(|i| i as f64 / total).collect();
    MarginalProblem::new(cost, vec![p; d], variant).expect("valid fixture")
}
