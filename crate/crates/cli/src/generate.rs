//! Seeded random instances.
//!
//! The generator is SplitMix64 (state `x`, step `x += 0x9E3779B97F4A7C15`, output mixed by
//! the standard `30/27/31` shift-multiply finalizer), seeded directly with a 64-bit value.
//! An instance with `dims`, drawn from seed `s`, consumes outputs in this order:
//!
//! 1. one output per cost entry in row-major order; the entry is `output % 10`;
//! 2. for [`MarginalKind::Random`], one output per marginal entry, mode by mode; the raw
//!    weight is `0.1 + 0.9 * (output >> 11) * 2^-53` and each marginal is divided by its sum.
//!
//! Uniform marginals are `1/n_k` and consume nothing. Benchmark trials use the seed
//! [`trial_seed`]`(seed, d, n, trial)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use tot_core::{DenseTensor, MarginalProblem, Result, Shape, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MarginalKind {
    Uniform,
    Random,
}

pub struct InstanceRng(SplitMix64);

impl InstanceRng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Integer in `[0, n)` by reduction modulo `n`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

pub fn trial_seed(seed: u64, d: usize, n: usize, trial: usize) -> u64 {
    seed ^ ((d as u64) << 48) ^ ((n as u64) << 32) ^ trial as u64
}

pub fn random_instance(
    rng: &mut InstanceRng,
    dims: &[usize],
    marginals: MarginalKind,
    variant: Variant,
) -> Result<MarginalProblem> {
    let shape = Shape::new(dims.to_vec())?;
    let cost = (0..shape.len()).map(|_| rng.below(10) as f64).collect();
    let cost = DenseTensor::from_values(shape, cost)?;
    let marginals = dims
        .iter()
        .map(|&n| match marginals {
            MarginalKind::Uniform => vec![1.0 / n as f64; n],
            MarginalKind::Random => {
                let raw: Vec<f64> = (0..n).map(|_| 0.1 + 0.9 * rng.unit()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            }
        })
        .collect();
    MarginalProblem::new(cost, marginals, variant)
}
