//! JSON instance files.
//!
//! ```json
//! { "dims": [2, 2], "variant": "U", "cost": [0, 1, 1, 0], "marginals": [[0.5, 0.5], [0.5, 0.5]] }
//! ```
//!
//! `cost` is flat row-major. `variant` is `"U"` (marginal constraints) or `"V"` (mode sums).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tot_core::{DenseTensor, MarginalProblem, Shape, Variant};

/// Marginal sums further than this from one are reported when renormalized.
pub const SUM_WARN_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed instance: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(field: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantTag {
    U,
    V,
}

impl From<VariantTag> for Variant {
    fn from(tag: VariantTag) -> Self {
        match tag {
            VariantTag::U => Variant::Marginal,
            VariantTag::V => Variant::ModeSum,
        }
    }
}

impl From<Variant> for VariantTag {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Marginal => VariantTag::U,
            Variant::ModeSum => VariantTag::V,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dims: Vec<usize>,
    pub variant: VariantTag,
    pub cost: Vec<f64>,
    pub marginals: Vec<Vec<f64>>,
}

impl InstanceFile {
    pub fn from_problem(problem: &MarginalProblem) -> Self {
        Self {
            dims: problem.dims().to_vec(),
            variant: problem.variant().into(),
            cost: problem.cost().values().to_vec(),
            marginals: problem.marginals().to_vec(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical form: compact JSON, fields in declaration order, shortest round-trip floats.
    pub fn emit(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    /// Validates and builds the problem. Marginals off by more than [`SUM_WARN_TOL`] are
    /// renormalized and reported in the returned warnings.
    pub fn to_problem(&self) -> Result<(MarginalProblem, Vec<String>), InstanceError> {
        if self.dims.is_empty() {
            return Err(field("dims", "needs at least one mode"));
        }
        if let Some(k) = self.dims.iter().position(|&n| n == 0) {
            return Err(field(format!("dims[{k}]"), "must be positive"));
        }
        let shape = Shape::new(self.dims.clone()).map_err(|e| field("dims", e.to_string()))?;
        if self.cost.len() != shape.len() {
            return Err(field(
                "cost",
                format!(
                    "expected {} entries for dims {:?}, got {}",
                    shape.len(),
                    self.dims,
                    self.cost.len()
                ),
            ));
        }
        if self.marginals.len() != self.dims.len() {
            return Err(field(
                "marginals",
                format!(
                    "expected {} vectors, got {}",
                    self.dims.len(),
                    self.marginals.len()
                ),
            ));
        }
        let mut warnings = Vec::new();
        let mut marginals = Vec::with_capacity(self.marginals.len());
        for (k, (p, &n)) in self.marginals.iter().zip(&self.dims).enumerate() {
            let name = format!("marginals[{k}]");
            if p.len() != n {
                return Err(field(
                    name,
                    format!("expected {n} entries, got {}", p.len()),
                ));
            }
            if let Some(i) = p.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(field(
                    name,
                    format!("entry {i} = {} is not strictly positive", p[i]),
                ));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > SUM_WARN_TOL {
                warnings.push(format!("{name} sums to {s}; renormalized"));
            }
            if (s - 1.0).abs() > tot_core::polytope::MARGINAL_SUM_TOL {
                marginals.push(p.iter().map(|v| v / s).collect());
            } else {
                marginals.push(p.clone());
            }
        }
        let cost = DenseTensor::from_values(shape, self.cost.clone())
            .map_err(|e| field("cost", e.to_string()))?;
        let problem = MarginalProblem::new(cost, marginals, self.variant.into())
            .map_err(|e| field("marginals", e.to_string()))?;
        Ok((problem, warnings))
    }
}
