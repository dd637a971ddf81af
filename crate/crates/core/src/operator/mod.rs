//! Discrete operators of the volume-constrained point integral method.
//!
//! For interior samples `i ∈ M′_t` the Poisson system reads
//!
//! ```text
//! (1/t) Σ_j R_t(p_i, p_j)(u_i - u_j) V_j = Σ_j R̄_t(p_i, p_j) f(p_j) V_j
//! ```
//!
//! with `u_j = g(p_j)` held fixed on the constrained collar `V_t`. Rows are
//! scaled by `V_i`, which makes the interior block symmetric positive
//! definite.

mod assembly;
mod diagnostics;
mod interpolate;
mod partition;
mod robin;
mod sparse;

use std::sync::Arc;

pub use assembly::{assemble_load, assemble_mass, assemble_stiffness};
pub use diagnostics::{
    boundary_layer_mass, coercivity_probe, discrete_l2_error, weighted_l2_error,
};
pub use interpolate::Interpolant;
pub use partition::{partition_domain, DomainPartition};
pub use robin::{assemble_robin, RobinSystem};
pub use sparse::SparseOperator;

pub(crate) use sparse::dot;

use crate::error::{PimError, Result};
use crate::pointcloud::PointCloud;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A scalar field given either analytically or by its values at the samples.
#[derive(Clone)]
pub enum Field {
    Zero,
    Func(PointFn),
    Samples(Arc<Vec<f64>>),
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Zero => write!(f, "Zero"),
            Field::Func(_) => write!(f, "Func(..)"),
            Field::Samples(v) => write!(f, "Samples(len = {})", v.len()),
        }
    }
}

impl Field {
    pub fn func(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Field::Func(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Field::Zero
        } else {
            Field::func(move |_| c)
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Field::Zero)
    }

    /// Value at sample `i` located at `p`.
    pub fn at_sample(&self, i: usize, p: &[f64]) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Func(f) => f(p),
            Field::Samples(v) => v[i],
        }
    }

    /// Value at an arbitrary location; sampled fields cannot be evaluated
    /// off the cloud.
    pub fn at_point(&self, x: &[f64]) -> Result<f64> {
        match self {
            Field::Zero => Ok(0.0),
            Field::Func(f) => Ok(f(x)),
            Field::Samples(_) => Err(PimError::MissingData(
                "field is only known at the samples".into(),
            )),
        }
    }

    /// All sample values, checked for finiteness.
    pub fn sample_values(&self, cloud: &PointCloud, name: &str) -> Result<Vec<f64>> {
        if let Field::Samples(v) = self {
            if v.len() != cloud.len() {
                return Err(PimError::MissingData(format!(
                    "{name} has {} values for {} samples",
                    v.len(),
                    cloud.len()
                )));
            }
        }
        let vals: Vec<f64> = cloud
            .points()
            .enumerate()
            .map(|(i, p)| self.at_sample(i, p))
            .collect();
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(PimError::Parameter(format!(
                "{name} is not finite at sample {i}"
            )));
        }
        Ok(vals)
    }
}

/// Right-hand side `f` and the constraint values `g` imposed on `V_t`.
#[derive(Debug, Clone)]
pub struct SourceField {
    pub f: Field,
    pub g: Field,
}

impl SourceField {
    pub fn new(f: Field, g: Field) -> Self {
        SourceField { f, g }
    }

    pub fn homogeneous(f: Field) -> Self {
        SourceField { f, g: Field::Zero }
    }

    pub fn zero() -> Self {
        SourceField::homogeneous(Field::Zero)
    }
}

/// Outcome of a Poisson solve, with the solution at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub interior_count: usize,
    pub constrained_count: usize,
}
