use rayon::prelude::*;

use super::{SourceField, SparseOperator};
use crate::error::{PimError, Result};
use crate::kernel::KernelSpec;
use crate::pointcloud::{NeighborIndex, PointCloud};

/// Robin-penalty system over all samples:
///
/// ```text
/// (1/t) Σ_j R_t(p_i,p_j)(u_i - u_j) V_j + (2/β) Σ_{j ∈ ∂M} R̄_t(p_i,p_j) u_j S_j
///     = Σ_j R̄_t(p_i,p_j) f(p_j) V_j + (2/β) Σ_{j ∈ ∂M} R̄_t(p_i,p_j) g(p_j) S_j
/// ```
///
/// approximating `u + β ∂u/∂n = g` on the boundary. Rows are scaled by
/// `V_i`; the boundary coupling keeps the matrix nonsymmetric.
#[derive(Debug, Clone)]
pub struct RobinSystem {
    pub matrix: SparseOperator,
    pub beta: f64,
    pub t: f64,
}

pub fn assemble_robin(
    cloud: &PointCloud,
    index: &NeighborIndex,
    kernel: &KernelSpec,
    beta: f64,
) -> Result<RobinSystem> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(PimError::Parameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let v = cloud.require_volume()?;
    let s = cloud.require_boundary_weights()?;
    let radius = kernel.support_radius();
    let inv_t = 1.0 / kernel.t();
    let penalty = 2.0 / beta;
    let rows: Vec<Vec<(usize, f64)>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            let mut total = 0.0;
            for (j, d2) in index.query_radius_dist2(cloud.point(i), radius) {
                if j != i {
                    let r = kernel.rt_dist2(d2);
                    total += r * v[j];
                    row.push((j, -(r * (v[i] * v[j])) * inv_t));
                }
                if cloud.is_boundary(j) {
                    row.push((j, v[i] * penalty * kernel.rbart_dist2(d2) * s[j]));
                }
            }
            row.push((i, v[i] * total * inv_t));
            row
        })
        .collect();
    Ok(RobinSystem {
        matrix: SparseOperator::from_rows(cloud.len(), rows),
        beta,
        t: kernel.t(),
    })
}

impl RobinSystem {
    /// Right-hand side for source `f` and Robin data `g`.
    pub fn rhs(
        &self,
        cloud: &PointCloud,
        index: &NeighborIndex,
        kernel: &KernelSpec,
        source: &SourceField,
    ) -> Result<Vec<f64>> {
        let v = cloud.require_volume()?;
        let s = cloud.require_boundary_weights()?;
        let f = source.f.sample_values(cloud, "source f")?;
        let g = source.g.sample_values(cloud, "boundary data g")?;
        let radius = kernel.support_radius();
        let penalty = 2.0 / self.beta;
        Ok((0..cloud.len())
            .into_par_iter()
            .map(|i| {
                let mut body = 0.0;
                let mut bdry = 0.0;
                for (j, d2) in index.query_radius_dist2(cloud.point(i), radius) {
                    let rb = kernel.rbart_dist2(d2);
                    body += rb * f[j] * v[j];
                    if cloud.is_boundary(j) {
                        bdry += rb * g[j] * s[j];
                    }
                }
                v[i] * (body + penalty * bdry)
            })
            .collect())
    }
}
