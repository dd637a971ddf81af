use rayon::prelude::*;

use super::{DomainPartition, SourceField, SparseOperator};
use crate::error::{PimError, Result};
use crate::kernel::KernelSpec;
use crate::pointcloud::{NeighborIndex, PointCloud};

pub(crate) fn check_consistent(
    cloud: &PointCloud,
    kernel: &KernelSpec,
    partition: &DomainPartition,
) -> Result<()> {
    if partition.len() != cloud.len() {
        return Err(PimError::Parameter(format!(
            "partition covers {} samples, cloud has {}",
            partition.len(),
            cloud.len()
        )));
    }
    let (a, b) = (kernel.t(), partition.t_used);
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(PimError::Parameter(format!(
            "kernel bandwidth t = {a} differs from the partition's t = {b}"
        )));
    }
    Ok(())
}

/// Symmetrized volume-constrained stiffness on the interior block:
///
/// `A_ij = V_i (1/t) [δ_ij Σ_l R_t(p_i, p_l) V_l - R_t(p_i, p_j) V_j]`
///
/// where `l` runs over all samples, so couplings to the collar end up on
/// the diagonal.
pub fn assemble_stiffness(
    cloud: &PointCloud,
    index: &NeighborIndex,
    kernel: &KernelSpec,
    partition: &DomainPartition,
) -> Result<SparseOperator> {
    check_consistent(cloud, kernel, partition)?;
    let v = cloud.require_volume()?;
    let radius = kernel.support_radius();
    let inv_t = 1.0 / kernel.t();
    let rows: Vec<Vec<(usize, f64)>> = partition
        .interior_ids
        .par_iter()
        .enumerate()
        .map(|(li, &i)| {
            let mut row = Vec::new();
            let mut total = 0.0;
            for (j, d2) in index.query_radius_dist2(cloud.point(i), radius) {
                if j == i {
                    continue;
                }
                let r = kernel.rt_dist2(d2);
                if r == 0.0 {
                    continue;
                }
                total += r * v[j];
                if let Some(lj) = partition.local_index(j) {
                    // (V_i V_j) is commutative, so A_ij == A_ji bitwise
                    row.push((lj, -(r * (v[i] * v[j])) * inv_t));
                }
            }
            row.push((li, v[i] * total * inv_t));
            row
        })
        .collect();
    Ok(SparseOperator::from_rows(partition.interior_count(), rows))
}

/// Load vector on the interior:
///
/// `b_i = V_i [Σ_j R̄_t(p_i, p_j) f(p_j) V_j + (1/t) Σ_{j ∈ V_t} R_t(p_i, p_j) g(p_j) V_j]`
pub fn assemble_load(
    cloud: &PointCloud,
    index: &NeighborIndex,
    kernel: &KernelSpec,
    partition: &DomainPartition,
    source: &SourceField,
) -> Result<Vec<f64>> {
    check_consistent(cloud, kernel, partition)?;
    let v = cloud.require_volume()?;
    let f = source.f.sample_values(cloud, "source f")?;
    let g = source.g.sample_values(cloud, "constraint g")?;
    let radius = kernel.support_radius();
    let inv_t = 1.0 / kernel.t();
    Ok(partition
        .interior_ids
        .par_iter()
        .map(|&i| {
            let mut body = 0.0;
            let mut collar = 0.0;
            for (j, d2) in index.query_radius_dist2(cloud.point(i), radius) {
                body += kernel.rbart_dist2(d2) * f[j] * v[j];
                if partition.is_constrained(j) {
                    collar += kernel.rt_dist2(d2) * g[j] * v[j];
                }
            }
            v[i] * (body + inv_t * collar)
        })
        .collect())
}

/// Interior mass matrix `B_ij = V_i R̄_t(p_i, p_j) V_j`.
pub fn assemble_mass(
    cloud: &PointCloud,
    index: &NeighborIndex,
    kernel: &KernelSpec,
    partition: &DomainPartition,
) -> Result<SparseOperator> {
    check_consistent(cloud, kernel, partition)?;
    let v = cloud.require_volume()?;
    let radius = kernel.support_radius();
    let rows: Vec<Vec<(usize, f64)>> = partition
        .interior_ids
        .par_iter()
        .map(|&i| {
            index
                .query_radius_dist2(cloud.point(i), radius)
                .into_iter()
                .filter_map(|(j, d2)| {
                    let lj = partition.local_index(j)?;
                    Some((lj, kernel.rbart_dist2(d2) * (v[i] * v[j])))
                })
                .collect()
        })
        .collect();
    Ok(SparseOperator::from_rows(partition.interior_count(), rows))
}
