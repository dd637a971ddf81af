use super::{DomainPartition, SolveReport, SourceField};
use crate::error::{PimError, Result};
use crate::kernel::KernelSpec;
use crate::pointcloud::{NeighborIndex, PointCloud};

/// Continuous extension of a discrete solution:
///
/// ```text
/// u(x) = [Σ_j R_t(x,p_j) u_j V_j + t Σ_j R̄_t(x,p_j) f(p_j) V_j] / Σ_j R_t(x,p_j) V_j
/// ```
///
/// away from the boundary, and the constraint value `g(x)` within `2√t` of
/// a boundary sample.
pub struct Interpolant<'a> {
    cloud: &'a PointCloud,
    index: &'a NeighborIndex,
    kernel: &'a KernelSpec,
    source: &'a SourceField,
    solution: &'a [f64],
    f_values: Vec<f64>,
    boundary_index: Option<NeighborIndex>,
}

impl<'a> Interpolant<'a> {
    pub fn new(
        report: &'a SolveReport,
        cloud: &'a PointCloud,
        index: &'a NeighborIndex,
        kernel: &'a KernelSpec,
        partition: &DomainPartition,
        source: &'a SourceField,
    ) -> Result<Self> {
        Self::from_solution(&report.solution, cloud, index, kernel, partition, source)
    }

    pub fn from_solution(
        solution: &'a [f64],
        cloud: &'a PointCloud,
        index: &'a NeighborIndex,
        kernel: &'a KernelSpec,
        partition: &DomainPartition,
        source: &'a SourceField,
    ) -> Result<Self> {
        super::assembly::check_consistent(cloud, kernel, partition)?;
        cloud.require_volume()?;
        if solution.len() != cloud.len() {
            return Err(PimError::Parameter(format!(
                "solution has {} entries for {} samples",
                solution.len(),
                cloud.len()
            )));
        }
        let boundary: Vec<usize> = cloud.boundary_ids();
        let boundary_index = if boundary.is_empty() {
            None
        } else {
            let sub = PointCloud::new(
                boundary
                    .iter()
                    .flat_map(|&i| cloud.point(i).iter().copied())
                    .collect(),
                cloud.dim(),
                cloud.intrinsic_dim(),
                vec![true; boundary.len()],
            )?;
            Some(NeighborIndex::build(&sub))
        };
        Ok(Interpolant {
            cloud,
            index,
            kernel,
            source,
            solution,
            f_values: source.f.sample_values(cloud, "source f")?,
            boundary_index,
        })
    }

    /// Whether `x` lies in the constrained collar.
    pub fn in_collar(&self, x: &[f64]) -> bool {
        let r = self.kernel.support_radius();
        self.boundary_index.as_ref().is_some_and(|b| {
            let mut hit = false;
            b.for_each_within(x, r, |_, _| hit = true);
            hit
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.cloud.dim() {
            return Err(PimError::Parameter(format!(
                "point has dimension {}, cloud has {}",
                x.len(),
                self.cloud.dim()
            )));
        }
        if self.in_collar(x) {
            return self.source.g.at_point(x);
        }
        let v = self.cloud.require_volume()?;
        let (mut num, mut rhs, mut w) = (0.0, 0.0, 0.0);
        for (j, d2) in self
            .index
            .query_radius_dist2(x, self.kernel.support_radius())
        {
            let r = self.kernel.rt_dist2(d2);
            num += r * self.solution[j] * v[j];
            w += r * v[j];
            rhs += self.kernel.rbart_dist2(d2) * self.f_values[j] * v[j];
        }
        if w == 0.0 {
            return Err(PimError::Coverage);
        }
        Ok((num + self.kernel.t() * rhs) / w)
    }
}
