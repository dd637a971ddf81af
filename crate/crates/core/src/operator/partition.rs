use crate::error::{PimError, Result};
use crate::pointcloud::{NeighborIndex, PointCloud};

/// Split of the samples into the interior `M′_t` and the constrained
/// collar `V_t` of samples within `2√t` of a boundary sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPartition {
    pub interior_ids: Vec<usize>,
    pub constrained_ids: Vec<usize>,
    pub t_used: f64,
    /// global id -> position in `interior_ids`
    local: Vec<Option<usize>>,
}

impl DomainPartition {
    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_ids.len()
    }

    pub fn constrained_count(&self) -> usize {
        self.constrained_ids.len()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.local[global]
    }

    pub fn is_constrained(&self, global: usize) -> bool {
        self.local[global].is_none()
    }

    /// Partition treating every sample as interior (no constraint).
    pub fn unconstrained(n: usize, t: f64) -> Self {
        Self::from_flags(&vec![false; n], t)
    }

    pub(crate) fn from_flags(constrained: &[bool], t: f64) -> Self {
        let mut interior_ids = Vec::new();
        let mut constrained_ids = Vec::new();
        let mut local = vec![None; constrained.len()];
        for (i, &c) in constrained.iter().enumerate() {
            if c {
                constrained_ids.push(i);
            } else {
                local[i] = Some(interior_ids.len());
                interior_ids.push(i);
            }
        }
        DomainPartition {
            interior_ids,
            constrained_ids,
            t_used: t,
            local,
        }
    }

    /// Interior entries of a full-length vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior_ids.iter().map(|&i| full[i]).collect()
    }

    /// Full-length vector with `interior` on `M′_t` and `fill` on `V_t`.
    pub fn extend(&self, interior: &[f64], fill: &[f64]) -> Vec<f64> {
        let mut out = fill.to_vec();
        for (&g, &v) in self.interior_ids.iter().zip(interior) {
            out[g] = v;
        }
        for &g in &self.constrained_ids {
            out[g] = fill[g];
        }
        out
    }
}

pub fn partition_domain(
    cloud: &PointCloud,
    index: &NeighborIndex,
    t: f64,
) -> Result<DomainPartition> {
    if !(t.is_finite() && t > 0.0) {
        return Err(PimError::Parameter(format!(
            "bandwidth t must be positive, got {t}"
        )));
    }
    let radius = 2.0 * t.sqrt();
    let mut constrained = vec![false; cloud.len()];
    for b in cloud.boundary_ids() {
        constrained[b] = true;
        index.for_each_within(cloud.point(b), radius, |j, _| constrained[j] = true);
    }
    let part = DomainPartition::from_flags(&constrained, t);
    if part.interior_ids.is_empty() {
        return Err(PimError::EmptyInterior { t });
    }
    Ok(part)
}
