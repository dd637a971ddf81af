//! Point samples of a manifold, their I/O, neighbor search and the
//! deterministic unit-disk sampler used by the experiments.

mod index;
mod io;
mod sampling;

pub use index::NeighborIndex;
pub use io::{load_cloud, save_cloud, CloudFormat};
pub use sampling::sample_unit_disk;

use crate::error::{PimError, Result};

/// Samples `p_i` of a `k`-manifold embedded in `R^d`, with optional
/// quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    intrinsic_dim: usize,
    boundary: Vec<bool>,
    volume: Option<Vec<f64>>,
    boundary_weight: Option<Vec<f64>>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates (`n * dim` values).
    pub fn new(
        coords: Vec<f64>,
        dim: usize,
        intrinsic_dim: usize,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        if dim == 0 || intrinsic_dim == 0 || intrinsic_dim > dim {
            return Err(PimError::InvalidCloud(format!(
                "need 1 <= k <= d, got k = {intrinsic_dim}, d = {dim}"
            )));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(PimError::InvalidCloud(format!(
                "{} coordinates do not form rows of dimension {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        if boundary.len() != n {
            return Err(PimError::InvalidCloud(format!(
                "{} boundary flags for {n} points",
                boundary.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(PimError::InvalidCloud(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(PointCloud {
            coords,
            dim,
            intrinsic_dim,
            boundary,
            volume: None,
            boundary_weight: None,
        })
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Intrinsic dimension `k`.
    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_ids(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.boundary[i]).collect()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    pub fn volume_weights(&self) -> Option<&[f64]> {
        self.volume.as_deref()
    }

    pub fn boundary_weights(&self) -> Option<&[f64]> {
        self.boundary_weight.as_deref()
    }

    pub(crate) fn require_volume(&self) -> Result<&[f64]> {
        self.volume
            .as_deref()
            .ok_or_else(|| PimError::MissingData("volume weights have not been set".into()))
    }

    pub(crate) fn require_boundary_weights(&self) -> Result<&[f64]> {
        self.boundary_weight
            .as_deref()
            .ok_or_else(|| PimError::MissingData("boundary weights have not been set".into()))
    }

    pub fn set_volume_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.len() {
            return Err(PimError::InvalidCloud(format!(
                "{} volume weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(PimError::InvalidCloud(format!(
                "volume weight {} of point {i} is not a nonnegative number",
                weights[i]
            )));
        }
        self.volume = Some(weights);
        Ok(())
    }

    /// Sets boundary measure weights. Entries of non-boundary points must be zero.
    pub fn set_boundary_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.len() {
            return Err(PimError::InvalidCloud(format!(
                "{} boundary weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(PimError::InvalidCloud(format!(
                    "boundary weight {w} of point {i} is not a nonnegative number"
                )));
            }
            if w != 0.0 && !self.boundary[i] {
                return Err(PimError::InvalidCloud(format!(
                    "point {i} carries a boundary weight but is not flagged as boundary"
                )));
            }
        }
        self.boundary_weight = Some(weights);
        Ok(())
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.point(i), self.point(j))
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Resolution of a sampling: `fill_distance` is the largest nearest-neighbor
/// distance (the proxy for `h`), `min_spacing` the smallest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingStats {
    pub fill_distance: f64,
    pub min_spacing: f64,
}

/// Nearest-distinct-neighbor statistics of the cloud.
pub fn estimate_fill_distance(cloud: &PointCloud, index: &NeighborIndex) -> Result<SamplingStats> {
    if cloud.len() < 2 {
        return Err(PimError::InvalidCloud(
            "need at least two points to measure spacing".into(),
        ));
    }
    let mut fill: f64 = 0.0;
    let mut min = f64::INFINITY;
    for i in 0..cloud.len() {
        let Some((_, d)) = index.nearest_distinct(cloud.point(i)) else {
            return Err(PimError::DegenerateGeometry("all points coincide".into()));
        };
        fill = fill.max(d);
        min = min.min(d);
    }
    Ok(SamplingStats {
        fill_distance: fill,
        min_spacing: min,
    })
}
