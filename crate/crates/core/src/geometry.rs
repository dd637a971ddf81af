//! Integration weights estimated from raw coordinates.
//!
//! Volume weights are Voronoi cell areas computed in an estimated tangent
//! plane; boundary weights are half the chord lengths to the two neighbors
//! along the boundary curve.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{PimError, Result};
use crate::pointcloud::{NeighborIndex, PointCloud};

/// Neighbors used for tangent planes and Voronoi cells unless overridden.
pub const DEFAULT_NEIGHBORS: usize = 16;

/// Vertices of the polygon standing in for the neighborhood's bounding circle.
const CIRCLE_SIDES: usize = 96;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub origin: usize,
    /// `k` orthonormal vectors of length `d`.
    pub basis: Vec<Vec<f64>>,
}

impl TangentFrame {
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| b.iter().zip(v).map(|(x, y)| x * y).sum())
            .collect()
    }
}

fn principal_frame(cloud: &PointCloud, origin: usize, members: &[usize]) -> Result<TangentFrame> {
    let d = cloud.dim();
    let k = cloud.intrinsic_dim();
    let mut mean = vec![0.0; d];
    for &j in members {
        for (m, x) in mean.iter_mut().zip(cloud.point(j)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= members.len() as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for &j in members {
        let c: Vec<f64> = cloud
            .point(j)
            .iter()
            .zip(&mean)
            .map(|(x, m)| x - m)
            .collect();
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += c[a] * c[b];
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let kth = eig.eigenvalues[order[k - 1]];
    if !(top > 0.0) || kth <= 1e-10 * top {
        return Err(PimError::DegenerateGeometry(format!(
            "neighborhood of point {origin} does not span {k} dimensions"
        )));
    }
    let basis = order[..k]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();
    Ok(TangentFrame { origin, basis })
}

fn neighbors_of(cloud: &PointCloud, index: &NeighborIndex, i: usize, m: usize) -> Vec<usize> {
    index
        .knn(cloud.point(i), m + 1)
        .into_iter()
        .filter(|&(j, d)| j != i && d > 0.0)
        .take(m)
        .map(|(j, _)| j)
        .collect()
}

/// Top-`k` principal directions of point `i` and its `m_neighbors` nearest
/// neighbors, centered at their mean.
pub fn estimate_tangent_frame(
    cloud: &PointCloud,
    index: &NeighborIndex,
    i: usize,
    m_neighbors: usize,
) -> Result<TangentFrame> {
    let k = cloud.intrinsic_dim();
    if m_neighbors < k + 1 || m_neighbors > cloud.len().saturating_sub(1) {
        return Err(PimError::Parameter(format!(
            "m_neighbors = {m_neighbors} must lie in [{}, {}]",
            k + 1,
            cloud.len().saturating_sub(1)
        )));
    }
    let mut members = neighbors_of(cloud, index, i, m_neighbors);
    members.push(i);
    principal_frame(cloud, i, &members)
}

type Polygon = Vec<[f64; 2]>;

/// Keeps the part of `poly` with `a·x <= c`.
fn clip(poly: &Polygon, a: [f64; 2], c: f64) -> Polygon {
    let side = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (idx, p) in poly.iter().enumerate() {
        let q = &poly[(idx + 1) % poly.len()];
        let (sp, sq) = (side(p), side(q));
        if sp <= 0.0 {
            out.push(*p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let s = sp / (sp - sq);
            out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    out
}

fn area(poly: &Polygon) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        .abs()
}

/// Area of the Voronoi cell of the origin among `sites`, clipped to the
/// disk of radius `max |site|` and, if given, to the half-plane `n·x <= 0`.
fn voronoi_cell_area(sites: &[[f64; 2]], outward: Option<[f64; 2]>) -> f64 {
    let radius = sites.iter().map(|q| q[0].hypot(q[1])).fold(0.0, f64::max);
    let mut poly: Polygon = (0..CIRCLE_SIDES)
        .map(|s| {
            let a = 2.0 * PI * s as f64 / CIRCLE_SIDES as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect();
    if let Some(n) = outward {
        poly = clip(&poly, n, 0.0);
    }
    for q in sites {
        // bisector of origin and q: x·q <= |q|²/2
        poly = clip(&poly, *q, 0.5 * (q[0] * q[0] + q[1] * q[1]));
        if poly.is_empty() {
            break;
        }
    }
    area(&poly)
}

fn cell_weight(cloud: &PointCloud, index: &NeighborIndex, i: usize, m: usize) -> Result<f64> {
    let neighbors = neighbors_of(cloud, index, i, m);
    let mut members = neighbors.clone();
    members.push(i);
    let frame = principal_frame(cloud, i, &members)?;
    let origin = cloud.point(i);
    let project = |j: usize| -> [f64; 2] {
        let v: Vec<f64> = cloud
            .point(j)
            .iter()
            .zip(origin)
            .map(|(a, b)| a - b)
            .collect();
        let p = frame.project(&v);
        [p[0], p[1]]
    };
    let sites: Vec<[f64; 2]> = neighbors.iter().map(|&j| project(j)).collect();

    let outward = if cloud.is_boundary(i) {
        boundary_normal(cloud, &neighbors, &sites)
    } else {
        None
    };
    let a = voronoi_cell_area(&sites, outward);
    if !(a > 0.0) {
        return Err(PimError::DegenerateGeometry(format!(
            "empty Voronoi cell at point {i}"
        )));
    }
    Ok(a)
}

/// Outward normal of the boundary line through the origin, fitted to the
/// projected boundary neighbors and oriented away from interior ones.
fn boundary_normal(
    cloud: &PointCloud,
    neighbors: &[usize],
    sites: &[[f64; 2]],
) -> Option<[f64; 2]> {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let mut inner = [0.0, 0.0];
    let mut n_boundary = 0;
    for (&j, q) in neighbors.iter().zip(sites) {
        if cloud.is_boundary(j) {
            sxx += q[0] * q[0];
            sxy += q[0] * q[1];
            syy += q[1] * q[1];
            n_boundary += 1;
        } else {
            inner[0] += q[0];
            inner[1] += q[1];
        }
    }
    if n_boundary == 0 || (inner[0] == 0.0 && inner[1] == 0.0) {
        return None;
    }
    // principal direction of the 2×2 scatter (line through the origin)
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut n = [-theta.sin(), theta.cos()];
    if n[0] * inner[0] + n[1] * inner[1] > 0.0 {
        n = [-n[0], -n[1]];
    }
    Some(n)
}

/// Volume weights `V_i` from tangent-plane Voronoi cells (`k = 2`), or from
/// half the adjacent segment lengths along the curve (`k = 1`).
pub fn voronoi_volume_weights(
    cloud: &PointCloud,
    index: &NeighborIndex,
    m_neighbors: usize,
) -> Result<Vec<f64>> {
    match cloud.intrinsic_dim() {
        1 => curve_weights(cloud, |_| true, false),
        2 => {
            if cloud.len() < 4 {
                return Err(PimError::InvalidCloud(
                    "Voronoi weights need at least 4 points".into(),
                ));
            }
            let m = m_neighbors.min(cloud.len() - 1);
            if m < 3 {
                return Err(PimError::Parameter(format!(
                    "m_neighbors = {m_neighbors} is too small"
                )));
            }
            (0..cloud.len())
                .into_par_iter()
                .map(|i| cell_weight(cloud, index, i, m))
                .collect()
        }
        k => Err(PimError::Parameter(format!(
            "volume weights are only supported for intrinsic dimension 1 or 2, got {k}"
        ))),
    }
}

/// Boundary measure `S_i`: half the chord lengths to the two neighbors along
/// the boundary curve; zero for non-boundary points.
pub fn boundary_measure_weights(cloud: &PointCloud) -> Result<Vec<f64>> {
    if cloud.boundary_count() < 2 {
        return Err(PimError::InvalidCloud(format!(
            "boundary weights need at least 2 boundary points, found {}",
            cloud.boundary_count()
        )));
    }
    curve_weights(cloud, |i| cloud.is_boundary(i), true)
}

/// Orders the selected points into chains by nearest-neighbor walking and
/// assigns each point half of its adjacent chord lengths. With `closed`,
/// each chain is a loop; a loop closes once its start is nearer than any
/// unvisited point.
fn curve_weights(
    cloud: &PointCloud,
    select: impl Fn(usize) -> bool,
    closed: bool,
) -> Result<Vec<f64>> {
    let ids: Vec<usize> = (0..cloud.len()).filter(|&i| select(i)).collect();
    let mut weights = vec![0.0; cloud.len()];
    if ids.len() < 2 {
        return Err(PimError::InvalidCloud(
            "a curve needs at least 2 points".into(),
        ));
    }
    let sub = PointCloud::new(
        ids.iter()
            .flat_map(|&i| cloud.point(i).iter().copied())
            .collect(),
        cloud.dim(),
        1,
        vec![false; ids.len()],
    )?;
    let index = NeighborIndex::build(&sub);
    let mut visited = vec![false; ids.len()];
    let mut remaining = ids.len();

    // open curves start from an endpoint: a boundary-flagged point if any
    let mut start = if closed {
        0
    } else {
        (0..ids.len())
            .find(|&a| cloud.is_boundary(ids[a]))
            .unwrap_or(0)
    };
    while remaining > 0 {
        let mut chain = vec![start];
        visited[start] = true;
        remaining -= 1;
        let mut cur = start;
        while let Some(next) = nearest_unvisited(&sub, &index, &visited, cur) {
            let d_next = sub.distance(cur, next);
            if closed && chain.len() >= 3 && sub.distance(cur, start) < d_next {
                break;
            }
            chain.push(next);
            visited[next] = true;
            remaining -= 1;
            cur = next;
        }
        let len = chain.len();
        for (pos, &a) in chain.iter().enumerate() {
            let mut s = 0.0;
            if closed {
                s += sub.distance(a, chain[(pos + len - 1) % len]);
                s += sub.distance(a, chain[(pos + 1) % len]);
            } else {
                if pos > 0 {
                    s += sub.distance(a, chain[pos - 1]);
                }
                if pos + 1 < len {
                    s += sub.distance(a, chain[pos + 1]);
                }
            }
            weights[ids[a]] = 0.5 * s;
        }
        if let Some(next) = visited.iter().position(|v| !v) {
            start = next;
        }
    }
    if closed
        && weights
            .iter()
            .zip(cloud.boundary_flags())
            .any(|(w, &b)| b && *w <= 0.0)
    {
        return Err(PimError::DegenerateGeometry(
            "boundary curve has coincident points".into(),
        ));
    }
    Ok(weights)
}

fn nearest_unvisited(
    sub: &PointCloud,
    index: &NeighborIndex,
    visited: &[bool],
    cur: usize,
) -> Option<usize> {
    let n = sub.len();
    let mut m = 8.min(n);
    loop {
        if let Some((j, _)) = index
            .knn(sub.point(cur), m)
            .into_iter()
            .find(|&(j, _)| !visited[j])
        {
            return Some(j);
        }
        if m >= n {
            return None;
        }
        m = (m * 4).min(n);
    }
}

/// Fills in whichever of the volume and boundary weights the cloud lacks.
/// Weights already present are kept.
pub fn ensure_weights(
    cloud: &mut PointCloud,
    index: &NeighborIndex,
    m_neighbors: usize,
) -> Result<()> {
    if cloud.volume_weights().is_none() {
        let v = voronoi_volume_weights(cloud, index, m_neighbors)?;
        cloud.set_volume_weights(v)?;
    }
    if cloud.boundary_weights().is_none() && cloud.boundary_count() >= 2 {
        let s = boundary_measure_weights(cloud)?;
        cloud.set_boundary_weights(s)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::sample_unit_disk;

    fn planar(coords: Vec<f64>, boundary: Vec<bool>) -> PointCloud {
        PointCloud::new(coords, 2, 2, boundary).unwrap()
    }

    #[test]
    fn flat_frame_spans_the_plane() {
        let c = sample_unit_disk(100, 1).unwrap();
        let idx = NeighborIndex::build(&c);
        let f = estimate_tangent_frame(&c, &idx, 10, 8).unwrap();
        let (a, b) = (&f.basis[0], &f.basis[1]);
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(a, a) - 1.0).abs() < 1e-10);
        assert!((dot(b, b) - 1.0).abs() < 1e-10);
        assert!(dot(a, b).abs() < 1e-10);
    }

    #[test]
    fn plane_in_3d_frame_is_orthogonal_to_normal() {
        let coords: Vec<f64> = (0..25)
            .flat_map(|i| {
                [
                    (i % 5) as f64 * 0.1,
                    (i / 5) as f64 * 0.13 + 0.01 * (i % 3) as f64,
                    0.0,
                ]
            })
            .collect();
        let c = PointCloud::new(coords, 3, 2, vec![false; 25]).unwrap();
        let idx = NeighborIndex::build(&c);
        let f = estimate_tangent_frame(&c, &idx, 12, 10).unwrap();
        for b in &f.basis {
            assert!(b[2].abs() < 1e-8);
        }
    }

    #[test]
    fn sphere_frame_is_nearly_tangent() {
        // samples on the unit sphere within geodesic radius 0.1 of the pole
        let mut coords = vec![0.0, 0.0, 1.0];
        for ring in 1..=4 {
            let phi = 0.025 * ring as f64;
            for s in 0..(6 * ring) {
                let th = 2.0 * PI * s as f64 / (6 * ring) as f64;
                coords.extend([phi.sin() * th.cos(), phi.sin() * th.sin(), phi.cos()]);
            }
        }
        let n = coords.len() / 3;
        let c = PointCloud::new(coords, 3, 2, vec![false; n]).unwrap();
        let idx = NeighborIndex::build(&c);
        let f = estimate_tangent_frame(&c, &idx, 0, n - 1).unwrap();
        for b in &f.basis {
            assert!(b[2].abs() < 0.1);
        }
    }

    #[test]
    fn collinear_neighborhood_is_degenerate() {
        let coords: Vec<f64> = (0..10).flat_map(|i| [i as f64, 2.0 * i as f64]).collect();
        let c = planar(coords, vec![false; 10]);
        let idx = NeighborIndex::build(&c);
        assert!(matches!(
            estimate_tangent_frame(&c, &idx, 3, 5),
            Err(PimError::DegenerateGeometry(_))
        ));
        assert!(estimate_tangent_frame(&c, &idx, 3, 2).is_err());
    }

    #[test]
    fn lattice_cell_is_the_unit_square() {
        let s = 0.3;
        let coords: Vec<f64> = (0..49)
            .flat_map(|i| [(i % 7) as f64 * s, (i / 7) as f64 * s])
            .collect();
        let c = planar(coords, vec![false; 49]);
        let idx = NeighborIndex::build(&c);
        let w = voronoi_volume_weights(&c, &idx, 8).unwrap();
        let center = 3 * 7 + 3;
        assert!((w[center] - s * s).abs() < 0.05 * s * s, "{}", w[center]);
        let w = voronoi_volume_weights(&c, &idx, 16).unwrap();
        assert!((w[center] - s * s).abs() < 1e-12);
    }

    #[test]
    fn disk_weights_tile_the_disk() {
        for n in [684, 2610] {
            let c = sample_unit_disk(n, 3).unwrap();
            let idx = NeighborIndex::build(&c);
            let w = voronoi_volume_weights(&c, &idx, DEFAULT_NEIGHBORS).unwrap();
            assert!(w.iter().all(|&v| v > 0.0));
            let total: f64 = w.iter().sum();
            assert!((total - PI).abs() < 0.02 * PI, "n = {n}: {total}");
        }
    }

    #[test]
    fn weights_are_rigid_motion_invariant() {
        let c = sample_unit_disk(300, 4).unwrap();
        let (ang, shift) = (0.7f64, [3.0, -1.5]);
        let moved: Vec<f64> = c
            .points()
            .flat_map(|p| {
                [
                    ang.cos() * p[0] - ang.sin() * p[1] + shift[0],
                    ang.sin() * p[0] + ang.cos() * p[1] + shift[1],
                ]
            })
            .collect();
        let m = planar(moved, c.boundary_flags().to_vec());
        let w0 = voronoi_volume_weights(&c, &NeighborIndex::build(&c), 16).unwrap();
        let w1 = voronoi_volume_weights(&m, &NeighborIndex::build(&m), 16).unwrap();
        for (a, b) in w0.iter().zip(&w1) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn circle_boundary_weights() {
        let m = 40;
        let coords: Vec<f64> = (0..m)
            .flat_map(|i| {
                let a = 2.0 * PI * i as f64 / m as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let c = planar(coords, vec![true; m]);
        let s = boundary_measure_weights(&c).unwrap();
        for w in s {
            assert!((w - 2.0 * PI / m as f64).abs() < 0.01 * 2.0 * PI / m as f64);
        }
    }

    #[test]
    fn antipodal_pair_weights() {
        let c = planar(vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0], vec![true, true, false]);
        let s = boundary_measure_weights(&c).unwrap();
        assert_eq!(s, vec![2.0, 2.0, 0.0]);
        let single = planar(vec![1.0, 0.0, 0.0, 0.0], vec![true, false]);
        assert!(boundary_measure_weights(&single).is_err());
    }

    #[test]
    fn disk_boundary_weights_sum_to_circumference() {
        let c = sample_unit_disk(684, 8).unwrap();
        let total: f64 = boundary_measure_weights(&c).unwrap().iter().sum();
        assert!((0.99 * 2.0 * PI..=2.0 * PI).contains(&total), "{total}");
    }

    #[test]
    fn annulus_has_two_loops() {
        let mut coords = Vec::new();
        for (r, m) in [(1.0, 60), (0.5, 30)] {
            for i in 0..m {
                let a = 2.0 * PI * i as f64 / m as f64;
                coords.extend([r * a.cos(), r * a.sin()]);
            }
        }
        let c = planar(coords, vec![true; 90]);
        let total: f64 = boundary_measure_weights(&c).unwrap().iter().sum();
        assert!((total - 3.0 * PI).abs() < 0.01 * 3.0 * PI, "{total}");
    }

    #[test]
    fn curve_weights_for_open_segment() {
        let coords: Vec<f64> = (0..5).flat_map(|i| [i as f64 * 0.25, 0.0]).collect();
        let c = PointCloud::new(coords, 2, 1, vec![true, false, false, false, true]).unwrap();
        let w = voronoi_volume_weights(&c, &NeighborIndex::build(&c), 4).unwrap();
        assert_eq!(w, vec![0.125, 0.25, 0.25, 0.25, 0.125]);
    }
}
