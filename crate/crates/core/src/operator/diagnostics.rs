use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DomainPartition, SparseOperator};
use crate::error::{PimError, Result};
use crate::pointcloud::PointCloud;

/// Volume-weighted RMS of `u - exact` over the interior samples.
pub fn discrete_l2_error(
    u: &[f64],
    exact: impl Fn(&[f64]) -> f64,
    cloud: &PointCloud,
    partition: &DomainPartition,
) -> Result<f64> {
    if partition.interior_ids.is_empty() {
        return Err(PimError::EmptyInterior {
            t: partition.t_used,
        });
    }
    weighted_l2_error(u, exact, cloud, &partition.interior_ids)
}

/// Volume-weighted RMS of `u - exact` over the samples in `ids`.
pub fn weighted_l2_error(
    u: &[f64],
    exact: impl Fn(&[f64]) -> f64,
    cloud: &PointCloud,
    ids: &[usize],
) -> Result<f64> {
    let v = cloud.require_volume()?;
    if ids.is_empty() {
        return Err(PimError::Parameter(
            "no samples to measure the error on".into(),
        ));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &i in ids {
        let e = exact(cloud.point(i));
        if !e.is_finite() {
            return Err(PimError::Parameter(format!(
                "exact solution is not finite at sample {i}"
            )));
        }
        let d = u[i] - e;
        num += d * d * v[i];
        den += v[i];
    }
    Ok((num / den).sqrt())
}

/// Smallest observed ratio `uᵀAu / Σ_{i∈M′_t} u_i² V_i` over `trials`
/// random interior vectors (zero on the collar). Even trials draw white
/// noise, odd trials smooth random Fourier fields.
pub fn coercivity_probe(
    stiffness: &SparseOperator,
    cloud: &PointCloud,
    partition: &DomainPartition,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let v = cloud.require_volume()?;
    if trials == 0 {
        return Err(PimError::Parameter(
            "coercivity probe needs at least one trial".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for trial in 0..trials {
        let u: Vec<f64> = if trial % 2 == 0 {
            (0..partition.interior_count())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect()
        } else {
            let waves: Vec<(Vec<f64>, f64)> = (0..3)
                .map(|_| {
                    let freq = (0..cloud.dim()).map(|_| rng.gen_range(-PI..PI)).collect();
                    (freq, rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            partition
                .interior_ids
                .iter()
                .map(|&i| {
                    let p = cloud.point(i);
                    1.0 + waves
                        .iter()
                        .map(|(k, phase)| {
                            (k.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + phase).cos()
                        })
                        .sum::<f64>()
                })
                .collect()
        };
        let mass: f64 = partition
            .interior_ids
            .iter()
            .zip(&u)
            .map(|(&i, x)| x * x * v[i])
            .sum();
        if mass == 0.0 {
            continue;
        }
        best = best.min(stiffness.quad_form(&u) / mass);
    }
    Ok(best)
}

/// `Σ_{i ∈ V_t} (u(p_i) - boundary_value)² V_i / t^{3/2}`, the collar mass of
/// a function relative to its expected `t^{3/2}` scaling.
pub fn boundary_layer_mass(
    u: impl Fn(&[f64]) -> f64,
    boundary_value: f64,
    cloud: &PointCloud,
    partition: &DomainPartition,
) -> Result<f64> {
    let v = cloud.require_volume()?;
    let sum: f64 = partition
        .constrained_ids
        .iter()
        .map(|&i| {
            let d = u(cloud.point(i)) - boundary_value;
            d * d * v[i]
        })
        .sum();
    Ok(sum / partition.t_used.powf(1.5))
}
