use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PointCloud;
use crate::error::{PimError, Result};

/// Relative jitter applied to interior samples, in units of the ring spacing.
const JITTER: f64 = 0.15;

/// Quasi-uniform, seed-reproducible sampling of the closed unit disk.
///
/// Samples sit on `K` concentric rings of radius `k/K`; ring `k` carries
/// about `2πk` points, so every sample owns an annular cell of roughly equal
/// area. Interior samples are jittered radially and angularly; the outer
/// ring lies exactly on the unit circle and is flagged as boundary.
pub fn sample_unit_disk(n_target: usize, seed: u64) -> Result<PointCloud> {
    if n_target < 16 {
        return Err(PimError::Parameter(format!(
            "unit-disk sampling needs n_target >= 16, got {n_target}"
        )));
    }
    // 1 + πK(K+1) points for unit density; pick the nearest K, then rescale.
    let k_rings = (((4.0 * (n_target as f64 - 1.0) / PI + 1.0).sqrt() - 1.0) / 2.0)
        .round()
        .max(2.0) as usize;
    let density = (n_target as f64 - 1.0) / (PI * (k_rings * (k_rings + 1)) as f64);
    let spacing = 1.0 / k_rings as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(2 * n_target + 16);
    let mut flags = Vec::with_capacity(n_target + 8);

    let (a, rho) = (
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..JITTER) * spacing,
    );
    coords.extend([rho * a.cos(), rho * a.sin()]);
    flags.push(false);

    for ring in 1..=k_rings {
        let count = ((2.0 * PI * density * ring as f64).round() as usize).max(3);
        let step = 2.0 * PI / count as f64;
        let phase = rng.gen_range(0.0..step);
        let boundary = ring == k_rings;
        for j in 0..count {
            let (theta, r) = if boundary {
                (phase + step * j as f64, 1.0)
            } else {
                (
                    phase + step * (j as f64 + rng.gen_range(-JITTER..JITTER)),
                    spacing * (ring as f64 + rng.gen_range(-JITTER..JITTER)),
                )
            };
            coords.extend([r * theta.cos(), r * theta.sin()]);
            flags.push(boundary);
        }
    }
    PointCloud::new(coords, 2, 2, flags)
}
