//! Reference Dirichlet spectrum of the unit disk, `λ = j_{m,k}²`.

use std::f64::consts::PI;

const QUAD_NODES: usize = 128;

/// `J_m(x)` from its integral representation
/// `J_m(x) = (1/2π) ∫_0^{2π} cos(mτ - x sin τ) dτ`; the periodic integrand
/// makes the trapezoid rule spectrally accurate.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    let nodes = QUAD_NODES.max((2.0 * x.abs()) as usize + 64);
    let h = 2.0 * PI / nodes as f64;
    (0..nodes)
        .map(|i| {
            let tau = i as f64 * h;
            (m as f64 * tau - x * tau.sin()).cos()
        })
        .sum::<f64>()
        / nodes as f64
}

/// Positive zeros of `J_m` below `limit`, ascending.
pub fn bessel_zeros(m: u32, limit: f64) -> Vec<f64> {
    let step = 0.05;
    let mut zeros = Vec::new();
    let mut a = if m == 0 { step } else { m as f64 };
    let mut fa = bessel_j(m, a);
    while a < limit {
        let b = a + step;
        let fb = bessel_j(m, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = bessel_j(m, mid);
                if fm == 0.0 || hi - lo < 1e-15 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let z = 0.5 * (lo + hi);
            if z < limit {
                zeros.push(z);
            }
        }
        a = b;
        fa = fb;
    }
    zeros
}

/// A reference eigenvalue with its Bessel indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskMode {
    pub value: f64,
    /// angular order `m`
    pub order: u32,
    /// radial index `k` (1-based)
    pub radial: usize,
}

/// The `count` smallest Dirichlet eigenvalues of the unit disk, with
/// multiplicity: modes with `m >= 1` appear twice.
pub fn disk_dirichlet_modes(count: usize) -> Vec<DiskMode> {
    let mut limit = 10.0;
    loop {
        let mut modes = Vec::new();
        for m in 0..(limit as u32 + 1) {
            for (k, z) in bessel_zeros(m, limit).into_iter().enumerate() {
                let mode = DiskMode {
                    value: z * z,
                    order: m,
                    radial: k + 1,
                };
                modes.push(mode);
                if m > 0 {
                    modes.push(mode);
                }
            }
        }
        // every zero below `limit` is present, so the head is complete
        if modes.len() >= count {
            modes.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.order.cmp(&b.order)));
            modes.truncate(count);
            return modes;
        }
        limit *= 1.5;
    }
}

pub fn disk_dirichlet_spectrum(count: usize) -> Vec<f64> {
    disk_dirichlet_modes(count)
        .into_iter()
        .map(|m| m.value)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series `Σ (-1)^k (x/2)^{2k+m} / (k! (k+m)!)`, independent of
    /// the quadrature route.
    fn series_j(m: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(m as i32) / (1..=m).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..80 {
            term *= -(x * x / 4.0) / (k as f64 * (k as f64 + m as f64));
            sum += term;
        }
        sum
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (f(lo) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quadrature_matches_series() {
        for m in 0..6 {
            for i in 0..40 {
                let x = 0.37 * i as f64;
                // the series cancels catastrophically for large x
                let tol = if x < 8.0 { 1e-12 } else { 1e-8 };
                assert!((bessel_j(m, x) - series_j(m, x)).abs() < tol, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn first_zeros() {
        let j01 = bisect(|x| series_j(0, x), 2.0, 3.0);
        let j11 = bisect(|x| series_j(1, x), 3.5, 4.5);
        assert!((j01 - 2.404826).abs() < 1e-6);
        assert!((j11 - 3.831706).abs() < 1e-6);
        assert!((bessel_zeros(0, 3.0)[0] - j01).abs() < 1e-12);
        assert!((bessel_zeros(1, 4.0)[0] - j11).abs() < 1e-12);
    }

    #[test]
    fn spectrum_head_with_multiplicity() {
        let s = disk_dirichlet_spectrum(10);
        assert!((s[0] - 5.7832).abs() < 1e-4);
        assert!((s[1] - 14.6820).abs() < 1e-4);
        assert_eq!(s[1], s[2]);
        assert!((s[3] - 26.3746).abs() < 1e-4);
        assert_eq!(s[3], s[4]);
        assert!((s[5] - 30.4713).abs() < 1e-4);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }
}
