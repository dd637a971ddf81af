//! Kernel profile `R`, its tail integral `R̄(r) = ∫_r^∞ R(s) ds`, and the
//! scaled kernels
//!
//! ```text
//! R_t(x, y) = (4πt)^{-k/2} R(|x - y|² / 4t)
//! R̄_t(x, y) = (4πt)^{-k/2} R̄(|x - y|² / 4t)
//! ```
//!
//! Profiles vanish for `r > 1`, so both kernels are supported on the ball
//! of radius `2√t`.

use std::f64::consts::PI;

use crate::error::{PimError, Result};
use crate::pointcloud::{dist2, NeighborIndex, PointCloud, SamplingStats};

/// Exponent of `h` in the balanced bandwidth `t = c_b h^{4/7}`, from
/// equating `t^{1/4}` with `h / t^{3/2}`.
pub const BALANCE_EXPONENT: f64 = 4.0 / 7.0;

/// Lower bound of the default profile on `[0, 1/2]`.
pub const DEFAULT_DELTA0: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `R(r) = (1 - r)^4 (4r + 1)` on `[0, 1]`.
    Wendland,
    /// Natural cubic spline through equispaced samples of `R` on `[0, 1]`.
    Table(TableProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableProfile {
    values: Vec<f64>,
    second: Vec<f64>,
    /// `tail[i] = ∫_{r_i}^1 S(s) ds`
    tail: Vec<f64>,
}

impl TableProfile {
    /// `values[i] = R(i / (len - 1))`; at least 3 samples.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(PimError::Parameter(
                "a tabulated profile needs at least 3 samples".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PimError::Parameter(
                "tabulated profile has non-finite samples".into(),
            ));
        }
        let h = 1.0 / (n - 1) as f64;
        // natural spline: M_0 = M_{n-1} = 0, tridiagonal system for the rest
        let m = n - 2;
        let mut second = vec![0.0; n];
        if m > 0 {
            let mut diag = vec![4.0; m];
            let mut rhs: Vec<f64> = (1..=m)
                .map(|i| 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h))
                .collect();
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (1..m).rev() {
                second[i] = (rhs[i - 1] - second[i + 1]) / diag[i - 1];
            }
        }
        let mut tail = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let seg = h * (values[i] + values[i + 1]) / 2.0
                - h.powi(3) * (second[i] + second[i + 1]) / 24.0;
            tail[i] = tail[i + 1] + seg;
        }
        Ok(TableProfile {
            values,
            second,
            tail,
        })
    }

    fn locate(&self, r: f64) -> (usize, f64, f64) {
        let n = self.values.len();
        let h = 1.0 / (n - 1) as f64;
        let i = ((r / h) as usize).min(n - 2);
        (i, r - i as f64 * h, h)
    }

    fn eval(&self, r: f64) -> f64 {
        if r > 1.0 {
            return 0.0;
        }
        let (i, s, h) = self.locate(r);
        let (a, b) = ((h - s) / h, s / h);
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }

    fn eval_tail(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let (i, s, h) = self.locate(r);
        // ∫_{r_i}^{r_i + s} S, then subtract from tail[i]
        let (y0, y1, m0, m1) = (
            self.values[i],
            self.values[i + 1],
            self.second[i],
            self.second[i + 1],
        );
        let u = s / h;
        let int_a = h * (u - u * u / 2.0);
        let int_b = h * u * u / 2.0;
        let int_a3 = h * (1.0 - (1.0 - u).powi(4)) / 4.0;
        let int_b3 = h * u.powi(4) / 4.0;
        let head =
            y0 * int_a + y1 * int_b + ((int_a3 - int_a) * m0 + (int_b3 - int_b) * m1) * h * h / 6.0;
        self.tail[i] - head
    }
}

impl Profile {
    pub fn r(&self, r: f64) -> f64 {
        match self {
            Profile::Wendland => {
                if r > 1.0 {
                    0.0
                } else {
                    let s = 1.0 - r;
                    s * s * s * s * (4.0 * r + 1.0)
                }
            }
            Profile::Table(t) => t.eval(r),
        }
    }

    pub fn rbar(&self, r: f64) -> f64 {
        match self {
            Profile::Wendland => {
                if r >= 1.0 {
                    0.0
                } else {
                    let s = 1.0 - r;
                    s * s * s * s * s * (1.0 + 2.0 * r) / 3.0
                }
            }
            Profile::Table(t) => t.eval_tail(r),
        }
    }
}

/// Kernel parameters for one discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    t: f64,
    intrinsic_dim: usize,
    profile: Profile,
    delta0: f64,
    norm: f64,
}

impl KernelSpec {
    pub fn new(t: f64, intrinsic_dim: usize) -> Result<Self> {
        Self::with_profile(t, intrinsic_dim, Profile::Wendland, DEFAULT_DELTA0)
    }

    pub fn with_profile(
        t: f64,
        intrinsic_dim: usize,
        profile: Profile,
        delta0: f64,
    ) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(PimError::Parameter(format!(
                "bandwidth t must be positive, got {t}"
            )));
        }
        if intrinsic_dim == 0 {
            return Err(PimError::Parameter(
                "intrinsic dimension must be >= 1".into(),
            ));
        }
        if !(delta0 > 0.0) {
            return Err(PimError::Parameter(format!(
                "delta0 must be positive, got {delta0}"
            )));
        }
        let norm = (4.0 * PI * t).powf(-(intrinsic_dim as f64) / 2.0);
        Ok(KernelSpec {
            t,
            intrinsic_dim,
            profile,
            delta0,
            norm,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// `C_t = (4πt)^{-k/2}`
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Ambient support radius `2√t`.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.t.sqrt()
    }

    pub fn profile_r(&self, r: f64) -> f64 {
        self.profile.r(r)
    }

    pub fn profile_rbar(&self, r: f64) -> f64 {
        self.profile.rbar(r)
    }

    #[inline]
    pub fn rt_dist2(&self, d2: f64) -> f64 {
        self.norm * self.profile.r(d2 / (4.0 * self.t))
    }

    #[inline]
    pub fn rbart_dist2(&self, d2: f64) -> f64 {
        self.norm * self.profile.rbar(d2 / (4.0 * self.t))
    }

    pub fn eval_rt(&self, x: &[f64], y: &[f64]) -> f64 {
        self.rt_dist2(dist2(x, y))
    }

    pub fn eval_rbart(&self, x: &[f64], y: &[f64]) -> f64 {
        self.rbart_dist2(dist2(x, y))
    }

    /// Checks the profile against the kernel requirements on a grid of
    /// `samples` points: `R >= 0`, `R = 0` past 1, `R >= delta0` on
    /// `[0, 1/2]`, and continuity of `R`, `R'`, `R''` (finite differences).
    pub fn validate(&self) -> Result<()> {
        let samples = 2000;
        let r = |x: f64| self.profile.r(x);
        for i in 0..=samples {
            let x = 1.5 * i as f64 / samples as f64;
            let v = r(x);
            if !(v >= -1e-9 * r(0.0).abs()) {
                return Err(PimError::Parameter(format!(
                    "profile is negative at r = {x}: {v}"
                )));
            }
            if x > 1.0 && v != 0.0 {
                return Err(PimError::Parameter(format!(
                    "profile is nonzero at r = {x} > 1"
                )));
            }
            if x <= 0.5 && v < self.delta0 {
                return Err(PimError::Parameter(format!(
                    "profile {v} at r = {x} is below delta0 = {}",
                    self.delta0
                )));
            }
        }
        // one-sided derivative jumps, relative to the profile's own scale
        let eps = 1e-4;
        let grid: Vec<f64> = (1..samples)
            .map(|i| 1.2 * i as f64 / samples as f64)
            .collect();
        let d2 = |x: f64| (r(x + eps) - 2.0 * r(x) + r(x - eps)) / (eps * eps);
        let scale1 = r(0.0).abs().max(1e-300);
        let scale2 = grid.iter().map(|&x| d2(x).abs()).fold(scale1, f64::max);
        let h3 = 1e-3;
        let scale3 = grid
            .iter()
            .map(|&x| ((d2(x + h3) - d2(x - h3)) / (2.0 * h3)).abs())
            .fold(0.0, f64::max);
        for &x in &grid {
            let d1l = (r(x) - r(x - eps)) / eps;
            let d1r = (r(x + eps) - r(x)) / eps;
            let d2l = (r(x) - 2.0 * r(x - eps) + r(x - 2.0 * eps)) / (eps * eps);
            let d2r = (r(x + 2.0 * eps) - 2.0 * r(x + eps) + r(x)) / (eps * eps);
            if (d1l - d1r).abs() > 1e-2 * scale1 + 2.0 * eps * scale2 {
                return Err(PimError::Parameter(format!(
                    "profile derivative jumps near r = {x}"
                )));
            }
            if (d2l - d2r).abs() > 1e-2 * scale2 + 3.0 * eps * scale3 {
                return Err(PimError::Parameter(format!(
                    "profile second derivative jumps near r = {x}"
                )));
            }
        }
        Ok(())
    }
}

/// Default balance constant: keeps at least 20 samples in the kernel ball of
/// a quasi-uniform unit-disk cloud down to about 700 points.
pub const DEFAULT_C_B: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthPolicy {
    /// `t = c_b · h^{4/7}`
    Balance {
        c_b: f64,
    },
    Fixed(f64),
}

impl Default for BandwidthPolicy {
    fn default() -> Self {
        BandwidthPolicy::Balance { c_b: DEFAULT_C_B }
    }
}

pub fn select_t(stats: &SamplingStats, policy: BandwidthPolicy) -> Result<f64> {
    let h = stats.fill_distance;
    if !(h > 0.0) {
        return Err(PimError::Parameter(format!(
            "fill distance must be positive, got {h}"
        )));
    }
    let t = match policy {
        BandwidthPolicy::Balance { c_b } => c_b * h.powf(BALANCE_EXPONENT),
        BandwidthPolicy::Fixed(t) => t,
    };
    if !(t.is_finite() && t > 0.0) {
        return Err(PimError::Parameter(format!(
            "bandwidth policy produced t = {t}"
        )));
    }
    Ok(t)
}

pub fn select_bandwidth(
    stats: &SamplingStats,
    policy: BandwidthPolicy,
    intrinsic_dim: usize,
) -> Result<KernelSpec> {
    KernelSpec::new(select_t(stats, policy)?, intrinsic_dim)
}

/// Average number of other samples inside the kernel support.
pub fn mean_support_count(cloud: &PointCloud, index: &NeighborIndex, t: f64) -> f64 {
    let radius = 2.0 * t.sqrt();
    let total: usize = cloud
        .points()
        .map(|p| {
            let mut c = 0usize;
            index.for_each_within(p, radius, |_, _| c += 1);
            c - 1
        })
        .sum();
    total as f64 / cloud.len() as f64
}

/// Message for a bandwidth whose support holds fewer than 5 neighbors on average.
pub fn support_warning(cloud: &PointCloud, index: &NeighborIndex, t: f64) -> Option<String> {
    let mean = mean_support_count(cloud, index, t);
    (mean < 5.0)
        .then(|| format!("kernel support holds only {mean:.2} neighbors on average (t = {t:e})"))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss–Legendre (5 nodes) over `n` panels.
    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let nodes = [
            (0.0, 128.0 / 225.0),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
            (0.906_179_845_938_664, 0.236_926_885_056_189_08),
        ];
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| {
                let mid = a + (i as f64 + 0.5) * h;
                nodes
                    .iter()
                    .map(|(x, w)| w * f(mid + x * h / 2.0))
                    .sum::<f64>()
                    * h
                    / 2.0
            })
            .sum()
    }

    #[test]
    fn default_profile_values() {
        let k = KernelSpec::new(0.01, 2).unwrap();
        assert_eq!(k.profile_r(0.0), 1.0);
        assert_eq!(k.profile_r(2.0), 0.0);
        assert_eq!(k.profile_r(0.5), 0.1875);
        assert_eq!(k.profile_rbar(1.0), 0.0);
    }

    #[test]
    fn rbar_matches_quadrature() {
        let p = Profile::Wendland;
        let full = quad(|s| p.r(s), 0.0, 1.0, 64);
        assert!((full - 1.0 / 3.0).abs() < 1e-12);
        assert!((p.rbar(0.0) - full).abs() < 1e-12);
        let half = quad(|s| p.r(s), 0.5, 1.0, 64);
        assert!((p.rbar(0.5) - half).abs() < 1e-10);
    }

    #[test]
    fn normalization_identity() {
        let k = KernelSpec::new(1.0 / (4.0 * PI), 2).unwrap();
        let x = [0.3, -0.2];
        assert!((k.eval_rt(&x, &x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_arithmetic() {
        let t: f64 = 0.01;
        let k = KernelSpec::new(t, 2).unwrap();
        let y = [3.0 * t.sqrt(), 0.0];
        assert_eq!(k.eval_rt(&[0.0, 0.0], &y), 0.0);
        assert_eq!(k.eval_rbart(&[0.0, 0.0], &y), 0.0);
        let expected = (4.0 * PI * 0.01f64).recip() * 0.75f64.powi(4) * 2.0;
        let got = k.eval_rt(&[0.0, 0.0], &[0.1, 0.0]);
        assert!((got - expected).abs() <= 1e-13 * expected);
    }

    #[test]
    fn rejects_nonpositive_t() {
        assert!(KernelSpec::new(0.0, 2).is_err());
        assert!(KernelSpec::new(-1.0, 2).is_err());
    }

    #[test]
    fn bandwidth_policies() {
        let stats = SamplingStats {
            fill_distance: 0.04,
            min_spacing: 0.01,
        };
        let t = select_t(&stats, BandwidthPolicy::Balance { c_b: 1.0 }).unwrap();
        assert!((t - 0.04f64.powf(4.0 / 7.0)).abs() < 1e-15);
        assert!((t - 0.1586).abs() < 5e-4);
        assert_eq!(
            select_t(&stats, BandwidthPolicy::Fixed(0.01)).unwrap(),
            0.01
        );
        let half = SamplingStats {
            fill_distance: 0.02,
            ..stats
        };
        let ratio = select_t(&half, BandwidthPolicy::Balance { c_b: 1.0 }).unwrap() / t;
        assert!((ratio - 2f64.powf(-4.0 / 7.0)).abs() < 1e-12);
        assert!((ratio - 0.673).abs() < 1e-3);
    }

    #[test]
    fn rbar_derivative_is_minus_r() {
        let p = Profile::Wendland;
        let eps = 1e-6;
        for i in 1..100 {
            let r = i as f64 / 100.0;
            let fd = (p.rbar(r + eps) - p.rbar(r - eps)) / (2.0 * eps);
            assert!((fd + p.r(r)).abs() < 1e-6);
            assert!(p.rbar(r) <= p.rbar(r - 0.01));
        }
    }

    #[test]
    fn default_profile_passes_audit() {
        KernelSpec::new(0.01, 2).unwrap().validate().unwrap();
    }

    #[test]
    fn table_profile_reproduces_wendland() {
        let n = 401;
        let vals = (0..n)
            .map(|i| Profile::Wendland.r(i as f64 / (n - 1) as f64))
            .collect();
        let table = Profile::Table(TableProfile::new(vals).unwrap());
        for i in 0..=50 {
            let r = i as f64 / 50.0;
            assert!((table.r(r) - Profile::Wendland.r(r)).abs() < 1e-6);
            assert!((table.rbar(r) - Profile::Wendland.rbar(r)).abs() < 1e-7);
        }
        let k = KernelSpec::with_profile(0.01, 2, table, 0.1).unwrap();
        k.validate().unwrap();
    }

    #[test]
    fn audit_rejects_bad_tables() {
        // hat function: not C¹ at 1/2, and below delta0 near 1/2
        let hat: Vec<f64> = (0..=20).map(|i| 1.0 - i as f64 / 20.0).collect();
        let k = KernelSpec::with_profile(
            0.01,
            2,
            Profile::Table(TableProfile::new(hat).unwrap()),
            0.6,
        )
        .unwrap();
        assert!(k.validate().is_err());
        // floor violated
        let low: Vec<f64> = (0..=20)
            .map(|i| Profile::Wendland.r(i as f64 / 20.0) * 0.1)
            .collect();
        let k = KernelSpec::with_profile(
            0.01,
            2,
            Profile::Table(TableProfile::new(low).unwrap()),
            0.1,
        )
        .unwrap();
        assert!(k.validate().is_err());
    }
}
