//! Radial manufactured solution `u = cos(2πr)` on the unit disk.

use std::f64::consts::PI;

fn radius(p: &[f64]) -> f64 {
    p[0].hypot(p[1])
}

pub fn exact_u(p: &[f64]) -> f64 {
    (2.0 * PI * radius(p)).cos()
}

/// `-Δu = 4π² cos(2πr) + 2π sin(2πr) / r`, with the removable singularity
/// at `r = 0` replaced by its limit `4π²` for the second term.
pub fn source_f(p: &[f64]) -> f64 {
    let r = radius(p);
    let w = 2.0 * PI;
    let second = if r < 1e-6 {
        // w sin(wr)/r = w² (1 - (wr)²/6 + ...)
        w * w * (1.0 - (w * r).powi(2) / 6.0)
    } else {
        w * (w * r).sin() / r
    };
    w * w * (w * r).cos() + second
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_is_minus_laplacian() {
        // five-point finite difference of -Δu
        let h = 1e-4;
        for &(x, y) in &[(0.3, 0.1), (-0.5, 0.6), (0.05, -0.02), (0.7, 0.0)] {
            let u = |a: f64, b: f64| exact_u(&[a, b]);
            let lap =
                (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h);
            assert!((-lap - source_f(&[x, y])).abs() < 1e-4, "{x},{y}");
        }
        assert!((source_f(&[0.0, 0.0]) - 8.0 * PI * PI).abs() < 1e-12);
        assert!((source_f(&[1e-7, 0.0]) - source_f(&[2e-6, 0.0])).abs() < 1e-6);
    }
}
