//! Standard normal distribution helpers shared by the test statistics and
//! the probit embedding.
//!
//! `erfc` comes from `libm` (a port of the FreeBSD/musl implementation, better
//! than 1e-15 relative over the range used here). Going through `erfc` rather
//! than `1 - erf` keeps the upper tail accurate.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
pub fn cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(t)` without cancellation.
pub fn sf(t: f64) -> f64 {
    0.5 * libm::erfc(t * FRAC_1_SQRT_2)
}

pub fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_around_zero() {
        assert_eq!(cdf(0.0), 0.5);
        for &t in &[0.1, 1.0, 2.5, 7.0] {
            assert!((cdf(t) + cdf(-t) - 1.0).abs() < 1e-15);
            assert!((sf(t) - cdf(-t)).abs() < 1e-300_f64.max(1e-16 * sf(t)));
        }
    }

    #[test]
    fn reference_values() {
        // mpmath, 30 digits: ncdf(1.96), ncdf(-3)
        assert!((cdf(1.96) - 0.975_002_104_851_779_6).abs() < 1e-15);
        assert!((cdf(-3.0) - 0.001_349_898_031_630_094_5).abs() < 1e-17);
    }
}
