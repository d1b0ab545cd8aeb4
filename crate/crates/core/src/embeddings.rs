//! Monotone maps from Bradley-Terry (logit) and Thurstone-Mosteller (probit)
//! linear predictors onto the κ scale, `τ = 2π - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{KappaError, Result};
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFamily {
    Logit,
    Probit,
}

/// A strictly increasing odd map `t ↦ τ` with range `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingMap {
    pub family: EmbeddingFamily,
}

impl EmbeddingMap {
    pub const LOGIT: Self = Self {
        family: EmbeddingFamily::Logit,
    };
    pub const PROBIT: Self = Self {
        family: EmbeddingFamily::Probit,
    };

    pub fn forward(&self, t: f64) -> f64 {
        match self.family {
            EmbeddingFamily::Logit => m_logit(t),
            EmbeddingFamily::Probit => m_probit(t),
        }
    }

    /// Derivative at zero: 1/2 for logit, `2/√(2π)` for probit.
    pub fn slope_at_zero(&self) -> f64 {
        match self.family {
            EmbeddingFamily::Logit => 0.5,
            EmbeddingFamily::Probit => 2.0 / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// Maps fitted linear predictors `βᵀΔx` onto the κ scale.
    pub fn surface(&self, predictors: &[f64]) -> Vec<f64> {
        predictors.iter().map(|&t| self.forward(t)).collect()
    }
}

pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `2 logistic(t) - 1`, evaluated as `tanh(t/2)`.
pub fn m_logit(t: f64) -> f64 {
    (0.5 * t).tanh()
}

/// `2Φ(t) - 1`, evaluated as `erf(t/√2)` so the origin is exact.
pub fn m_probit(t: f64) -> f64 {
    libm::erf(t * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn tau_from_pairwise_prob(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(KappaError::Domain {
            name: "p",
            value: p,
            domain: "0 <= p <= 1",
        });
    }
    Ok(2.0 * p - 1.0)
}

/// `2Φ(t) - 1` through the normal CDF, for cross-checking [`m_probit`].
pub fn probit_via_cdf(t: f64) -> f64 {
    2.0 * normal::cdf(t) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(m_logit(0.0), 0.0);
        assert_eq!(m_probit(0.0), 0.0);
        assert!(m_logit(40.0) <= 1.0 && m_logit(40.0) > 1.0 - 1e-15);
        assert!((m_probit(1.96) - 0.95).abs() < 1e-4);
    }

    #[test]
    fn pairwise_probability() {
        assert_eq!(tau_from_pairwise_prob(0.5).unwrap(), 0.0);
        assert_eq!(tau_from_pairwise_prob(1.0).unwrap(), 1.0);
        assert_eq!(tau_from_pairwise_prob(0.75).unwrap(), 0.5);
        assert!(tau_from_pairwise_prob(1.01).is_err());
        assert!(tau_from_pairwise_prob(f64::NAN).is_err());
    }

    #[test]
    fn surface_applies_forward_map() {
        let s = EmbeddingMap::PROBIT.surface(&[-1.0, 0.0, 2.0]);
        assert_eq!(s, vec![m_probit(-1.0), 0.0, m_probit(2.0)]);
    }
}
