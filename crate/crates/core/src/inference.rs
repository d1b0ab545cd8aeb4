//! Quasi-likelihood, variance model, standard errors and χ²₁ tests of
//! `H0: τ = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{KappaError, Result};
use crate::normal;

/// Default kernel variance constant.
pub const DEFAULT_C: f64 = 0.4456;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Denominator {
    /// `Var = c(1-τ²)/N`, used by every test statistic.
    #[default]
    N,
    /// `Var = c(1-τ²)/(N-2)`.
    NMinus2,
}

impl Denominator {
    pub fn value(self, n: usize) -> f64 {
        match self {
            Denominator::N => n as f64,
            Denominator::NMinus2 => n as f64 - 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceModel {
    pub c: f64,
    pub denominator: Denominator,
}

impl Default for VarianceModel {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            denominator: Denominator::N,
        }
    }
}

impl VarianceModel {
    pub fn new(c: f64, denominator: Denominator) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(KappaError::Domain {
                name: "c",
                value: c,
                domain: "c > 0",
            });
        }
        Ok(Self { c, denominator })
    }

    pub fn with_c(c: f64) -> Result<Self> {
        Self::new(c, Denominator::N)
    }

    /// Model variance of the estimate at `tau` for sample size `n`.
    pub fn variance(&self, tau: f64, n: usize) -> f64 {
        self.c * (1.0 - tau * tau) / self.denominator.value(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFamily {
    Wald,
    /// `2N log(1/(1-τ̂²))`, uncorrected.
    Lrt,
    /// The LRT divided by the quasi-likelihood dispersion `2c`.
    ScaledLrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub family: TestFamily,
    pub df: u32,
    pub p_value: f64,
    pub tau_hat: f64,
    pub n: usize,
    /// Set when `|τ̂| = 1`; the statistic is then `f64::MAX` and `p = 0`.
    pub boundary: bool,
}

impl TestResult {
    fn new(statistic: f64, family: TestFamily, tau_hat: f64, n: usize) -> Self {
        Self {
            statistic,
            family,
            df: 1,
            p_value: chi2_sf(statistic).unwrap_or(0.0),
            tau_hat,
            n,
            boundary: false,
        }
    }

    /// Result for an estimate on the closed boundary `|τ̂| = 1`.
    pub fn boundary(family: TestFamily, tau_hat: f64, n: usize) -> Self {
        Self {
            statistic: f64::MAX,
            family,
            df: 1,
            p_value: 0.0,
            tau_hat,
            n,
            boundary: true,
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn open_interval(tau: f64) -> Result<()> {
    if tau.abs() < 1.0 {
        Ok(())
    } else {
        Err(KappaError::Domain {
            name: "tau",
            value: tau,
            domain: "|tau| < 1",
        })
    }
}

/// `-n log(1 - τ²)`.
pub fn quasi_loglik(tau: f64, n: usize) -> Result<f64> {
    open_interval(tau)?;
    Ok(-(n as f64) * (-tau * tau).ln_1p())
}

/// Constant-in-τ term `(1/N) Σ_{k≠l} γ₃γ₄ = (N-1)γ₃γ₄` that the moment-augmented
/// quasi-likelihood adds. Reported as a diagnostic only.
pub fn moment_offset(n: usize, gamma3: f64, gamma4: f64) -> f64 {
    (n as f64 - 1.0) * gamma3 * gamma4
}

/// `2n(1+τ²)/(1-τ²)²`.
pub fn observed_information(tau: f64, n: usize) -> Result<f64> {
    open_interval(tau)?;
    let t2 = tau * tau;
    Ok(2.0 * n as f64 * (1.0 + t2) / ((1.0 - t2) * (1.0 - t2)))
}

pub fn standard_error(tau_hat: f64, n: usize, vm: &VarianceModel) -> Result<f64> {
    if tau_hat.abs() > 1.0 || tau_hat.is_nan() {
        return Err(KappaError::Domain {
            name: "tau_hat",
            value: tau_hat,
            domain: "|tau_hat| <= 1",
        });
    }
    if n < 3 {
        return Err(KappaError::TooFewObservations { min: 3, got: n });
    }
    Ok(vm.variance(tau_hat, n).max(0.0).sqrt())
}

/// `W = nτ̂²/c`.
pub fn wald_test(tau_hat: f64, n: usize, vm: &VarianceModel) -> Result<TestResult> {
    open_interval(tau_hat)?;
    let w = n as f64 * tau_hat * tau_hat / vm.c;
    Ok(TestResult::new(w, TestFamily::Wald, tau_hat, n))
}

/// `Λ = 2n log(1/(1-τ̂²))`.
pub fn lr_test(tau_hat: f64, n: usize) -> Result<TestResult> {
    let lambda = 2.0 * quasi_loglik(tau_hat, n)?;
    Ok(TestResult::new(lambda, TestFamily::Lrt, tau_hat, n))
}

/// `Λ/(2c)`. The quasi-likelihood has curvature `2n` at zero, i.e. an implied
/// variance of `1/(2n)`, while the estimate's variance is `c/n`; dividing by
/// the dispersion `2c` restores the χ²₁ reference and makes the statistic
/// agree with `nτ̂²/c` to leading order.
pub fn scaled_lr_test(tau_hat: f64, n: usize, vm: &VarianceModel) -> Result<TestResult> {
    let lambda = 2.0 * quasi_loglik(tau_hat, n)?;
    Ok(TestResult::new(
        lambda / (2.0 * vm.c),
        TestFamily::ScaledLrt,
        tau_hat,
        n,
    ))
}

/// Runs the requested test unless `|τ̂|` is within 1e-12 of 1, in which case
/// a boundary result is returned. Values beyond that tolerance are rejected.
pub fn test_or_boundary(
    family: TestFamily,
    tau_hat: f64,
    n: usize,
    vm: &VarianceModel,
) -> Result<TestResult> {
    if (tau_hat.abs() - 1.0).abs() <= 1e-12 {
        return Ok(TestResult::boundary(family, tau_hat.signum(), n));
    }
    match family {
        TestFamily::Wald => wald_test(tau_hat, n, vm),
        TestFamily::Lrt => lr_test(tau_hat, n),
        TestFamily::ScaledLrt => scaled_lr_test(tau_hat, n, vm),
    }
}

/// Survival function of χ²₁: `2(1 - Φ(√x)) = erfc(√(x/2))`.
pub fn chi2_sf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(KappaError::Domain {
            name: "x",
            value: x,
            domain: "x >= 0",
        });
    }
    Ok(normal::erfc((0.5 * x).sqrt()))
}

/// Normal density `N(μ, σ²)` at `t` times `1 + γ₃s³/6 + γ₄s⁴/24`, `s = (t-μ)/σ`.
pub fn edgeworth_density(t: f64, mu: f64, sigma: f64, gamma3: f64, gamma4: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(KappaError::Domain {
            name: "sigma",
            value: sigma,
            domain: "sigma > 0",
        });
    }
    let s = (t - mu) / sigma;
    let s3 = s * s * s;
    let correction = 1.0 + gamma3 / 6.0 * s3 + gamma4 / 24.0 * s3 * s;
    Ok(normal::pdf(s) / sigma * correction)
}

/// Heuristic Wald variance `1.5c/(log h)²` from a Hessian value `h`.
/// Diagnostic only; never used for p-values.
pub fn heuristic_wald_variance(hessian: f64, vm: &VarianceModel) -> f64 {
    let l = hessian.ln();
    1.5 * vm.c / (l * l)
}
