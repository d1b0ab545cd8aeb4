//! Pairwise κ-correlation matrix over several margins.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{KappaError, Result};
use crate::estimator::{kappa_corr_named, KappaEstimate};
use crate::inference::{test_or_boundary, TestFamily, TestResult, VarianceModel};
use crate::scores::{centred_scores, CentredScoreMatrix, ObservationVector};

#[derive(Debug, Clone, PartialEq)]
pub struct KappaMatrix {
    pub dim: usize,
    pub n: usize,
    pub entries: DMatrix<f64>,
    /// Full estimates for `a < b`, row-major over the upper triangle.
    pub pairs: Vec<PairEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub a: usize,
    pub b: usize,
    pub estimate: KappaEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTests {
    pub a: usize,
    pub b: usize,
    pub wald: TestResult,
    pub lrt: TestResult,
    pub scaled_lrt: TestResult,
}

impl KappaMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[(a, b)]
    }

    /// Smallest eigenvalue; reported as a diagnostic, no PSD guarantee exists.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Additive joint quasi-likelihood `-n Σ_{a<b} log(1 - τ_ab²)` at an
    /// arbitrary symmetric matrix of correlations.
    pub fn joint_quasi_loglik(entries: &DMatrix<f64>, n: usize) -> Result<f64> {
        let p = entries.nrows();
        let mut total = 0.0;
        for a in 0..p {
            for b in (a + 1)..p {
                total += crate::inference::quasi_loglik(entries[(a, b)], n)?;
            }
        }
        Ok(total)
    }
}

pub fn kappa_matrix(columns: &[ObservationVector]) -> Result<KappaMatrix> {
    let p = columns.len();
    if p < 2 {
        return Err(KappaError::TooFewObservations { min: 2, got: p });
    }
    let n = columns[0].len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(KappaError::DimensionMismatch {
            left: n,
            right: c.len(),
        });
    }
    let cache: Vec<CentredScoreMatrix> = columns.iter().map(centred_scores).collect();
    if let Some(i) = cache.iter().position(|k| k.is_degenerate()) {
        return Err(KappaError::DegenerateMargin {
            margin: format!("column {i}"),
        });
    }

    let index_pairs: Vec<(usize, usize)> =
        (0..p).flat_map(|a| ((a + 1)..p).map(move |b| (a, b))).collect();
    let eval = |&(a, b): &(usize, usize)| -> Result<PairEstimate> {
        let estimate =
            kappa_corr_named(&cache[a], &cache[b], &format!("column {a}"), &format!("column {b}"))?;
        Ok(PairEstimate { a, b, estimate })
    };
    #[cfg(feature = "parallel")]
    let pairs: Result<Vec<_>> = {
        use rayon::prelude::*;
        index_pairs.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Result<Vec<_>> = index_pairs.iter().map(eval).collect();
    let pairs = pairs?;

    let mut entries = DMatrix::identity(p, p);
    for pe in &pairs {
        entries[(pe.a, pe.b)] = pe.estimate.tau_corr;
        entries[(pe.b, pe.a)] = pe.estimate.tau_corr;
    }
    Ok(KappaMatrix {
        dim: p,
        n,
        entries,
        pairs,
    })
}

/// Wald, LRT and dispersion-scaled LRT for every off-diagonal pair. No
/// multiplicity correction.
pub fn matrix_tests(m: &KappaMatrix, n: usize, vm: &VarianceModel) -> Result<Vec<PairTests>> {
    m.pairs
        .iter()
        .map(|pe| {
            let tau = m.get(pe.a, pe.b);
            Ok(PairTests {
                a: pe.a,
                b: pe.b,
                wald: test_or_boundary(TestFamily::Wald, tau, n, vm)?,
                lrt: test_or_boundary(TestFamily::Lrt, tau, n, vm)?,
                scaled_lrt: test_or_boundary(TestFamily::ScaledLrt, tau, n, vm)?,
            })
        })
        .collect()
}
