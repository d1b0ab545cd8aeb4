//! Kemeny κ-correlation: pairwise weak-order score matrices, the κ
//! covariance/correlation estimator with its quasi-likelihood inference,
//! the multivariate κ matrix, and generalised Mann-Whitney κ-regression.
//!
//! The computational pipeline for a pair of margins is
//! `score_matrix -> centre -> kernel_product -> kappa_cov / kappa_corr`.
//! For Monte Carlo work [`estimator::kappa_streaming`] evaluates the same
//! quantities without materialising any N×N matrix.

pub mod embeddings;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod multivariate;
pub mod normal;
pub mod regression;
pub mod scores;
pub mod simulate;

pub use error::{KappaError, Result};
pub use estimator::{
    hajek_terms, kappa_corr, kappa_cov, kappa_streaming, moments, HajekProjection, KappaEstimate,
    KappaSummary,
};
pub use inference::{
    chi2_sf, edgeworth_density, lr_test, observed_information, quasi_loglik, scaled_lr_test,
    standard_error, wald_test, Denominator, TestFamily, TestResult, VarianceModel,
};
pub use multivariate::{kappa_matrix, matrix_tests, KappaMatrix};
pub use regression::{build_design, fit, ContrastDesign, FitOptions, RegressionFit};
pub use scores::{
    centre, centred_scores, kernel_product, score_matrix, CentredScoreMatrix, KernelMatrix, ObservationVector,
    ScoreMatrix,
};
