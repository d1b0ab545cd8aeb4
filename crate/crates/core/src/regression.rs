//! Generalised Mann-Whitney κ-regression.
//!
//! Each unordered pair of observations `(n, n')` contributes a covariate
//! contrast `Δx = x_n - x_n'`, a linear predictor `η = Δxᵀθ` (identity
//! link), a response kernel value `z` and a weight `w`. The feasible set
//! `Θ = {θ : |η| < 1 for every contrast}` is convex and contains the origin.
//!
//! Sign convention: [`objective`] is the barrier `-Σ w log(1 - η²) ≥ 0`, and
//! [`gradient`] / [`hessian`] are its derivatives. The fit minimises
//! [`fit_objective`] `= objective - Σ w z η`, which is strictly convex on the
//! contrast span and whose gradient is exactly
//! [`estimating_equation_residual`]. A stationary point therefore solves
//! `Σ w 2η/(1-η²) Δx = Σ w z Δx`.
//!
//! Ordered pairs `(n, n')` and `(n', n)` are folded into one contrast: the
//! barrier is even in η, so the weights add, and the response enters as the
//! weight-averaged antisymmetric part `(w z_{nn'} - w' z_{n'n}) / (w + w')`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{KappaError, Result};
use crate::scores::{centred_scores, ObservationVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastDesign {
    /// `(n, n')` with `n < n'`.
    pub pairs: Vec<(usize, usize)>,
    /// One row per contrast, `P` columns.
    pub deltas: DMatrix<f64>,
    pub z: Vec<f64>,
    pub weights: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub rank: usize,
}

impl ContrastDesign {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn full_rank(&self) -> bool {
        self.rank == self.p
    }

    /// Copy with every response value divided by `c`, i.e. the estimating
    /// equation `2η/(1-η²) = z/c`.
    pub fn with_variance_proxy(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(KappaError::Domain {
                name: "c",
                value: c,
                domain: "c > 0",
            });
        }
        let mut out = self.clone();
        out.z.iter_mut().for_each(|z| *z /= c);
        Ok(out)
    }

    /// Linear predictors `η = Δxᵀθ` for every contrast.
    pub fn linear_predictor(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.p {
            return Err(KappaError::DimensionMismatch {
                left: self.p,
                right: theta.len(),
            });
        }
        let eta = &self.deltas * DVector::from_column_slice(theta);
        Ok(eta.iter().copied().collect())
    }

    /// Like [`linear_predictor`](Self::linear_predictor) but fails on the
    /// first contrast with `|η| >= 1`.
    pub fn feasible_predictor(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let eta = self.linear_predictor(theta)?;
        if let Some((i, e)) = eta.iter().enumerate().find(|(_, e)| !(e.abs() < 1.0)) {
            let (first, second) = self.pairs[i];
            return Err(KappaError::Infeasible {
                first,
                second,
                eta_abs: e.abs(),
            });
        }
        Ok(eta)
    }

    pub fn is_feasible(&self, theta: &[f64]) -> bool {
        self.feasible_predictor(theta).is_ok()
    }

    /// `1 - max|η|`.
    pub fn feasibility_margin(&self, theta: &[f64]) -> Result<f64> {
        let eta = self.linear_predictor(theta)?;
        Ok(1.0 - eta.iter().fold(0.0f64, |m, e| m.max(e.abs())))
    }
}

fn check_covariates(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() < 2 {
        return Err(KappaError::TooFewObservations {
            min: 2,
            got: x.nrows(),
        });
    }
    if x.ncols() == 0 {
        return Err(KappaError::Config("at least one predictor is required".into()));
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(KappaError::NonFinite { index, value });
    }
    Ok(())
}

/// Numerical rank of the contrast set, from the eigenvalues of `DᵀD`.
fn contrast_rank(deltas: &DMatrix<f64>) -> usize {
    let gram = deltas.transpose() * deltas;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let top = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    let tol = top * 1e-12 * deltas.ncols() as f64;
    eig.iter().filter(|&&v| v > tol).count()
}

/// Design from an explicit `N×N` response kernel (ordered pairs) and
/// optional `N×N` ordered-pair weights. Default weights are `1/(N(N-1))`.
pub fn build_design_from_kernel(
    x: &DMatrix<f64>,
    kernel: &DMatrix<f64>,
    weights: Option<&DMatrix<f64>>,
) -> Result<ContrastDesign> {
    check_covariates(x)?;
    let n = x.nrows();
    let p = x.ncols();
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(KappaError::DimensionMismatch {
            left: n,
            right: kernel.nrows(),
        });
    }
    if let Some(w) = weights {
        if w.nrows() != n || w.ncols() != n {
            return Err(KappaError::DimensionMismatch {
                left: n,
                right: w.nrows(),
            });
        }
        if let Some(&bad) = w.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(KappaError::Domain {
                name: "weight",
                value: bad,
                domain: "finite and >= 0",
            });
        }
    }
    let default_w = 1.0 / (n * (n - 1)) as f64;
    let weight = |a: usize, b: usize| weights.map_or(default_w, |w| w[(a, b)]);

    let m = n * (n - 1) / 2;
    let mut pairs = Vec::with_capacity(m);
    let mut z = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    let mut deltas = DMatrix::zeros(m, p);
    for a in 0..n {
        for b in (a + 1)..n {
            let (w1, w2) = (weight(a, b), weight(b, a));
            let total = w1 + w2;
            let zz = if total > 0.0 {
                (w1 * kernel[(a, b)] - w2 * kernel[(b, a)]) / total
            } else {
                0.0
            };
            let row = pairs.len();
            for j in 0..p {
                deltas[(row, j)] = x[(a, j)] - x[(b, j)];
            }
            pairs.push((a, b));
            z.push(zz);
            ws.push(total);
        }
    }
    let rank = contrast_rank(&deltas);
    Ok(ContrastDesign {
        pairs,
        deltas,
        z,
        weights: ws,
        n,
        p,
        rank,
    })
}

/// Design whose response kernel is the centred score matrix of `y`.
pub fn build_design(
    x: &DMatrix<f64>,
    y: &ObservationVector,
    weights: Option<&DMatrix<f64>>,
) -> Result<ContrastDesign> {
    if y.len() != x.nrows() {
        return Err(KappaError::DimensionMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    let ky = centred_scores(y);
    build_design_from_kernel(x, ky.entries(), weights)
}

/// Barrier `-Σ w log(1 - η²)`.
pub fn objective(d: &ContrastDesign, theta: &[f64]) -> Result<f64> {
    let eta = d.feasible_predictor(theta)?;
    Ok(barrier(d, &eta))
}

fn barrier(d: &ContrastDesign, eta: &[f64]) -> f64 {
    eta.iter()
        .zip(&d.weights)
        .map(|(e, w)| -w * (-e * e).ln_1p())
        .sum()
}

/// Barrier minus the linear response term `Σ w z η`.
pub fn fit_objective(d: &ContrastDesign, theta: &[f64]) -> Result<f64> {
    let eta = d.feasible_predictor(theta)?;
    Ok(fit_value(d, &eta))
}

fn fit_value(d: &ContrastDesign, eta: &[f64]) -> f64 {
    let linear: f64 = eta
        .iter()
        .zip(d.z.iter().zip(&d.weights))
        .map(|(e, (z, w))| w * z * e)
        .sum();
    barrier(d, eta) - linear
}

fn weighted_rows(d: &ContrastDesign, coef: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; d.p];
    for (i, c) in coef.enumerate() {
        if c == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += c * d.deltas[(i, j)];
        }
    }
    out
}

/// `Σ 2wη/(1-η²) Δx`.
pub fn gradient(d: &ContrastDesign, theta: &[f64]) -> Result<Vec<f64>> {
    let eta = d.feasible_predictor(theta)?;
    Ok(barrier_gradient(d, &eta))
}

fn barrier_gradient(d: &ContrastDesign, eta: &[f64]) -> Vec<f64> {
    weighted_rows(
        d,
        eta.iter()
            .zip(&d.weights)
            .map(|(e, w)| 2.0 * w * e / (1.0 - e * e)),
    )
}

/// `Σ 2w(1+η²)/(1-η²)² ΔxΔxᵀ`.
pub fn hessian(d: &ContrastDesign, theta: &[f64]) -> Result<DMatrix<f64>> {
    let eta = d.feasible_predictor(theta)?;
    Ok(barrier_hessian(d, &eta))
}

fn barrier_hessian(d: &ContrastDesign, eta: &[f64]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(d.p, d.p);
    for (i, (e, w)) in eta.iter().zip(&d.weights).enumerate() {
        let e2 = e * e;
        let coef = 2.0 * w * (1.0 + e2) / ((1.0 - e2) * (1.0 - e2));
        if coef == 0.0 {
            continue;
        }
        for a in 0..d.p {
            let da = d.deltas[(i, a)];
            if da == 0.0 {
                continue;
            }
            for b in 0..d.p {
                h[(a, b)] += coef * da * d.deltas[(i, b)];
            }
        }
    }
    h
}

/// `Σ w 2η/(1-η²) Δx - Σ w z Δx`, the gradient of [`fit_objective`].
pub fn estimating_equation_residual(d: &ContrastDesign, theta: &[f64]) -> Result<Vec<f64>> {
    let eta = d.feasible_predictor(theta)?;
    Ok(residual(d, &eta))
}

fn residual(d: &ContrastDesign, eta: &[f64]) -> Vec<f64> {
    let g = barrier_gradient(d, eta);
    let rhs = weighted_rows(d, d.z.iter().zip(&d.weights).map(|(z, w)| w * z));
    g.iter().zip(&rhs).map(|(a, b)| a - b).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_theta: Option<Vec<f64>>,
    /// Fraction of the distance to the feasibility boundary a step may cover.
    pub fraction_to_boundary: f64,
    pub armijo: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            initial_theta: None,
            fraction_to_boundary: 0.99,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub objective: f64,
    pub gradient_norm: f64,
    pub step_size: f64,
    pub max_abs_eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub theta: Vec<f64>,
    /// Value of [`fit_objective`] at `theta`.
    pub objective: f64,
    /// Norm of the estimating-equation residual at `theta`.
    pub gradient_norm: f64,
    pub residual: Vec<f64>,
    /// Curvature of the objective at `theta`, row-major.
    pub hessian: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub feasibility_margin: f64,
    /// The contrasts do not span all predictors; `theta` is the
    /// minimum-norm solution within their span.
    pub rank_deficient: bool,
    /// One record per Newton iteration; `step_size` is 0 on the last one.
    pub trace: Vec<IterationRecord>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `H d = -g`, falling back to an eigen pseudo-inverse restricted to
/// directions with non-negligible curvature. Returns the direction and
/// whether the fallback was needed.
fn newton_direction(h: &DMatrix<f64>, g: &[f64], full_rank: bool) -> (Vec<f64>, bool) {
    let rhs = -DVector::from_column_slice(g);
    if full_rank {
        if let Some(chol) = Cholesky::new(h.clone()) {
            let d = chol.solve(&rhs);
            if d.iter().all(|v| v.is_finite()) {
                return (d.iter().copied().collect(), false);
            }
        }
    }
    let eig = SymmetricEigen::new(h.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = top * 1e-12 * h.nrows() as f64;
    let mut d = DVector::zeros(h.nrows());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > tol {
            let v = eig.eigenvectors.column(i);
            d += v * (v.dot(&rhs) / lambda);
        }
    }
    (d.iter().copied().collect(), true)
}

/// Largest `t` in `(0, 1]` keeping `|η + t·Δη|` below the boundary by the
/// fraction-to-boundary rule.
fn max_step(eta: &[f64], deta: &[f64], fraction: f64) -> f64 {
    let mut t = 1.0f64;
    for (&e, &de) in eta.iter().zip(deta) {
        if de > 0.0 {
            t = t.min(fraction * (1.0 - e) / de);
        } else if de < 0.0 {
            t = t.min(fraction * (-1.0 - e) / de);
        }
    }
    t
}

/// Damped Newton minimisation of [`fit_objective`] from a feasible start.
pub fn fit(d: &ContrastDesign, options: &FitOptions) -> Result<RegressionFit> {
    let mut theta = options
        .initial_theta
        .clone()
        .unwrap_or_else(|| vec![0.0; d.p]);
    let mut eta = d.feasible_predictor(&theta)?;
    let full_rank = d.full_rank();
    let mut rank_deficient = !full_rank;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let f = fit_value(d, &eta);
        let g = residual(d, &eta);
        let g_norm = norm(&g);
        let max_abs_eta = eta.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if g_norm <= options.tol {
            converged = true;
            trace.push(IterationRecord {
                objective: f,
                gradient_norm: g_norm,
                step_size: 0.0,
                max_abs_eta,
            });
            break;
        }
        if iterations >= options.max_iter {
            trace.push(IterationRecord {
                objective: f,
                gradient_norm: g_norm,
                step_size: 0.0,
                max_abs_eta,
            });
            break;
        }

        let h = barrier_hessian(d, &eta);
        let (dir, pseudo) = newton_direction(&h, &g, full_rank);
        rank_deficient |= pseudo;
        let deta: Vec<f64> = (&d.deltas * DVector::from_column_slice(&dir))
            .iter()
            .copied()
            .collect();
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();

        let mut t = max_step(&eta, &deta, options.fraction_to_boundary);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = eta.iter().zip(&deta).map(|(e, de)| e + t * de).collect();
            if trial.iter().all(|e| e.abs() < 1.0) {
                let ft = fit_value(d, &trial);
                if ft <= f + options.armijo * t * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            t *= 0.5;
        }
        trace.push(IterationRecord {
            objective: f,
            gradient_norm: g_norm,
            step_size: if accepted.is_some() { t } else { 0.0 },
            max_abs_eta,
        });
        iterations += 1;
        match accepted {
            Some(_) => {
                for (th, di) in theta.iter_mut().zip(&dir) {
                    *th += t * di;
                }
                // recompute from theta so eta never drifts from Δxᵀθ
                eta = d.feasible_predictor(&theta)?;
            }
            None => {
                // no decrease representable in floating point
                let g_final = norm(&residual(d, &eta));
                converged = g_final <= options.tol;
                break;
            }
        }
    }

    let res = residual(d, &eta);
    let h = barrier_hessian(d, &eta);
    Ok(RegressionFit {
        objective: fit_value(d, &eta),
        gradient_norm: norm(&res),
        residual: res,
        hessian: (0..d.p).map(|a| (0..d.p).map(|b| h[(a, b)]).collect()).collect(),
        iterations,
        converged,
        feasibility_margin: 1.0 - eta.iter().fold(0.0f64, |m, e| m.max(e.abs())),
        rank_deficient,
        trace,
        theta,
    })
}
