//! κ-covariance and κ-correlation point estimates, Hájek projection terms,
//! and the third/fourth power-sum diagnostics of the kernel.

use serde::{Deserialize, Serialize};

use crate::error::{KappaError, Result};
use crate::scores::{centred_scores, kernel_product, score, CentredScoreMatrix, KernelMatrix, ObservationVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    /// Mean of `Z_kl` over `k != l`.
    pub tau_cov: f64,
    /// `tau_cov` normalised by the two margins' mean squared centred scores.
    pub tau_corr: f64,
    pub n: usize,
    /// Mean of `Z_kl^3` (raw, not re-centred).
    pub gamma3: f64,
    /// Mean of `Z_kl^4` (raw, not re-centred).
    pub gamma4: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    /// Largest |centred score| across both margins.
    pub max_abs_centred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HajekProjection {
    pub terms: Vec<f64>,
    pub mean: f64,
}

fn pair_count(n: usize) -> f64 {
    (n * (n - 1)) as f64
}

pub fn kappa_cov(z: &KernelMatrix) -> f64 {
    z.off_diagonal().sum::<f64>() / pair_count(z.dim())
}

pub fn moments(z: &KernelMatrix) -> (f64, f64) {
    let (s3, s4) = z.off_diagonal().fold((0.0, 0.0), |(s3, s4), v| {
        let v2 = v * v;
        (s3 + v2 * v, s4 + v2 * v2)
    });
    let m = pair_count(z.dim());
    (s3 / m, s4 / m)
}

/// Correlation form of the estimator, with margin names `x` and `y` in
/// degeneracy errors.
pub fn kappa_corr(kx: &CentredScoreMatrix, ky: &CentredScoreMatrix) -> Result<KappaEstimate> {
    kappa_corr_named(kx, ky, "x", "y")
}

pub fn kappa_corr_named(
    kx: &CentredScoreMatrix,
    ky: &CentredScoreMatrix,
    x_name: &str,
    y_name: &str,
) -> Result<KappaEstimate> {
    let z = kernel_product(kx, ky)?;
    for (k, name) in [(kx, x_name), (ky, y_name)] {
        if k.is_degenerate() {
            return Err(KappaError::DegenerateMargin {
                margin: name.to_string(),
            });
        }
    }
    let n = kx.dim();
    let m = pair_count(n);
    let sum_z: f64 = z.off_diagonal().sum();
    let ssx = kx.sum_of_squares();
    let ssy = ky.sum_of_squares();
    let (gamma3, gamma4) = moments(&z);
    let tau_corr = sum_z / (ssx * ssy).sqrt();
    Ok(KappaEstimate {
        tau_cov: sum_z / m,
        tau_corr,
        n,
        gamma3,
        gamma4,
        sigma_x2: ssx / m,
        sigma_y2: ssy / m,
        max_abs_centred: kx.max_abs().max(ky.max_abs()),
    })
}

/// Full pipeline from raw observations.
pub fn estimate(x: &ObservationVector, y: &ObservationVector) -> Result<KappaEstimate> {
    if x.len() != y.len() {
        return Err(KappaError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    kappa_corr(&centred_scores(x), &centred_scores(y))
}

/// Plug-in Hájek terms: `H_n` is the row mean of `Z_nl` over `l != n`.
pub fn hajek_terms(x: &ObservationVector, y: &ObservationVector) -> Result<HajekProjection> {
    if x.len() != y.len() {
        return Err(KappaError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(KappaError::TooFewObservations { min: 3, got: n });
    }
    let z = kernel_product(&centred_scores(x), &centred_scores(y))?;
    let terms: Vec<f64> = (0..n)
        .map(|k| (0..n).filter(|&l| l != k).map(|l| z.get(k, l)).sum::<f64>() / (n - 1) as f64)
        .collect();
    let mean = terms.iter().sum::<f64>() / n as f64;
    Ok(HajekProjection { terms, mean })
}

/// Point estimates without moment diagnostics, as produced by
/// [`kappa_streaming`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub tau_cov: f64,
    /// `NaN` when either margin is degenerate.
    pub tau_corr: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
}

/// Row/column sums of one margin's score matrix.
struct MarginSums {
    row: Vec<f64>,
    col: Vec<f64>,
}

impl MarginSums {
    /// Means `(r, s, g)` of the score matrix.
    fn means(&self, n: usize) -> (Vec<f64>, Vec<f64>, f64) {
        let d = (n - 1) as f64;
        let total: f64 = self.row.iter().sum();
        (
            self.row.iter().map(|v| v / d).collect(),
            self.col.iter().map(|v| v / d).collect(),
            total / pair_count(n),
        )
    }
}

/// `Σ_{k≠l} (A_kl - u_kl)(B_kl - v_kl)` expanded in terms of the row/column
/// sums, where `u_kl = r_k + s_l - g`.
fn centred_cross(n: usize, cross: f64, a: &MarginSums, b: &MarginSums) -> f64 {
    let nf = n as f64;
    let (ra, sa, ga) = a.means(n);
    let (rb, sb, gb) = b.means(n);
    let ta: f64 = a.row.iter().sum();
    let tb: f64 = b.row.iter().sum();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
    let sum = |p: &[f64]| p.iter().sum::<f64>();

    let a_times_v = dot(&rb, &a.row) + dot(&sb, &a.col) - gb * ta;
    let u_times_b = dot(&ra, &b.row) + dot(&sa, &b.col) - ga * tb;

    let (sra, ssa, srb, ssb) = (sum(&ra), sum(&sa), sum(&rb), sum(&sb));
    let all_uv = nf * dot(&ra, &rb) + sra * ssb - nf * gb * sra + ssa * srb + nf * dot(&sa, &sb)
        - nf * gb * ssa
        - nf * ga * srb
        - nf * ga * ssb
        + nf * nf * ga * gb;
    let diag_uv: f64 = (0..n)
        .map(|k| (ra[k] + sa[k] - ga) * (rb[k] + sb[k] - gb))
        .sum();

    cross - a_times_v - u_times_b + (all_uv - diag_uv)
}

/// κ estimates in O(N) memory: one pass over ordered pairs accumulates the
/// score cross-product and the row/column sums, and the centring is applied
/// algebraically afterwards.
pub fn kappa_streaming(x: &[f64], y: &[f64]) -> Result<KappaSummary> {
    if x.len() != y.len() {
        return Err(KappaError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(KappaError::TooFewObservations { min: 2, got: n });
    }

    let mut row_x = vec![0i64; n];
    let mut row_y = vec![0i64; n];
    let mut col_x = vec![0i32; n];
    let mut col_y = vec![0i32; n];
    let mut cross: i64 = 0;
    for k in 0..n {
        let (xk, yk) = (x[k], y[k]);
        let (mut rx, mut ry, mut c) = (0i32, 0i32, 0i32);
        for l in 0..n {
            let a = score(xk, x[l]) as i32;
            let b = score(yk, y[l]) as i32;
            rx += a;
            ry += b;
            c += a * b;
            col_x[l] += a;
            col_y[l] += b;
        }
        // drop the l == k term, which scored +1
        row_x[k] = (rx - 1) as i64;
        row_y[k] = (ry - 1) as i64;
        cross += (c - 1) as i64;
        col_x[k] -= 1;
        col_y[k] -= 1;
    }

    let to_f = |v: &[i64]| v.iter().map(|&s| s as f64).collect::<Vec<_>>();
    let to_f32 = |v: &[i32]| v.iter().map(|&s| s as f64).collect::<Vec<_>>();
    let mx = MarginSums {
        row: to_f(&row_x),
        col: to_f32(&col_x),
    };
    let my = MarginSums {
        row: to_f(&row_y),
        col: to_f32(&col_y),
    };
    let m = pair_count(n);
    let sxy = centred_cross(n, cross as f64, &mx, &my);
    // rounding floor: a constant margin must come out exactly degenerate
    let floor = m * 1e-13;
    let clean = |v: f64| if v <= floor { 0.0 } else { v };
    let sxx = clean(centred_cross(n, m, &mx, &mx));
    let syy = clean(centred_cross(n, m, &my, &my));
    let tau_corr = if sxx > 0.0 && syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    } else {
        f64::NAN
    };
    Ok(KappaSummary {
        tau_cov: sxy / m,
        tau_corr,
        sigma_x2: sxx / m,
        sigma_y2: syy / m,
    })
}
