//! Pairwise weak-order score matrices and their double-centred form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{KappaError, Result};

/// A validated sample of one margin: at least two finite values, ties allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObservationVector(Vec<f64>);

impl ObservationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(KappaError::TooFewObservations {
                min: 2,
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(KappaError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Element-wise image under `f`, re-validated.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.0.iter().map(|&v| f(v)).collect())
    }

    /// True when every value is equal, i.e. the centred scores vanish.
    pub fn is_constant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }
}

impl TryFrom<Vec<f64>> for ObservationVector {
    type Error = KappaError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ObservationVector> for Vec<f64> {
    fn from(v: ObservationVector) -> Self {
        v.0
    }
}

/// Hollow ±1 matrix: `+1` when `x_k >= x_l`, `-1` when `x_k < x_l`.
///
/// Ties score `+1` in both directions, so the matrix is antisymmetric only
/// when all values are distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    entries: DMatrix<i8>,
}

impl ScoreMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, k: usize, l: usize) -> i8 {
        self.entries[(k, l)]
    }

    pub fn entries(&self) -> &DMatrix<i8> {
        &self.entries
    }

    /// Builds a score matrix from raw entries, checking hollowness and the
    /// ±1 off-diagonal alphabet.
    pub fn from_entries(entries: DMatrix<i8>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(KappaError::DimensionMismatch {
                left: n,
                right: entries.ncols(),
            });
        }
        if n < 2 {
            return Err(KappaError::TooFewObservations { min: 2, got: n });
        }
        for k in 0..n {
            for l in 0..n {
                let v = entries[(k, l)];
                let ok = if k == l { v == 0 } else { v == 1 || v == -1 };
                if !ok {
                    return Err(KappaError::Domain {
                        name: "score entry",
                        value: v as f64,
                        domain: "0 on the diagonal, ±1 elsewhere",
                    });
                }
            }
        }
        Ok(Self { entries })
    }
}

/// Score matrix after subtracting row and column means and adding back the
/// grand mean. The diagonal is reset to zero afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct CentredScoreMatrix {
    entries: DMatrix<f64>,
    row_means: Vec<f64>,
    col_means: Vec<f64>,
    grand_mean: f64,
}

impl CentredScoreMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[(k, l)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn row_means(&self) -> &[f64] {
        &self.row_means
    }

    pub fn col_means(&self) -> &[f64] {
        &self.col_means
    }

    pub fn grand_mean(&self) -> f64 {
        self.grand_mean
    }

    /// Sum of squared off-diagonal entries.
    pub fn sum_of_squares(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_degenerate(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }
}

/// Element-wise product `Z_kl` of two centred score matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[(k, l)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Wraps an arbitrary square matrix, zeroing its diagonal.
    pub fn from_entries(mut entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(KappaError::DimensionMismatch {
                left: n,
                right: entries.ncols(),
            });
        }
        if n < 2 {
            return Err(KappaError::TooFewObservations { min: 2, got: n });
        }
        entries.fill_diagonal(0.0);
        Ok(Self { entries })
    }

    /// Iterator over the `N(N-1)` off-diagonal values.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.dim();
        (0..n).flat_map(move |k| (0..n).filter(move |&l| l != k).map(move |l| self.entries[(k, l)]))
    }
}

#[inline]
pub(crate) fn score(a: f64, b: f64) -> i8 {
    if a >= b {
        1
    } else {
        -1
    }
}

pub fn score_matrix(x: &ObservationVector) -> ScoreMatrix {
    let v = x.values();
    let n = v.len();
    let entries = DMatrix::from_fn(n, n, |k, l| if k == l { 0 } else { score(v[k], v[l]) });
    ScoreMatrix { entries }
}

pub fn centre(c: &ScoreMatrix) -> CentredScoreMatrix {
    let n = c.dim();
    let denom = (n - 1) as f64;
    let mut row_sums = vec![0i64; n];
    let mut col_sums = vec![0i64; n];
    for k in 0..n {
        for l in 0..n {
            let v = c.get(k, l) as i64;
            row_sums[k] += v;
            col_sums[l] += v;
        }
    }
    let total: i64 = row_sums.iter().sum();
    let row_means: Vec<f64> = row_sums.iter().map(|&s| s as f64 / denom).collect();
    let col_means: Vec<f64> = col_sums.iter().map(|&s| s as f64 / denom).collect();
    let grand_mean = total as f64 / (n * n - n) as f64;

    let entries = DMatrix::from_fn(n, n, |k, l| {
        if k == l {
            0.0
        } else {
            c.get(k, l) as f64 - row_means[k] - col_means[l] + grand_mean
        }
    });
    CentredScoreMatrix {
        entries,
        row_means,
        col_means,
        grand_mean,
    }
}

/// Convenience: `centre(score_matrix(x))`.
pub fn centred_scores(x: &ObservationVector) -> CentredScoreMatrix {
    centre(&score_matrix(x))
}

pub fn kernel_product(kx: &CentredScoreMatrix, ky: &CentredScoreMatrix) -> Result<KernelMatrix> {
    if kx.dim() != ky.dim() {
        return Err(KappaError::DimensionMismatch {
            left: kx.dim(),
            right: ky.dim(),
        });
    }
    let mut entries = kx.entries.component_mul(&ky.entries);
    entries.fill_diagonal(0.0);
    Ok(KernelMatrix { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(v: &[f64]) -> ObservationVector {
        ObservationVector::new(v.to_vec()).unwrap()
    }

    fn as_rows(c: &ScoreMatrix) -> Vec<Vec<i8>> {
        (0..c.dim()).map(|k| (0..c.dim()).map(|l| c.get(k, l)).collect()).collect()
    }

    #[test]
    fn two_distinct_values() {
        assert_eq!(as_rows(&score_matrix(&obs(&[1.0, 2.0]))), vec![vec![0, -1], vec![1, 0]]);
    }

    #[test]
    fn ties_score_plus_one_both_ways() {
        assert_eq!(as_rows(&score_matrix(&obs(&[5.0, 5.0]))), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn three_values() {
        assert_eq!(
            as_rows(&score_matrix(&obs(&[3.0, 1.0, 2.0]))),
            vec![vec![0, 1, 1], vec![-1, 0, -1], vec![-1, 1, 0]]
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ObservationVector::new(vec![1.0]),
            Err(KappaError::TooFewObservations { .. })
        ));
        assert!(matches!(
            ObservationVector::new(vec![1.0, f64::NAN]),
            Err(KappaError::NonFinite { index: 1, .. })
        ));
        assert!(ObservationVector::new(vec![f64::INFINITY, 1.0]).is_err());
    }

    #[test]
    fn centre_full_tie() {
        let k = centred_scores(&obs(&[5.0, 5.0]));
        assert_eq!(k.row_means(), &[1.0, 1.0]);
        assert_eq!(k.col_means(), &[1.0, 1.0]);
        assert_eq!(k.grand_mean(), 1.0);
        assert!(k.is_degenerate());
    }

    #[test]
    fn centre_two_distinct() {
        let k = centred_scores(&obs(&[1.0, 2.0]));
        assert_eq!(k.row_means(), &[-1.0, 1.0]);
        assert_eq!(k.col_means(), &[1.0, -1.0]);
        assert_eq!(k.grand_mean(), 0.0);
        // -1 - (-1) - (-1) + 0
        assert_eq!(k.get(0, 1), 1.0);
        assert_eq!(k.get(1, 0), -1.0);
        assert_eq!(k.get(0, 0), 0.0);
    }

    #[test]
    fn kernel_dimension_mismatch() {
        let a = centred_scores(&obs(&[1.0, 2.0, 3.0]));
        let b = centred_scores(&obs(&[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(
            kernel_product(&a, &b),
            Err(KappaError::DimensionMismatch { left: 3, right: 4 })
        );
    }

    #[test]
    fn kernel_square_is_nonnegative() {
        let a = centred_scores(&obs(&[0.3, -1.0, 2.0, 2.0, 0.1]));
        let z = kernel_product(&a, &a).unwrap();
        for k in 0..5 {
            assert_eq!(z.get(k, k), 0.0);
            for l in 0..5 {
                assert!(z.get(k, l) >= 0.0);
                assert_eq!(z.get(k, l), a.get(k, l).powi(2));
            }
        }
    }

    #[test]
    fn from_entries_validates() {
        let bad = DMatrix::from_row_slice(2, 2, &[1i8, 1, 1, 0]);
        assert!(ScoreMatrix::from_entries(bad).is_err());
        let good = DMatrix::from_row_slice(2, 2, &[0i8, -1, 1, 0]);
        assert!(ScoreMatrix::from_entries(good).is_ok());
    }
}
