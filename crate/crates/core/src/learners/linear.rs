//! Ordinary least squares and LASSO via cyclic coordinate descent.
//!
//! The LASSO minimizes `(1/2n)·||y - Xβ - b||² + λ·||β||₁` on columns
//! standardized to zero mean and unit population variance; the returned
//! coefficients are mapped back to the original scale so `predict` is a
//! plain affine map.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::stats;

const CD_MAX_SWEEPS: usize = 1000;
const CD_TOLERANCE: f64 = 1e-6;
const GRAM_JITTER: f64 = 1e-10;

/// A fitted affine model `y = Xβ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Column means seen at fit time.
    pub feature_means: Vec<f64>,
    /// Column population standard deviations seen at fit time.
    pub feature_stds: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.rows() > 0 && x.cols() != self.coefficients.len() {
            return Err(Error::data(format!(
                "prediction input has {} columns, model was fit on {}",
                x.cols(),
                self.coefficients.len()
            )));
        }
        Ok(x.iter_rows()
            .map(|row| {
                self.intercept
                    + row
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(v, c)| v * c)
                        .sum::<f64>()
            })
            .collect())
    }
}

fn column_moments(x: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let means: Vec<f64> = (0..x.cols()).map(|c| stats::mean(&x.column(c))).collect();
    let stds: Vec<f64> = (0..x.cols())
        .map(|c| stats::population_std(&x.column(c)))
        .collect();
    (means, stds)
}

/// Solves a small symmetric linear system by Gaussian elimination with
/// partial pivoting. The caller jitters the diagonal, so the system is
/// always solvable.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        if diag == 0.0 {
            continue;
        }
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col][k] * x[k];
        }
        x[col] = if a[col][col] == 0.0 { 0.0 } else { sum / a[col][col] };
    }
    x
}

/// Least squares fit via normal equations on centered data, with a ridge
/// jitter of 1e-10 on the Gram diagonal so rank-deficient designs still solve.
pub fn ols_fit(x: &DenseMatrix, y: &[f64]) -> LinearModel {
    assert_eq!(x.rows(), y.len(), "design and target row counts differ");
    assert!(!y.is_empty(), "cannot fit on an empty dataset");
    let p = x.cols();
    let (means, stds) = column_moments(x);
    let y_mean = stats::mean(y);

    if p == 0 {
        return LinearModel {
            coefficients: vec![],
            intercept: y_mean,
            feature_means: means,
            feature_stds: stds,
        };
    }

    let centered: Vec<Vec<f64>> = (0..p)
        .map(|c| x.column(c).iter().map(|v| v - means[c]).collect())
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let mut gram = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i..p {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            gram[i][j] = dot;
            gram[j][i] = dot;
        }
        gram[i][i] += GRAM_JITTER;
    }
    let rhs: Vec<f64> = (0..p)
        .map(|i| centered[i].iter().zip(&yc).map(|(a, b)| a * b).sum())
        .collect();

    let coefficients = solve(gram, rhs);
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    LinearModel {
        coefficients,
        intercept,
        feature_means: means,
        feature_stds: stds,
    }
}

/// Soft-thresholding operator `S(z, γ) = sign(z)·max(|z| - γ, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[cfg(debug_assertions)]
fn lasso_objective(residual: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = residual.len() as f64;
    let rss: f64 = residual.iter().map(|r| r * r).sum();
    rss / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// LASSO fit by cyclic coordinate descent with soft-threshold updates.
///
/// Converges when the largest coefficient change in a sweep drops below
/// 1e-6, or after 1000 sweeps. Constant columns get a zero coefficient.
pub fn lasso_fit(x: &DenseMatrix, y: &[f64], lambda: f64) -> Result<LinearModel> {
    if x.rows() != y.len() {
        return Err(Error::data("design and target row counts differ"));
    }
    if y.is_empty() {
        return Err(Error::data("cannot fit on an empty dataset"));
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite inputs in lasso_fit"));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::config(format!("lambda must be >= 0, got {lambda}")));
    }

    let n = x.rows();
    let p = x.cols();
    let (means, stds) = column_moments(x);
    let y_mean = stats::mean(y);

    // standardized active columns
    let standardized: Vec<Option<Vec<f64>>> = (0..p)
        .map(|c| {
            if stds[c] > 0.0 {
                Some(
                    x.column(c)
                        .iter()
                        .map(|v| (v - means[c]) / stds[c])
                        .collect(),
                )
            } else {
                None
            }
        })
        .collect();

    let mut beta = vec![0.0; p];
    let mut residual: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    #[cfg(debug_assertions)]
    let mut previous_objective = lasso_objective(&residual, &beta, lambda);

    for _sweep in 0..CD_MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let Some(col) = &standardized[j] else { continue };
            let partial: f64 = col.iter().zip(&residual).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let z = partial + beta[j];
            let updated = soft_threshold(z, lambda);
            let change = updated - beta[j];
            if change != 0.0 {
                for (r, v) in residual.iter_mut().zip(col) {
                    *r -= change * v;
                }
                beta[j] = updated;
                max_change = max_change.max(change.abs());
            }
        }

        #[cfg(debug_assertions)]
        {
            let objective = lasso_objective(&residual, &beta, lambda);
            debug_assert!(
                objective <= previous_objective + 1e-9,
                "coordinate descent objective increased: {previous_objective} -> {objective}"
            );
            previous_objective = objective;
        }

        if max_change < CD_TOLERANCE {
            break;
        }
    }

    let coefficients: Vec<f64> = (0..p)
        .map(|j| if stds[j] > 0.0 { beta[j] / stds[j] } else { 0.0 })
        .collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok(LinearModel {
        coefficients,
        intercept,
        feature_means: means,
        feature_stds: stds,
    })
}
