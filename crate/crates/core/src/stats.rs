//! Summary statistics and small least-squares fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n as f64 - 1.0) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Summary {
            mean,
            stderr,
            count: n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Covariance of the coefficients.
    pub covariance: DMatrix<f64>,
    /// Weighted residual sum of squares divided by the degrees of freedom.
    pub chi2_per_dof: f64,
}

impl LeastSquares {
    pub fn stderr(&self, k: usize) -> f64 {
        self.covariance[(k, k)].max(0.0).sqrt()
    }
}

/// Weighted least squares `y ≈ X β`. When `known_variance` is set the
/// weights are inverse variances and the covariance is `(XᵀWX)^{-1}`;
/// otherwise the covariance is scaled by the residual variance.
pub fn weighted_least_squares(
    design: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    known_variance: bool,
) -> Result<LeastSquares> {
    let n = y.len();
    let p = design.first().map(|r| r.len()).unwrap_or(0);
    if n < p || p == 0 || design.len() != n || weights.len() != n {
        return Err(Error::Numeric("least squares needs at least as many rows as columns".into()));
    }
    let x = DMatrix::from_fn(n, p, |r, c| design[r][c]);
    let w = DVector::from_column_slice(weights);
    let yv = DVector::from_column_slice(y);
    let xtw = x.transpose() * DMatrix::from_diagonal(&w);
    let normal = &xtw * &x;
    let inv = normal
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular least-squares system".into()))?;
    let beta = &inv * (&xtw * &yv);
    let resid = &yv - &x * &beta;
    let rss: f64 = resid.iter().zip(weights).map(|(r, w)| w * r * r).sum();
    let dof = n.saturating_sub(p);
    let chi2_per_dof = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let covariance = if known_variance {
        inv
    } else {
        inv * chi2_per_dof
    };
    Ok(LeastSquares {
        coefficients: beta.iter().copied().collect(),
        covariance,
        chi2_per_dof,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut k, mut d) = (0, 0, 0.0f64);
    while i < a.len() && k < b.len() {
        let x = a[i].min(b[k]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while k < b.len() && b[k] <= x {
            k += 1;
        }
        d = d.max((i as f64 / na - k as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    1.628 * ((na + nb) / (na * nb)).sqrt()
}
