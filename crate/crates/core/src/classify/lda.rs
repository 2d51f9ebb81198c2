use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier};
use crate::error::{Error, Result};

/// Gaussian discriminant with one pooled covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    /// classes × features
    pub means: DMatrix<f64>,
    /// Pooled covariance after the ridge.
    pub covariance: DMatrix<f64>,
    pub priors: Vec<f64>,
    /// classes × features: Σ⁻¹μ_c per row.
    coefficients: DMatrix<f64>,
    intercepts: Vec<f64>,
}

impl LdaModel {
    /// Builds the discriminant from its parts.
    pub fn new(means: DMatrix<f64>, covariance: DMatrix<f64>, priors: Vec<f64>) -> Result<Self> {
        let k = means.nrows();
        let n = means.ncols();
        if covariance.shape() != (n, n) {
            return Err(Error::Dimension {
                expected: n,
                found: covariance.nrows(),
            });
        }
        if priors.len() != k {
            return Err(Error::Dimension {
                expected: k,
                found: priors.len(),
            });
        }
        if priors.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::domain("LDA priors must be positive"));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("pooled covariance is singular".into()))?;
        let coefficients = chol.solve(&means.transpose()).transpose();
        let intercepts = (0..k)
            .map(|c| -0.5 * coefficients.row(c).dot(&means.row(c)) + priors[c].ln())
            .collect();
        Ok(Self {
            means,
            covariance,
            priors,
            coefficients,
            intercepts,
        })
    }

    pub fn discriminants(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let v = DVector::from_column_slice(y);
        Ok((0..self.priors.len())
            .map(|c| self.coefficients.row(c).transpose().dot(&v) + self.intercepts[c])
            .collect())
    }
}

/// Pooled within-class covariance plus `ridge` × (trace / N) on the diagonal.
pub fn lda_fit(x: &DMatrix<f64>, labels: &[usize], classes: usize, ridge: f64) -> Result<LdaModel> {
    let counts = check_training(x, labels, classes)?;
    if let Some(c) = counts.iter().position(|&n| n < 2) {
        return Err(Error::domain(format!("class {c} needs at least two samples for pooling")));
    }
    if !(ridge >= 0.0) {
        return Err(Error::domain("LDA ridge must be non-negative"));
    }
    let (m, n) = x.shape();
    let mut means = DMatrix::zeros(classes, n);
    for (r, &l) in labels.iter().enumerate() {
        for j in 0..n {
            means[(l, j)] += x[(r, j)];
        }
    }
    for c in 0..classes {
        for j in 0..n {
            means[(c, j)] /= counts[c] as f64;
        }
    }
    let mut centred = x.clone();
    for (r, &l) in labels.iter().enumerate() {
        for j in 0..n {
            centred[(r, j)] -= means[(l, j)];
        }
    }
    let mut cov = centred.transpose() * &centred / (m - classes) as f64;
    let mut scale = cov.trace() / n as f64;
    if !(scale > 0.0) {
        // classes are internally constant; fall back to the overall spread
        let mu: Vec<f64> = x.column_iter().map(|c| c.sum() / m as f64).collect();
        scale = x
            .column_iter()
            .zip(&mu)
            .map(|(c, mu)| c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / m as f64)
            .sum::<f64>()
            / n as f64;
    }
    if !(scale > 0.0) {
        scale = 1.0;
    }
    for i in 0..n {
        cov[(i, i)] += ridge * scale;
    }
    let priors = counts.iter().map(|&k| k as f64 / m as f64).collect();
    LdaModel::new(means, cov, priors)
}

impl Classifier for LdaModel {
    fn n_classes(&self) -> usize {
        self.priors.len()
    }
    fn n_features(&self) -> usize {
        self.means.ncols()
    }

    /// Posterior from the softmax of the discriminants.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d = self.discriminants(y)?;
        let top = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = d.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = w.iter().sum();
        Ok(w.into_iter().map(|v| v / z).collect())
    }

    fn predict(&self, y: &[f64]) -> Result<usize> {
        Ok(super::argmax(&self.discriminants(y)?))
    }
}
