use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// N × P, orthonormal columns.
    pub loadings: DMatrix<f64>,
    /// Descending, length P.
    pub eigenvalues: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

pub(crate) fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let m = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / m))
}

pub(crate) fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        row -= mean.transpose();
    }
    out
}

/// Top-`p` principal axes of the (M − 1)-normalized sample covariance.
pub fn pca_fit(x: &DMatrix<f64>, p: usize) -> Result<PcaModel> {
    let (m, n) = x.shape();
    if m < 2 || p == 0 || p > (m - 1).min(n) {
        return Err(Error::domain(format!(
            "{p} components requested from a {m} × {n} matrix (allowed 1..={})",
            (m.max(1) - 1).min(n)
        )));
    }
    let mean = column_means(x);
    let xc = center(x, &mean);
    let cov = (xc.transpose() * &xc) / (m as f64 - 1.0);
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut loadings = DMatrix::zeros(n, p);
    let mut eigenvalues = Vec::with_capacity(p);
    for (j, &k) in order.iter().take(p).enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        let pivot = v.iter().copied().fold(0.0f64, |best, e| if e.abs() > best.abs() { e } else { best });
        if pivot < 0.0 {
            v = -v;
        }
        loadings.set_column(j, &v);
        eigenvalues.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(PcaModel {
        mean,
        loadings,
        eigenvalues,
        total_variance,
    })
}

impl PcaModel {
    pub fn components(&self) -> usize {
        self.loadings.ncols()
    }

    /// Scores (X − mean)·loadings.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                found: x.ncols(),
            });
        }
        Ok(center(x, &self.mean) * &self.loadings)
    }

    pub fn reconstruct(&self, scores: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = scores * self.loadings.transpose();
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        out
    }

    /// Cumulative fraction of total variance carried by the retained components.
    pub fn cumulative_explained(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.eigenvalues
            .iter()
            .map(|v| {
                acc += v;
                if self.total_variance > 0.0 {
                    acc / self.total_variance
                } else {
                    0.0
                }
            })
            .collect()
    }
}
