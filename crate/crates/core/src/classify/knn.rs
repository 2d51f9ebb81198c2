use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training, row, Classifier};
use crate::error::{Error, Result};

/// Added to distances before inversion so coincident points get a finite weight.
pub const WEIGHT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Euclidean,
    /// Uses the inverse of the ridge-regularized training covariance.
    Mahalanobis,
    Chebychev,
    /// One minus the Pearson correlation of the two feature vectors.
    Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    pub metric: DistanceMetric,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 10,
            metric: DistanceMetric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub config: KnnConfig,
    pub train: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub classes: usize,
    /// Inverse covariance, only for the Mahalanobis metric.
    pub precision: Option<DMatrix<f64>>,
}

pub fn knn_fit(x: &DMatrix<f64>, labels: &[usize], classes: usize, cfg: &KnnConfig) -> Result<KnnModel> {
    check_training(x, labels, classes)?;
    if cfg.k == 0 || cfg.k > x.nrows() {
        return Err(Error::domain(format!(
            "K = {} needs 1..={} training samples",
            cfg.k,
            x.nrows()
        )));
    }
    let precision = match cfg.metric {
        DistanceMetric::Mahalanobis => Some(inverse_covariance(x)?),
        _ => None,
    };
    Ok(KnnModel {
        config: cfg.clone(),
        train: x.clone(),
        labels: labels.to_vec(),
        classes,
        precision,
    })
}

fn inverse_covariance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n) = x.shape();
    let mean = DVector::from_iterator(n, x.column_iter().map(|c| c.sum() / m as f64));
    let mut xc = x.clone();
    for mut r in xc.row_iter_mut() {
        r -= mean.transpose();
    }
    let mut cov = xc.transpose() * &xc / (m.max(2) as f64 - 1.0);
    let scale = cov.trace() / n as f64;
    let ridge = 1e-6 * if scale > 0.0 { scale } else { 1.0 };
    for i in 0..n {
        cov[(i, i)] += ridge;
    }
    cov.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Numerical("training covariance is not positive definite".into()))
}

impl KnnModel {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.config.metric {
            DistanceMetric::Euclidean => a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt(),
            DistanceMetric::Chebychev => a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
            DistanceMetric::Mahalanobis => {
                let s = self.precision.as_ref().expect("precision fitted for mahalanobis");
                let d = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(p, q)| p - q));
                (d.dot(&(s * &d))).max(0.0).sqrt()
            }
            DistanceMetric::Correlation => {
                let n = a.len() as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
                for (p, q) in a.iter().zip(b) {
                    sab += (p - ma) * (q - mb);
                    saa += (p - ma).powi(2);
                    sbb += (q - mb).powi(2);
                }
                let denom = (saa * sbb).sqrt();
                let r = if denom > 0.0 { sab / denom } else { 0.0 };
                (1.0 - r).max(0.0)
            }
        }
    }
}

impl Classifier for KnnModel {
    fn n_classes(&self) -> usize {
        self.classes
    }
    fn n_features(&self) -> usize {
        self.train.ncols()
    }

    /// Normalized inverse-distance weight per class among the K nearest.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let mut dist: Vec<(f64, usize)> = (0..self.train.nrows())
            .map(|r| (self.distance(y, &row(&self.train, r)), r))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut scores = vec![0.0; self.classes];
        for &(d, r) in dist.iter().take(self.config.k) {
            scores[self.labels[r]] += 1.0 / (d + WEIGHT_EPS);
        }
        let z: f64 = scores.iter().sum();
        Ok(scores.into_iter().map(|s| s / z).collect())
    }
}
