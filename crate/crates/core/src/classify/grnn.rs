use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_training, row, Classifier};
use crate::error::{Error, Result};

/// Gaussian-kernel regression onto one-hot class targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrnnModel {
    pub train: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub spread: f64,
}

pub fn grnn_fit(x: &DMatrix<f64>, labels: &[usize], classes: usize, spread: f64) -> Result<GrnnModel> {
    check_training(x, labels, classes)?;
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::domain("GRNN spread must be positive"));
    }
    Ok(GrnnModel {
        train: x.clone(),
        labels: labels.to_vec(),
        classes,
        spread,
    })
}

impl Classifier for GrnnModel {
    fn n_classes(&self) -> usize {
        self.classes
    }
    fn n_features(&self) -> usize {
        self.train.ncols()
    }

    /// Kernel-weighted average of the one-hot targets.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let two_s2 = 2.0 * self.spread * self.spread;
        let mut scores = vec![0.0; self.classes];
        let mut total = 0.0;
        let mut nearest = (f64::INFINITY, 0usize);
        for r in 0..self.train.nrows() {
            let d2: f64 = row(&self.train, r).iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 < nearest.0 {
                nearest = (d2, r);
            }
            let k = (-d2 / two_s2).exp();
            scores[self.labels[r]] += k;
            total += k;
        }
        if !(total > 0.0) {
            log::warn!("GRNN kernel underflowed for every training sample; using the nearest sample");
            let mut s = vec![0.0; self.classes];
            s[self.labels[nearest.1]] = 1.0;
            return Ok(s);
        }
        Ok(scores.into_iter().map(|s| s / total).collect())
    }
}
