use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier};
use crate::error::{Error, Result};

/// Variance floor relative to the largest per-feature variance.
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    pub priors: Vec<f64>,
    /// classes × features
    pub means: DMatrix<f64>,
    /// classes × features, already floored
    pub variances: DMatrix<f64>,
}

pub fn gnb_fit(x: &DMatrix<f64>, labels: &[usize], classes: usize) -> Result<GnbModel> {
    let counts = check_training(x, labels, classes)?;
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::domain(format!("class {c} has no training samples")));
    }
    let (m, n) = x.shape();
    let mut means = DMatrix::<f64>::zeros(classes, n);
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
    let mut variances = DMatrix::<f64>::zeros(classes, n);
    for (r, &l) in labels.iter().enumerate() {
        for j in 0..n {
            variances[(l, j)] += (x[(r, j)] - means[(l, j)]).powi(2);
        }
    }
    let scale = x
        .column_iter()
        .map(|col| {
            let mu = col.sum() / m as f64;
            col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / m as f64
        })
        .fold(0.0, f64::max);
    let floor = VARIANCE_FLOOR * if scale > 0.0 { scale } else { 1.0 };
    for c in 0..classes {
        for j in 0..n {
            variances[(c, j)] = (variances[(c, j)] / counts[c] as f64).max(floor);
        }
    }
    let priors = counts.iter().map(|&k| k as f64 / m as f64).collect();
    Ok(GnbModel {
        priors,
        means,
        variances,
    })
}

impl GnbModel {
    /// Unnormalized log posterior per class.
    pub fn log_joint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        Ok((0..self.priors.len())
            .map(|c| {
                let mut lp = self.priors[c].ln();
                for (j, v) in y.iter().enumerate() {
                    let var = self.variances[(c, j)];
                    let d = v - self.means[(c, j)];
                    lp -= 0.5 * (2.0 * std::f64::consts::PI * var).ln() + d * d / (2.0 * var);
                }
                lp
            })
            .collect())
    }
}

impl Classifier for GnbModel {
    fn n_classes(&self) -> usize {
        self.priors.len()
    }
    fn n_features(&self) -> usize {
        self.means.ncols()
    }

    /// Normalized posterior.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        let lj = self.log_joint(y)?;
        let top = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lj.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = w.iter().sum();
        Ok(w.into_iter().map(|v| v / z).collect())
    }

    fn predict(&self, y: &[f64]) -> Result<usize> {
        Ok(super::argmax(&self.log_joint(y)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_model() -> GnbModel {
        GnbModel {
            priors: vec![0.5, 0.5],
            means: DMatrix::from_row_slice(2, 1, &[0.0, 10.0]),
            variances: DMatrix::from_element(2, 1, 1.0),
        }
    }

    #[test]
    fn nearest_mean_and_tie() {
        let m = unit_model();
        assert_eq!(m.predict(&[1.0]).unwrap(), 0);
        assert_eq!(m.predict(&[9.0]).unwrap(), 1);
        assert_eq!(m.predict(&[5.0]).unwrap(), 0);
        let s = m.scores(&[5.0]).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!(matches!(m.predict(&[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn posterior_matches_scalar_oracle() {
        let x = DMatrix::from_row_slice(
            9,
            2,
            &[
                0.0, 1.0, 0.5, 1.4, -0.3, 0.8, //
                3.0, 3.0, 3.6, 2.5, 2.8, 3.3, //
                -2.0, 4.0, -2.4, 4.6, -1.5, 3.1,
            ],
        );
        let labels = vec![0, 0, 0, 1, 1, 1, 2, 2, 2];
        let model = gnb_fit(&x, &labels, 3).unwrap();
        let query = [0.7, 2.2];

        let mut joint = [0.0f64; 3];
        for c in 0..3 {
            let rows: Vec<[f64; 2]> = (0..9).filter(|&r| labels[r] == c).map(|r| [x[(r, 0)], x[(r, 1)]]).collect();
            let mut lik = 1.0 / 3.0;
            for j in 0..2 {
                let mu = rows.iter().map(|r| r[j]).sum::<f64>() / 3.0;
                let var = rows.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / 3.0;
                lik *= (-(query[j] - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
            }
            joint[c] = lik;
        }
        let z: f64 = joint.iter().sum();
        let post = model.scores(&query).unwrap();
        for c in 0..3 {
            assert!((post[c] - joint[c] / z).abs() < 1e-12);
        }
        assert!((model.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_features_stay_finite() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 5.0, 1.0, 5.0]);
        let model = gnb_fit(&x, &[0, 0, 1, 1], 2).unwrap();
        let s = model.scores(&[1.0, 4.0]).unwrap();
        assert!(s.iter().all(|v| v.is_finite()));
        assert_eq!(model.predict(&[1.0, 4.0]).unwrap(), 1);
    }
}
