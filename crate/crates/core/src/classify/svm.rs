use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training, row, Classifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Soft-margin penalty.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 50,
            seed: 0,
        }
    }
}

/// Linear separator between `positive` (+1 side) and `negative`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: usize,
    pub negative: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PairModel {
    pub fn decision(&self, z: &[f64]) -> f64 {
        self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// One-vs-one linear soft-margin ensemble on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub pairs: Vec<PairModel>,
    pub config: SvmConfig,
}

/// ½‖w‖² + c Σ max(0, 1 − yᵢ(w·xᵢ + b)).
pub fn svm_primal_objective(weights: &[f64], bias: f64, xs: &[Vec<f64>], ys: &[f64], c: f64) -> f64 {
    let reg = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let f = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
            (1.0 - y * f).max(0.0)
        })
        .sum();
    reg + c * hinge
}

/// Sub-gradient descent with step 1/(λt), λ = 1/(c·n), on the bias-augmented
/// vector, keeping the epoch-end iterate with the lowest primal objective.
fn train_pair(xs: &[Vec<f64>], ys: &[f64], c: f64, epochs: usize, seed: u64) -> (Vec<f64>, f64) {
    let n = xs.len();
    let dim = xs[0].len();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = (w.clone(), b, svm_primal_objective(&w, b, xs, ys, c));
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let f = w.iter().zip(&xs[i]).map(|(a, v)| a * v).sum::<f64>() + b;
            let shrink = 1.0 - eta * lambda;
            for a in w.iter_mut() {
                *a *= shrink;
            }
            b *= shrink;
            if ys[i] * f < 1.0 {
                for (a, v) in w.iter_mut().zip(&xs[i]) {
                    *a += eta * ys[i] * v;
                }
                b += eta * ys[i];
            }
            let norm = (w.iter().map(|a| a * a).sum::<f64>() + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                for a in w.iter_mut() {
                    *a *= s;
                }
                b *= s;
            }
        }
        let obj = svm_primal_objective(&w, b, xs, ys, c);
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
    }
    (best.0, best.1)
}

pub fn svm_fit(x: &DMatrix<f64>, labels: &[usize], classes: usize, cfg: &SvmConfig) -> Result<SvmModel> {
    let counts = check_training(x, labels, classes)?;
    if classes < 2 || counts.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(Error::domain("SVM needs samples from at least two classes"));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::domain(format!("class {c} has no training samples")));
    }
    if !(cfg.c > 0.0) || cfg.epochs == 0 {
        return Err(Error::domain("SVM needs c > 0 and at least one epoch"));
    }
    let (m, n) = x.shape();
    let mean: Vec<f64> = x.column_iter().map(|c| c.sum() / m as f64).collect();
    let scale: Vec<f64> = x
        .column_iter()
        .zip(&mean)
        .map(|(c, mu)| {
            let sd = (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / m as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let z: Vec<Vec<f64>> = (0..m)
        .map(|r| (0..n).map(|j| (x[(r, j)] - mean[j]) / scale[j]).collect())
        .collect();
    let mut pairs = Vec::with_capacity(classes * (classes - 1) / 2);
    for a in 0..classes {
        for b in a + 1..classes {
            let idx: Vec<usize> = (0..m).filter(|&r| labels[r] == a || labels[r] == b).collect();
            let xs: Vec<Vec<f64>> = idx.iter().map(|&r| z[r].clone()).collect();
            let ys: Vec<f64> = idx.iter().map(|&r| if labels[r] == a { 1.0 } else { -1.0 }).collect();
            let seed = cfg.seed ^ ((pairs.len() as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (weights, bias) = train_pair(&xs, &ys, cfg.c, cfg.epochs, seed);
            pairs.push(PairModel {
                positive: a,
                negative: b,
                weights,
                bias,
            });
        }
    }
    Ok(SvmModel {
        classes,
        mean,
        scale,
        pairs,
        config: cfg.clone(),
    })
}

impl SvmModel {
    pub fn standardize(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Pairwise votes and summed signed margins per class.
    pub fn votes(&self, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dim(y)?;
        let z = self.standardize(y);
        let mut votes = vec![0.0; self.classes];
        let mut margins = vec![0.0; self.classes];
        for p in &self.pairs {
            let d = p.decision(&z);
            if d >= 0.0 {
                votes[p.positive] += 1.0;
            } else {
                votes[p.negative] += 1.0;
            }
            margins[p.positive] += d;
            margins[p.negative] -= d;
        }
        Ok((votes, margins))
    }

    /// Standardized training rows, for objective checks.
    pub fn standardized_rows(&self, x: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..x.nrows()).map(|r| self.standardize(&row(x, r))).collect()
    }
}

impl Classifier for SvmModel {
    fn n_classes(&self) -> usize {
        self.classes
    }
    fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Fraction of its k − 1 pairwise contests each class wins.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        let (votes, _) = self.votes(y)?;
        let k = (self.classes - 1) as f64;
        Ok(votes.into_iter().map(|v| v / k).collect())
    }

    fn predict(&self, y: &[f64]) -> Result<usize> {
        let (votes, margins) = self.votes(y)?;
        let mut best = 0;
        for c in 1..self.classes {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margins[c] > margins[best]) {
                best = c;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn separable_line() {
        let x = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let m = svm_fit(&x, &[0, 1], 2, &SvmConfig::default()).unwrap();
        assert_eq!(m.predict(&[-1.0]).unwrap(), 0);
        assert_eq!(m.predict(&[1.0]).unwrap(), 1);
    }

    #[test]
    fn pair_count_is_k_choose_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let labels: Vec<usize> = (0..25).map(|i| i % 5).collect();
        let x = DMatrix::from_fn(25, 3, |i, _| labels[i] as f64 + rng.random_range(-0.2..0.2));
        let m = svm_fit(&x, &labels, 5, &SvmConfig::default()).unwrap();
        assert_eq!(m.pairs.len(), 10);
        let total: f64 = m.votes(&[1.0, 1.0, 1.0]).unwrap().0.iter().sum();
        assert_eq!(total, 10.0);
        assert!(svm_fit(&x, &[0; 25], 1, &SvmConfig::default()).is_err());
    }

    #[test]
    fn objective_not_worse_than_zero_vector() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
            let x = DMatrix::from_fn(40, 4, |i, j| {
                let shift = if labels[i] == 0 { -1.5 } else { 1.5 };
                (if j == 0 { shift } else { 0.0 }) + rng.random_range(-1.0..1.0)
            });
            let cfg = SvmConfig { seed, ..SvmConfig::default() };
            let m = svm_fit(&x, &labels, 2, &cfg).unwrap();
            let xs = m.standardized_rows(&x);
            let ys: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
            let p = &m.pairs[0];
            let trained = svm_primal_objective(&p.weights, p.bias, &xs, &ys, cfg.c);
            let zero = svm_primal_objective(&[0.0; 4], 0.0, &xs, &ys, cfg.c);
            assert!(trained <= zero);
            assert!(trained < 0.5 * zero, "separable data should cut the objective well below {zero}");
            let acc = (0..40).filter(|&r| m.predict(&row(&x, r)).unwrap() == labels[r]).count();
            assert_eq!(acc, 40);
        }
    }
}
