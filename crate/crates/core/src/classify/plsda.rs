use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier};
use crate::error::Result;
use crate::features::{pls_fit, PlsModel};

/// PLS regression onto one-hot class indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsDaModel {
    pub pls: PlsModel,
}

pub fn plsda_fit(x: &DMatrix<f64>, labels: &[usize], classes: usize, components: usize) -> Result<PlsDaModel> {
    check_training(x, labels, classes)?;
    let targets = crate::features::one_hot(labels, classes);
    Ok(PlsDaModel {
        pls: pls_fit(x, &targets, components)?,
    })
}

impl Classifier for PlsDaModel {
    fn n_classes(&self) -> usize {
        self.pls.y_mean.len()
    }
    fn n_features(&self) -> usize {
        self.pls.x_mean.len()
    }

    /// Regressed indicator values; rows need not sum to one.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let x = DMatrix::from_row_slice(1, y.len(), y);
        Ok(self.pls.predict(&x)?.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::argmax;

    #[test]
    fn separable_two_class_with_one_component() {
        let x = DMatrix::from_row_slice(6, 2, &[0.0, 0.1, 0.2, 0.0, 0.1, 0.3, 3.0, 2.9, 3.2, 3.1, 2.8, 3.0]);
        let labels = [0, 0, 0, 1, 1, 1];
        let m = plsda_fit(&x, &labels, 2, 1).unwrap();
        for r in 0..6 {
            let q: Vec<f64> = x.row(r).iter().copied().collect();
            assert_eq!(m.predict(&q).unwrap(), labels[r]);
        }
    }

    /// Least-squares one-hot regression with intercept via Gaussian elimination.
    fn ls_scores(x: &DMatrix<f64>, targets: &DMatrix<f64>, q: &[f64]) -> Vec<f64> {
        let (m, n) = x.shape();
        let dim = n + 1;
        let k = targets.ncols();
        let mut a = vec![vec![0.0; dim + k]; dim];
        for i in 0..m {
            let mut row = vec![1.0];
            row.extend(x.row(i).iter());
            for r in 0..dim {
                for c in 0..dim {
                    a[r][c] += row[r] * row[c];
                }
                for t in 0..k {
                    a[r][dim + t] += row[r] * targets[(i, t)];
                }
            }
        }
        for col in 0..dim {
            let piv = (col..dim).max_by(|p, q| a[*p][col].abs().total_cmp(&a[*q][col].abs())).unwrap();
            a.swap(col, piv);
            for r in 0..dim {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..dim + k {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..k)
            .map(|t| {
                let beta: Vec<f64> = (0..dim).map(|i| a[i][dim + t] / a[i][i]).collect();
                beta[0] + q.iter().zip(&beta[1..]).map(|(v, b)| v * b).sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn full_rank_matches_least_squares() {
        let x = DMatrix::from_row_slice(6, 3, &[0.1, 1.0, 0.3, 0.4, 0.8, 0.1, 1.2, 0.2, 0.9, 1.0, 0.1, 1.4, 0.0, 0.5, 2.0, 0.3, 0.2, 1.9]);
        let labels = [0, 0, 1, 1, 2, 2];
        let targets = crate::features::one_hot(&labels, 3);
        let m = plsda_fit(&x, &labels, 3, 3).unwrap();
        for q in [[0.2, 0.9, 0.2], [1.1, 0.1, 1.2], [0.1, 0.4, 1.9], [0.6, 0.6, 0.6]] {
            let oracle = ls_scores(&x, &targets, &q);
            let s = m.scores(&q).unwrap();
            for (a, b) in s.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9);
            }
            assert_eq!(argmax(&s), argmax(&oracle));
        }
    }
}
