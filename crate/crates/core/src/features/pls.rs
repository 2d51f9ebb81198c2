use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::pca::{center, column_means};
use crate::error::{Error, Result};

/// PLS2 with deflation of both blocks.
///
/// Each weight vector is the NIPALS fixed point, the dominant eigenvector of
/// XᵀYYᵀX, obtained from the k × k eigenproblem of YᵀXXᵀY instead of by
/// iterating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    pub x_mean: DVector<f64>,
    pub y_mean: DVector<f64>,
    /// N × P
    pub x_weights: DMatrix<f64>,
    /// N × P
    pub x_loadings: DMatrix<f64>,
    /// k × P
    pub y_loadings: DMatrix<f64>,
    /// N × P; scores = (X − x_mean)·rotations.
    pub rotations: DMatrix<f64>,
}

fn degenerate(norm: f64, scale: f64) -> bool {
    !(norm > 1e-12 * scale.max(f64::MIN_POSITIVE))
}

/// Fits `p` latent variables relating `x` (M × N) to `y` (M × k).
pub fn pls_fit(x: &DMatrix<f64>, y: &DMatrix<f64>, p: usize) -> Result<PlsModel> {
    let (m, n) = x.shape();
    if y.nrows() != m {
        return Err(Error::Dimension {
            expected: m,
            found: y.nrows(),
        });
    }
    if m < 2 || p == 0 || p > (m - 1).min(n) {
        return Err(Error::domain(format!(
            "{p} latent variables requested from a {m} × {n} matrix"
        )));
    }
    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let mut xr = center(x, &x_mean);
    let mut yr = center(y, &y_mean);
    let x_scale = xr.norm();
    let y_scale = yr.norm();
    if degenerate(x_scale, 1.0) {
        return Err(Error::Degenerate("predictor block has zero variance".into()));
    }
    if degenerate(y_scale, 1.0) {
        return Err(Error::Degenerate("target block has zero variance".into()));
    }

    let k = y.ncols();
    let mut w_mat = DMatrix::zeros(n, p);
    let mut p_mat = DMatrix::zeros(n, p);
    let mut q_mat = DMatrix::zeros(k, p);
    for a in 0..p {
        let c = xr.transpose() * &yr;
        let mut w = if degenerate(c.norm(), x_scale * yr.norm()) {
            // remaining targets are orthogonal to X; continue along X's own
            // dominant direction so the requested rank is still delivered
            dominant_direction(&xr).ok_or_else(|| {
                Error::Degenerate(format!("predictor block exhausted after {a} latent variables"))
            })?
        } else {
            weight_direction(&c, &widest_column(&yr), &xr)
        };
        w.normalize_mut();
        let t = &xr * &w;
        let tt = t.norm_squared();
        if degenerate(tt.sqrt(), x_scale) {
            return Err(Error::Degenerate(format!(
                "predictor block exhausted after {a} latent variables"
            )));
        }
        let p_vec = xr.transpose() * &t / tt;
        let q_vec = yr.transpose() * &t / tt;
        xr -= &t * p_vec.transpose();
        yr -= &t * q_vec.transpose();
        w_mat.set_column(a, &w);
        p_mat.set_column(a, &p_vec);
        q_mat.set_column(a, &q_vec);
    }
    let ptw = p_mat.transpose() * &w_mat;
    let inv = ptw
        .try_inverse()
        .ok_or_else(|| Error::Numerical("PLS weight/loading product is singular".into()))?;
    let rotations = &w_mat * inv;
    Ok(PlsModel {
        x_mean,
        y_mean,
        x_weights: w_mat,
        x_loadings: p_mat,
        y_loadings: q_mat,
        rotations,
    })
}

/// w ∝ C·c with c the dominant eigenvector of CᵀC, C = XᵀY. The sign matches
/// a NIPALS pass started from the widest target column `u0`.
fn weight_direction(c: &DMatrix<f64>, u0: &DVector<f64>, x: &DMatrix<f64>) -> DVector<f64> {
    let eig = (c.transpose() * c).symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let w = c * eig.eigenvectors.column(top);
    let start = x.transpose() * u0;
    if w.dot(&start) < 0.0 {
        -w
    } else {
        w
    }
}

fn widest_column(y: &DMatrix<f64>) -> DVector<f64> {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (j, col) in y.column_iter().enumerate() {
        let v = col.norm_squared();
        if v > best_norm {
            best_norm = v;
            best = j;
        }
    }
    y.column(best).into_owned()
}

/// Leading right singular vector by power iteration on XᵀX.
fn dominant_direction(x: &DMatrix<f64>) -> Option<DVector<f64>> {
    let scale = x.norm();
    if degenerate(scale, 1.0) {
        return None;
    }
    let xtx = x.transpose() * x;
    let mut v = DVector::from_element(x.ncols(), 1.0);
    // start from the largest-norm row so the seed is not orthogonal to the span
    if let Some(row) = x.row_iter().max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared())) {
        v = row.transpose();
    }
    for _ in 0..500 {
        let next = &xtx * &v;
        let nn = next.norm();
        if degenerate(nn, scale * scale * 1e-4) {
            return None;
        }
        v = next / nn;
    }
    Some(v)
}

impl PlsModel {
    pub fn components(&self) -> usize {
        self.rotations.ncols()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.x_mean.len() {
            return Err(Error::Dimension {
                expected: self.x_mean.len(),
                found: x.ncols(),
            });
        }
        Ok(center(x, &self.x_mean) * &self.rotations)
    }

    /// N × k regression coefficients on centred X.
    pub fn coefficients(&self) -> DMatrix<f64> {
        &self.rotations * self.y_loadings.transpose()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut y = self.transform(x)? * self.y_loadings.transpose();
        for mut row in y.row_iter_mut() {
            row += self.y_mean.transpose();
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Least squares with intercept via hand-assembled normal equations.
    fn ols_oracle(x: &[[f64; 3]], y: &[f64]) -> Vec<f64> {
        let m = x.len();
        let mut a = vec![vec![0.0; 5]; 4];
        for i in 0..m {
            let row = [1.0, x[i][0], x[i][1], x[i][2]];
            for r in 0..4 {
                for c in 0..4 {
                    a[r][c] += row[r] * row[c];
                }
                a[r][4] += row[r] * y[i];
            }
        }
        for col in 0..4 {
            let piv = (col..4).max_by(|p, q| a[*p][col].abs().total_cmp(&a[*q][col].abs())).unwrap();
            a.swap(col, piv);
            for r in 0..4 {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..5 {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..4).map(|i| a[i][4] / a[i][i]).collect()
    }

    #[test]
    fn full_rank_matches_least_squares() {
        let x = [
            [0.3, 1.2, -0.7],
            [1.1, -0.4, 0.2],
            [-0.8, 0.9, 1.5],
            [0.5, 0.5, 0.5],
            [2.0, -1.3, 0.1],
            [-1.4, 0.2, -0.9],
        ];
        let y = [1.0, -0.5, 2.2, 0.7, -1.1, 0.4];
        let beta = ols_oracle(&x, &y);
        let xm = DMatrix::from_fn(6, 3, |i, j| x[i][j]);
        let ym = DMatrix::from_column_slice(6, 1, &y);
        let model = pls_fit(&xm, &ym, 3).unwrap();
        let pred = model.predict(&xm).unwrap();
        for i in 0..6 {
            let ols = beta[0] + beta[1] * x[i][0] + beta[2] * x[i][1] + beta[3] * x[i][2];
            assert!((pred[(i, 0)] - ols).abs() < 1e-9, "{} vs {ols}", pred[(i, 0)]);
        }
    }

    #[test]
    fn scores_are_orthogonal() {
        let x = random(40, 12, 5);
        let y = random(40, 3, 6);
        let model = pls_fit(&x, &y, 6).unwrap();
        let t = model.transform(&x).unwrap();
        for a in 0..6 {
            for b in 0..a {
                let dot = t.column(a).dot(&t.column(b));
                let scale = t.column(a).norm() * t.column(b).norm();
                assert!(dot.abs() < 1e-8 * scale.max(1.0), "{a},{b}: {dot}");
            }
        }
    }

    #[test]
    fn single_variable_target_direction() {
        let x = DMatrix::from_fn(10, 3, |i, j| if j == 1 { i as f64 } else { 0.0 });
        let y = DMatrix::from_fn(10, 1, |i, _| 2.0 * i as f64 + 1.0);
        let model = pls_fit(&x, &y, 1).unwrap();
        assert!((model.x_weights[(1, 0)].abs() - 1.0).abs() < 1e-12);
        let resid = model.predict(&x).unwrap() - &y;
        assert!(resid.norm_squared() / 10.0 < 1e-8);
    }

    #[test]
    fn constant_target_is_degenerate() {
        let x = random(10, 3, 1);
        let y = DMatrix::from_element(10, 1, 1.0);
        assert!(matches!(pls_fit(&x, &y, 1), Err(Error::Degenerate(_))));
        let xc = DMatrix::from_element(10, 3, 2.0);
        let yv = random(10, 1, 2);
        assert!(matches!(pls_fit(&xc, &yv, 1), Err(Error::Degenerate(_))));
    }

    /// Plain NIPALS iteration on centred blocks, first latent variable only.
    fn nipals_first_weight(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DVector<f64> {
        let xc = center(x, &column_means(x));
        let yc = center(y, &column_means(y));
        let mut u = widest_column(&yc);
        let mut w = DVector::zeros(x.ncols());
        for _ in 0..5000 {
            w = (xc.transpose() * &u).normalize();
            let t = &xc * &w;
            let q = yc.transpose() * &t;
            u = &yc * &q / q.norm_squared();
        }
        w
    }

    #[test]
    fn first_weight_matches_iterated_nipals() {
        let x = random(30, 6, 11);
        let y = random(30, 3, 12);
        let model = pls_fit(&x, &y, 2).unwrap();
        let oracle = nipals_first_weight(&x, &y);
        let got = model.x_weights.column(0);
        assert!((got - &oracle).amax() < 1e-9, "{got} vs {oracle}");
    }
}
