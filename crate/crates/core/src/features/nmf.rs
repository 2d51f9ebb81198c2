use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmfConfig {
    pub components: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Upper bound on coefficient updates when transforming new rows.
    pub transform_iterations: usize,
    /// Transform stops once the largest relative coefficient change drops below this.
    pub transform_tolerance: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self {
            components: 10,
            iterations: 200,
            seed: 0,
            transform_iterations: 500,
            transform_tolerance: 1e-9,
        }
    }
}

/// X ≈ W·H with W (M × P) and H (P × N) non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfModel {
    pub config: NmfConfig,
    pub w: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// ‖X − WH‖² after each iteration.
    pub objective: Vec<f64>,
}

impl NmfModel {
    pub fn rank(&self) -> usize {
        self.h.nrows()
    }

    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_non_negative(x: &DMatrix<f64>) -> Result<()> {
    for c in 0..x.ncols() {
        for r in 0..x.nrows() {
            let v = x[(r, c)];
            if !(v >= 0.0) {
                return Err(Error::NonNegative { row: r, col: c, value: v });
            }
        }
    }
    Ok(())
}

/// a ← a ∘ num / den, leaving entries with a zero denominator unchanged.
fn multiplicative(a: &mut DMatrix<f64>, num: &DMatrix<f64>, den: &DMatrix<f64>) {
    for ((v, n), d) in a.iter_mut().zip(num.iter()).zip(den.iter()) {
        if *d > 0.0 {
            *v *= n / d;
        }
    }
}

/// Lee-Seung multiplicative updates on ‖X − WH‖².
pub fn nmf_fit(x: &DMatrix<f64>, cfg: &NmfConfig) -> Result<NmfModel> {
    check_non_negative(x)?;
    let (m, n) = x.shape();
    let p = cfg.components;
    if p == 0 || p > m.min(n) {
        return Err(Error::domain(format!("rank {p} outside 1..={}", m.min(n))));
    }
    let mean = x.sum() / (m * n) as f64;
    let scale = (mean / p as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = DMatrix::from_fn(m, p, |_, _| scale * rng.random::<f64>());
    let mut h = DMatrix::from_fn(p, n, |_, _| scale * rng.random::<f64>());
    let x_norm2 = x.norm_squared();
    let mut objective = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let wt = w.transpose();
        let num_h = &wt * x;
        let den_h = (&wt * &w) * &h;
        multiplicative(&mut h, &num_h, &den_h);

        let ht = h.transpose();
        let xht = x * &ht;
        let hht = &h * &ht;
        let den_w = &w * &hht;
        multiplicative(&mut w, &xht, &den_w);

        // ‖X‖² − 2⟨XHᵀ, W⟩ + ⟨WᵀW, HHᵀ⟩
        let cross = xht.dot(&w);
        let quad = (w.transpose() * &w).dot(&hht);
        objective.push((x_norm2 - 2.0 * cross + quad).max(0.0));
    }
    Ok(NmfModel {
        config: cfg.clone(),
        w,
        h,
        objective,
    })
}

/// Non-negative coefficients of each row of `x` against the fixed basis H.
pub fn nmf_transform(model: &NmfModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_non_negative(x)?;
    let h = &model.h;
    if x.ncols() != h.ncols() {
        return Err(Error::Dimension {
            expected: h.ncols(),
            found: x.ncols(),
        });
    }
    let h_sum = h.sum();
    let ht = h.transpose();
    let xht = x * &ht;
    let hht = h * &ht;
    let k = h.nrows();
    let mut w = DMatrix::zeros(x.nrows(), k);
    // Rows are solved independently so a row's coefficients do not depend on
    // the other rows of the batch.
    for r in 0..x.nrows() {
        let start = if h_sum > 0.0 { x.row(r).sum() / h_sum } else { 0.0 };
        let mut wr = nalgebra::RowDVector::from_element(k, start);
        let xr = xht.row(r).into_owned();
        for _ in 0..model.config.transform_iterations {
            let den = &wr * &hht;
            let mut change = 0.0f64;
            for j in 0..k {
                let prev = wr[j];
                if den[j] > 0.0 {
                    wr[j] *= xr[j] / den[j];
                }
                let scale = prev.abs().max(wr[j].abs()).max(f64::MIN_POSITIVE);
                change = change.max((wr[j] - prev).abs() / scale);
            }
            if change < model.config.transform_tolerance {
                break;
            }
        }
        w.set_row(r, &wr);
    }
    Ok(w)
}
