use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Perplexity search stops once within this distance of the target.
const PERPLEXITY_TOL: f64 = 1e-6;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub output_dim: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    /// Standard deviation of the Gaussian initial embedding.
    pub init_std: f64,
    /// Optimization steps used to place each out-of-sample point.
    pub placement_iterations: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 5.0,
            output_dim: 2,
            iterations: 1000,
            learning_rate: 200.0,
            momentum: 0.8,
            early_exaggeration: 4.0,
            exaggeration_iterations: 50,
            init_std: 1e-4,
            placement_iterations: 200,
            seed: 0,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if m < 3 {
            return Err(Error::domain("t-SNE needs at least three observations"));
        }
        if !(self.perplexity >= 1.0 && self.perplexity < m as f64) {
            return Err(Error::domain(format!(
                "perplexity {} must lie in [1, {m})",
                self.perplexity
            )));
        }
        if self.iterations == 0 || self.output_dim == 0 {
            return Err(Error::domain("t-SNE needs at least one iteration and one output dimension"));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::domain("t-SNE learning rate must be positive and momentum in [0, 1)"));
        }
        Ok(())
    }
}

/// Row-conditional similarities and the per-row search results.
#[derive(Debug, Clone)]
pub struct Affinities {
    /// Row i holds Pr(j | i); the diagonal is zero.
    pub conditional: DMatrix<f64>,
    /// Precision 1/(2σ_i²) per row.
    pub betas: Vec<f64>,
    /// Achieved perplexity per row.
    pub perplexities: Vec<f64>,
}

/// Gaussian conditional distribution over `d2` (squared distances to the
/// other points) with the requested perplexity.
fn conditional_row(d2: &[f64], perplexity: f64) -> (Vec<f64>, f64, f64) {
    let n = d2.len();
    let dmin = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = d2.iter().map(|d| d - dmin).collect();
    let spread = shifted.iter().sum::<f64>() / n as f64;
    if !(spread > 0.0) {
        return (vec![1.0 / n as f64; n], 0.0, n as f64);
    }
    let eval = |beta: f64| {
        let w: Vec<f64> = shifted.iter().map(|d| (-beta * d).exp()).collect();
        let z: f64 = w.iter().sum();
        let h = z.ln() + beta * w.iter().zip(&shifted).map(|(w, d)| w * d).sum::<f64>() / z;
        (w, z, h.exp())
    };
    let mut beta = 1.0 / spread;
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let (mut w, mut z, mut perp) = eval(beta);
    for _ in 0..BISECTION_STEPS {
        if (perp - perplexity).abs() <= PERPLEXITY_TOL {
            break;
        }
        if perp > perplexity {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (lo + hi);
        }
        (w, z, perp) = eval(beta);
    }
    (w.into_iter().map(|v| v / z).collect(), beta, perp)
}

/// Conditional affinities from a square matrix of squared distances.
pub fn conditional_affinities(d2: &DMatrix<f64>, perplexity: f64) -> Result<Affinities> {
    let m = d2.nrows();
    if d2.ncols() != m {
        return Err(Error::Dimension {
            expected: m,
            found: d2.ncols(),
        });
    }
    if !(perplexity >= 1.0 && perplexity < m as f64) {
        return Err(Error::domain(format!("perplexity {perplexity} must lie in [1, {m})")));
    }
    let mut conditional = DMatrix::zeros(m, m);
    let mut betas = Vec::with_capacity(m);
    let mut perplexities = Vec::with_capacity(m);
    let mut row = Vec::with_capacity(m - 1);
    for i in 0..m {
        row.clear();
        row.extend((0..m).filter(|&j| j != i).map(|j| d2[(i, j)]));
        let (p, beta, perp) = conditional_row(&row, perplexity);
        for (k, j) in (0..m).filter(|&j| j != i).enumerate() {
            conditional[(i, j)] = p[k];
        }
        betas.push(beta);
        perplexities.push(perp);
    }
    Ok(Affinities {
        conditional,
        betas,
        perplexities,
    })
}

/// Squared Euclidean distances between the rows of `a` and `b`.
pub(crate) fn squared_distances(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let na: Vec<f64> = a.row_iter().map(|r| r.norm_squared()).collect();
    let nb: Vec<f64> = b.row_iter().map(|r| r.norm_squared()).collect();
    let mut d = a * b.transpose();
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            d[(i, j)] = (na[i] + nb[j] - 2.0 * d[(i, j)]).max(0.0);
        }
    }
    d
}

fn student_kernel(y: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let mut num = squared_distances(y, y);
    let mut z = 0.0;
    for i in 0..num.nrows() {
        for j in 0..num.ncols() {
            num[(i, j)] = if i == j { 0.0 } else { 1.0 / (1.0 + num[(i, j)]) };
            z += num[(i, j)];
        }
    }
    (num, z)
}

/// Σ P_ij ln(P_ij / Q_ij) for a symmetric joint P against embedding `y`.
pub fn kl_divergence(p: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let (num, z) = student_kernel(y);
    let mut kl = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let pij = p[(i, j)];
            if i != j && pij > 0.0 {
                let q = (num[(i, j)] / z).max(f64::MIN_POSITIVE);
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}

/// Training data, its embedding and what is needed to place new points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneModel {
    pub config: TsneConfig,
    pub train: DMatrix<f64>,
    pub embedding: DMatrix<f64>,
    pub final_kl: f64,
}

/// Symmetrized joint affinities (Pr(j|i) + Pr(i|j)) / 2M.
pub(crate) fn joint_affinities(x: &DMatrix<f64>, perplexity: f64) -> Result<DMatrix<f64>> {
    let m = x.nrows();
    let cond = conditional_affinities(&squared_distances(x, x), perplexity)?.conditional;
    Ok((&cond + cond.transpose()) / (2.0 * m as f64))
}

pub(crate) fn initial_embedding(m: usize, cfg: &TsneConfig) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.init_std).expect("positive init std");
    DMatrix::from_fn(m, cfg.output_dim, |_, _| normal.sample(&mut rng))
}

/// Embeds the rows of `x` by gradient descent on the KL cost.
pub fn tsne_embed(x: &DMatrix<f64>, cfg: &TsneConfig) -> Result<TsneModel> {
    let m = x.nrows();
    cfg.validate(m)?;
    let p = joint_affinities(x, cfg.perplexity)?;
    let dim = cfg.output_dim;
    let mut y = initial_embedding(m, cfg);
    let mut velocity = DMatrix::<f64>::zeros(m, dim);
    let mut gains = DMatrix::<f64>::from_element(m, dim, 1.0);
    let mut grad = DMatrix::<f64>::zeros(m, dim);
    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iterations {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let (num, z) = student_kernel(&y);
        grad.fill(0.0);
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let coef = 4.0 * (exaggeration * p[(i, j)] - num[(i, j)] / z) * num[(i, j)];
                for d in 0..dim {
                    grad[(i, d)] += coef * (y[(i, d)] - y[(j, d)]);
                }
            }
        }
        for idx in 0..m * dim {
            let g = grad[idx];
            gains[idx] = if (g > 0.0) != (velocity[idx] > 0.0) {
                gains[idx] + 0.2
            } else {
                (gains[idx] * 0.8).max(0.01)
            };
            velocity[idx] = cfg.momentum * velocity[idx] - cfg.learning_rate * gains[idx] * g;
            y[idx] += velocity[idx];
        }
        for d in 0..dim {
            let mean = y.column(d).sum() / m as f64;
            y.column_mut(d).add_scalar_mut(-mean);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("t-SNE embedding diverged at iteration {iter}")));
        }
    }
    let final_kl = kl_divergence(&p, &y);
    Ok(TsneModel {
        config: cfg.clone(),
        train: x.clone(),
        embedding: y,
        final_kl,
    })
}

impl TsneModel {
    /// Places each row of `x` against the fixed training embedding by
    /// minimizing the KL cost between its conditional affinities to the
    /// training points and the Student-t kernel around its position.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.train.ncols() {
            return Err(Error::Dimension {
                expected: self.train.ncols(),
                found: x.ncols(),
            });
        }
        let m = self.train.nrows();
        let perplexity = self.config.perplexity.min(m as f64 - 1.0).max(1.0);
        let d2 = squared_distances(x, &self.train);
        let dim = self.embedding.ncols();
        let mut out = DMatrix::zeros(x.nrows(), dim);
        for r in 0..x.nrows() {
            let row: Vec<f64> = d2.row(r).iter().copied().collect();
            let (p, _, _) = conditional_row(&row, perplexity);
            let mut y = vec![0.0; dim];
            for (j, pj) in p.iter().enumerate() {
                for d in 0..dim {
                    y[d] += pj * self.embedding[(j, d)];
                }
            }
            let y = self.place(&p, y);
            for d in 0..dim {
                out[(r, d)] = y[d];
            }
        }
        Ok(out)
    }

    fn placement_cost(&self, p: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
        let dim = y.len();
        let mut z = 0.0;
        let mut cross = 0.0;
        let mut w = Vec::with_capacity(p.len());
        for j in 0..p.len() {
            let d2: f64 = (0..dim).map(|d| (y[d] - self.embedding[(j, d)]).powi(2)).sum();
            let wj = 1.0 / (1.0 + d2);
            w.push(wj);
            z += wj;
            if p[j] > 0.0 {
                cross -= p[j] * wj.ln();
            }
        }
        let mut grad = vec![0.0; dim];
        for j in 0..p.len() {
            let coef = 2.0 * (p[j] - w[j] / z) * w[j];
            for d in 0..dim {
                grad[d] += coef * (y[d] - self.embedding[(j, d)]);
            }
        }
        (cross + z.ln(), grad)
    }

    fn place(&self, p: &[f64], mut y: Vec<f64>) -> Vec<f64> {
        let mut step = 1.0;
        let (mut cost, mut grad) = self.placement_cost(p, &y);
        for _ in 0..self.config.placement_iterations {
            let trial: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            let (c, g) = self.placement_cost(p, &trial);
            if c < cost {
                y = trial;
                cost = c;
                grad = g;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        y
    }
}
