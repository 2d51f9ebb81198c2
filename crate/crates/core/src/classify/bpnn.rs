use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training, row, Classifier};
use crate::error::{Error, Result};
use crate::features::one_hot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BpnnConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for BpnnConfig {
    fn default() -> Self {
        Self {
            hidden: 10,
            learning_rate: 0.01,
            epochs: 500,
            seed: 0,
        }
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// One sigmoid hidden layer and sigmoid outputs, trained on squared error.
///
/// Inputs are min-max scaled with the training ranges before the first layer.
/// The last column of each weight matrix is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpnnModel {
    pub config: BpnnConfig,
    /// hidden × (inputs + 1)
    pub input_weights: DMatrix<f64>,
    /// classes × (hidden + 1)
    pub output_weights: DMatrix<f64>,
    pub input_min: Vec<f64>,
    pub input_range: Vec<f64>,
    /// Summed squared error of each epoch, each sample taken just before its update.
    pub loss_history: Vec<f64>,
}

/// Row-major working copy of the weights.
struct Net {
    n_in: usize,
    n_hidden: usize,
    n_out: usize,
    w: Vec<f64>,
    q: Vec<f64>,
}

/// Dot product with four running sums, so short rows are not latency bound.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl Net {
    fn forward(&self, x: &[f64], z: &mut [f64], o: &mut [f64]) {
        for (zh, wr) in z.iter_mut().zip(self.w.chunks_exact(self.n_in + 1)) {
            let (wx, bias) = wr.split_at(self.n_in);
            *zh = sigmoid(dot(wx, x) + bias[0]);
        }
        for (ok, qr) in o.iter_mut().zip(self.q.chunks_exact(self.n_hidden + 1)) {
            let (qz, bias) = qr.split_at(self.n_hidden);
            *ok = sigmoid(dot(qz, z) + bias[0]);
        }
    }

    /// Accumulates ∂E/∂w and ∂E/∂q for one sample into the buffers; returns E.
    fn backward(&self, x: &[f64], t: &[f64], gw: &mut [f64], gq: &mut [f64], scratch: &mut Scratch) -> f64 {
        let Scratch { z, o, d_out, .. } = scratch;
        self.forward(x, z, o);
        let mut loss = 0.0;
        for k in 0..self.n_out {
            let e = o[k] - t[k];
            loss += 0.5 * e * e;
            d_out[k] = e * o[k] * (1.0 - o[k]);
        }
        let qs = self.n_hidden + 1;
        for k in 0..self.n_out {
            for h in 0..self.n_hidden {
                gq[k * qs + h] += d_out[k] * z[h];
            }
            gq[k * qs + self.n_hidden] += d_out[k];
        }
        let ws = self.n_in + 1;
        for h in 0..self.n_hidden {
            let back: f64 = (0..self.n_out).map(|k| self.q[k * qs + h] * d_out[k]).sum();
            let d = back * z[h] * (1.0 - z[h]);
            for i in 0..self.n_in {
                gw[h * ws + i] += d * x[i];
            }
            gw[h * ws + self.n_in] += d;
        }
        loss
    }
}

impl Net {
    /// One per-sample gradient step, applied in place; returns the sample's
    /// error before the step. Hidden deltas use the pre-step output weights.
    fn sgd_step(&mut self, x: &[f64], t: &[f64], lr: f64, scratch: &mut Scratch) -> f64 {
        let Scratch { z, o, back, .. } = scratch;
        self.forward(x, z, o);
        let (nh, ni) = (self.n_hidden, self.n_in);
        back.fill(0.0);
        let mut loss = 0.0;
        for ((qr, ok), tk) in self.q.chunks_exact_mut(nh + 1).zip(o.iter()).zip(t) {
            let e = ok - tk;
            loss += 0.5 * e * e;
            let d = e * ok * (1.0 - ok);
            let (qz, bias) = qr.split_at_mut(nh);
            for ((q, b), zh) in qz.iter_mut().zip(back.iter_mut()).zip(z.iter()) {
                *b += *q * d;
                *q -= lr * (d * zh);
            }
            bias[0] -= lr * d;
        }
        for ((wr, b), zh) in self.w.chunks_exact_mut(ni + 1).zip(back.iter()).zip(z.iter()) {
            let d = b * zh * (1.0 - zh);
            let (wx, bias) = wr.split_at_mut(ni);
            for (w, xi) in wx.iter_mut().zip(x) {
                *w -= lr * (d * xi);
            }
            bias[0] -= lr * d;
        }
        loss
    }
}

struct Scratch {
    z: Vec<f64>,
    o: Vec<f64>,
    d_out: Vec<f64>,
    back: Vec<f64>,
}

impl Scratch {
    fn new(net: &Net) -> Self {
        Self {
            z: vec![0.0; net.n_hidden],
            o: vec![0.0; net.n_out],
            d_out: vec![0.0; net.n_out],
            back: vec![0.0; net.n_hidden],
        }
    }
}

fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v)
}

pub fn bpnn_fit(x: &DMatrix<f64>, labels: &[usize], classes: usize, cfg: &BpnnConfig) -> Result<BpnnModel> {
    check_training(x, labels, classes)?;
    if cfg.hidden == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::domain("BPNN needs at least one hidden node and a positive learning rate"));
    }
    let (m, n) = x.shape();
    let input_min: Vec<f64> = x.column_iter().map(|c| c.min()).collect();
    let input_range: Vec<f64> = x
        .column_iter()
        .zip(&input_min)
        .map(|(c, lo)| {
            let r = c.max() - lo;
            if r > 0.0 {
                r
            } else {
                1.0
            }
        })
        .collect();
    let mut model = BpnnModel {
        config: cfg.clone(),
        input_weights: DMatrix::zeros(cfg.hidden, n + 1),
        output_weights: DMatrix::zeros(classes, cfg.hidden + 1),
        input_min,
        input_range,
        loss_history: Vec::with_capacity(cfg.epochs),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r_in = 1.0 / ((n + 1) as f64).sqrt();
    let r_out = 1.0 / ((cfg.hidden + 1) as f64).sqrt();
    let mut net = Net {
        n_in: n,
        n_hidden: cfg.hidden,
        n_out: classes,
        w: (0..cfg.hidden * (n + 1)).map(|_| rng.random_range(-r_in..r_in)).collect(),
        q: (0..classes * (cfg.hidden + 1)).map(|_| rng.random_range(-r_out..r_out)).collect(),
    };
    let xs: Vec<Vec<f64>> = (0..m).map(|r| model.scale_input(&row(x, r))).collect();
    let targets = one_hot(labels, classes);
    let ts: Vec<Vec<f64>> = (0..m).map(|r| row(&targets, r)).collect();
    let mut scratch = Scratch::new(&net);
    let mut order: Vec<usize> = (0..m).collect();
    let lr = cfg.learning_rate;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for &i in &order {
            loss += net.sgd_step(&xs[i], &ts[i], lr, &mut scratch);
        }
        if !loss.is_finite() || net.w.iter().chain(&net.q).any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        model.loss_history.push(loss);
    }
    model.input_weights = from_row_major(cfg.hidden, n + 1, &net.w);
    model.output_weights = from_row_major(classes, cfg.hidden + 1, &net.q);
    Ok(model)
}

impl BpnnModel {
    fn net(&self) -> Net {
        Net {
            n_in: self.input_min.len(),
            n_hidden: self.input_weights.nrows(),
            n_out: self.output_weights.nrows(),
            w: to_row_major(&self.input_weights),
            q: to_row_major(&self.output_weights),
        }
    }

    pub fn scale_input(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.input_min.iter().zip(&self.input_range))
            .map(|(v, (lo, r))| 2.0 * (v - lo) / r - 1.0)
            .collect()
    }

    /// Summed squared error against one-hot targets.
    pub fn loss(&self, x: &DMatrix<f64>, labels: &[usize]) -> f64 {
        self.loss_and_gradients(x, labels).0
    }

    /// Loss with its gradients with respect to the input and output weight matrices.
    pub fn loss_and_gradients(&self, x: &DMatrix<f64>, labels: &[usize]) -> (f64, DMatrix<f64>, DMatrix<f64>) {
        let net = self.net();
        let mut gw = vec![0.0; net.w.len()];
        let mut gq = vec![0.0; net.q.len()];
        let mut scratch = Scratch::new(&net);
        let targets = one_hot(labels, net.n_out);
        let mut loss = 0.0;
        for r in 0..x.nrows() {
            let xi = self.scale_input(&row(x, r));
            loss += net.backward(&xi, &row(&targets, r), &mut gw, &mut gq, &mut scratch);
        }
        (
            loss,
            from_row_major(net.n_hidden, net.n_in + 1, &gw),
            from_row_major(net.n_out, net.n_hidden + 1, &gq),
        )
    }
}

impl Classifier for BpnnModel {
    fn n_classes(&self) -> usize {
        self.output_weights.nrows()
    }
    fn n_features(&self) -> usize {
        self.input_min.len()
    }

    /// Output-layer activations.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let net = self.net();
        let mut scratch = Scratch::new(&net);
        net.forward(&self.scale_input(y), &mut scratch.z, &mut scratch.o);
        Ok(scratch.o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (DMatrix<f64>, Vec<usize>) {
        (
            DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]),
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn zero_weights_give_half() {
        let (x, labels) = xor();
        let mut m = bpnn_fit(&x, &labels, 2, &BpnnConfig { epochs: 1, ..BpnnConfig::default() }).unwrap();
        m.input_weights.fill(0.0);
        m.output_weights.fill(0.0);
        assert_eq!(m.scores(&[0.3, 0.9]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x = DMatrix::from_row_slice(3, 3, &[0.1, 0.7, -0.3, 0.9, -0.2, 0.4, -0.5, 0.3, 0.8]);
        let labels = vec![0, 2, 1];
        let m = bpnn_fit(&x, &labels, 3, &BpnnConfig { hidden: 4, epochs: 3, learning_rate: 0.3, seed: 5 }).unwrap();
        let (_, gw, gq) = m.loss_and_gradients(&x, &labels);
        let h = 1e-6;
        let check = |analytic: f64, plus: f64, minus: f64| {
            let numeric = (plus - minus) / (2.0 * h);
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(err < 1e-6, "analytic {analytic}, numeric {numeric}");
        };
        for idx in 0..gw.len() {
            let mut p = m.clone();
            p.input_weights[idx] += h;
            let mut q = m.clone();
            q.input_weights[idx] -= h;
            check(gw[idx], p.loss(&x, &labels), q.loss(&x, &labels));
        }
        for idx in 0..gq.len() {
            let mut p = m.clone();
            p.output_weights[idx] += h;
            let mut q = m.clone();
            q.output_weights[idx] -= h;
            check(gq[idx], p.loss(&x, &labels), q.loss(&x, &labels));
        }
    }

    #[test]
    fn learns_xor() {
        let (x, labels) = xor();
        let cfg = BpnnConfig {
            hidden: 4,
            learning_rate: 0.5,
            epochs: 20000,
            seed: 1,
        };
        let m = bpnn_fit(&x, &labels, 2, &cfg).unwrap();
        for r in 0..4 {
            assert_eq!(m.predict(&row(&x, r)).unwrap(), labels[r]);
        }
        assert!(m.loss_history.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn huge_rate_reports_divergence_or_finite_loss() {
        let (x, labels) = xor();
        let cfg = BpnnConfig { learning_rate: 1e300, epochs: 5, ..BpnnConfig::default() };
        match bpnn_fit(&x, &labels, 2, &cfg) {
            Err(Error::Divergence { epoch }) => assert!(epoch < 5),
            Ok(m) => assert!(m.loss_history.iter().all(|l| l.is_finite())),
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
