//! Multiclass classifiers over extracted features.
//!
//! Every classifier returns a score vector with one entry per class; the
//! prediction is its argmax with ties going to the lowest class index.

mod bpnn;
mod gnb;
mod grnn;
mod knn;
mod lda;
mod plsda;
mod svm;

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use bpnn::{bpnn_fit, BpnnConfig, BpnnModel};
pub use gnb::{gnb_fit, GnbModel};
pub use grnn::{grnn_fit, GrnnModel};
pub use knn::{knn_fit, DistanceMetric, KnnConfig, KnnModel};
pub use lda::{lda_fit, LdaModel};
pub use plsda::{plsda_fit, PlsDaModel};
pub use svm::{svm_fit, svm_primal_objective, PairModel, SvmConfig, SvmModel};

use crate::error::{Error, Result};

/// Index of the largest entry; the first wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub trait Classifier {
    fn n_classes(&self) -> usize;
    fn n_features(&self) -> usize;

    /// Per-class scores for one feature vector.
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, y: &[f64]) -> Result<usize> {
        Ok(argmax(&self.scores(y)?))
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                found: y.len(),
            });
        }
        Ok(())
    }
}

/// Checks a training set and returns per-class sample counts.
pub(crate) fn check_training(x: &DMatrix<f64>, labels: &[usize], classes: usize) -> Result<Vec<usize>> {
    if x.nrows() != labels.len() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            found: labels.len(),
        });
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::domain("empty training set"));
    }
    let mut counts = vec![0usize; classes];
    for &l in labels {
        if l >= classes {
            return Err(Error::domain(format!("label {l} out of range for {classes} classes")));
        }
        counts[l] += 1;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("training features contain non-finite values"));
    }
    Ok(counts)
}

pub(crate) fn row(x: &DMatrix<f64>, r: usize) -> Vec<f64> {
    x.row(r).iter().copied().collect()
}

/// Classifier choice and hyperparameters as they appear in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Gnb,
    Svm(SvmConfig),
    Knn(KnnConfig),
    Lda {
        #[serde(default = "default_ridge")]
        ridge: f64,
    },
    Plsda {
        #[serde(default = "default_pls_components")]
        components: usize,
    },
    Grnn {
        #[serde(default = "default_spread")]
        spread: f64,
    },
    Bpnn(BpnnConfig),
}

fn default_ridge() -> f64 {
    1e-6
}
fn default_pls_components() -> usize {
    10
}
fn default_spread() -> f64 {
    10.0
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Gnb => "gnb",
            ClassifierSpec::Svm(_) => "svm",
            ClassifierSpec::Knn(_) => "knn",
            ClassifierSpec::Lda { .. } => "lda",
            ClassifierSpec::Plsda { .. } => "plsda",
            ClassifierSpec::Grnn { .. } => "grnn",
            ClassifierSpec::Bpnn(_) => "bpnn",
        }
    }

    /// Copy with its random seed replaced, for specs that have one.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ClassifierSpec::Svm(cfg) => ClassifierSpec::Svm(SvmConfig { seed, ..cfg.clone() }),
            ClassifierSpec::Bpnn(cfg) => ClassifierSpec::Bpnn(BpnnConfig { seed, ..cfg.clone() }),
            other => other.clone(),
        }
    }

    /// Every classifier with its default hyperparameters.
    pub fn all_defaults() -> Vec<ClassifierSpec> {
        vec![
            ClassifierSpec::Gnb,
            ClassifierSpec::Svm(SvmConfig::default()),
            ClassifierSpec::Knn(KnnConfig::default()),
            ClassifierSpec::Lda { ridge: default_ridge() },
            ClassifierSpec::Plsda {
                components: default_pls_components(),
            },
            ClassifierSpec::Grnn {
                spread: default_spread(),
            },
            ClassifierSpec::Bpnn(BpnnConfig::default()),
        ]
    }

    pub fn fit(&self, x: &DMatrix<f64>, labels: &[usize], classes: usize) -> Result<Model> {
        Ok(match self {
            ClassifierSpec::Gnb => Model::Gnb(gnb_fit(x, labels, classes)?),
            ClassifierSpec::Svm(cfg) => Model::Svm(svm_fit(x, labels, classes, cfg)?),
            ClassifierSpec::Knn(cfg) => Model::Knn(knn_fit(x, labels, classes, cfg)?),
            ClassifierSpec::Lda { ridge } => Model::Lda(lda_fit(x, labels, classes, *ridge)?),
            ClassifierSpec::Plsda { components } => Model::Plsda(plsda_fit(x, labels, classes, *components)?),
            ClassifierSpec::Grnn { spread } => Model::Grnn(grnn_fit(x, labels, classes, *spread)?),
            ClassifierSpec::Bpnn(cfg) => Model::Bpnn(bpnn_fit(x, labels, classes, cfg)?),
        })
    }
}

/// Any fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum Model {
    Gnb(GnbModel),
    Svm(SvmModel),
    Knn(KnnModel),
    Lda(LdaModel),
    Plsda(PlsDaModel),
    Grnn(GrnnModel),
    Bpnn(BpnnModel),
}

impl Model {
    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Gnb(m) => m,
            Model::Svm(m) => m,
            Model::Knn(m) => m,
            Model::Lda(m) => m,
            Model::Plsda(m) => m,
            Model::Grnn(m) => m,
            Model::Bpnn(m) => m,
        }
    }

    pub fn predict_matrix(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        (0..x.nrows()).map(|r| self.predict(&row(x, r))).collect()
    }

    pub fn scores_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(x.nrows(), self.n_classes());
        for r in 0..x.nrows() {
            let s = self.scores(&row(x, r))?;
            for (c, v) in s.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }

    /// Writes the versioned JSON envelope.
    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(input: R) -> Result<Model> {
        let file: ModelFile = serde_json::from_reader(input)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::config("format", format!("expected {MODEL_FORMAT:?}, found {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::config(
                "version",
                format!("unsupported model version {} (this build reads {MODEL_VERSION})", file.version),
            ));
        }
        Ok(file.model)
    }
}

impl Classifier for Model {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }
    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inner().scores(y)
    }
    fn predict(&self, y: &[f64]) -> Result<usize> {
        self.inner().predict(y)
    }
}

const MODEL_FORMAT: &str = "terasense-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(seed: u64) -> (DMatrix<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0, 0.0], [4.0, 0.0, 1.0], [0.0, 5.0, -2.0]];
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let x = DMatrix::from_fn(30, 3, |i, j| centers[labels[i]][j] + rng.random_range(-0.5..0.5));
        (x, labels)
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
    }

    #[test]
    fn every_model_roundtrips_through_json() {
        let (x, labels) = blobs(1);
        for spec in ClassifierSpec::all_defaults() {
            let spec = match spec {
                ClassifierSpec::Plsda { .. } => ClassifierSpec::Plsda { components: 2 },
                other => other,
            };
            let model = spec.fit(&x, &labels, 3).unwrap();
            let mut buf = Vec::new();
            model.save(&mut buf).unwrap();
            let back = Model::load(&buf[..]).unwrap();
            assert_eq!(back, model, "{}", spec.name());
            assert_eq!(back.scores_matrix(&x).unwrap(), model.scores_matrix(&x).unwrap());
        }
    }

    #[test]
    fn load_rejects_other_versions() {
        let (x, labels) = blobs(2);
        let model = ClassifierSpec::Gnb.fit(&x, &labels, 3).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(Model::load(text.as_bytes()), Err(Error::Config { .. })));
    }

    #[test]
    fn separable_blobs_are_learned_by_all() {
        let (x, labels) = blobs(3);
        for spec in ClassifierSpec::all_defaults() {
            let spec = match spec {
                ClassifierSpec::Plsda { .. } => ClassifierSpec::Plsda { components: 3 },
                ClassifierSpec::Grnn { .. } => ClassifierSpec::Grnn { spread: 1.0 },
                ClassifierSpec::Bpnn(cfg) => ClassifierSpec::Bpnn(BpnnConfig { epochs: 2000, ..cfg }),
                other => other,
            };
            let model = spec.fit(&x, &labels, 3).unwrap();
            let pred = model.predict_matrix(&x).unwrap();
            assert_eq!(pred, labels, "{}", spec.name());
        }
    }
}
