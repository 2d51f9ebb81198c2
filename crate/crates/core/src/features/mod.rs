//! Dimensionality reduction: PCA, PLS, t-SNE and NMF.

mod dataset;
mod nmf;
mod pca;
mod pls;
mod tsne;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use dataset::{one_hot, Dataset, FeatureSet};
pub use nmf::{nmf_fit, nmf_transform, NmfConfig, NmfModel};
pub use pca::{pca_fit, PcaModel};
pub use pls::{pls_fit, PlsModel};
pub use tsne::{conditional_affinities, kl_divergence, tsne_embed, Affinities, TsneConfig, TsneModel};

use crate::error::Result;

/// Feature extractor selection as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ExtractorSpec {
    /// Raw (pre-processed) variables pass through.
    None,
    Pca { components: usize },
    Pls { components: usize },
    Tsne(TsneConfig),
    Nmf(NmfConfig),
}

impl ExtractorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExtractorSpec::None => "none",
            ExtractorSpec::Pca { .. } => "pca",
            ExtractorSpec::Pls { .. } => "pls",
            ExtractorSpec::Tsne(_) => "tsne",
            ExtractorSpec::Nmf(_) => "nmf",
        }
    }

    /// Copy with its random seed replaced, for specs that have one.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ExtractorSpec::Tsne(cfg) => ExtractorSpec::Tsne(TsneConfig { seed, ..cfg.clone() }),
            ExtractorSpec::Nmf(cfg) => ExtractorSpec::Nmf(NmfConfig { seed, ..cfg.clone() }),
            other => other.clone(),
        }
    }

    /// Fits on `train`; PLS uses the labels, the others ignore them.
    pub fn fit(&self, train: &Dataset) -> Result<Extractor> {
        Ok(match self {
            ExtractorSpec::None => Extractor::None,
            ExtractorSpec::Pca { components } => Extractor::Pca(pca_fit(&train.x, *components)?),
            ExtractorSpec::Pls { components } => {
                Extractor::Pls(pls_fit(&train.x, &train.one_hot(), *components)?)
            }
            ExtractorSpec::Tsne(cfg) => Extractor::Tsne(tsne_embed(&train.x, cfg)?),
            ExtractorSpec::Nmf(cfg) => Extractor::Nmf(nmf_fit(&train.x, cfg)?),
        })
    }
}

/// A fitted extractor. Transforming never changes the fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "model", rename_all = "snake_case")]
pub enum Extractor {
    None,
    Pca(PcaModel),
    Pls(PlsModel),
    Tsne(TsneModel),
    Nmf(NmfModel),
}

impl Extractor {
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Extractor::None => Ok(x.clone()),
            Extractor::Pca(m) => m.transform(x),
            Extractor::Pls(m) => m.transform(x),
            Extractor::Tsne(m) => m.transform(x),
            Extractor::Nmf(m) => nmf_transform(m, x),
        }
    }

    /// Features for the rows the extractor was fitted on. t-SNE returns its
    /// embedding; the others transform, so NMF training rows get the same
    /// coefficient solve as unseen rows rather than the factorization's W.
    pub fn training_features(&self, train_x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Extractor::Tsne(m) => Ok(m.embedding.clone()),
            _ => self.transform(train_x),
        }
    }

    pub fn transform_dataset(&self, data: &Dataset, name: &str) -> Result<FeatureSet> {
        FeatureSet::new(self.transform(&data.x)?, data.labels.clone(), name)
    }
}
