use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, kfold_split, synthesize_dataset, Fold, Snr, SpectrumLibrary};
use crate::classify::{BpnnConfig, Classifier, ClassifierSpec, SvmConfig};
use crate::error::{Error, Result};
use crate::features::{Dataset, ExtractorSpec, NmfConfig, TsneConfig};
use crate::physics::format_f64;
use crate::preprocess::{apply_rows, Preprocessing};

/// Everything about a sweep except where the clean spectra come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepPlan {
    pub preprocessing: Vec<Preprocessing>,
    pub extractors: Vec<ExtractorSpec>,
    pub classifiers: Vec<ClassifierSpec>,
    pub snr_db: Vec<Snr>,
    /// Observations synthesized per class at every SNR point.
    pub per_class: usize,
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// t-SNE cells run on a stratified subset of this many observations.
    pub tsne_samples: usize,
    /// Wall time is measured only when set, so outputs stay byte-stable.
    pub record_runtime: bool,
    /// Per-extractor replacements for classifier settings.
    pub overrides: Vec<PipelineOverride>,
}

/// Replaces the plan's classifier of the same name when paired with `extractor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOverride {
    pub extractor: String,
    pub classifier: ClassifierSpec,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            preprocessing: vec![
                Preprocessing::SavitzkyGolay { half_width: 5, degree: 3 },
                Preprocessing::Minmax,
            ],
            extractors: vec![
                ExtractorSpec::Pca { components: 10 },
                ExtractorSpec::Pls { components: 10 },
                ExtractorSpec::Tsne(TsneConfig::default()),
                ExtractorSpec::Nmf(NmfConfig::default()),
            ],
            classifiers: vec![
                ClassifierSpec::Lda { ridge: 1e-6 },
                ClassifierSpec::Svm(Default::default()),
                ClassifierSpec::Knn(Default::default()),
                ClassifierSpec::Gnb,
                ClassifierSpec::Grnn { spread: 10.0 },
                ClassifierSpec::Bpnn(Default::default()),
            ],
            snr_db: (0..=10).map(|i| Snr::Db(-20.0 + 5.0 * i as f64)).collect(),
            per_class: 50,
            folds: 10,
            repetitions: 10,
            seed: 1,
            tsne_samples: 200,
            record_runtime: false,
            overrides: vec![
                // the t-SNE subset is a fifth of the data, so each epoch makes
                // a fifth of the updates
                PipelineOverride {
                    extractor: "tsne".into(),
                    classifier: ClassifierSpec::Bpnn(BpnnConfig {
                        epochs: 5000,
                        ..BpnnConfig::default()
                    }),
                },
                // standardized t-SNE clusters sit close together relative to
                // the embedding spread, so the margin needs a larger penalty
                PipelineOverride {
                    extractor: "tsne".into(),
                    classifier: ClassifierSpec::Svm(SvmConfig {
                        c: 10.0,
                        ..SvmConfig::default()
                    }),
                },
            ],
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(field, msg));
        if self.folds < 2 {
            return bad("folds", "needs at least 2");
        }
        if self.repetitions == 0 {
            return bad("repetitions", "needs at least 1");
        }
        if self.per_class == 0 {
            return bad("per_class", "needs at least 1");
        }
        if self.snr_db.is_empty() {
            return bad("snr_db", "needs at least one point");
        }
        if self.extractors.is_empty() {
            return bad("extractors", "needs at least one extractor");
        }
        if self.classifiers.is_empty() {
            return bad("classifiers", "needs at least one classifier");
        }
        Ok(())
    }

    /// Classifier `c` as used after extractor `e`.
    pub fn classifier_for(&self, e: usize, c: usize) -> &ClassifierSpec {
        let base = &self.classifiers[c];
        let ext = self.extractors[e].name();
        self.overrides
            .iter()
            .find(|o| o.extractor == ext && o.classifier.name() == base.name())
            .map_or(base, |o| &o.classifier)
    }

    /// Number of result rows the sweep produces.
    pub fn cell_count(&self) -> usize {
        self.snr_db.len() * self.extractors.len() * self.classifiers.len()
    }
}

/// Aggregated outcome of one (snr, extractor, classifier) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub snr: Snr,
    pub extractor: String,
    pub classifier: String,
    pub success_rate_mean: f64,
    pub success_rate_std: f64,
    pub rmsec: f64,
    pub runtime_s: f64,
    /// Success rate of each repetition, in repetition order.
    pub success_rates: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn failed(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.error.is_some())
    }

    /// Cells of one pipeline in ascending SNR order.
    pub fn curve(&self, extractor: &str, classifier: &str) -> Vec<&CellResult> {
        let mut v: Vec<&CellResult> = self
            .cells
            .iter()
            .filter(|c| c.extractor == extractor && c.classifier == classifier)
            .collect();
        v.sort_by(|a, b| a.snr.key().total_cmp(&b.snr.key()));
        v
    }

    pub fn sorted(&self) -> Vec<&CellResult> {
        let mut v: Vec<&CellResult> = self.cells.iter().collect();
        v.sort_by(|a, b| {
            a.extractor
                .cmp(&b.extractor)
                .then_with(|| a.classifier.cmp(&b.classifier))
                .then_with(|| a.snr.key().total_cmp(&b.snr.key()))
        });
        v
    }
}

pub const RESULTS_HEADER: &str = "snr_db,extractor,classifier,success_rate_mean,success_rate_std,rmsec,runtime_s";

/// Writes the results table sorted by (extractor, classifier, snr_db).
pub fn emit_results_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::domain("no results to write"));
    }
    writeln!(out, "{RESULTS_HEADER}")?;
    for c in result.sorted() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.snr,
            c.extractor,
            c.classifier,
            format_f64(c.success_rate_mean),
            format_f64(c.success_rate_std),
            format_f64(c.rmsec),
            format_f64(c.runtime_s),
        )?;
    }
    Ok(())
}

/// Per-repetition tallies of one cell.
#[derive(Debug, Clone, Default)]
struct Tally {
    correct: usize,
    total: usize,
    squared_residual: f64,
    seconds: f64,
}

type JobOutcome = Vec<std::result::Result<Tally, String>>;

/// Stratified subset with `target` observations spread evenly over classes.
fn stratified_subset(labels: &[usize], classes: usize, target: usize, seed: u64) -> Vec<usize> {
    let per_class = (target / classes.max(1)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        keep.extend(idx.into_iter().take(per_class));
    }
    keep.sort_unstable();
    keep
}

/// Runs every pipeline with K-fold cross-validation at every SNR point.
///
/// Jobs are (snr, repetition) pairs. A repetition uses the same noise seed at
/// every SNR point and every pipeline sees the same data, so comparisons are
/// paired. Results do not depend on the number of worker threads.
pub fn run_sweep(lib: &SpectrumLibrary, plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    if lib.len() < 2 {
        return Err(Error::config("dataset", "needs at least two classes"));
    }
    let jobs: Vec<(usize, usize)> = (0..plan.snr_db.len())
        .flat_map(|s| (0..plan.repetitions).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<JobOutcome> = jobs
        .par_iter()
        .map(|&(s, rep)| run_job(lib, plan, plan.snr_db[s], rep))
        .collect();

    let n_cls = plan.classifiers.len();
    let mut cells = Vec::with_capacity(plan.cell_count());
    for (s, snr) in plan.snr_db.iter().enumerate() {
        for (e, ext) in plan.extractors.iter().enumerate() {
            for (c, cls) in plan.classifiers.iter().enumerate() {
                let reps: Vec<&std::result::Result<Tally, String>> = (0..plan.repetitions)
                    .map(|r| &outcomes[s * plan.repetitions + r][e * n_cls + c])
                    .collect();
                cells.push(aggregate(*snr, ext.name(), cls.name(), &reps, plan.record_runtime));
            }
        }
    }
    Ok(SweepResult { cells })
}

fn aggregate(
    snr: Snr,
    extractor: &str,
    classifier: &str,
    reps: &[&std::result::Result<Tally, String>],
    record_runtime: bool,
) -> CellResult {
    let mut cell = CellResult {
        snr,
        extractor: extractor.to_string(),
        classifier: classifier.to_string(),
        success_rate_mean: f64::NAN,
        success_rate_std: f64::NAN,
        rmsec: f64::NAN,
        runtime_s: 0.0,
        success_rates: Vec::new(),
        error: None,
    };
    let mut mse = Vec::new();
    let mut secs = 0.0;
    for r in reps {
        match r {
            Ok(t) => {
                cell.success_rates.push(t.correct as f64 / t.total as f64);
                mse.push(t.squared_residual / t.total as f64);
                secs += t.seconds;
            }
            Err(e) => {
                cell.error.get_or_insert_with(|| e.clone());
            }
        }
    }
    if cell.error.is_some() {
        log::warn!(
            "cell snr={snr} {extractor}/{classifier} failed: {}",
            cell.error.as_deref().unwrap_or_default()
        );
        return cell;
    }
    let n = cell.success_rates.len() as f64;
    let mean = cell.success_rates.iter().sum::<f64>() / n;
    cell.success_rate_mean = mean;
    cell.success_rate_std = if n > 1.0 {
        (cell.success_rates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    cell.rmsec = (mse.iter().sum::<f64>() / n).sqrt();
    if record_runtime {
        cell.runtime_s = secs / n;
    }
    cell
}

fn run_job(lib: &SpectrumLibrary, plan: &SweepPlan, snr: Snr, rep: usize) -> JobOutcome {
    let cells = plan.extractors.len() * plan.classifiers.len();
    let prepared = (|| -> Result<(Dataset, Vec<Fold>)> {
        let mut data = synthesize_dataset(lib, plan.per_class, snr, derive_seed(plan.seed, &[rep as u64, 0]))?;
        data.x = apply_rows(&data.x, &plan.preprocessing)?;
        let folds = kfold_split(&data.labels, plan.folds, derive_seed(plan.seed, &[rep as u64, 1]))?;
        Ok((data, folds))
    })();
    let (data, folds) = match prepared {
        Ok(v) => v,
        Err(e) => return vec![Err(e.to_string()); cells],
    };
    let mut out = Vec::with_capacity(cells);
    for (e, ext) in plan.extractors.iter().enumerate() {
        let subset = match ext {
            ExtractorSpec::Tsne(_) if plan.tsne_samples < data.n_samples() => {
                let keep = stratified_subset(
                    &data.labels,
                    data.n_classes(),
                    plan.tsne_samples,
                    derive_seed(plan.seed, &[rep as u64, 2]),
                );
                let sub = data.subset(&keep);
                kfold_split(&sub.labels, plan.folds, derive_seed(plan.seed, &[rep as u64, 3])).map(|f| (sub, f))
            }
            _ => Ok((data.clone(), folds.clone())),
        };
        match subset {
            Ok((d, f)) => out.extend(run_extractor(&d, &f, plan, e, rep)),
            Err(err) => out.extend(vec![Err(err.to_string()); plan.classifiers.len()]),
        }
    }
    out
}

fn run_extractor(
    data: &Dataset,
    folds: &[Fold],
    plan: &SweepPlan,
    e: usize,
    rep: usize,
) -> Vec<std::result::Result<Tally, String>> {
    let mut tallies: Vec<std::result::Result<Tally, String>> = vec![Ok(Tally::default()); plan.classifiers.len()];
    let k = data.n_classes();
    for (f, fold) in folds.iter().enumerate() {
        let coords = [rep as u64, f as u64, e as u64];
        let started = Instant::now();
        let train = data.subset(&fold.train);
        let test = data.subset(&fold.test);
        let features = (|| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
            let spec = plan.extractors[e].with_seed(derive_seed(plan.seed, &[coords[0], coords[1], coords[2], 10]));
            let fitted = spec.fit(&train)?;
            Ok((fitted.training_features(&train.x)?, fitted.transform(&test.x)?))
        })();
        let extractor_secs = started.elapsed().as_secs_f64();
        let (f_train, f_test) = match features {
            Ok(v) => v,
            Err(err) => {
                for t in tallies.iter_mut() {
                    if t.is_ok() {
                        *t = Err(err.to_string());
                    }
                }
                continue;
            }
        };
        for c in 0..plan.classifiers.len() {
            let spec = plan.classifier_for(e, c);
            let Ok(tally) = &mut tallies[c] else { continue };
            let started = Instant::now();
            let seed = derive_seed(plan.seed, &[coords[0], coords[1], coords[2], 20 + c as u64]);
            let result = (|| -> Result<(usize, f64)> {
                let model = spec.with_seed(seed).fit(&f_train, &train.labels, k)?;
                let mut correct = 0;
                let mut sq = 0.0;
                for (r, &label) in test.labels.iter().enumerate() {
                    let y: Vec<f64> = f_test.row(r).iter().copied().collect();
                    let scores = model.scores(&y)?;
                    if model.predict(&y)? == label {
                        correct += 1;
                    }
                    debug_assert_eq!(scores.len(), k);
                    sq += scores
                        .iter()
                        .enumerate()
                        .map(|(j, s)| (if j == label { 1.0 } else { 0.0 } - s).powi(2))
                        .sum::<f64>();
                }
                Ok((correct, sq))
            })();
            match result {
                Ok((correct, sq)) => {
                    tally.correct += correct;
                    tally.total += test.labels.len();
                    tally.squared_residual += sq;
                    tally.seconds += extractor_secs + started.elapsed().as_secs_f64();
                }
                Err(err) => tallies[c] = Err(err.to_string()),
            }
        }
    }
    tallies
}
