//! `terasense <subcommand> --config <path> --out <path> [--seed N] [--jobs N] [-v]`
//!
//! Every subcommand reads one JSON config and writes one CSV. Exit codes: 0
//! success, 1 failure while running (including failed sweep cells), 2 usage
//! or config errors.

use std::ffi::OsString;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::{
    emit_results_csv, kfold_split, load_line_database, load_materials_csv, resolve_data_path, synthesize_dataset,
    DatasetSource, ExperimentConfig, Snr, SpectrumLibrary, SweepResult,
};
use crate::classify::{Classifier, ClassifierSpec};
use crate::error::{Error, Result};
use crate::fds::{medium_spectrum, sense_mixture, spike_detect, FdsConfig, ProfileSpec, SpikeRule};
use crate::features::{Dataset, ExtractorSpec};
use crate::physics::{format_f64, PhysicalConstants, SpectralGrid, Spectrum, SpectrumKind};
use crate::preprocess::{apply_rows, Preprocessing};

#[derive(Debug, Parser)]
#[command(name = "terasense", version, about = "Terahertz sensing and chemometrics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gas-mixture spectrum from line data.
    SynthGas(Common),
    /// Validate a materials table (or synthesize one) and write it back out.
    IngestMaterials(Common),
    /// Apply pre-treatment steps to every spectrum of a materials table.
    Preprocess(Common),
    /// Fit a feature extractor on a synthesized dataset and write the features.
    Features(Common),
    /// Out-of-fold class predictions and scores for a synthesized dataset.
    Classify(Common),
    /// SNR sweep over extractor and classifier pipelines.
    BenchSweep(Common),
    /// Gas-profile identification from carrier magnitudes.
    FdsSense(Common),
    /// Per-species spike threshold tests on an absorption spectrum.
    SpikeDetect(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all logical cores when absent.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::SynthGas(c) => ("synth-gas", c),
            Command::IngestMaterials(c) => ("ingest-materials", c),
            Command::Preprocess(c) => ("preprocess", c),
            Command::Features(c) => ("features", c),
            Command::Classify(c) => ("classify", c),
            Command::BenchSweep(c) => ("bench-sweep", c),
            Command::FdsSense(c) => ("fds-sense", c),
            Command::SpikeDetect(c) => ("spike-detect", c),
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Json(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

struct Outcome {
    rows: usize,
    failed_cells: usize,
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let (name, common) = cli.command.parts();
    init_logging(common.verbose);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("terasense {name}: cannot start worker pool: {e}");
            return 1;
        }
    };
    let started = Instant::now();
    match pool.install(|| execute(&cli.command)) {
        Ok(outcome) => {
            eprintln!(
                "terasense {name}: wrote {} rows to {} in {:.2} s",
                outcome.rows,
                common.out.display(),
                started.elapsed().as_secs_f64()
            );
            if outcome.failed_cells > 0 {
                eprintln!("terasense {name}: {} cells failed", outcome.failed_cells);
                1
            } else {
                0
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("terasense {name}: {msg}");
            eprintln!("usage: terasense {name} --config <path> --out <path> [--seed N] [--jobs N] [-v]");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("terasense {name}: {e}");
            1
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

fn read_config<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let file_err = |source| Error::File {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| file_err(e.error))?;
    Ok(())
}

fn execute(command: &Command) -> std::result::Result<Outcome, Failure> {
    let (_, common) = command.parts();
    let consts = PhysicalConstants::default();
    let done = |rows| Ok(Outcome { rows, failed_cells: 0 });
    match command {
        Command::SynthGas(_) => {
            let mut cfg: SynthGasConfig = read_config(&common.config)?;
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            let spectrum = cfg.synthesize(&consts)?;
            write_atomic(&common.out, |w| spectrum.write_csv(w))?;
            done(spectrum.len())
        }
        Command::IngestMaterials(_) => {
            let mut cfg: IngestConfig = read_config(&common.config)?;
            if let (Some(s), DatasetSource::SyntheticMaterials { seed, .. }) = (common.seed, &mut cfg.dataset) {
                *seed = s;
            }
            let lib = cfg.dataset.load(&consts)?;
            write_atomic(&common.out, |w| lib.write_csv(w))?;
            done(lib.grid.len())
        }
        Command::Preprocess(_) => {
            let cfg: PreprocessConfig = read_config(&common.config)?;
            let lib = cfg.apply()?;
            write_atomic(&common.out, |w| lib.write_csv(w))?;
            done(lib.grid.len())
        }
        Command::Features(_) => {
            let mut cfg: FeaturesConfig = read_config(&common.config)?;
            cfg.sample.seed = common.seed.unwrap_or(cfg.sample.seed);
            let data = cfg.sample.build(&consts)?;
            let extractor = cfg.extractor.with_seed(cfg.sample.seed).fit(&data)?;
            let features = extractor.training_features(&data.x)?;
            let set = crate::features::FeatureSet::new(features, data.labels.clone(), cfg.extractor.name())?;
            write_atomic(&common.out, |w| set.write_csv(w))?;
            done(data.n_samples())
        }
        Command::Classify(_) => {
            let mut cfg: ClassifyConfig = read_config(&common.config)?;
            cfg.sample.seed = common.seed.unwrap_or(cfg.sample.seed);
            let data = cfg.sample.build(&consts)?;
            let predictions = cfg.out_of_fold(&data)?;
            write_atomic(&common.out, |w| predictions.write_csv(w))?;
            done(data.n_samples())
        }
        Command::BenchSweep(_) => {
            let mut cfg: ExperimentConfig = read_config(&common.config)?;
            cfg.plan.seed = common.seed.unwrap_or(cfg.plan.seed);
            cfg.plan.validate()?;
            let result = cfg.run(&consts)?;
            write_results(&common.out, &result)
        }
        Command::FdsSense(_) => {
            let mut cfg: FdsConfig = read_config(&common.config)?;
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            let db = load_line_database(cfg.line_file.as_deref(), &consts)?;
            let result = sense_mixture(&cfg, &db, &consts)?;
            write_results(&common.out, &result)
        }
        Command::SpikeDetect(_) => {
            let cfg: SpikeConfig = read_config(&common.config)?;
            let db = load_line_database(cfg.line_file.as_deref(), &consts)?;
            let spectrum = cfg.spectrum(&db, &consts)?;
            let decisions = spike_detect(&spectrum, &db, &cfg.species, cfg.rule)?;
            write_atomic(&common.out, |w| {
                writeln!(w, "species,present,value,baseline")?;
                for d in &decisions {
                    writeln!(w, "{},{},{},{}", d.species, d.present, format_f64(d.value), format_f64(d.baseline))?;
                }
                Ok(())
            })?;
            done(decisions.len())
        }
    }
}

fn write_results(out: &Path, result: &SweepResult) -> std::result::Result<Outcome, Failure> {
    write_atomic(out, |w| emit_results_csv(result, w))?;
    Ok(Outcome {
        rows: result.cells.len(),
        failed_cells: result.failed().count(),
    })
}

fn default_gas_band() -> (f64, f64) {
    (0.1e12, 1.0e12)
}
fn default_gas_points() -> usize {
    1001
}
fn default_kind() -> SpectrumKind {
    SpectrumKind::Transmittance
}
fn default_species() -> Vec<String> {
    ["H2O", "O2", "CH4", "CO2", "N2"].iter().map(|s| s.to_string()).collect()
}

/// `synth-gas`: one medium on a uniform grid, optionally with noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthGasConfig {
    pub profile: ProfileSpec,
    #[serde(default = "default_gas_band")]
    pub band: (f64, f64),
    #[serde(default = "default_gas_points")]
    pub points: usize,
    #[serde(default = "default_kind")]
    pub kind: SpectrumKind,
    #[serde(default)]
    pub line_file: Option<PathBuf>,
    #[serde(default = "noiseless")]
    pub snr_db: Snr,
    #[serde(default)]
    pub seed: u64,
}

fn noiseless() -> Snr {
    Snr::Noiseless
}

impl SynthGasConfig {
    pub fn synthesize(&self, consts: &PhysicalConstants) -> Result<Spectrum> {
        let db = load_line_database(self.line_file.as_deref(), consts)?;
        let grid = SpectralGrid::linspace(self.band.0, self.band.1, self.points)?;
        let mut s = medium_spectrum(&self.profile.medium(&db)?, &grid, consts, self.kind)?;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(self.seed);
        s.values = crate::bench::add_noise(&s.values, self.snr_db, &mut rng);
        Ok(s)
    }
}

/// `ingest-materials`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub dataset: DatasetSource,
}

fn default_steps() -> Vec<Preprocessing> {
    vec![
        Preprocessing::SavitzkyGolay { half_width: 5, degree: 3 },
        Preprocessing::Minmax,
    ]
}

/// `preprocess`: a materials table in, the treated table out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub input: PathBuf,
    #[serde(default = "default_steps")]
    pub steps: Vec<Preprocessing>,
}

impl PreprocessConfig {
    pub fn apply(&self) -> Result<SpectrumLibrary> {
        let path = resolve_data_path(&self.input);
        let file = std::fs::File::open(&path).map_err(|source| Error::File { path: path.clone(), source })?;
        let lib = load_materials_csv(std::io::BufReader::new(file))?;
        let n = lib.grid.len();
        let x = DMatrix::from_fn(lib.len(), n, |r, c| lib.values[r][c]);
        let y = apply_rows(&x, &self.steps)?;
        let values = (0..lib.len()).map(|r| y.row(r).iter().copied().collect()).collect();
        SpectrumLibrary::new(lib.grid, lib.kind, lib.names, values)
    }
}

fn default_per_class() -> usize {
    50
}
fn default_snr() -> Snr {
    Snr::Db(20.0)
}

/// Noisy labelled observations drawn from a clean library, then pre-treated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(default = "default_per_class")]
    pub per_class: usize,
    #[serde(default = "default_snr")]
    pub snr_db: Snr,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub preprocessing: Vec<Preprocessing>,
}

impl SampleConfig {
    pub fn build(&self, consts: &PhysicalConstants) -> Result<Dataset> {
        let lib = self.dataset.load(consts)?;
        let mut data = synthesize_dataset(&lib, self.per_class, self.snr_db, self.seed)?;
        data.x = apply_rows(&data.x, &self.preprocessing)?;
        Ok(data)
    }
}

fn default_extractor() -> ExtractorSpec {
    ExtractorSpec::Pca { components: 10 }
}

/// `features`: extractor fitted on the whole synthesized dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesConfig {
    #[serde(flatten)]
    pub sample: SampleConfig,
    #[serde(default = "default_extractor")]
    pub extractor: ExtractorSpec,
}

fn default_classifier() -> ClassifierSpec {
    ClassifierSpec::Lda { ridge: 1e-6 }
}
fn default_folds() -> usize {
    5
}

/// `classify`: every observation is predicted by the pipeline fitted on the
/// other folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    #[serde(flatten)]
    pub sample: SampleConfig,
    #[serde(default = "default_extractor")]
    pub extractor: ExtractorSpec,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierSpec,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

/// Out-of-fold predictions in observation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub class_names: Vec<String>,
    pub labels: Vec<usize>,
    pub predicted: Vec<usize>,
    pub scores: DMatrix<f64>,
}

impl Predictions {
    pub fn accuracy(&self) -> f64 {
        let hits = self.labels.iter().zip(&self.predicted).filter(|(a, b)| a == b).count();
        hits as f64 / self.labels.len() as f64
    }

    /// `sample,label,predicted,score_<class>...`
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        write!(out, "sample,label,predicted")?;
        for name in &self.class_names {
            write!(out, ",score_{name}")?;
        }
        writeln!(out)?;
        for (i, (label, pred)) in self.labels.iter().zip(&self.predicted).enumerate() {
            write!(out, "{i},{label},{pred}")?;
            for v in self.scores.row(i).iter() {
                write!(out, ",{}", format_f64(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

impl ClassifyConfig {
    pub fn out_of_fold(&self, data: &Dataset) -> Result<Predictions> {
        let k = data.n_classes();
        let folds = kfold_split(&data.labels, self.folds, crate::bench::derive_seed(self.sample.seed, &[1]))?;
        let mut predicted = vec![0; data.n_samples()];
        let mut scores = DMatrix::zeros(data.n_samples(), k);
        for (f, fold) in folds.iter().enumerate() {
            let seed = crate::bench::derive_seed(self.sample.seed, &[2, f as u64]);
            let train = data.subset(&fold.train);
            let test = data.subset(&fold.test);
            let extractor = self.extractor.with_seed(seed).fit(&train)?;
            let model = self
                .classifier
                .with_seed(seed)
                .fit(&extractor.training_features(&train.x)?, &train.labels, k)?;
            let features = extractor.transform(&test.x)?;
            for (r, &i) in fold.test.iter().enumerate() {
                let y: Vec<f64> = features.row(r).iter().copied().collect();
                predicted[i] = model.predict(&y)?;
                for (c, s) in model.scores(&y)?.into_iter().enumerate() {
                    scores[(i, c)] = s;
                }
            }
        }
        Ok(Predictions {
            class_names: data.class_names.clone(),
            labels: data.labels.clone(),
            predicted,
            scores,
        })
    }
}

/// `spike-detect`: either a stored absorption spectrum or a profile to synthesize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeConfig {
    #[serde(default)]
    pub spectrum: Option<PathBuf>,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default = "default_gas_band")]
    pub band: (f64, f64),
    #[serde(default = "default_gas_points")]
    pub points: usize,
    #[serde(default = "default_species")]
    pub species: Vec<String>,
    #[serde(default)]
    pub rule: SpikeRule,
    #[serde(default)]
    pub line_file: Option<PathBuf>,
}

impl SpikeConfig {
    pub fn spectrum(&self, db: &crate::physics::LineDatabase, consts: &PhysicalConstants) -> Result<Spectrum> {
        match (&self.spectrum, &self.profile) {
            (Some(path), None) => {
                let path = resolve_data_path(path);
                let file = std::fs::File::open(&path).map_err(|source| Error::File { path: path.clone(), source })?;
                Spectrum::read_csv(std::io::BufReader::new(file), SpectrumKind::AbsorptionCoefficient)
            }
            (None, Some(profile)) => {
                let grid = SpectralGrid::linspace(self.band.0, self.band.1, self.points)?;
                medium_spectrum(&profile.medium(db)?, &grid, consts, SpectrumKind::AbsorptionCoefficient)
            }
            _ => Err(Error::config("spectrum", "give exactly one of `spectrum` and `profile`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_config_is_a_usage_error() {
        assert_eq!(run(["terasense", "synth-gas", "--out", "x.csv"]), 2);
        assert_eq!(run(["terasense", "synth-gas", "--config", "a.json", "--out", "x.csv", "--bogus"]), 2);
        assert_eq!(run(["terasense"]), 2);
    }

    #[test]
    fn unreadable_or_invalid_config_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.csv");
        let cfg = dir.path().join("c.json");
        let args = |c: &Path| {
            vec![
                "terasense".to_string(),
                "synth-gas".into(),
                "--config".into(),
                c.display().to_string(),
                "--out".into(),
                out.display().to_string(),
            ]
        };
        assert_eq!(run(args(&dir.path().join("absent.json"))), 2);
        std::fs::write(&cfg, r#"{"band": [1e11, 2e11]}"#).unwrap();
        assert_eq!(run(args(&cfg)), 2);
        assert!(!out.exists());
    }

    #[test]
    fn out_of_fold_predictions_cover_every_sample() {
        let cfg = ClassifyConfig {
            sample: SampleConfig {
                dataset: DatasetSource::SyntheticMaterials {
                    classes: 3,
                    points: 40,
                    band: (0.2e12, 2.5e12),
                    seed: 1,
                },
                per_class: 10,
                snr_db: Snr::Noiseless,
                seed: 3,
                preprocessing: default_steps(),
            },
            extractor: ExtractorSpec::None,
            classifier: default_classifier(),
            folds: 5,
        };
        let data = cfg.sample.build(&PhysicalConstants::default()).unwrap();
        let p = cfg.out_of_fold(&data).unwrap();
        assert_eq!(p.predicted.len(), 30);
        assert_eq!(p.accuracy(), 1.0);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sample,label,predicted,score_"));
        assert_eq!(text.lines().count(), 31);
    }
}
