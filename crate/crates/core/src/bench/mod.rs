//! Dataset synthesis, noise injection, stratified K-fold cross-validation and
//! SNR sweeps over (extractor, classifier) pipelines.

mod config;
mod kfold;
mod library;
mod noise;
mod sweep;

pub use config::{load_line_database, resolve_data_path, DatasetSource, ExperimentConfig, DATA_DIR_ENV};
pub use kfold::{kfold_split, Fold};
pub use library::{load_materials_csv, synthetic_materials, SpectrumLibrary, MATERIAL_NAMES};
pub use noise::{add_noise, derive_seed, synthesize_dataset, Snr};
pub use sweep::{emit_results_csv, run_sweep, CellResult, PipelineOverride, SweepPlan, SweepResult, RESULTS_HEADER};
