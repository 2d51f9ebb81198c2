use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_materials_csv, run_sweep, synthetic_materials, SpectrumLibrary, SweepPlan, SweepResult};
use crate::error::{Error, Result};
use crate::fds::{profile_library, ProfileSpec};
use crate::physics::{LineDatabase, PhysicalConstants, SpectrumKind};

pub const DATA_DIR_ENV: &str = "TERASENSE_DATA_DIR";

/// Relative paths that do not exist as given are looked up under `TERASENSE_DATA_DIR`.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) => Path::new(&root).join(path),
        None => path.to_path_buf(),
    }
}

fn default_classes() -> usize {
    20
}
fn default_points() -> usize {
    430
}
fn default_band() -> (f64, f64) {
    (0.2e12, 2.5e12)
}
fn default_gas_band() -> (f64, f64) {
    (0.1e12, 1.0e12)
}

/// Where the clean class spectra come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    /// `frequency_hz,<name>,...` transmittance table.
    MaterialsCsv { path: PathBuf },
    SyntheticMaterials {
        #[serde(default = "default_classes")]
        classes: usize,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_band")]
        band: (f64, f64),
        #[serde(default)]
        seed: u64,
    },
    /// Transmittance of each gas profile over its path, on a uniform grid.
    GasProfiles {
        profiles: Vec<ProfileSpec>,
        #[serde(default = "default_gas_band")]
        band: (f64, f64),
        #[serde(default = "default_points")]
        points: usize,
        /// `.par` file; the embedded table when absent.
        #[serde(default)]
        line_file: Option<PathBuf>,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::SyntheticMaterials {
            classes: default_classes(),
            points: default_points(),
            band: default_band(),
            seed: 0,
        }
    }
}

pub fn load_line_database(line_file: Option<&Path>, consts: &PhysicalConstants) -> Result<LineDatabase> {
    match line_file {
        None => Ok(LineDatabase::builtin(consts)),
        Some(p) => {
            let path = resolve_data_path(p);
            let text = std::fs::read_to_string(&path).map_err(|source| Error::File { path: path.clone(), source })?;
            LineDatabase::from_par(&text, consts)
        }
    }
}

impl DatasetSource {
    pub fn load(&self, consts: &PhysicalConstants) -> Result<SpectrumLibrary> {
        match self {
            DatasetSource::MaterialsCsv { path } => {
                let path = resolve_data_path(path);
                let file = std::fs::File::open(&path).map_err(|source| Error::File { path: path.clone(), source })?;
                load_materials_csv(std::io::BufReader::new(file))
            }
            DatasetSource::SyntheticMaterials {
                classes,
                points,
                band,
                seed,
            } => synthetic_materials(*classes, *points, *band, *seed),
            DatasetSource::GasProfiles {
                profiles,
                band,
                points,
                line_file,
            } => {
                let db = load_line_database(line_file.as_deref(), consts)?;
                let grid = crate::physics::SpectralGrid::linspace(band.0, band.1, *points)?;
                profile_library(profiles, &grid, &db, consts, SpectrumKind::Transmittance)
            }
        }
    }
}

/// A complete `bench-sweep` document: data source plus sweep plan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(flatten)]
    pub plan: SweepPlan,
}

impl ExperimentConfig {
    /// The chemometrics replication grid on the synthetic material set.
    pub fn replication() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.plan.validate()?;
        Ok(cfg)
    }

    pub fn run(&self, consts: &PhysicalConstants) -> Result<SweepResult> {
        let lib = self.dataset.load(consts)?;
        run_sweep(&lib, &self.plan)
    }
}
