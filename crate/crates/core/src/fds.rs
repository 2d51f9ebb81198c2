//! Carrier-based frequency-domain sensing: probe a gas mixture at a set of
//! carrier frequencies, classify the received magnitudes, and flag species
//! whose absorption spikes stand out of the baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{add_noise, derive_seed, run_sweep, Snr, SpectrumLibrary, SweepPlan, SweepResult};
use crate::classify::ClassifierSpec;
use crate::error::{Error, Result};
use crate::features::ExtractorSpec;
use crate::physics::{
    absorption_spectrum, path_gain_spectrum, transmittance_spectrum, GasSpecies, LineDatabase, LineRecord,
    MediumState, PhysicalConstants, SpectralGrid, Spectrum, SpectrumKind,
};
use crate::preprocess::Preprocessing;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesFraction {
    pub name: String,
    pub mixing_ratio: f64,
}

fn fractions(list: &[(&str, f64)]) -> Vec<SpeciesFraction> {
    list.iter()
        .map(|(n, q)| SpeciesFraction {
            name: n.to_string(),
            mixing_ratio: *q,
        })
        .collect()
}

fn default_pressure() -> f64 {
    101_325.0
}
fn default_temperature() -> f64 {
    296.0
}
fn default_distance() -> f64 {
    5.0
}

/// A named gas mixture. `species` may be omitted for the built-in names
/// `dry`, `humid`, `polluted` and `vacuum`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<Vec<SpeciesFraction>>,
    #[serde(default = "default_pressure")]
    pub pressure_pa: f64,
    #[serde(default = "default_temperature")]
    pub temperature_k: f64,
    #[serde(default = "default_distance")]
    pub path_length_m: f64,
}

const DRY: [(&str, f64); 3] = [("N2", 0.7809), ("O2", 0.2095), ("CO2", 4.0e-4)];
const HUMID_WATER: f64 = 0.02;
const POLLUTED_METHANE: f64 = 2.0e-4;

/// Built-in mixture by name.
pub fn builtin_mixture(name: &str) -> Option<Vec<SpeciesFraction>> {
    let humid = || {
        let mut v: Vec<(&str, f64)> = DRY.iter().map(|(n, q)| (*n, q * (1.0 - HUMID_WATER))).collect();
        v.push(("H2O", HUMID_WATER));
        v
    };
    Some(match name {
        "dry" => fractions(&DRY),
        "humid" => fractions(&humid()),
        "polluted" => {
            let mut v = humid();
            v.push(("CH4", POLLUTED_METHANE));
            fractions(&v)
        }
        "vacuum" => Vec::new(),
        _ => return None,
    })
}

impl ProfileSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            species: None,
            pressure_pa: default_pressure(),
            temperature_k: default_temperature(),
            path_length_m: default_distance(),
        }
    }

    pub fn custom(name: &str, species: &[(&str, f64)]) -> Self {
        Self {
            species: Some(fractions(species)),
            ..Self::named(name)
        }
    }

    /// Dry, humid and polluted air.
    pub fn defaults() -> Vec<Self> {
        ["dry", "humid", "polluted"].iter().map(|n| Self::named(n)).collect()
    }

    pub fn fractions(&self) -> Result<Vec<SpeciesFraction>> {
        match &self.species {
            Some(s) => Ok(s.clone()),
            None => builtin_mixture(&self.name).ok_or_else(|| {
                Error::config(
                    "species",
                    format!("profile `{}` is not built in and lists no species", self.name),
                )
            }),
        }
    }

    /// The medium with each species' lines taken from `db`.
    pub fn medium(&self, db: &LineDatabase) -> Result<MediumState> {
        let species = self
            .fractions()?
            .into_iter()
            .map(|s| GasSpecies::new(s.name.clone(), s.mixing_ratio, db.lines(&s.name).to_vec()))
            .collect();
        MediumState::new(species, self.pressure_pa, self.temperature_k, self.path_length_m)
    }
}

/// Spectrum of `kind` for a medium; media without absorbing lines give K = 0.
pub fn medium_spectrum(
    medium: &MediumState,
    grid: &SpectralGrid,
    consts: &PhysicalConstants,
    kind: SpectrumKind,
) -> Result<Spectrum> {
    let absorbing = medium.species.iter().any(|s| !s.lines.is_empty());
    match kind {
        SpectrumKind::PathGainMagnitude => path_gain_spectrum(grid, medium, consts),
        SpectrumKind::AbsorptionCoefficient if absorbing => absorption_spectrum(grid, medium, consts),
        SpectrumKind::Transmittance if absorbing => transmittance_spectrum(grid, medium, consts),
        SpectrumKind::AbsorptionCoefficient => Spectrum::new(grid.clone(), vec![0.0; grid.len()], kind),
        SpectrumKind::Transmittance => Spectrum::new(grid.clone(), vec![1.0; grid.len()], kind),
    }
}

/// One clean spectrum per profile, in profile order.
pub fn profile_library(
    profiles: &[ProfileSpec],
    grid: &SpectralGrid,
    db: &LineDatabase,
    consts: &PhysicalConstants,
    kind: SpectrumKind,
) -> Result<SpectrumLibrary> {
    let mut values = Vec::with_capacity(profiles.len());
    for p in profiles {
        values.push(medium_spectrum(&p.medium(db)?, grid, consts, kind)?.values);
    }
    let names = profiles.iter().map(|p| p.name.clone()).collect();
    SpectrumLibrary::new(grid.clone(), kind, names, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierStrategy {
    Uniform,
    Random,
    Resonant,
}

/// A carrier allocation request and, once resolved, its carriers in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub strategy: CarrierStrategy,
    pub count: usize,
    /// (f_lo, f_hi) in Hz.
    pub band: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_species: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub carriers: Vec<f64>,
}

impl CarrierPlan {
    pub fn new(strategy: CarrierStrategy, count: usize, band: (f64, f64)) -> Self {
        Self {
            name: None,
            strategy,
            count,
            band,
            target_species: None,
            carriers: Vec::new(),
        }
    }

    pub fn resonant(species: &str, count: usize, band: (f64, f64)) -> Self {
        Self {
            target_species: Some(species.to_string()),
            ..Self::new(CarrierStrategy::Resonant, count, band)
        }
    }

    /// `name`, or strategy and count such as `resonant100`.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let s = match self.strategy {
                CarrierStrategy::Uniform => "uniform",
                CarrierStrategy::Random => "random",
                CarrierStrategy::Resonant => "resonant",
            };
            format!("{s}{}", self.count)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band;
        if self.count == 0 {
            return Err(Error::config("count", "needs at least one carrier"));
        }
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::config("band", "needs 0 < f_lo < f_hi"));
        }
        if self.strategy == CarrierStrategy::Resonant && self.target_species.is_none() {
            return Err(Error::config("target_species", "resonant allocation needs a target species"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        if self.carriers.is_empty() {
            return Err(Error::domain("carrier plan is not resolved"));
        }
        SpectralGrid::new(self.carriers.clone())
    }
}

fn inclusive_grid(band: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (band.0 + band.1)];
    }
    let step = (band.1 - band.0) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| band.0 + step * i as f64).collect();
    v[n - 1] = band.1;
    v
}

/// Resolves the carriers of `plan` at pressure `pressure` (Pa).
///
/// Resonant placement is greedy: lines of the target species are visited by
/// descending strength, and a line is skipped when its shifted resonance is
/// within one air-broadened half width of a carrier already placed. Leftover
/// carriers are spread uniformly over the band away from the resonant ones.
pub fn allocate_carriers(plan: &CarrierPlan, db: &LineDatabase, pressure: f64, seed: u64) -> Result<CarrierPlan> {
    plan.validate()?;
    let (lo, hi) = plan.band;
    let mut carriers = match plan.strategy {
        CarrierStrategy::Uniform => inclusive_grid(plan.band, plan.count),
        CarrierStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<f64> = Vec::with_capacity(plan.count);
            while v.len() < plan.count {
                v.push(rng.random_range(lo..=hi));
                v.sort_by(f64::total_cmp);
                v.dedup();
            }
            v
        }
        CarrierStrategy::Resonant => {
            let species = plan.target_species.as_deref().unwrap_or_default();
            resonant_carriers(db.lines(species), plan, pressure)?
        }
    };
    carriers.sort_by(f64::total_cmp);
    Ok(CarrierPlan {
        carriers,
        ..plan.clone()
    })
}

fn resonant_carriers(lines: &[LineRecord], plan: &CarrierPlan, pressure: f64) -> Result<Vec<f64>> {
    let (lo, hi) = plan.band;
    let mut in_band: Vec<&LineRecord> = lines
        .iter()
        .filter(|l| (lo..=hi).contains(&l.shifted_resonance(pressure)))
        .collect();
    if in_band.is_empty() {
        return Err(Error::Allocation(format!(
            "no lines of {} between {lo} and {hi} Hz",
            plan.target_species.as_deref().unwrap_or_default()
        )));
    }
    in_band.sort_by(|a, b| b.strength.total_cmp(&a.strength));
    let mut placed: Vec<(f64, f64)> = Vec::new();
    for line in in_band {
        if placed.len() == plan.count {
            break;
        }
        let f = line.shifted_resonance(pressure);
        let width = line.air_broadening * pressure;
        if placed.iter().all(|&(g, w)| (f - g).abs() > width.max(w)) {
            placed.push((f, width));
        }
    }
    let remaining = plan.count - placed.len();
    let mut carriers: Vec<f64> = placed.iter().map(|p| p.0).collect();
    if remaining == 0 {
        return Ok(carriers);
    }
    // Uniform padding: grow the grid until enough points clear every resonant
    // carrier, then take an evenly spread subset of them.
    let mut n = remaining;
    loop {
        let free: Vec<f64> = inclusive_grid(plan.band, n)
            .into_iter()
            .filter(|f| placed.iter().all(|&(g, w)| (f - g).abs() > w))
            .collect();
        if free.len() >= remaining {
            let pick = |i: usize| {
                if remaining == 1 {
                    free[free.len() / 2]
                } else {
                    free[(i * (free.len() - 1) + (remaining - 1) / 2) / (remaining - 1)]
                }
            };
            carriers.extend((0..remaining).map(pick));
            return Ok(carriers);
        }
        n += remaining - free.len();
    }
}

/// |path gain| at each carrier of a resolved plan, with noise at `snr`.
pub fn measure_channel(
    plan: &CarrierPlan,
    medium: &MediumState,
    snr: Snr,
    seed: u64,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let clean = path_gain_spectrum(&plan.grid()?, medium, consts)?.values;
    Ok(add_noise(&clean, snr, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn default_fds_plans() -> Vec<CarrierPlan> {
    let band = (0.1e12, 1.0e12);
    vec![
        CarrierPlan::new(CarrierStrategy::Uniform, 100, band),
        CarrierPlan::resonant("H2O", 100, band),
    ]
}

fn default_fds_snr() -> Vec<Snr> {
    let mut v: Vec<Snr> = (0..=12).map(|i| Snr::Db(10.0 * i as f64)).collect();
    v.push(Snr::Noiseless);
    v
}

/// A `fds-sense` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdsConfig {
    pub profiles: Vec<ProfileSpec>,
    pub plans: Vec<CarrierPlan>,
    /// `.par` file; the embedded table when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line_file: Option<std::path::PathBuf>,
    pub preprocessing: Vec<Preprocessing>,
    pub extractor: ExtractorSpec,
    pub classifiers: Vec<ClassifierSpec>,
    pub snr_db: Vec<Snr>,
    pub per_class: usize,
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for FdsConfig {
    fn default() -> Self {
        Self {
            profiles: ProfileSpec::defaults(),
            plans: default_fds_plans(),
            line_file: None,
            preprocessing: Vec::new(),
            extractor: ExtractorSpec::None,
            classifiers: vec![ClassifierSpec::Lda { ridge: 1e-6 }],
            snr_db: default_fds_snr(),
            per_class: 50,
            folds: 10,
            repetitions: 10,
            seed: 1,
        }
    }
}

impl FdsConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.profiles.len() < 2 {
            return Err(Error::config("profiles", "needs at least two profiles"));
        }
        if self.plans.is_empty() {
            return Err(Error::config("plans", "needs at least one carrier plan"));
        }
        for p in &self.plans {
            p.validate()?;
        }
        self.sweep_plan().validate()
    }

    pub fn sweep_plan(&self) -> SweepPlan {
        SweepPlan {
            preprocessing: self.preprocessing.clone(),
            extractors: vec![self.extractor.clone()],
            classifiers: self.classifiers.clone(),
            snr_db: self.snr_db.clone(),
            per_class: self.per_class,
            folds: self.folds,
            repetitions: self.repetitions,
            seed: self.seed,
            tsne_samples: usize::MAX,
            record_runtime: false,
            overrides: Vec::new(),
        }
    }
}

/// Classifies the profiles from channel magnitudes for every carrier plan.
///
/// All plans share the master seed, so their curves are paired. The
/// extractor column of each result reads `<plan>:<extractor>`.
pub fn sense_mixture(cfg: &FdsConfig, db: &LineDatabase, consts: &PhysicalConstants) -> Result<SweepResult> {
    cfg.validate()?;
    let pressure = cfg.profiles[0].pressure_pa;
    let plan = cfg.sweep_plan();
    let mut out = SweepResult::default();
    for (i, carrier_plan) in cfg.plans.iter().enumerate() {
        let resolved = allocate_carriers(carrier_plan, db, pressure, derive_seed(cfg.seed, &[i as u64]))?;
        let lib = profile_library(&cfg.profiles, &resolved.grid()?, db, consts, SpectrumKind::PathGainMagnitude)?;
        let mut res = run_sweep(&lib, &plan)?;
        let label = resolved.label();
        for c in &mut res.cells {
            c.extractor = format!("{label}:{}", c.extractor);
        }
        out.cells.extend(res.cells);
    }
    Ok(out)
}

/// Presence threshold: a spike counts when it exceeds `factor` × the spectrum median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeRule {
    pub factor: f64,
    /// Pressure used to shift reference resonances, Pa.
    #[serde(default = "default_pressure")]
    pub pressure_pa: f64,
}

impl Default for SpikeRule {
    fn default() -> Self {
        Self {
            factor: 3.0,
            pressure_pa: default_pressure(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeDecision {
    pub species: String,
    pub present: bool,
    /// Spectrum value at the reference resonance; 0 when no line is in band.
    pub value: f64,
    pub baseline: f64,
    /// Shifted resonance probed, Hz.
    pub frequency: Option<f64>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One threshold test per species at its strongest in-band resonance.
pub fn spike_detect(
    spectrum: &Spectrum,
    db: &LineDatabase,
    species: &[String],
    rule: SpikeRule,
) -> Result<Vec<SpikeDecision>> {
    if spectrum.kind != SpectrumKind::AbsorptionCoefficient {
        return Err(Error::domain("spike detection needs an absorption coefficient spectrum"));
    }
    if !(rule.factor >= 0.0) {
        return Err(Error::config("factor", "must be non-negative"));
    }
    let f = spectrum.grid.frequencies();
    let (lo, hi) = (f[0], f[f.len() - 1]);
    let baseline = median(&spectrum.values);
    Ok(species
        .iter()
        .map(|name| {
            let strongest = db
                .lines(name)
                .iter()
                .filter(|l| (lo..=hi).contains(&l.shifted_resonance(rule.pressure_pa)))
                .max_by(|a, b| a.strength.total_cmp(&b.strength));
            match strongest {
                None => SpikeDecision {
                    species: name.clone(),
                    present: false,
                    value: 0.0,
                    baseline,
                    frequency: None,
                },
                Some(line) => {
                    let fc = line.shifted_resonance(rule.pressure_pa);
                    let value = spectrum.values[spectrum.grid.nearest(fc)];
                    SpikeDecision {
                        species: name.clone(),
                        present: value > rule.factor * baseline,
                        value,
                        baseline,
                        frequency: Some(fc),
                    }
                }
            }
        })
        .collect())
}
