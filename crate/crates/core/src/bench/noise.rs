use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SpectrumLibrary;
use crate::error::{Error, Result};
use crate::features::Dataset;

/// Signal-to-noise ratio of additive Gaussian noise, or no noise at all.
///
/// Signal power is the mean square of the clean vector. In JSON a number is a
/// dB value and the string `"noiseless"` (or `"inf"`) disables noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SnrRepr", into = "SnrRepr")]
pub enum Snr {
    Db(f64),
    Noiseless,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SnrRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<SnrRepr> for Snr {
    type Error = String;
    fn try_from(r: SnrRepr) -> std::result::Result<Self, String> {
        match r {
            SnrRepr::Number(v) if v.is_finite() => Ok(Snr::Db(v)),
            SnrRepr::Number(v) => Err(format!("SNR must be finite, got {v}")),
            SnrRepr::Text(t) => t.parse(),
        }
    }
}

impl From<Snr> for SnrRepr {
    fn from(s: Snr) -> Self {
        match s {
            Snr::Db(v) => SnrRepr::Number(v),
            Snr::Noiseless => SnrRepr::Text("noiseless".into()),
        }
    }
}

impl std::str::FromStr for Snr {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "noiseless" | "inf" | "+inf" => Ok(Snr::Noiseless),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Snr::Db)
                .ok_or_else(|| format!("not an SNR: {t:?} (dB number or \"noiseless\")")),
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Db(v) => write!(f, "{v}"),
            Snr::Noiseless => f.write_str("inf"),
        }
    }
}

impl Snr {
    /// Sort key; the noiseless point sorts after every finite value.
    pub fn key(&self) -> f64 {
        match self {
            Snr::Db(v) => *v,
            Snr::Noiseless => f64::INFINITY,
        }
    }

    /// Noise variance for a clean vector of the given mean-square power.
    pub fn noise_variance(&self, signal_power: f64) -> f64 {
        match self {
            Snr::Db(db) => signal_power / 10f64.powf(db / 10.0),
            Snr::Noiseless => 0.0,
        }
    }
}

/// Mixes coordinates into a master seed (splitmix64 finalizer per step).
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    coords.iter().fold(mix(master), |acc, &c| mix(acc ^ mix(c)))
}

/// Adds zero-mean Gaussian noise at `snr` relative to the vector's own power.
pub fn add_noise<R: Rng>(clean: &[f64], snr: Snr, rng: &mut R) -> Vec<f64> {
    let power = clean.iter().map(|v| v * v).sum::<f64>() / clean.len().max(1) as f64;
    let sd = snr.noise_variance(power).sqrt();
    if sd == 0.0 {
        return clean.to_vec();
    }
    clean
        .iter()
        .map(|v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `per_class` noisy copies of each library spectrum, grouped by class.
pub fn synthesize_dataset(lib: &SpectrumLibrary, per_class: usize, snr: Snr, seed: u64) -> Result<Dataset> {
    if per_class == 0 || lib.is_empty() {
        return Err(Error::domain("synthesis needs at least one class and one observation per class"));
    }
    let n = lib.grid.len();
    let m = lib.len() * per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(m, n);
    let mut labels = Vec::with_capacity(m);
    for (c, clean) in lib.values.iter().enumerate() {
        for _ in 0..per_class {
            let r = labels.len();
            for (j, v) in add_noise(clean, snr, &mut rng).into_iter().enumerate() {
                x[(r, j)] = v;
            }
            labels.push(c);
        }
    }
    Dataset::new(x, labels, lib.names.clone(), Some(lib.grid.frequencies().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{SpectralGrid, SpectrumKind};

    fn lib() -> SpectrumLibrary {
        SpectrumLibrary::new(
            SpectralGrid::linspace(1e11, 2e11, 4).unwrap(),
            SpectrumKind::Transmittance,
            vec!["a".into(), "b".into()],
            vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.9, 0.8, 0.7, 0.6]],
        )
        .unwrap()
    }

    #[test]
    fn noiseless_copies_are_exact() {
        let d = synthesize_dataset(&lib(), 3, Snr::Noiseless, 1).unwrap();
        assert_eq!(d.n_samples(), 6);
        for r in 0..6 {
            let c = d.labels[r];
            for j in 0..4 {
                assert_eq!(d.x[(r, j)], lib().values[c][j]);
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = synthesize_dataset(&lib(), 5, Snr::Db(3.0), 42).unwrap();
        let b = synthesize_dataset(&lib(), 5, Snr::Db(3.0), 42).unwrap();
        assert_eq!(a, b);
        let c = synthesize_dataset(&lib(), 5, Snr::Db(3.0), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_variance_at_20_db() {
        let clean = vec![0.5, -1.0, 2.0, 0.25];
        let power = clean.iter().map(|v| v * v).sum::<f64>() / 4.0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sum2 = 0.0;
        let draws = 100_000 / 4;
        for _ in 0..draws {
            let noisy = add_noise(&clean, Snr::Db(20.0), &mut rng);
            sum2 += noisy.iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        let var = sum2 / (draws * 4) as f64;
        assert!((var / (power / 100.0) - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn snr_json_forms() {
        let v: Vec<Snr> = serde_json::from_str(r#"[-20, 5.5, "noiseless", "inf"]"#).unwrap();
        assert_eq!(v, vec![Snr::Db(-20.0), Snr::Db(5.5), Snr::Noiseless, Snr::Noiseless]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[-20.0,5.5,"noiseless","noiseless"]"#);
        assert!(serde_json::from_str::<Snr>(r#""loud""#).is_err());
        assert_eq!(Snr::Db(-20.0).to_string(), "-20");
    }

    #[test]
    fn derived_seeds_differ_by_coordinate() {
        let a = derive_seed(1, &[0, 1]);
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 1]));
        assert_eq!(a, derive_seed(1, &[0, 1]));
    }
}
