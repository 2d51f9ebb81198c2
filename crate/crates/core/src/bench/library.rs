use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::physics::{format_f64, SpectralGrid, Spectrum, SpectrumKind};
use crate::spectroscopy::transmission_forward;

/// Named clean spectra on one shared grid; the class index is the position.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumLibrary {
    pub grid: SpectralGrid,
    pub kind: SpectrumKind,
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SpectrumLibrary {
    pub fn new(grid: SpectralGrid, kind: SpectrumKind, names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Dimension {
                expected: names.len(),
                found: values.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::domain(format!("duplicate class name {n:?}")));
            }
        }
        if let Some(v) = values.iter().find(|v| v.len() != grid.len()) {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: v.len(),
            });
        }
        Ok(Self {
            grid,
            kind,
            names,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn spectrum(&self, class: usize) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            values: self.values[class].clone(),
            kind: self.kind,
        }
    }

    /// Header `frequency_hz,<name1>,...`, one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["frequency_hz".to_string()];
        header.extend(self.names.iter().map(|n| csv_field(n)));
        writeln!(out, "{}", header.join(","))?;
        for (i, f) in self.grid.frequencies().iter().enumerate() {
            write!(out, "{}", format_f64(*f))?;
            for v in &self.values {
                write!(out, ",{}", format_f64(v[i]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Reads transmittance spectra from a `frequency_hz,<name>...` table.
pub fn load_materials_csv<R: Read>(input: R) -> Result<SpectrumLibrary> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "frequency_hz" {
        return Err(Error::Format {
            line: 1,
            message: "expected header `frequency_hz,<name1>,...`".into(),
        });
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut seen = BTreeSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(Error::Format {
                line: 1,
                message: format!("duplicate material column {n:?}"),
            });
        }
    }
    let mut freqs = Vec::new();
    let mut values = vec![Vec::new(); names.len()];
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Format {
            line,
            message: e.to_string(),
        })?;
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Format {
                line,
                message: format!("not a number: {s:?}"),
            })
        };
        freqs.push(parse(&rec[0])?);
        for (j, col) in values.iter_mut().enumerate() {
            col.push(parse(&rec[j + 1])?);
        }
    }
    let grid = SpectralGrid::new(freqs)?;
    SpectrumLibrary::new(grid, SpectrumKind::Transmittance, names, values)
}

pub const MATERIAL_NAMES: [&str; 20] = [
    "alumina",
    "aspirin",
    "baking powder",
    "baking soda",
    "chalk",
    "caffeine",
    "cellulose",
    "citric acid",
    "flour",
    "glucose",
    "ibuprofen",
    "lactose",
    "paracetamol",
    "polyethylene",
    "polystyrene",
    "ptfe",
    "salt",
    "starch",
    "sucrose",
    "talc",
];

/// Seeded stand-in for a measured materials table.
///
/// Each material is a slab with a constant refractive index, a power-law
/// extinction background and a few Lorentzian absorption bands; the stored
/// value is the transmittance magnitude of that slab.
pub fn synthetic_materials(
    classes: usize,
    points: usize,
    band: (f64, f64),
    seed: u64,
) -> Result<SpectrumLibrary> {
    if classes == 0 || classes > MATERIAL_NAMES.len() {
        return Err(Error::domain(format!("between 1 and {} materials", MATERIAL_NAMES.len())));
    }
    let grid = SpectralGrid::linspace(band.0, band.1, points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(classes);
    for _ in 0..classes {
        let n = rng.random_range(1.4..3.2);
        let thickness = rng.random_range(0.5e-3..2.0e-3);
        let chi0 = rng.random_range(0.002..0.02);
        let exponent = rng.random_range(0.3..1.5);
        let bands: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=4))
            .map(|_| {
                let centre = rng.random_range(band.0..band.1);
                let width = rng.random_range(0.01..0.04) * (band.1 - band.0);
                let strength = rng.random_range(0.005..0.03);
                (centre, width, strength)
            })
            .collect();
        let spectrum: Vec<f64> = grid
            .frequencies()
            .iter()
            .map(|&f| {
                let mut chi = chi0 * (f / 1e12).powf(exponent);
                for &(c, w, a) in &bands {
                    chi += a * w * w / ((f - c).powi(2) + w * w);
                }
                transmission_forward(n, chi, thickness, f).map(|t| t.norm())
            })
            .collect::<Result<_>>()?;
        values.push(spectrum);
    }
    let names = MATERIAL_NAMES[..classes].iter().map(|s| s.to_string()).collect();
    SpectrumLibrary::new(grid, SpectrumKind::Transmittance, names, values)
}
