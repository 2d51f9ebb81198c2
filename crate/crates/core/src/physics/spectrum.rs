use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing, positive frequency axis in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpectralGrid(Vec<f64>);

impl SpectralGrid {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::domain("spectral grid is empty"));
        }
        if frequencies.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::domain("grid frequencies must be finite and positive"));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("grid frequencies must be strictly increasing"));
        }
        Ok(Self(frequencies))
    }

    /// `points` equally spaced frequencies from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Self> {
        if points == 1 {
            return Self::new(vec![start]);
        }
        if points == 0 || !(stop > start) {
            return Err(Error::domain("linspace needs stop > start and at least one point"));
        }
        let step = (stop - start) / (points - 1) as f64;
        let mut f: Vec<f64> = (0..points).map(|i| start + step * i as f64).collect();
        f[points - 1] = stop;
        Self::new(f)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the grid point closest to `f`.
    pub fn nearest(&self, f: f64) -> usize {
        match self.0.binary_search_by(|x| x.total_cmp(&f)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.0.len() => i - 1,
            Err(i) => {
                if (self.0[i] - f) < (f - self.0[i - 1]) {
                    i
                } else {
                    i - 1
                }
            }
        }
    }
}

impl TryFrom<Vec<f64>> for SpectralGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpectralGrid> for Vec<f64> {
    fn from(g: SpectralGrid) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Transmittance,
    /// 1/m
    AbsorptionCoefficient,
    PathGainMagnitude,
}

/// Values sampled on a shared frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: SpectralGrid,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
}

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Spectrum {
    pub fn new(grid: SpectralGrid, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values, kind })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `frequency_hz,value` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "frequency_hz,value")?;
        for (f, v) in self.grid.frequencies().iter().zip(&self.values) {
            writeln!(out, "{},{}", format_f64(*f), format_f64(*v))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, kind: SpectrumKind) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "frequency_hz" {
            return Err(Error::Format {
                line: 1,
                message: "expected header `frequency_hz,value`".into(),
            });
        }
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Format {
                    line: i + 2,
                    message: format!("not a number: {s:?}"),
                })
            };
            freqs.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        Spectrum::new(SpectralGrid::new(freqs)?, values, kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_non_monotone() {
        assert!(SpectralGrid::new(vec![1.0, 1.0]).is_err());
        assert!(SpectralGrid::new(vec![2.0, 1.0]).is_err());
        assert!(SpectralGrid::new(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn nearest_index() {
        let g = SpectralGrid::linspace(1.0, 5.0, 5).unwrap();
        assert_eq!(g.nearest(0.1), 0);
        assert_eq!(g.nearest(2.4), 1);
        assert_eq!(g.nearest(2.6), 2);
        assert_eq!(g.nearest(9.0), 4);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let g = SpectralGrid::linspace(1e11, 1e12, 7).unwrap();
        let s = Spectrum::new(
            g,
            vec![0.1, 1.0 / 3.0, 2.5e-7, 0.0, 1e-300, 0.9999, 7.0],
            SpectrumKind::Transmittance,
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frequency_hz,value\n"));
        let back = Spectrum::read_csv(&buf[..], SpectrumKind::Transmittance).unwrap();
        assert_eq!(back, s);
    }
}
