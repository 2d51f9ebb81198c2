use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LineRecord;
use crate::error::{Error, Result};

/// One gas of a mixture together with its line list.
///
/// HITRAN intensities are already weighted by natural isotopic abundance, so
/// every isotopologue of the species defaults to the species mixing ratio.
/// `isotopologue_ratios` overrides that per isotopologue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasSpecies {
    pub name: String,
    pub mixing_ratio: f64,
    #[serde(default)]
    pub isotopologue_ratios: BTreeMap<u8, f64>,
    pub lines: Vec<LineRecord>,
}

impl GasSpecies {
    pub fn new(name: impl Into<String>, mixing_ratio: f64, lines: Vec<LineRecord>) -> Self {
        Self {
            name: name.into(),
            mixing_ratio,
            isotopologue_ratios: BTreeMap::new(),
            lines,
        }
    }

    /// Mixing ratio q used for lines of the given isotopologue.
    pub fn ratio_for(&self, isotopologue_id: u8) -> f64 {
        self.isotopologue_ratios
            .get(&isotopologue_id)
            .copied()
            .unwrap_or(self.mixing_ratio)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |q: f64| (0.0..=1.0).contains(&q);
        if !in_unit(self.mixing_ratio) {
            return Err(Error::domain(format!(
                "{}: mixing ratio {} outside [0, 1]",
                self.name, self.mixing_ratio
            )));
        }
        if let Some((iso, q)) = self.isotopologue_ratios.iter().find(|(_, q)| !in_unit(**q)) {
            return Err(Error::domain(format!(
                "{}: isotopologue {iso} mixing ratio {q} outside [0, 1]",
                self.name
            )));
        }
        for line in &self.lines {
            line.validate()?;
        }
        Ok(())
    }
}

/// A propagation medium: gas mixture plus pressure, temperature and path length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumState {
    pub species: Vec<GasSpecies>,
    /// Pa
    pub pressure: f64,
    /// K
    pub temperature: f64,
    /// m
    pub path_length: f64,
}

impl MediumState {
    pub fn new(species: Vec<GasSpecies>, pressure: f64, temperature: f64, path_length: f64) -> Result<Self> {
        let medium = Self {
            species,
            pressure,
            temperature,
            path_length,
        };
        medium.validate()?;
        Ok(medium)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pressure > 0.0 && self.temperature > 0.0 && self.path_length > 0.0) {
            return Err(Error::domain(
                "pressure, temperature and path length must be positive",
            ));
        }
        for s in &self.species {
            s.validate()?;
        }
        let total: f64 = self.species.iter().map(|s| s.mixing_ratio).sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::domain(format!("species mixing ratios sum to {total} > 1")));
        }
        Ok(())
    }

    /// Same mixture at a different path length.
    pub fn with_path_length(&self, path_length: f64) -> Self {
        Self {
            path_length,
            ..self.clone()
        }
    }
}
