//! A small embedded line table for the default air profiles.
//!
//! The values are rounded approximations of the strongest sub-THz lines of
//! H2O, O2 and CH4, written in `.par` layout. They are good enough for
//! demonstrations and regression tests; quantitative work should load a real
//! HITRAN extract instead. N2 and CO2 have no permanent electric dipole and
//! carry no lines in this band.

use std::collections::BTreeMap;

use super::{parse_hitran, LineRecord, PhysicalConstants};
use crate::error::Result;

const EMBEDDED_PAR: &str = include_str!("../../data/thz_lines.par");

/// HITRAN molecule numbers for the species this crate names.
pub fn molecule_name(id: u16) -> Option<&'static str> {
    Some(match id {
        1 => "H2O",
        2 => "CO2",
        3 => "O3",
        4 => "N2O",
        5 => "CO",
        6 => "CH4",
        7 => "O2",
        22 => "N2",
        _ => return None,
    })
}

/// Lines grouped by species name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineDatabase {
    species: BTreeMap<String, Vec<LineRecord>>,
}

impl LineDatabase {
    pub fn from_records(records: Vec<LineRecord>) -> Self {
        let mut species: BTreeMap<String, Vec<LineRecord>> = BTreeMap::new();
        for r in records {
            let name = molecule_name(r.molecule_id)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("M{}", r.molecule_id));
            species.entry(name).or_default().push(r);
        }
        Self { species }
    }

    pub fn from_par(text: &str, consts: &PhysicalConstants) -> Result<Self> {
        Ok(Self::from_records(parse_hitran(text, consts)?))
    }

    /// The embedded approximate table.
    pub fn builtin(consts: &PhysicalConstants) -> Self {
        Self::from_par(EMBEDDED_PAR, consts).expect("embedded line table parses")
    }

    /// Lines of `name`; species without lines yield an empty slice.
    pub fn lines(&self, name: &str) -> &[LineRecord] {
        self.species.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn species_names(&self) -> impl Iterator<Item = &str> {
        self.species.keys().map(String::as_str)
    }

    pub fn insert(&mut self, name: impl Into<String>, lines: Vec<LineRecord>) {
        self.species.insert(name.into(), lines);
    }
}
