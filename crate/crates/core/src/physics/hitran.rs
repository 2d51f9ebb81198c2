//! Reader and writer for the 160-character HITRAN 2004 `.par` record layout.
//!
//! Column spans (1-indexed, inclusive):
//!
//! | field                | columns | stored as                      |
//! |----------------------|---------|--------------------------------|
//! | molecule id          | 1–2     | `molecule_id`                  |
//! | isotopologue id      | 3       | `isotopologue_id`              |
//! | vacuum wavenumber    | 4–15    | Hz                             |
//! | intensity            | 16–25   | cm⁻¹/(molecule·cm⁻²), native   |
//! | Einstein A           | 26–35   | ignored                        |
//! | air broadening       | 36–40   | Hz/Pa (from cm⁻¹/atm)          |
//! | self broadening      | 41–45   | Hz/Pa (from cm⁻¹/atm)          |
//! | lower-state energy   | 46–55   | ignored                        |
//! | T-exponent of γ_air  | 56–59   | dimensionless                  |
//! | air pressure shift   | 60–67   | Hz/Pa (from cm⁻¹/atm)          |

use serde::{Deserialize, Serialize};

use super::PhysicalConstants;
use crate::error::{Error, Result};

/// Minimum record length that still carries every field we decode.
pub const MIN_RECORD_LEN: usize = 67;
pub const RECORD_LEN: usize = 160;

/// Standard atmosphere in Pa, the pressure unit of HITRAN broadening fields.
const ATM_PA: f64 = 101_325.0;

/// One spectral line of one isotopologue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub molecule_id: u16,
    pub isotopologue_id: u8,
    /// Zero-pressure resonance, Hz.
    pub resonance: f64,
    /// Line intensity at the database reference temperature, cm⁻¹/(molecule·cm⁻²).
    pub strength: f64,
    /// Air-broadened half width, Hz/Pa.
    pub air_broadening: f64,
    /// Self-broadened half width, Hz/Pa.
    pub self_broadening: f64,
    /// Temperature exponent of the half width.
    pub temperature_exponent: f64,
    /// Air pressure shift of the resonance, Hz/Pa.
    pub pressure_shift: f64,
}

impl LineRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.resonance > 0.0) {
            return Err(Error::domain("line resonance must be positive"));
        }
        if !(self.strength >= 0.0) {
            return Err(Error::domain("line strength must be non-negative"));
        }
        if !(self.air_broadening > 0.0 && self.self_broadening > 0.0) {
            return Err(Error::domain("broadening coefficients must be positive"));
        }
        Ok(())
    }

    /// Resonance shifted by pressure `p` (Pa): `f_c0 + δ·p0·(p/p0)`.
    pub fn shifted_resonance(&self, p: f64) -> f64 {
        self.resonance + self.pressure_shift * p
    }
}

fn field<'a>(line: &'a str, lineno: usize, from: usize, to: usize, name: &str) -> Result<&'a str> {
    line.get(from - 1..to).ok_or_else(|| Error::Format {
        line: lineno,
        message: format!("field `{name}` (columns {from}-{to}) is not valid text"),
    })
}

fn number<T: std::str::FromStr>(
    line: &str,
    lineno: usize,
    from: usize,
    to: usize,
    name: &str,
) -> Result<T> {
    let raw = field(line, lineno, from, to, name)?;
    raw.trim().parse::<T>().map_err(|_| Error::Format {
        line: lineno,
        message: format!("cannot parse field `{name}` from {raw:?}"),
    })
}

/// Parses newline-separated `.par` records. Blank lines are skipped.
pub fn parse_hitran(text: &str, consts: &PhysicalConstants) -> Result<Vec<LineRecord>> {
    let to_hz = consts.hz_per_wavenumber();
    let per_pa = to_hz / ATM_PA;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if line.len() < MIN_RECORD_LEN {
            return Err(Error::Format {
                line: lineno,
                message: format!(
                    "record has {} characters, need at least {MIN_RECORD_LEN}",
                    line.len()
                ),
            });
        }
        let molecule_id: u16 = number(line, lineno, 1, 2, "molecule")?;
        let isotopologue_id: u8 = number(line, lineno, 3, 3, "isotopologue")?;
        let wavenumber: f64 = number(line, lineno, 4, 15, "wavenumber")?;
        let strength: f64 = number(line, lineno, 16, 25, "intensity")?;
        let gamma_air: f64 = number(line, lineno, 36, 40, "gamma_air")?;
        let gamma_self: f64 = number(line, lineno, 41, 45, "gamma_self")?;
        let n_air: f64 = number(line, lineno, 56, 59, "n_air")?;
        let delta_air: f64 = number(line, lineno, 60, 67, "delta_air")?;
        out.push(LineRecord {
            molecule_id,
            isotopologue_id,
            resonance: wavenumber * to_hz,
            strength,
            air_broadening: gamma_air * per_pa,
            self_broadening: gamma_self * per_pa,
            temperature_exponent: n_air,
            pressure_shift: delta_air * per_pa,
        });
    }
    Ok(out)
}

/// Fixed-point Fortran style: drops the leading zero when the value would
/// otherwise overflow the column (`0.0960` in a 5-wide field becomes `.0960`).
fn fixed(value: f64, width: usize, decimals: usize) -> String {
    let mut s = format!("{value:>width$.decimals$}");
    if s.len() > width {
        s = s.replacen("0.", ".", 1);
    }
    if s.len() > width {
        // value does not fit the column at this precision; keep the width
        s.truncate(width);
    }
    format!("{s:>width$}")
}

/// Formats a record back into the 160-character layout. Ignored fields are
/// written as zeros and the tail is space-padded.
pub fn format_hitran_record(line: &LineRecord, consts: &PhysicalConstants) -> String {
    let to_hz = consts.hz_per_wavenumber();
    let per_pa = to_hz / ATM_PA;
    let mut rec = String::with_capacity(RECORD_LEN);
    rec.push_str(&format!("{:>2}", line.molecule_id % 100));
    rec.push_str(&format!("{:>1}", line.isotopologue_id % 10));
    rec.push_str(&fixed(line.resonance / to_hz, 12, 6));
    rec.push_str(&format!("{:>10.3E}", line.strength));
    rec.push_str(&format!("{:>10.3E}", 0.0));
    rec.push_str(&fixed(line.air_broadening / per_pa, 5, 4));
    rec.push_str(&fixed(line.self_broadening / per_pa, 5, 3));
    rec.push_str(&fixed(0.0, 10, 4));
    rec.push_str(&fixed(line.temperature_exponent, 4, 2));
    rec.push_str(&fixed(line.pressure_shift / per_pa, 8, 6));
    format!("{rec:<RECORD_LEN$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    // Builds a record column by column, independent of `format_hitran_record`.
    #[allow(clippy::too_many_arguments)]
    fn compose(mol: &str, iso: &str, nu: &str, s: &str, ga: &str, gs: &str, n: &str, d: &str) -> String {
        let rec = format!(
            "{mol:>2}{iso:>1}{nu:>12}{s:>10}{:>10}{ga:>5}{gs:>5}{:>10}{n:>4}{d:>8}",
            "0.000E+00", "0.0000"
        );
        format!("{rec:<160}")
    }

    #[test]
    fn decodes_composed_record() {
        let rec = compose("1", "1", "33.004017", "4.123E-20", ".0950", "0.471", "0.77", "-.001200");
        assert_eq!(rec.len(), 160);
        let lines = parse_hitran(&rec, &consts()).unwrap();
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        let c = consts().c();
        assert_eq!(l.molecule_id, 1);
        assert_eq!(l.isotopologue_id, 1);
        assert_eq!(l.resonance, 33.004017 * (100.0 * c));
        assert_eq!(l.strength, 4.123e-20);
        assert!((l.air_broadening - 0.095 * 100.0 * c / 101_325.0).abs() < 1e-9);
        assert!((l.self_broadening - 0.471 * 100.0 * c / 101_325.0).abs() < 1e-9);
        assert_eq!(l.temperature_exponent, 0.77);
        assert!((l.pressure_shift + 0.0012 * 100.0 * c / 101_325.0).abs() < 1e-9);
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse_hitran("", &consts()).unwrap().is_empty());
        assert!(parse_hitran("\n\n", &consts()).unwrap().is_empty());
    }

    #[test]
    fn short_line_reports_line_number() {
        match parse_hitran("0123456789", &consts()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        let good = compose("1", "1", "33.004017", "4.123E-20", ".0950", "0.471", "0.77", "-.001200");
        let text = format!("{good}\n{good}\nshort");
        match parse_hitran(&text, &consts()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_numeric_field_is_named() {
        let rec = compose("1", "1", "33.0x4017", "4.123E-20", ".0950", "0.471", "0.77", "-.001200");
        let err = parse_hitran(&rec, &consts()).unwrap_err();
        assert!(err.to_string().contains("wavenumber"), "{err}");
    }

    #[test]
    fn formatted_record_has_fixed_width() {
        let rec = compose("7", "1", "3.961085", "4.000E-24", ".0560", "0.060", "0.72", "0.000000");
        let parsed = parse_hitran(&rec, &consts()).unwrap();
        let back = format_hitran_record(&parsed[0], &consts());
        assert_eq!(back.len(), RECORD_LEN);
        assert_eq!(&back[..15], &rec[..15]);
    }
}
