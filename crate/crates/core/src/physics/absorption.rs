//! Line-by-line molecular absorption and free-space path gain.
//!
//! Unit chain: frequencies and half widths in Hz, pressure in Pa, temperature
//! in K, cross sections in m². Line intensities stay in HITRAN units and are
//! converted once, to an integrated cross section in m²·Hz per molecule, when
//! the cross section is formed. With that chain the Van Vleck-Weisskopf shape is
//! normalized per Hz; the per-wavenumber form (`vvw_lineshape_per_wavenumber`)
//! is the same shape scaled by 100·c, which is where the familiar factor 100
//! comes from when c is in m/s and the shape is expressed per cm⁻¹.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{LineRecord, MediumState, PhysicalConstants, SpectralGrid, Spectrum, SpectrumKind};
use crate::error::{Error, Result};

/// Tunables of the line-by-line sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionOptions {
    /// Lines contribute only within `cutoff · w_L · max(1, p/p0)` of their
    /// resonance. `None` disables truncation.
    pub wing_cutoff_halfwidths: Option<f64>,
}

impl Default for AbsorptionOptions {
    fn default() -> Self {
        Self {
            wing_cutoff_halfwidths: Some(25.0),
        }
    }
}

/// Lorentz half width in Hz for mixing ratio `q` at pressure `p` and temperature `t`.
pub fn lorentz_halfwidth(
    line: &LineRecord,
    q: f64,
    p: f64,
    t: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if !(p > 0.0 && t > 0.0) {
        return Err(Error::domain("pressure and temperature must be positive"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("mixing ratio {q} outside [0, 1]")));
    }
    let blend = (1.0 - q) * line.air_broadening + q * line.self_broadening;
    Ok(blend * consts.p0() * (p / consts.p0()) * (consts.t0() / t).powf(line.temperature_exponent))
}

/// Van Vleck-Weisskopf line shape in 1/Hz.
pub fn vvw_lineshape(f: f64, f_c: f64, w_l: f64) -> f64 {
    let w2 = w_l * w_l;
    let lo = f - f_c;
    let hi = f + f_c;
    (w_l * f) / (PI * f_c) * (1.0 / (lo * lo + w2) + 1.0 / (hi * hi + w2))
}

/// The same shape normalized per cm⁻¹ (the literal form with the factors of 100).
pub fn vvw_lineshape_per_wavenumber(f: f64, f_c: f64, w_l: f64, consts: &PhysicalConstants) -> f64 {
    consts.hz_per_wavenumber() * vvw_lineshape(f, f_c, w_l)
}

/// Integrated cross section of `line` in m²·Hz per molecule.
pub fn integrated_cross_section(line: &LineRecord, consts: &PhysicalConstants) -> f64 {
    // cm⁻¹/(molecule·cm⁻²) → m²·cm⁻¹ → m²·Hz
    line.strength * 1e-4 * consts.hz_per_wavenumber()
}

fn thermal_factor(f: f64, t: f64, consts: &PhysicalConstants) -> f64 {
    (consts.planck() * f / (2.0 * consts.boltzmann() * t)).tanh()
}

/// Absorption cross section in m² at `f`, for resonance `f_c` and half width `w_l`.
pub fn absorption_cross_section(
    f: f64,
    line: &LineRecord,
    f_c: f64,
    w_l: f64,
    t: f64,
    consts: &PhysicalConstants,
) -> f64 {
    vvw_lineshape(f, f_c, w_l)
        * integrated_cross_section(line, consts)
        * (f / f_c)
        * thermal_factor(f, t, consts)
        / thermal_factor(f_c, t, consts)
}

/// Molecules per m³ of a constituent with mixing ratio `q`, including the
/// pressure and temperature scaling of the radiative transfer model.
pub fn number_density(q: f64, p: f64, t: f64, consts: &PhysicalConstants) -> f64 {
    (p / consts.p0()) * (consts.t_stp() / t) * (p / (consts.gas_constant() * t)) * q * consts.avogadro()
}

#[derive(Debug, Clone)]
struct PreparedLine {
    f_c: f64,
    w_l: f64,
    /// number density × integrated cross section / tanh(f_c)
    amplitude: f64,
    reach: f64,
}

/// A medium with per-line resonances, half widths and amplitudes precomputed,
/// for evaluating K(f) at many frequencies.
#[derive(Debug, Clone)]
pub struct PreparedMedium {
    species: Vec<Vec<PreparedLine>>,
    /// widest `reach` per species, for the binary-search window
    max_reach: Vec<f64>,
    temperature: f64,
    path_length: f64,
    consts: PhysicalConstants,
}

impl PreparedMedium {
    pub fn new(medium: &MediumState, consts: &PhysicalConstants, opts: &AbsorptionOptions) -> Result<Self> {
        medium.validate()?;
        if medium.species.is_empty() {
            return Err(Error::domain("medium has no species"));
        }
        let (p, t) = (medium.pressure, medium.temperature);
        let pressure_scale = (p / consts.p0()).max(1.0);
        let mut species = Vec::with_capacity(medium.species.len());
        let mut max_reach = Vec::with_capacity(medium.species.len());
        for gas in &medium.species {
            let mut lines = Vec::with_capacity(gas.lines.len());
            for line in &gas.lines {
                let q = gas.ratio_for(line.isotopologue_id);
                if q == 0.0 || line.strength == 0.0 {
                    continue;
                }
                let f_c = line.shifted_resonance(p);
                if !(f_c > 0.0) {
                    return Err(Error::domain("pressure shift moves a resonance below zero"));
                }
                let w_l = lorentz_halfwidth(line, q, p, t, consts)?;
                let amplitude = number_density(q, p, t, consts) * integrated_cross_section(line, consts)
                    / thermal_factor(f_c, t, consts);
                let reach = opts
                    .wing_cutoff_halfwidths
                    .map_or(f64::INFINITY, |k| k * w_l * pressure_scale);
                lines.push(PreparedLine {
                    f_c,
                    w_l,
                    amplitude,
                    reach,
                });
            }
            lines.sort_by(|a, b| a.f_c.total_cmp(&b.f_c));
            max_reach.push(lines.iter().map(|l| l.reach).fold(0.0, f64::max));
            species.push(lines);
        }
        Ok(Self {
            species,
            max_reach,
            temperature: medium.temperature,
            path_length: medium.path_length,
            consts: *consts,
        })
    }

    /// K(f) in 1/m.
    pub fn absorption(&self, f: f64) -> f64 {
        let tf = thermal_factor(f, self.temperature, &self.consts);
        let mut total = 0.0;
        for (lines, &reach) in self.species.iter().zip(&self.max_reach) {
            let start = if reach.is_finite() {
                lines.partition_point(|l| l.f_c < f - reach)
            } else {
                0
            };
            let mut sum = 0.0;
            for l in &lines[start..] {
                if l.f_c > f + reach {
                    break;
                }
                if (f - l.f_c).abs() > l.reach {
                    continue;
                }
                sum += l.amplitude * vvw_lineshape(f, l.f_c, l.w_l) * (f / l.f_c) * tf;
            }
            total += sum;
        }
        total
    }

    /// Complex path gain at `f` over the medium's path length.
    pub fn path_gain(&self, f: f64) -> Complex64 {
        path_gain_from_absorption(f, self.path_length, self.absorption(f), &self.consts)
    }
}

/// α = c/(4π f D) · exp(−K D / 2) · exp(−j 2π f D / c)
pub fn path_gain_from_absorption(f: f64, d: f64, k: f64, consts: &PhysicalConstants) -> Complex64 {
    let c = consts.c();
    let magnitude = c / (4.0 * PI * f * d) * (-0.5 * k * d).exp();
    Complex64::from_polar(magnitude, -2.0 * PI * f * d / c)
}

/// Molecular absorption coefficient K(f) in 1/m, default options.
pub fn molecular_absorption(f: f64, medium: &MediumState, consts: &PhysicalConstants) -> Result<f64> {
    molecular_absorption_with(f, medium, consts, &AbsorptionOptions::default())
}

pub fn molecular_absorption_with(
    f: f64,
    medium: &MediumState,
    consts: &PhysicalConstants,
    opts: &AbsorptionOptions,
) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::domain("frequency must be positive"));
    }
    Ok(PreparedMedium::new(medium, consts, opts)?.absorption(f))
}

/// Complex path gain (dimensionless) at `f` through `medium`.
pub fn path_gain(f: f64, medium: &MediumState, consts: &PhysicalConstants) -> Result<Complex64> {
    if !(f > 0.0) {
        return Err(Error::domain("frequency must be positive"));
    }
    let k = if medium.species.is_empty() {
        0.0
    } else {
        molecular_absorption(f, medium, consts)?
    };
    Ok(path_gain_from_absorption(f, medium.path_length, k, consts))
}

/// Absorption coefficient spectrum on `grid`.
pub fn absorption_spectrum(grid: &SpectralGrid, medium: &MediumState, consts: &PhysicalConstants) -> Result<Spectrum> {
    absorption_spectrum_with(grid, medium, consts, &AbsorptionOptions::default())
}

pub fn absorption_spectrum_with(
    grid: &SpectralGrid,
    medium: &MediumState,
    consts: &PhysicalConstants,
    opts: &AbsorptionOptions,
) -> Result<Spectrum> {
    let prepared = PreparedMedium::new(medium, consts, opts)?;
    let values: Vec<f64> = grid
        .frequencies()
        .par_iter()
        .map(|&f| prepared.absorption(f))
        .collect();
    Spectrum::new(grid.clone(), values, SpectrumKind::AbsorptionCoefficient)
}

/// Transmittance exp(−K D) of the medium on `grid`.
pub fn transmittance_spectrum(grid: &SpectralGrid, medium: &MediumState, consts: &PhysicalConstants) -> Result<Spectrum> {
    let k = absorption_spectrum(grid, medium, consts)?;
    let values = k.values.iter().map(|k| (-k * medium.path_length).exp()).collect();
    Spectrum::new(grid.clone(), values, SpectrumKind::Transmittance)
}

/// |α| of the medium on `grid`.
pub fn path_gain_spectrum(grid: &SpectralGrid, medium: &MediumState, consts: &PhysicalConstants) -> Result<Spectrum> {
    let k = if medium.species.is_empty() {
        vec![0.0; grid.len()]
    } else {
        absorption_spectrum(grid, medium, consts)?.values
    };
    let values = grid
        .frequencies()
        .iter()
        .zip(&k)
        .map(|(&f, &k)| path_gain_from_absorption(f, medium.path_length, k, consts).norm())
        .collect();
    Spectrum::new(grid.clone(), values, SpectrumKind::PathGainMagnitude)
}
