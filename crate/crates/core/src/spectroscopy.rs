//! Reflection and transmission models linking measured spectra to the complex
//! refractive index ñ = n + jχ of a sample, and their inverses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::physics::PhysicalConstants;

/// Denominators below this make the reflection inversion singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Real refractive index and extinction coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalConstants {
    pub refractive_index: f64,
    pub extinction: f64,
}

impl OpticalConstants {
    pub fn new(refractive_index: f64, extinction: f64) -> Result<Self> {
        if !(refractive_index > 0.0) || !(extinction >= 0.0) {
            return Err(Error::domain(format!(
                "optical constants need n > 0 and χ ≥ 0, got ({refractive_index}, {extinction})"
            )));
        }
        Ok(Self {
            refractive_index,
            extinction,
        })
    }

    pub fn complex_index(&self) -> Complex64 {
        Complex64::new(self.refractive_index, self.extinction)
    }

    /// K = 4π f χ / c in 1/m.
    pub fn absorption_coefficient(&self, f: f64) -> f64 {
        absorption_from_extinction(f, self.extinction)
    }
}

/// K = 4π f χ / c.
pub fn absorption_from_extinction(f: f64, extinction: f64) -> f64 {
    4.0 * PI * f * extinction / PhysicalConstants::default().c()
}

/// A reflection measurement at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionMeasurement {
    pub reflectance: f64,
    pub phase: f64,
    pub incidence_angle: f64,
}

impl ReflectionMeasurement {
    /// r̃ = √R · e^{jφ}
    pub fn complex_reflectivity(&self) -> Complex64 {
        Complex64::from_polar(self.reflectance.sqrt(), self.phase)
    }

    pub fn invert(&self) -> Result<OpticalConstants> {
        invert_reflection(self.reflectance, self.phase)
    }
}

/// A transmission measurement at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMeasurement {
    pub magnitude: f64,
    pub phase: f64,
    /// m
    pub thickness: f64,
    /// Hz
    pub frequency: f64,
}

impl TransmissionMeasurement {
    pub fn invert(&self) -> Result<TransmissionInversion> {
        invert_transmission(self.magnitude, self.phase, self.thickness, self.frequency)
    }
}

/// s- and p-polarized reflectivities at oblique incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObliqueReflection {
    pub r_s: Complex64,
    pub r_p: Complex64,
    /// Refraction angle from Snell's law; complex past the critical angle or
    /// for absorbing media.
    pub theta_r: Complex64,
}

/// Fresnel reflectivities for a wave in a medium of index `n_incident`
/// meeting a medium of index `n_receiving` at angle `theta_i`.
pub fn fresnel_oblique(n_incident: Complex64, n_receiving: f64, theta_i: f64) -> Result<ObliqueReflection> {
    if !(0.0..PI / 2.0).contains(&theta_i) {
        return Err(Error::domain(format!("incidence angle {theta_i} outside [0, π/2)")));
    }
    if !(n_receiving > 0.0) {
        return Err(Error::domain("receiving index must be positive"));
    }
    let (sin_i, cos_i) = theta_i.sin_cos();
    let sin_r = n_incident * sin_i / n_receiving;
    let cos_r = (Complex64::new(1.0, 0.0) - sin_r * sin_r).sqrt();
    let theta_r = sin_r.asin();
    let nr = Complex64::new(n_receiving, 0.0);
    let r_s = (n_incident * cos_i - nr * cos_r) / (nr * cos_r + n_incident * cos_i);
    let r_p = (n_incident * cos_r - nr * cos_i) / (nr * cos_i + n_incident * cos_r);
    Ok(ObliqueReflection { r_s, r_p, theta_r })
}

/// Normal-incidence reflection from air onto a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalReflection {
    pub reflectivity: Complex64,
    /// r = |r̃| = √R
    pub coefficient: f64,
    pub reflectance: f64,
    pub phase: f64,
}

/// r̃ = ((n − 1) + jχ) / ((n + 1) + jχ)
pub fn fresnel_normal(n: f64, extinction: f64) -> Result<NormalReflection> {
    OpticalConstants::new(n, extinction)?;
    let r = Complex64::new(n - 1.0, extinction) / Complex64::new(n + 1.0, extinction);
    Ok(NormalReflection {
        reflectivity: r,
        coefficient: r.norm(),
        reflectance: r.norm_sqr(),
        phase: r.arg(),
    })
}

/// Recovers (n, χ) from normal-incidence reflectance and phase.
pub fn invert_reflection(reflectance: f64, phase: f64) -> Result<OpticalConstants> {
    if !(0.0..1.0).contains(&reflectance) {
        return Err(Error::domain(format!("reflectance {reflectance} outside [0, 1)")));
    }
    let r = reflectance.sqrt();
    let denom = 1.0 + reflectance - 2.0 * r * phase.cos();
    if denom < SINGULAR_TOLERANCE {
        return Err(Error::Singular(format!(
            "reflection denominator {denom:e} (R = {reflectance}, φ = {phase})"
        )));
    }
    let n = (1.0 - reflectance) / denom;
    let mut extinction = 2.0 * r * phase.sin() / denom;
    if extinction < 0.0 {
        if extinction < -SINGULAR_TOLERANCE {
            return Err(Error::Inconsistent(format!(
                "phase {phase} implies a negative extinction coefficient"
            )));
        }
        extinction = 0.0;
    }
    OpticalConstants::new(n, extinction)
}

/// T = 4n/(1+n)² · exp(j 2π f (ñ − 1) d / c)
pub fn transmission_forward(n: f64, extinction: f64, thickness: f64, f: f64) -> Result<Complex64> {
    let oc = OpticalConstants::new(n, extinction)?;
    if !(thickness > 0.0 && f > 0.0) {
        return Err(Error::domain("thickness and frequency must be positive"));
    }
    let c = PhysicalConstants::default().c();
    let fresnel = 4.0 * n / ((1.0 + n) * (1.0 + n));
    let exponent = Complex64::new(0.0, 2.0 * PI * f * thickness / c) * (oc.complex_index() - 1.0);
    Ok(fresnel * exponent.exp())
}

/// Result of a transmission inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionInversion {
    pub constants: OpticalConstants,
    /// K = (2/d)·ln(4n / (|T|(1+n)²)) in 1/m.
    pub absorption_coefficient: f64,
    /// Set when |T| exceeded the lossless Fresnel factor and χ was clamped to 0.
    pub clamped: bool,
}

/// Recovers (n, χ, K) from |T|, the unwrapped phase, thickness and frequency.
pub fn invert_transmission(magnitude: f64, phase: f64, thickness: f64, f: f64) -> Result<TransmissionInversion> {
    if !(magnitude > 0.0 && thickness > 0.0 && f > 0.0) {
        return Err(Error::domain("|T|, thickness and frequency must be positive"));
    }
    let c = PhysicalConstants::default().c();
    let scale = c / (2.0 * PI * thickness * f);
    let n = scale * phase + 1.0;
    if !(n > 0.0) {
        return Err(Error::Inconsistent(format!(
            "phase {phase} gives refractive index {n} ≤ 0"
        )));
    }
    let log_ratio = (4.0 * n / (magnitude * (1.0 + n) * (1.0 + n))).ln();
    let (extinction, absorption, clamped) = if log_ratio < 0.0 {
        log::warn!(
            "|T| = {magnitude} exceeds the lossless Fresnel factor at n = {n}; clamping χ to 0"
        );
        (0.0, 0.0, true)
    } else {
        (scale * log_ratio, 2.0 / thickness * log_ratio, false)
    };
    Ok(TransmissionInversion {
        constants: OpticalConstants::new(n, extinction)?,
        absorption_coefficient: absorption,
        clamped,
    })
}

/// Removes 2π jumps by continuing each phase to the nearest multiple of 2π
/// of its predecessor.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            let jump = p + offset - q;
            offset -= (jump / (2.0 * PI)).round() * 2.0 * PI;
        }
        let v = p + offset;
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Inverts a transmission spectrum given wrapped phases on ascending frequencies.
pub fn invert_transmission_spectrum(
    frequencies: &[f64],
    magnitudes: &[f64],
    wrapped_phases: &[f64],
    thickness: f64,
) -> Result<Vec<TransmissionInversion>> {
    if magnitudes.len() != frequencies.len() || wrapped_phases.len() != frequencies.len() {
        return Err(Error::Dimension {
            expected: frequencies.len(),
            found: magnitudes.len().min(wrapped_phases.len()),
        });
    }
    let phases = unwrap_phase(wrapped_phases);
    frequencies
        .iter()
        .zip(magnitudes)
        .zip(&phases)
        .map(|((&f, &m), &p)| invert_transmission(m, p, thickness, f))
        .collect()
}
