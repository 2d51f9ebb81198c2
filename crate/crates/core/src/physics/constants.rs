use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants used by the line-by-line absorption model.
///
/// Defaults are the CODATA 2018 exact values; the reference temperature is the
/// HITRAN 296 K line-parameter reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    speed_of_light: f64,
    planck: f64,
    boltzmann: f64,
    gas_constant: f64,
    avogadro: f64,
    reference_pressure: f64,
    reference_temperature: f64,
    stp_temperature: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            speed_of_light: 299_792_458.0,
            planck: 6.626_070_15e-34,
            boltzmann: 1.380_649e-23,
            gas_constant: 8.314_462_618,
            avogadro: 6.022_140_76e23,
            reference_pressure: 101_325.0,
            reference_temperature: 296.0,
            stp_temperature: 273.15,
        }
    }
}

impl PhysicalConstants {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        speed_of_light: f64,
        planck: f64,
        boltzmann: f64,
        gas_constant: f64,
        avogadro: f64,
        reference_pressure: f64,
        reference_temperature: f64,
        stp_temperature: f64,
    ) -> Result<Self> {
        let all = [
            speed_of_light,
            planck,
            boltzmann,
            gas_constant,
            avogadro,
            reference_pressure,
            reference_temperature,
            stp_temperature,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::domain("physical constants must be finite and positive"));
        }
        Ok(Self {
            speed_of_light,
            planck,
            boltzmann,
            gas_constant,
            avogadro,
            reference_pressure,
            reference_temperature,
            stp_temperature,
        })
    }

    /// Speed of light in vacuum, m/s.
    pub fn c(&self) -> f64 {
        self.speed_of_light
    }
    /// Planck constant, J·s.
    pub fn planck(&self) -> f64 {
        self.planck
    }
    /// Boltzmann constant, J/K.
    pub fn boltzmann(&self) -> f64 {
        self.boltzmann
    }
    /// Molar gas constant, J/(mol·K).
    pub fn gas_constant(&self) -> f64 {
        self.gas_constant
    }
    /// Avogadro constant, 1/mol.
    pub fn avogadro(&self) -> f64 {
        self.avogadro
    }
    /// Reference pressure p0, Pa.
    pub fn p0(&self) -> f64 {
        self.reference_pressure
    }
    /// Reference temperature of the line parameters, K.
    pub fn t0(&self) -> f64 {
        self.reference_temperature
    }
    /// Standard temperature, K.
    pub fn t_stp(&self) -> f64 {
        self.stp_temperature
    }

    /// Hz per cm⁻¹ (100·c).
    pub fn hz_per_wavenumber(&self) -> f64 {
        100.0 * self.speed_of_light
    }
}
