//! Line-by-line molecular absorption and THz path gain from HITRAN line data.

mod absorption;
mod builtin;
mod constants;
mod hitran;
mod medium;
mod spectrum;

pub use absorption::{
    absorption_cross_section, absorption_spectrum, absorption_spectrum_with, integrated_cross_section,
    lorentz_halfwidth, molecular_absorption, molecular_absorption_with, number_density, path_gain,
    path_gain_from_absorption, path_gain_spectrum, transmittance_spectrum, vvw_lineshape,
    vvw_lineshape_per_wavenumber, AbsorptionOptions, PreparedMedium,
};
pub use builtin::{molecule_name, LineDatabase};
pub use constants::PhysicalConstants;
pub use hitran::{format_hitran_record, parse_hitran, LineRecord, MIN_RECORD_LEN, RECORD_LEN};
pub use medium::{GasSpecies, MediumState};
pub use spectrum::{format_f64, SpectralGrid, Spectrum, SpectrumKind};
