//! Flags which gases show an absorption spike in dry, humid and polluted air.

use terasense::fds::{medium_spectrum, spike_detect, ProfileSpec, SpikeRule};
use terasense::physics::{LineDatabase, PhysicalConstants, SpectralGrid, SpectrumKind};

fn main() -> terasense::Result<()> {
    let consts = PhysicalConstants::default();
    let db = LineDatabase::builtin(&consts);
    let grid = SpectralGrid::linspace(0.1e12, 1.0e12, 2001)?;
    let species: Vec<String> = ["H2O", "O2", "CH4", "CO2", "N2"].iter().map(|s| s.to_string()).collect();
    for profile in ProfileSpec::defaults() {
        let k = medium_spectrum(&profile.medium(&db)?, &grid, &consts, SpectrumKind::AbsorptionCoefficient)?;
        let decisions = spike_detect(&k, &db, &species, SpikeRule::default())?;
        let present: Vec<&str> = decisions.iter().filter(|d| d.present).map(|d| d.species.as_str()).collect();
        println!("{:>8}: {}", profile.name, present.join(", "));
    }
    Ok(())
}
