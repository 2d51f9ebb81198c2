//! Absorption coefficient and 5 m path gain of humid air between 0.1 and 1 THz.

use terasense::fds::ProfileSpec;
use terasense::physics::{absorption_spectrum, path_gain_spectrum, LineDatabase, PhysicalConstants, SpectralGrid};

fn main() -> terasense::Result<()> {
    let consts = PhysicalConstants::default();
    let db = LineDatabase::builtin(&consts);
    let humid = ProfileSpec::named("humid").medium(&db)?;
    let grid = SpectralGrid::linspace(0.1e12, 1.0e12, 901)?;
    let k = absorption_spectrum(&grid, &humid, &consts)?;
    let gain = path_gain_spectrum(&grid, &humid, &consts)?;

    let (peak, k_max) = k
        .values
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, v)| if *v > best.1 { (i, *v) } else { best });
    println!("strongest absorption {k_max:.3e} 1/m at {:.1} GHz", grid.frequencies()[peak] / 1e9);
    for ghz in [150.0, 340.0, 557.0, 700.0, 988.0] {
        let i = grid.nearest(ghz * 1e9);
        println!(
            "{:>6.0} GHz  K = {:.3e} 1/m  |gain| = {:.3e}",
            grid.frequencies()[i] / 1e9,
            k.values[i],
            gain.values[i]
        );
    }
    Ok(())
}
