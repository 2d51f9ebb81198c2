//! Identifies dry, humid and polluted air at 5 m from 100 carrier magnitudes,
//! comparing uniformly spread carriers with carriers tuned to water lines.

use std::time::Instant;

use terasense::fds::{sense_mixture, FdsConfig};
use terasense::physics::{LineDatabase, PhysicalConstants};

fn main() -> terasense::Result<()> {
    let consts = PhysicalConstants::default();
    let db = LineDatabase::builtin(&consts);
    let cfg = FdsConfig::default();
    let started = Instant::now();
    let result = sense_mixture(&cfg, &db, &consts)?;
    println!("{} cells in {:.1} s", result.cells.len(), started.elapsed().as_secs_f64());
    let uniform = result.curve("uniform100:none", "lda");
    let resonant = result.curve("resonant100:none", "lda");
    println!("{:>8} {:>8} {:>8}", "snr_db", "uniform", "resonant");
    for (u, r) in uniform.iter().zip(&resonant) {
        println!("{:>8} {:>8.3} {:>8.3}", u.snr.to_string(), u.success_rate_mean, r.success_rate_mean);
    }
    Ok(())
}
