//! Recovers refractive index and extinction of a slab from its simulated
//! transmission spectrum, and of a surface from its normal-incidence reflection.

use terasense::spectroscopy::{fresnel_normal, invert_reflection, invert_transmission_spectrum, transmission_forward};

fn main() -> terasense::Result<()> {
    let (n, chi, thickness) = (1.9, 0.004, 1.2e-3);
    // Dense enough that the wrapped phase advances by well under pi per step.
    let freqs: Vec<f64> = (1..=100).map(|i| 0.02e12 * i as f64).collect();
    let mut magnitudes = Vec::new();
    let mut phases = Vec::new();
    for &f in &freqs {
        let t = transmission_forward(n, chi, thickness, f)?;
        magnitudes.push(t.norm());
        phases.push(t.arg());
    }
    println!("{:>8} {:>10} {:>12} {:>10}", "THz", "n", "chi", "K (1/m)");
    let inverted = invert_transmission_spectrum(&freqs, &magnitudes, &phases, thickness)?;
    for (f, inv) in freqs.iter().zip(&inverted).step_by(12) {
        println!(
            "{:>8.2} {:>10.6} {:>12.3e} {:>10.3}",
            f / 1e12,
            inv.constants.refractive_index,
            inv.constants.extinction,
            inv.absorption_coefficient
        );
    }

    let r = fresnel_normal(2.4, 0.05)?;
    let back = invert_reflection(r.reflectance, r.phase)?;
    println!(
        "reflection: R = {:.5}, phase = {:.5} rad -> n = {:.6}, chi = {:.6}",
        r.reflectance, r.phase, back.refractive_index, back.extinction
    );
    Ok(())
}
