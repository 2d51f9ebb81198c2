//! Smooths a noisy transmittance spectrum with Savitzky-Golay and normalizes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use terasense::bench::{add_noise, synthetic_materials, Snr};
use terasense::preprocess::{minmax, savitzky_golay, snv, SgWindow};

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn main() -> terasense::Result<()> {
    let lib = synthetic_materials(1, 430, (0.2e12, 2.5e12), 3)?;
    let clean = &lib.values[0];
    let noisy = add_noise(clean, Snr::Db(25.0), &mut ChaCha8Rng::seed_from_u64(1));
    println!("rms error before smoothing {:.3e}", rms(&noisy, clean));
    for (half, degree) in [(2, 2), (5, 3), (10, 3)] {
        let smooth = savitzky_golay(&noisy, SgWindow::new(half, degree)?)?;
        println!("SG window {:>2}, degree {degree}: rms error {:.3e}", 2 * half + 1, rms(&smooth, clean));
    }
    let z = snv(&noisy)?;
    let m = minmax(&noisy)?;
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    println!("SNV mean {mean:.1e}; minmax range [{:.1}, {:.1}]", m.iter().cloned().fold(f64::INFINITY, f64::min), m.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    Ok(())
}
