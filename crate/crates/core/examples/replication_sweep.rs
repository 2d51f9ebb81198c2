//! Runs the chemometrics replication grid on the synthetic material set and
//! writes the results table.
//!
//! `cargo run --release --example replication_sweep -- results.csv`

use std::time::Instant;

use terasense::bench::{emit_results_csv, ExperimentConfig};
use terasense::physics::PhysicalConstants;

fn main() -> terasense::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "replication_results.csv".into());
    let cfg = ExperimentConfig::replication();
    let started = Instant::now();
    let result = cfg.run(&PhysicalConstants::default())?;
    emit_results_csv(&result, std::fs::File::create(&out)?)?;
    println!(
        "{} cells, {} failed, {:.0} s -> {out}",
        result.cells.len(),
        result.failed().count(),
        started.elapsed().as_secs_f64()
    );
    for (ext, cls) in result.cells.iter().map(|c| (c.extractor.clone(), c.classifier.clone())).collect::<std::collections::BTreeSet<_>>() {
        let curve: Vec<String> = result
            .curve(&ext, &cls)
            .iter()
            .map(|c| format!("{:.2}", c.success_rate_mean))
            .collect();
        println!("{ext:>5}/{cls:<5} {}", curve.join(" "));
    }
    Ok(())
}
