//! One-call pipeline: simulate, inject, train, calibrate, detect and write
//! every report (CSV + model + thresholds) into an output directory.
//!
//! ```bash
//! cargo run --release --example end_to_end -- /tmp/sensorfd-demo
//! ```

use std::path::PathBuf;

use sensorfd::config::RunConfig;
use sensorfd::pipeline::run_e2e;

fn main() {
    let outdir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sensorfd-e2e"));

    let mut config = RunConfig::default();
    config.sim.length = 12000;
    config.split.train = 0..5000;
    config.split.calibrate = 5000..8000;
    config.split.test = 8000..12000;
    config.fault_start = 10000;
    // hard subtraction has no affine correction, so align the channels
    config.sim.gain = 1.0;
    config.sim.offset = 0.0;
    config.tcn.epochs = 8;

    let summary = run_e2e(&config, &outdir, Some("shutter_drop")).expect("pipeline");

    println!("model: {}", summary.model.name());
    println!(
        "fault at {}: {} alarms, latency {:?}",
        summary.detection.fault_start,
        summary.events.len(),
        summary.detection.latency
    );
    for row in &summary.comparison.rows {
        println!("  {:<24} mse {:.6}", row.model_name, row.mse);
    }
    println!("reports in {}", outdir.display());
}
