//! Full detection walk-through: train on clean data, calibrate thresholds,
//! inject a bias fault into G, and report the alarms.
//!
//! ```bash
//! cargo run --release --example inject_and_detect
//! ```

use sensorfd::alarm::merge_episodes;
use sensorfd::config::{ModelChoice, RunConfig};
use sensorfd::eval::detection_report;
use sensorfd::fault::{inject, FaultKind, FaultSpec};
use sensorfd::pipeline::{build_model, calibrate_stage, detect_stage};
use sensorfd::series::Channel;
use sensorfd::sim::generate;

fn main() {
    let mut config = RunConfig::default();
    config.sim.length = 12000;
    config.split.train = 0..5000;
    config.split.calibrate = 5000..8000;
    config.split.test = 8000..12000;
    config.fault_start = 10000;
    config.tcn.epochs = 8;

    let clean = generate(&config.sim).expect("simulation");
    let (train, calib, _) = clean.split(&config.split).expect("split");

    let model = build_model(&config, ModelChoice::TcnExogenous, &train).expect("training");
    let cal = calibrate_stage(&model, &calib, config.window_w, config.safety_factor)
        .expect("calibration");
    println!(
        "thresholds over {:?}: mean {:.4}, std {:.4}",
        cal.thresholds.calibration_range, cal.thresholds.mean_thr, cal.thresholds.std_thr
    );

    let spec = FaultSpec {
        kind: FaultKind::Bias { offset: 0.8 },
        start: config.fault_start,
        duration: None,
        channel: Channel::G,
        seed: config.fault_seed(),
    };
    let (faulted, mask) = inject(&clean, &spec).expect("injection");
    let (_, _, test) = faulted.split(&config.split).expect("split");

    let det = detect_stage(&model, &test, &cal.thresholds).expect("detection");
    let report = detection_report(&det.events, &mask, clean.start_index(), det.stats.start)
        .expect("report");

    println!(
        "fault at {}: first alarm {:?}, latency {:?} samples, mean={} std={}",
        report.fault_start,
        report.first_alarm,
        report.latency,
        report.mean_triggered,
        report.std_triggered
    );
    for episode in merge_episodes(&det.events, 2 * config.window_w as i64).expect("episodes") {
        println!(
            "alarm episode {}..={} (mean={} std={})",
            episode.start, episode.end, episode.mean_triggered, episode.std_triggered
        );
    }
}
