//! Detection signatures of every fault kind: which statistic fires first
//! and how fast, using one shared model and calibration.
//!
//! ```bash
//! cargo run --release --example fault_gallery
//! ```

use sensorfd::alarm::Trigger;
use sensorfd::config::{ModelChoice, RunConfig};
use sensorfd::eval::detection_report;
use sensorfd::fault::{inject, FaultKind, FaultSpec};
use sensorfd::pipeline::{build_model, calibrate_stage, detect_stage};
use sensorfd::series::Channel;
use sensorfd::sim::generate;

fn main() {
    let mut config = RunConfig::default();
    config.sim.length = 14000;
    config.split.train = 0..5000;
    config.split.calibrate = 5000..9000;
    config.split.test = 9000..14000;
    config.fault_start = 11000;
    config.window_w = 20;
    config.tcn.epochs = 8;

    let clean = generate(&config.sim).expect("simulation");
    let (train, calib, _) = clean.split(&config.split).expect("split");
    let model = build_model(&config, ModelChoice::TcnExogenous, &train).expect("training");
    let cal = calibrate_stage(&model, &calib, config.window_w, config.safety_factor)
        .expect("calibration");

    let kinds = [
        FaultKind::CompleteFailure { floor: 0.0 },
        FaultKind::PrecisionDegradation { noise_sd_mult: 3.0 },
        FaultKind::Drift { slope: 0.002 },
        FaultKind::Bias { offset: 0.8 },
        FaultKind::ShutterDrop { drop: 0.8 },
        FaultKind::StuckReplay { replay_len: 100 },
    ];

    println!("{:<22} {:>8}  first trigger", "fault", "latency");
    for kind in kinds {
        let name = kind.name();
        let spec = FaultSpec {
            kind,
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
        let first = det
            .events
            .iter()
            .find(|e| e.t >= config.fault_start)
            .map(|e| match e.trigger {
                Trigger::Mean => "mean",
                Trigger::Std => "std",
                Trigger::Both => "both",
            })
            .unwrap_or("none");
        println!(
            "{name:<22} {:>8}  {first}",
            report.latency.map_or("-".into(), |l| l.to_string())
        );
    }
}
