//! Generate a correlated sensor pair and print a quick summary.
//!
//! The simulator drives both channels from one AR(1) latent process with
//! sparse bursts; G mirrors the latent with a configurable lag, so C "sees
//! the future" of G by `lag_m` samples.
//!
//! ```bash
//! cargo run --example simulate_pair -- out.csv
//! ```

use sensorfd::series::Channel;
use sensorfd::sim::{generate, SimConfig};

fn main() {
    let config = SimConfig { length: 5000, lag_m: 3, ..SimConfig::default() };
    let pair = generate(&config).expect("simulation");

    let summary = |name: &str, values: &[f64]| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        println!("{name}: n={} mean={mean:.4} sd={sd:.4} range=[{lo:.3}, {hi:.3}]", values.len());
    };

    summary("C", &pair.channel(Channel::C));
    summary("G", &pair.channel(Channel::G));

    if let Some(path) = std::env::args().nth(1) {
        pair.emit_csv(std::path::Path::new(&path)).expect("write csv");
        println!("wrote {path}");
    }
}
