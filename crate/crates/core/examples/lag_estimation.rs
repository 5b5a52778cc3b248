//! Recover the C→G transport lag by cross-correlation.
//!
//! ```bash
//! cargo run --example lag_estimation
//! ```

use sensorfd::forecast::estimate_lag;
use sensorfd::sim::{generate, SimConfig};

fn main() {
    for true_lag in [0usize, 2, 5, 11] {
        let config = SimConfig {
            length: 4000,
            lag_m: true_lag,
            // moderate observation noise; the correlation peak survives it
            obs_noise_sd_c: 0.1,
            obs_noise_sd_g: 0.1,
            ..SimConfig::default()
        };
        let pair = generate(&config).expect("simulation");
        let estimated = estimate_lag(&pair, 20).expect("lag estimate");
        println!(
            "true lag {true_lag:2} -> estimated {estimated:2} {}",
            if estimated == true_lag { "(exact)" } else { "(off)" }
        );
    }
}
