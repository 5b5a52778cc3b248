//! Save and reload a trained model; parameters round-trip bit-exactly, so a
//! reloaded model reproduces every forecast to the last ulp.
//!
//! ```bash
//! cargo run --release --example model_roundtrip
//! ```

use sensorfd::config::{ModelChoice, RunConfig};
use sensorfd::forecast::{forecast_series, load_model, save_model};
use sensorfd::pipeline::build_model;
use sensorfd::sim::generate;

fn main() {
    let mut config = RunConfig::default();
    config.sim.length = 6000;
    config.split.train = 0..3000;
    config.split.calibrate = 3000..4500;
    config.split.test = 4500..6000;
    config.tcn.epochs = 3;

    let pair = generate(&config.sim).expect("simulation");
    let (train, _, test) = pair.split(&config.split).expect("split");
    let model = build_model(&config, ModelChoice::TcnExogenous, &train).expect("training");

    let path = std::env::temp_dir().join("sensorfd-model-roundtrip.txt");
    save_model(&model, &path).expect("save");
    let reloaded = load_model(&path).expect("load");

    assert_eq!(model.parameters.len(), reloaded.parameters.len());
    let exact = model
        .parameters
        .iter()
        .zip(&reloaded.parameters)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!(
        "{} parameters, bit-exact after reload: {exact}",
        model.parameters.len()
    );

    let before = forecast_series(&model, &test).expect("forecast");
    let after = forecast_series(&reloaded, &test).expect("forecast");
    let same = before
        .values
        .iter()
        .zip(&after.values)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("{} forecasts, identical from reloaded model: {same}", before.values.len());

    std::fs::remove_file(&path).ok();
}
