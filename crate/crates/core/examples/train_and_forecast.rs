//! Train the exogenous TCN (C history -> next G) and inspect the training
//! loss curve and held-out accuracy.
//!
//! ```bash
//! cargo run --release --example train_and_forecast
//! ```

use sensorfd::config::{ModelChoice, RunConfig};
use sensorfd::eval::mse;
use sensorfd::forecast::forecast_series;
use sensorfd::pipeline::build_model;
use sensorfd::sim::generate;

fn main() {
    let mut config = RunConfig::default();
    config.sim.length = 8000;
    config.split.train = 0..4000;
    config.split.calibrate = 4000..6000;
    config.split.test = 6000..8000;
    config.tcn.epochs = 8;

    let pair = generate(&config.sim).expect("simulation");
    let (train, _, test) = pair.split(&config.split).expect("split");

    let model = build_model(&config, ModelChoice::TcnExogenous, &train).expect("training");
    println!("trained {} ({} parameters)", model.name(), model.parameters.len());
    for (epoch, loss) in model.training_loss_history.iter().enumerate() {
        println!("epoch {:2}: training mse {loss:.6}", epoch + 1);
    }

    let forecast = forecast_series(&model, &test).expect("forecast");
    let test_mse = mse(&test, &forecast).expect("mse");
    println!("held-out test mse: {test_mse:.6}");

    // peek at the first few forecasts next to the actual values
    let g = test.channel(sensorfd::series::Channel::G);
    for offset in 0..5 {
        let t = forecast.start + offset;
        let actual = g[(t - test.start_index()) as usize];
        println!(
            "t={t}: forecast {:.4} actual {actual:.4}",
            forecast.at(t).expect("in range")
        );
    }
}
