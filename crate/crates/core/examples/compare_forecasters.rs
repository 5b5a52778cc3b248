//! Compare all four forecasters (naive, hard subtraction, endogenous and
//! exogenous TCN) on held-out data across a few seeds.
//!
//! ```bash
//! cargo run --release --example compare_forecasters
//! ```

use sensorfd::config::{ModelChoice, RunConfig};
use sensorfd::eval::compare_models;
use sensorfd::forecast::TrainedModel;
use sensorfd::pipeline::build_model;
use sensorfd::sim::generate;

fn main() {
    for seed in [1u64, 2, 3] {
        let mut config = RunConfig::default();
        config.sim.length = 10000;
        config.split.train = 0..5000;
        config.split.calibrate = 5000..7000;
        config.split.test = 7000..10000;
        // hard subtraction has no affine correction, so align the channels
        config.sim.gain = 1.0;
        config.sim.offset = 0.0;
        // keep the demo quick; accuracy saturates early on this task
        config.tcn.epochs = 8;
        config.set_seed(seed);

        let pair = generate(&config.sim).expect("simulation");
        let (train, _, test) = pair.split(&config.split).expect("split");

        let models: Vec<TrainedModel> = [
            ModelChoice::Naive,
            ModelChoice::HardSubtraction,
            ModelChoice::TcnEndogenous,
            ModelChoice::TcnExogenous,
        ]
        .into_iter()
        .map(|choice| build_model(&config, choice, &train).expect("training"))
        .collect();
        let refs: Vec<&TrainedModel> = models.iter().collect();

        let report = compare_models(&test, &refs, test.start_index()..test.end_index() + 1)
            .expect("comparison");
        println!("seed {seed}:");
        for row in &report.rows {
            println!("  {:<24} mse {:.6}", row.model_name, row.mse);
        }
    }
}
