//! Mini-batch training of the TCN: MSE loss, Adam updates, z-score
//! normalization learned on the training series.
//!
//! Initialization, batch shuffling, and dropout all derive from the config
//! seed via separate ChaCha8 substreams, so training is bit-reproducible in
//! single-threaded mode.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tcn::{Normalization, Tcn};
use super::{ForecastError, ForecasterKind, TrainedModel, MODEL_FORMAT_VERSION};
use crate::series::{Channel, SeriesPair};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

const STREAM_INIT: u64 = 0x11;
const STREAM_SHUFFLE: u64 = 0x12;
const STREAM_DROPOUT: u64 = 0x13;

fn substream(seed: u64, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (id.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains a TCN forecaster on `pair`, minimizing mean squared one-step-ahead
/// error. `kind` must be the Tcn variant.
pub fn tcn_train(pair: &SeriesPair, kind: &ForecasterKind) -> Result<TrainedModel, ForecastError> {
    let ForecasterKind::Tcn { config, mode } = kind else {
        return Err(ForecastError::ModelKindMismatch { expected: "tcn" });
    };
    config.validate().map_err(ForecastError::InvalidConfig)?;
    let n = config.input_window_n;
    if pair.len() < n + 2 {
        return Err(ForecastError::SeriesTooShort { need: n + 2, have: pair.len() });
    }
    if config.input_window_n + 1 < config.receptive_field() {
        eprintln!(
            "warning: input window of {} samples is smaller than the receptive field of {}; \
             deeper history cannot be used",
            config.input_window_n + 1,
            config.receptive_field()
        );
    }

    let input = pair.channel(mode.input_channel());
    let target = pair.channel(Channel::G);

    let (input_mean, input_sd) = mean_sd(&input);
    let (target_mean, target_sd) = mean_sd(&target);
    if input_sd <= 0.0 || target_sd <= 0.0 {
        return Err(ForecastError::InvalidConfig(
            "training data has zero variance; normalization is undefined".into(),
        ));
    }
    let normalization = Normalization { input_mean, input_sd, target_mean, target_sd };

    let input_norm: Vec<f64> = input.iter().map(|v| (v - input_mean) / input_sd).collect();
    let target_norm: Vec<f64> = target.iter().map(|v| (v - target_mean) / target_sd).collect();

    // training example i: window input_norm[i..=i+n] predicts target_norm[i+n+1]
    let num_examples = pair.len() - n - 1;
    let tcn = Tcn::new(config.clone());

    let mut init_rng = substream(config.seed, STREAM_INIT);
    let mut shuffle_rng = substream(config.seed, STREAM_SHUFFLE);
    let mut dropout_rng = substream(config.seed, STREAM_DROPOUT);

    let mut params = tcn.init_params(&mut init_rng);
    let mut grad = vec![0.0; params.len()];
    let mut adam_m = vec![0.0; params.len()];
    let mut adam_v = vec![0.0; params.len()];
    let mut step = 0u64;

    let mut order: Vec<usize> = (0..num_examples).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                let window = &input_norm[i..=i + n];
                let masks = tcn.sample_dropout_masks(&mut dropout_rng);
                let (y, cache) = tcn.forward_cached(&params, window, masks);
                let err = y - target_norm[i + n + 1];
                batch_loss += err * err;
                tcn.backward(&params, &cache, 2.0 * err / batch.len() as f64, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(ForecastError::NonFiniteLoss { epoch, batch: batch_no });
            }
            epoch_loss += batch_loss;

            step += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
            for p in 0..params.len() {
                adam_m[p] = ADAM_BETA1 * adam_m[p] + (1.0 - ADAM_BETA1) * grad[p];
                adam_v[p] = ADAM_BETA2 * adam_v[p] + (1.0 - ADAM_BETA2) * grad[p] * grad[p];
                let m_hat = adam_m[p] / bc1;
                let v_hat = adam_v[p] / bc2;
                params[p] -= config.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
        // record in original units
        loss_history.push(epoch_loss / num_examples as f64 * target_sd * target_sd);
    }

    Ok(TrainedModel {
        kind: kind.clone(),
        parameters: params,
        normalization,
        training_loss_history: loss_history,
        format_version: MODEL_FORMAT_VERSION,
    })
}
