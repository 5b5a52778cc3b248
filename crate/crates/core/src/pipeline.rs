//! End-to-end wiring of the pipeline stages:
//! simulate -> (inject) -> train -> calibrate -> detect -> evaluate.
//!
//! The CLI subcommands are thin wrappers over these functions; all
//! algorithmic behavior lives in the owning modules.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::alarm::{
    calibrate, detect, emit_alarms_csv, residue, rolling_stats, save_thresholds, AlarmError,
    AlarmEvent, ResidueStats, Thresholds,
};
use crate::config::{ConfigError, ModelChoice, RunConfig};
use crate::eval::{
    compare_models, detection_report, emit_comparison_csv, emit_detection_csv, emit_trace_csv,
    ComparisonReport, DetectionReport, EvalError,
};
use crate::fault::{inject, FaultError};
use crate::forecast::{
    estimate_lag, forecast_series, tcn_train, ForecastError, ForecastSeries, ForecasterKind,
    TcnMode, TrainedModel,
};
use crate::series::{SeriesError, SeriesPair};
use crate::sim::{generate, SimError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Alarm(#[from] AlarmError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Trains (or constructs) the forecaster selected by `choice`.
///
/// Hard Subtraction uses the configured lag when given, otherwise estimates
/// it by cross-correlation on the training slice.
pub fn build_model(
    config: &RunConfig,
    choice: ModelChoice,
    train: &SeriesPair,
) -> Result<TrainedModel, PipelineError> {
    Ok(match choice {
        ModelChoice::Naive => TrainedModel::naive(),
        ModelChoice::HardSubtraction => {
            let lag = match config.hardsub_lag {
                Some(lag) => lag,
                None => estimate_lag(train, config.hardsub_max_lag)?,
            };
            TrainedModel::hard_subtraction(lag)
        }
        ModelChoice::TcnEndogenous => {
            let kind = ForecasterKind::Tcn {
                config: config.tcn.clone(),
                mode: TcnMode::Endogenous,
            };
            tcn_train(train, &kind)?
        }
        ModelChoice::TcnExogenous => {
            let kind = ForecasterKind::Tcn {
                config: config.tcn.clone(),
                mode: TcnMode::Exogenous,
            };
            tcn_train(train, &kind)?
        }
    })
}

pub struct CalibrationOutput {
    pub forecast: ForecastSeries,
    pub stats: ResidueStats,
    pub thresholds: Thresholds,
}

/// Forecasts over the calibration slice, rolls the residue statistics, and
/// learns thresholds from their maxima.
pub fn calibrate_stage(
    model: &TrainedModel,
    calibrate_slice: &SeriesPair,
    window_w: usize,
    safety_factor: f64,
) -> Result<CalibrationOutput, PipelineError> {
    let forecast = forecast_series(model, calibrate_slice)?;
    let res = residue(calibrate_slice, &forecast)?;
    let stats = rolling_stats(&res, window_w)?;
    let thresholds = calibrate(&stats, safety_factor)?;
    Ok(CalibrationOutput { forecast, stats, thresholds })
}

pub struct DetectionOutput {
    pub forecast: ForecastSeries,
    pub stats: ResidueStats,
    pub events: Vec<AlarmEvent>,
}

/// Forecasts over a (possibly faulted) slice and raises alarms against
/// previously learned thresholds.
pub fn detect_stage(
    model: &TrainedModel,
    slice: &SeriesPair,
    thresholds: &Thresholds,
) -> Result<DetectionOutput, PipelineError> {
    let forecast = forecast_series(model, slice)?;
    let res = residue(slice, &forecast)?;
    let stats = rolling_stats(&res, thresholds.window_w)?;
    let events = detect(&stats, thresholds);
    Ok(DetectionOutput { forecast, stats, events })
}

pub struct E2eSummary {
    pub model: TrainedModel,
    pub thresholds: Thresholds,
    pub events: Vec<AlarmEvent>,
    pub detection: DetectionReport,
    pub comparison: ComparisonReport,
    pub alarm_fired: bool,
}

/// Runs the full pipeline on one config and writes every report into
/// `outdir`: clean.csv, faulted.csv, model.txt, thresholds.txt, alarms.csv,
/// detection.csv, comparison.csv, trace.csv.
pub fn run_e2e(
    config: &RunConfig,
    outdir: &Path,
    fault_override: Option<&str>,
) -> Result<E2eSummary, PipelineError> {
    fs::create_dir_all(outdir)?;

    let clean = generate(&config.sim)?;
    clean.emit_csv(&outdir.join("clean.csv"))?;

    let fault_spec = config.fault_spec(fault_override)?;
    let (faulted, mask) = inject(&clean, &fault_spec)?;
    faulted.emit_csv(&outdir.join("faulted.csv"))?;

    let (train_slice, calib_slice, _) = clean.split(&config.split)?;
    let model = build_model(config, config.model, &train_slice)?;
    crate::forecast::save_model(&model, &outdir.join("model.txt"))?;

    let cal = calibrate_stage(&model, &calib_slice, config.window_w, config.safety_factor)?;
    save_thresholds(&cal.thresholds, &outdir.join("thresholds.txt"))?;

    // detection runs on the faulted copy of the test range
    let (_, _, test_faulted) = faulted.split(&config.split)?;
    let det = detect_stage(&model, &test_faulted, &cal.thresholds)?;
    emit_alarms_csv(&det.events, &cal.thresholds, &outdir.join("alarms.csv"))?;
    emit_trace_csv(
        &test_faulted,
        &det.forecast,
        &det.stats,
        &cal.thresholds,
        &det.events,
        &outdir.join("trace.csv"),
    )?;

    let warmup = det.stats.start;
    let report = detection_report(&det.events, &mask, clean.start_index(), warmup)?;
    emit_detection_csv(&report, &outdir.join("detection.csv"))?;

    // model comparison on the clean test range: baseline, hard subtraction,
    // and the pipeline's own forecaster
    let (_, _, test_clean) = clean.split(&config.split)?;
    let naive = TrainedModel::naive();
    let hardsub = build_model(config, ModelChoice::HardSubtraction, &train_slice)?;
    let mut models: Vec<&TrainedModel> = vec![&naive, &hardsub];
    if !matches!(config.model, ModelChoice::Naive | ModelChoice::HardSubtraction) {
        models.push(&model);
    }
    let comparison = compare_models(
        &test_clean,
        &models,
        test_clean.start_index()..test_clean.end_index() + 1,
    )?;
    emit_comparison_csv(&comparison, &outdir.join("comparison.csv"))?;

    let alarm_fired = !det.events.is_empty();
    Ok(E2eSummary {
        model,
        thresholds: cal.thresholds,
        events: det.events,
        detection: report,
        comparison,
        alarm_fired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SplitSpec;
    use crate::sim::SimConfig;
    use crate::forecast::TcnConfig;

    fn small_config() -> RunConfig {
        let mut config = RunConfig::default();
        config.sim = SimConfig { length: 2000, seed: config.seed, ..SimConfig::default() };
        config.tcn = TcnConfig {
            input_window_n: 8,
            channels: 4,
            kernel_size: 2,
            num_blocks: 2,
            epochs: 3,
            learning_rate: 5e-3,
            batch_size: 64,
            seed: config.seed + 1,
            dropout_rate: 0.0,
        };
        config.split = SplitSpec { train: 0..800, calibrate: 800..1200, test: 1200..2000 };
        config.window_w = 20;
        config.fault_start = 1600;
        config.fault_offset = 5.0;
        config
    }

    #[test]
    fn e2e_bias_detects_and_is_deterministic() {
        let config = small_config();
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("run1");
        let out2 = dir.path().join("run2");
        let s1 = run_e2e(&config, &out1, Some("bias")).unwrap();
        let s2 = run_e2e(&config, &out2, Some("bias")).unwrap();
        assert!(s1.alarm_fired, "a 5-unit bias must raise an alarm");
        assert!(s1.detection.latency.is_some());
        assert_eq!(s1.detection.latency, s2.detection.latency);
        for file in [
            "clean.csv",
            "faulted.csv",
            "model.txt",
            "thresholds.txt",
            "alarms.csv",
            "detection.csv",
            "comparison.csv",
            "trace.csv",
        ] {
            let a = std::fs::read(out1.join(file)).unwrap();
            let b = std::fs::read(out2.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn calibration_range_is_alarm_free_at_safety_one() {
        let config = small_config();
        let clean = generate(&config.sim).unwrap();
        let (train_slice, calib_slice, _) = clean.split(&config.split).unwrap();
        let model = build_model(&config, ModelChoice::HardSubtraction, &train_slice).unwrap();
        let cal = calibrate_stage(&model, &calib_slice, config.window_w, 1.0).unwrap();
        let det = detect_stage(&model, &calib_slice, &cal.thresholds).unwrap();
        assert!(det.events.is_empty());
    }
}
