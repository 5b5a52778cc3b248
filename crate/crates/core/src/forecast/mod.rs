//! One-step-ahead forecasters: Naive, Hard Subtraction, and the TCN in
//! endogenous (G history -> G) and exogenous (C history -> G) configurations,
//! plus lag estimation and model serialization.

mod tcn;
mod train;

pub use tcn::{Normalization, Tcn, TcnConfig};
pub use train::tcn_train;

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::series::{Channel, SeriesPair};

/// Which forecasting model a [`TrainedModel`] holds.
#[derive(Debug, Clone, PartialEq)]
pub enum ForecasterKind {
    /// Predicts y(t+1) = y(t).
    Naive,
    /// Predicts y(t+1) = x(t+1-m) for a known misalignment m.
    HardSubtraction { lag_m: usize },
    Tcn { config: TcnConfig, mode: TcnMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcnMode {
    /// G history -> G.
    Endogenous,
    /// C history -> G.
    Exogenous,
}

impl TcnMode {
    pub fn input_channel(self) -> Channel {
        match self {
            TcnMode::Endogenous => Channel::G,
            TcnMode::Exogenous => Channel::C,
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained forecaster. Immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ForecasterKind,
    /// Flat parameter vector; layout documented in [`tcn`]. Empty for Naive
    /// and Hard Subtraction.
    pub parameters: Vec<f64>,
    pub normalization: Normalization,
    /// Per-epoch mean squared error in original (de-normalized) units.
    pub training_loss_history: Vec<f64>,
    pub format_version: u32,
}

impl TrainedModel {
    pub fn naive() -> Self {
        TrainedModel {
            kind: ForecasterKind::Naive,
            parameters: Vec::new(),
            normalization: Normalization::identity(),
            training_loss_history: Vec::new(),
            format_version: MODEL_FORMAT_VERSION,
        }
    }

    pub fn hard_subtraction(lag_m: usize) -> Self {
        TrainedModel {
            kind: ForecasterKind::HardSubtraction { lag_m },
            parameters: Vec::new(),
            normalization: Normalization::identity(),
            training_loss_history: Vec::new(),
            format_version: MODEL_FORMAT_VERSION,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ForecasterKind::Naive => "naive".into(),
            ForecasterKind::HardSubtraction { lag_m } => format!("hard_subtraction(m={lag_m})"),
            ForecasterKind::Tcn { mode: TcnMode::Endogenous, .. } => "tcn_endogenous".into(),
            ForecasterKind::Tcn { mode: TcnMode::Exogenous, .. } => "tcn_exogenous".into(),
        }
    }
}

/// One forecast per feasible index; `values[i]` forecasts the target at
/// index `start + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries {
    pub start: i64,
    pub values: Vec<f64>,
}

impl ForecastSeries {
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn at(&self, t: i64) -> Option<f64> {
        let i = t.checked_sub(self.start)?;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start + i as i64, v))
    }
}

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("history is empty")]
    EmptyHistory,
    #[error("series too short: need at least {need} samples, have {have}")]
    SeriesTooShort { need: usize, have: usize },
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("wrong window length: expected {expected}, got {got}")]
    WrongWindowLength { expected: usize, got: usize },
    #[error("model kind mismatch: expected {expected}")]
    ModelKindMismatch { expected: &'static str },
    #[error("training loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("unsupported model format version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Naive forecast: the last observed value.
pub fn naive_forecast(history: &[f64]) -> Result<f64, ForecastError> {
    history.last().copied().ok_or(ForecastError::EmptyHistory)
}

/// Argmax over lag in [0, max_lag] of the sample cross-correlation between
/// c(t-lag) and g(t); ties break toward the smallest lag.
pub fn estimate_lag(pair: &SeriesPair, max_lag: usize) -> Result<usize, ForecastError> {
    if pair.len() <= 2 * max_lag {
        return Err(ForecastError::SeriesTooShort { need: 2 * max_lag + 1, have: pair.len() });
    }
    let c = pair.channel(Channel::C);
    let g = pair.channel(Channel::G);
    let mut best_lag = 0;
    let mut best_corr = f64::NEG_INFINITY;
    for lag in 0..=max_lag {
        let n = g.len() - lag;
        let mut mc = 0.0;
        let mut mg = 0.0;
        for t in lag..g.len() {
            mc += c[t - lag];
            mg += g[t];
        }
        mc /= n as f64;
        mg /= n as f64;
        let mut cov = 0.0;
        let mut vc = 0.0;
        let mut vg = 0.0;
        for t in lag..g.len() {
            let dc = c[t - lag] - mc;
            let dg = g[t] - mg;
            cov += dc * dg;
            vc += dc * dc;
            vg += dg * dg;
        }
        let denom = (vc * vg).sqrt();
        let corr = if denom > 0.0 { cov / denom } else { 0.0 };
        if corr > best_corr {
            best_corr = corr;
            best_lag = lag;
        }
    }
    Ok(best_lag)
}

/// Hard Subtraction forecast of the target at t+1: the leading channel at
/// t+1-lag_m. With lag_m = 0 this reads a same-tick sample of the leading
/// sensor, which the upstream placement of C makes available in deployment.
pub fn hard_subtraction_forecast(
    pair: &SeriesPair,
    t: i64,
    lag_m: usize,
) -> Result<f64, ForecastError> {
    let idx = t + 1 - lag_m as i64;
    pair.value_at(idx, Channel::C).ok_or_else(|| {
        ForecastError::OutOfRange(format!(
            "hard subtraction needs c({idx}) which is outside {}..={}",
            pair.start_index(),
            pair.end_index()
        ))
    })
}

/// One-step forecast from a raw (unnormalized) input window of n+1 values.
pub fn tcn_forward(model: &TrainedModel, input_window: &[f64]) -> Result<f64, ForecastError> {
    let ForecasterKind::Tcn { config, .. } = &model.kind else {
        return Err(ForecastError::ModelKindMismatch { expected: "tcn" });
    };
    let expected = config.input_window_n + 1;
    if input_window.len() != expected {
        return Err(ForecastError::WrongWindowLength { expected, got: input_window.len() });
    }
    let norm = &model.normalization;
    let normalized: Vec<f64> = input_window
        .iter()
        .map(|&v| (v - norm.input_mean) / norm.input_sd)
        .collect();
    let tcn = Tcn::new(config.clone());
    let y = tcn.forward(&model.parameters, &normalized);
    Ok(y * norm.target_sd + norm.target_mean)
}

/// Forecasts the target channel over every feasible position of `pair`.
pub fn forecast_series(
    model: &TrainedModel,
    pair: &SeriesPair,
) -> Result<ForecastSeries, ForecastError> {
    let start = pair.start_index();
    let end = pair.end_index();
    match &model.kind {
        ForecasterKind::Naive => {
            if pair.len() < 2 {
                return Err(ForecastError::SeriesTooShort { need: 2, have: pair.len() });
            }
            let g = pair.channel(Channel::G);
            Ok(ForecastSeries { start: start + 1, values: g[..g.len() - 1].to_vec() })
        }
        ForecasterKind::HardSubtraction { lag_m } => {
            let first = (start + *lag_m as i64).max(start + 1);
            if first > end {
                return Err(ForecastError::SeriesTooShort {
                    need: *lag_m + 1,
                    have: pair.len(),
                });
            }
            let values = (first..=end)
                .map(|tp1| {
                    pair.value_at(tp1 - *lag_m as i64, Channel::C)
                        .expect("range keeps the lagged index in bounds")
                })
                .collect();
            Ok(ForecastSeries { start: first, values })
        }
        ForecasterKind::Tcn { config, mode } => {
            let n = config.input_window_n;
            let first = start + n as i64 + 1;
            if first > end {
                return Err(ForecastError::SeriesTooShort { need: n + 2, have: pair.len() });
            }
            let channel = mode.input_channel();
            let norm = &model.normalization;
            let tcn = Tcn::new(config.clone());
            let raw = pair.channel(channel);
            let mut values = Vec::with_capacity((end - first + 1) as usize);
            let mut window = vec![0.0; n + 1];
            for tp1 in first..=end {
                let lo = (tp1 - 1 - n as i64 - start) as usize;
                for (w, &v) in window.iter_mut().zip(&raw[lo..lo + n + 1]) {
                    *w = (v - norm.input_mean) / norm.input_sd;
                }
                let y = tcn.forward(&model.parameters, &window);
                values.push(y * norm.target_sd + norm.target_mean);
            }
            Ok(ForecastSeries { start: first, values })
        }
    }
}

fn f64_to_hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn f64_from_hex(s: &str) -> Result<f64, ForecastError> {
    let bits = u64::from_str_radix(s, 16)
        .map_err(|_| ForecastError::CorruptFile(format!("bad float encoding {s:?}")))?;
    Ok(f64::from_bits(bits))
}

/// Writes a model file. Floating-point parameters and normalization are
/// stored as hex-encoded IEEE-754 bits, so load/save round-trips bit-exactly.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ForecastError> {
    let mut out = String::from("sensorfd-model\n");
    out.push_str(&format!("format_version = {}\n", model.format_version));
    match &model.kind {
        ForecasterKind::Naive => out.push_str("kind = naive\n"),
        ForecasterKind::HardSubtraction { lag_m } => {
            out.push_str("kind = hard_subtraction\n");
            out.push_str(&format!("lag_m = {lag_m}\n"));
        }
        ForecasterKind::Tcn { config, mode } => {
            out.push_str("kind = tcn\n");
            out.push_str(&format!(
                "mode = {}\n",
                match mode {
                    TcnMode::Endogenous => "endogenous",
                    TcnMode::Exogenous => "exogenous",
                }
            ));
            out.push_str(&format!("tcn.input_window_n = {}\n", config.input_window_n));
            out.push_str(&format!("tcn.channels = {}\n", config.channels));
            out.push_str(&format!("tcn.kernel_size = {}\n", config.kernel_size));
            out.push_str(&format!("tcn.num_blocks = {}\n", config.num_blocks));
            out.push_str(&format!("tcn.learning_rate = {}\n", config.learning_rate));
            out.push_str(&format!("tcn.epochs = {}\n", config.epochs));
            out.push_str(&format!("tcn.batch_size = {}\n", config.batch_size));
            out.push_str(&format!("tcn.seed = {}\n", config.seed));
            out.push_str(&format!("tcn.dropout_rate = {}\n", config.dropout_rate));
        }
    }
    let n = &model.normalization;
    out.push_str(&format!("norm.input_mean = {}\n", f64_to_hex(n.input_mean)));
    out.push_str(&format!("norm.input_sd = {}\n", f64_to_hex(n.input_sd)));
    out.push_str(&format!("norm.target_mean = {}\n", f64_to_hex(n.target_mean)));
    out.push_str(&format!("norm.target_sd = {}\n", f64_to_hex(n.target_sd)));
    let hist: Vec<String> = model.training_loss_history.iter().map(|&v| f64_to_hex(v)).collect();
    out.push_str(&format!("loss_history = {}\n", hist.join(",")));
    out.push_str(&format!("param_count = {}\n", model.parameters.len()));
    let params: Vec<String> = model.parameters.iter().map(|&v| f64_to_hex(v)).collect();
    out.push_str(&format!("params = {}\n", params.join(",")));
    fs::write(path, out)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ForecastError> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

fn parse_model(text: &str) -> Result<TrainedModel, ForecastError> {
    let mut lines = text.lines();
    if lines.next() != Some("sensorfd-model") {
        return Err(ForecastError::CorruptFile("missing magic line".into()));
    }
    let mut kv = std::collections::HashMap::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| ForecastError::CorruptFile(format!("bad line {line:?}")))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let get = |key: &str| -> Result<&String, ForecastError> {
        kv.get(key)
            .ok_or_else(|| ForecastError::CorruptFile(format!("missing key {key:?}")))
    };
    let parse_int = |key: &str| -> Result<u64, ForecastError> {
        get(key)?
            .parse()
            .map_err(|_| ForecastError::CorruptFile(format!("bad integer for {key:?}")))
    };
    let parse_float = |key: &str| -> Result<f64, ForecastError> {
        get(key)?
            .parse()
            .map_err(|_| ForecastError::CorruptFile(format!("bad float for {key:?}")))
    };

    let version = parse_int("format_version")? as u32;
    if version != MODEL_FORMAT_VERSION {
        return Err(ForecastError::VersionMismatch {
            found: version,
            supported: MODEL_FORMAT_VERSION,
        });
    }

    let kind = match get("kind")?.as_str() {
        "naive" => ForecasterKind::Naive,
        "hard_subtraction" => {
            ForecasterKind::HardSubtraction { lag_m: parse_int("lag_m")? as usize }
        }
        "tcn" => {
            let mode = match get("mode")?.as_str() {
                "endogenous" => TcnMode::Endogenous,
                "exogenous" => TcnMode::Exogenous,
                other => {
                    return Err(ForecastError::CorruptFile(format!("unknown mode {other:?}")))
                }
            };
            let config = TcnConfig {
                input_window_n: parse_int("tcn.input_window_n")? as usize,
                channels: parse_int("tcn.channels")? as usize,
                kernel_size: parse_int("tcn.kernel_size")? as usize,
                num_blocks: parse_int("tcn.num_blocks")? as usize,
                learning_rate: parse_float("tcn.learning_rate")?,
                epochs: parse_int("tcn.epochs")? as usize,
                batch_size: parse_int("tcn.batch_size")? as usize,
                seed: parse_int("tcn.seed")?,
                dropout_rate: parse_float("tcn.dropout_rate")?,
            };
            ForecasterKind::Tcn { config, mode }
        }
        other => return Err(ForecastError::CorruptFile(format!("unknown kind {other:?}"))),
    };

    let normalization = Normalization {
        input_mean: f64_from_hex(get("norm.input_mean")?)?,
        input_sd: f64_from_hex(get("norm.input_sd")?)?,
        target_mean: f64_from_hex(get("norm.target_mean")?)?,
        target_sd: f64_from_hex(get("norm.target_sd")?)?,
    };

    let hist_raw = get("loss_history")?;
    let training_loss_history = if hist_raw.is_empty() {
        Vec::new()
    } else {
        hist_raw
            .split(',')
            .map(f64_from_hex)
            .collect::<Result<Vec<_>, _>>()?
    };

    let param_count = parse_int("param_count")? as usize;
    let params_raw = get("params")?;
    let parameters = if params_raw.is_empty() {
        Vec::new()
    } else {
        params_raw
            .split(',')
            .map(f64_from_hex)
            .collect::<Result<Vec<_>, _>>()?
    };
    if parameters.len() != param_count {
        return Err(ForecastError::CorruptFile(format!(
            "param_count {} does not match {} stored parameters",
            param_count,
            parameters.len()
        )));
    }
    if let ForecasterKind::Tcn { config, .. } = &kind {
        let expected = Tcn::new(config.clone()).param_count();
        if parameters.len() != expected {
            return Err(ForecastError::CorruptFile(format!(
                "architecture implies {expected} parameters, file has {}",
                parameters.len()
            )));
        }
    }

    Ok(TrainedModel {
        kind,
        parameters,
        normalization,
        training_loss_history,
        format_version: version,
    })
}
