//! Flat `key = value` run configuration with section prefixes
//! (`sim.lag_m`, `tcn.epochs`, `alarm.window_w`, ...).
//!
//! Every key has a documented default (see [`RunConfig::default`]); unknown
//! keys are rejected so typos fail loudly. One top-level `seed` drives the
//! simulator, training, and fault-noise substreams: sim uses `seed`,
//! training `seed + 1`, fault injection `seed + 2`.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::fault::{FaultKind, FaultSpec};
use crate::forecast::{TcnConfig, TcnMode};
use crate::series::{Channel, SplitSpec};
use crate::sim::SimConfig;

/// Which forecaster the e2e pipeline and `detect` use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Naive,
    HardSubtraction,
    TcnEndogenous,
    TcnExogenous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub sim: SimConfig,
    pub tcn: TcnConfig,
    pub tcn_mode: TcnMode,
    pub window_w: usize,
    pub safety_factor: f64,
    pub split: SplitSpec,
    /// Fault kind by name; parameters below.
    pub fault_kind: String,
    pub fault_start: i64,
    /// 0 means open-ended (to the series end).
    pub fault_duration: usize,
    pub fault_channel: Channel,
    pub fault_floor: f64,
    pub fault_noise_sd_mult: f64,
    pub fault_slope: f64,
    pub fault_offset: f64,
    pub fault_drop: f64,
    pub fault_replay_len: usize,
    /// Hard Subtraction lag; `None` means estimate by cross-correlation.
    pub hardsub_lag: Option<usize>,
    pub hardsub_max_lag: usize,
    pub model: ModelChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seed = 42;
        RunConfig {
            seed,
            sim: SimConfig { seed, ..SimConfig::default() },
            tcn: TcnConfig { seed: seed + 1, ..TcnConfig::default() },
            tcn_mode: TcnMode::Exogenous,
            window_w: 50,
            safety_factor: 1.0,
            split: SplitSpec { train: 0..12_000, calibrate: 12_000..15_000, test: 15_000..20_000 },
            fault_kind: "bias".into(),
            fault_start: 17_000,
            fault_duration: 0,
            fault_channel: Channel::G,
            fault_floor: 0.0,
            fault_noise_sd_mult: 3.0,
            fault_slope: 0.001,
            fault_offset: 1.0,
            fault_drop: 1.0,
            fault_replay_len: 100,
            hardsub_lag: None,
            hardsub_max_lag: 20,
            model: ModelChoice::TcnExogenous,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key:?}: {detail}")]
    BadValue { line: usize, key: String, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        let mut seed_set: Option<u64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| ConfigError::BadLine { line, text: raw.to_string() })?;
            let key = key.trim();
            let value = value.trim();
            config.apply(key, value, line)?;
            if key == "seed" {
                seed_set = Some(config.seed);
            }
        }
        if let Some(seed) = seed_set {
            config.set_seed(seed);
        }
        Ok(config)
    }

    /// Propagates the master seed into the per-stage substreams.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sim.seed = seed;
        self.tcn.seed = seed.wrapping_add(1);
    }

    /// Seed used by fault injection noise.
    pub fn fault_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        macro_rules! parse {
            ($ty:ty) => {
                value.parse::<$ty>().map_err(|e| ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    detail: e.to_string(),
                })?
            };
        }
        match key {
            "seed" => self.seed = parse!(u64),
            "sim.length" => self.sim.length = parse!(usize),
            "sim.lag_m" => self.sim.lag_m = parse!(usize),
            "sim.ar_coeff" => self.sim.ar_coeff = parse!(f64),
            "sim.latent_noise_sd" => self.sim.latent_noise_sd = parse!(f64),
            "sim.gain" => self.sim.gain = parse!(f64),
            "sim.offset" => self.sim.offset = parse!(f64),
            "sim.obs_noise_sd_c" => self.sim.obs_noise_sd_c = parse!(f64),
            "sim.obs_noise_sd_g" => self.sim.obs_noise_sd_g = parse!(f64),
            "sim.burst_amplitude" => self.sim.burst_amplitude = parse!(f64),
            "sim.burst_rate" => self.sim.burst_rate = parse!(f64),
            "tcn.input_window_n" => self.tcn.input_window_n = parse!(usize),
            "tcn.channels" => self.tcn.channels = parse!(usize),
            "tcn.kernel_size" => self.tcn.kernel_size = parse!(usize),
            "tcn.num_blocks" => self.tcn.num_blocks = parse!(usize),
            "tcn.learning_rate" => self.tcn.learning_rate = parse!(f64),
            "tcn.epochs" => self.tcn.epochs = parse!(usize),
            "tcn.batch_size" => self.tcn.batch_size = parse!(usize),
            "tcn.dropout_rate" => self.tcn.dropout_rate = parse!(f64),
            "tcn.mode" => {
                self.tcn_mode = match value {
                    "endogenous" => TcnMode::Endogenous,
                    "exogenous" => TcnMode::Exogenous,
                    other => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            detail: format!("expected endogenous|exogenous, got {other:?}"),
                        })
                    }
                }
            }
            "alarm.window_w" => self.window_w = parse!(usize),
            "alarm.safety_factor" => self.safety_factor = parse!(f64),
            "split.train_start" => self.split.train.start = parse!(usize),
            "split.train_end" => self.split.train.end = parse!(usize),
            "split.calibrate_start" => self.split.calibrate.start = parse!(usize),
            "split.calibrate_end" => self.split.calibrate.end = parse!(usize),
            "split.test_start" => self.split.test.start = parse!(usize),
            "split.test_end" => self.split.test.end = parse!(usize),
            "fault.kind" => self.fault_kind = value.to_string(),
            "fault.start" => self.fault_start = parse!(i64),
            "fault.duration" => self.fault_duration = parse!(usize),
            "fault.channel" => {
                self.fault_channel = match value {
                    "c" | "C" => Channel::C,
                    "g" | "G" => Channel::G,
                    other => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            detail: format!("expected c|g, got {other:?}"),
                        })
                    }
                }
            }
            "fault.floor" => self.fault_floor = parse!(f64),
            "fault.noise_sd_mult" => self.fault_noise_sd_mult = parse!(f64),
            "fault.slope" => self.fault_slope = parse!(f64),
            "fault.offset" => self.fault_offset = parse!(f64),
            "fault.drop" => self.fault_drop = parse!(f64),
            "fault.replay_len" => self.fault_replay_len = parse!(usize),
            "hardsub.lag" => {
                self.hardsub_lag = if value == "auto" {
                    None
                } else {
                    Some(parse!(usize))
                }
            }
            "hardsub.max_lag" => self.hardsub_max_lag = parse!(usize),
            "e2e.model" => {
                self.model = match value {
                    "naive" => ModelChoice::Naive,
                    "hard_subtraction" => ModelChoice::HardSubtraction,
                    "tcn_endo" => ModelChoice::TcnEndogenous,
                    "tcn_exo" => ModelChoice::TcnExogenous,
                    other => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            detail: format!(
                                "expected naive|hard_subtraction|tcn_endo|tcn_exo, got {other:?}"
                            ),
                        })
                    }
                }
            }
            _ => {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            }
        }
        Ok(())
    }

    /// Materializes the configured fault as a [`FaultSpec`]. Accepts an
    /// override for the kind name (CLI `--fault`).
    pub fn fault_spec(&self, kind_override: Option<&str>) -> Result<FaultSpec, ConfigError> {
        let kind_name = kind_override.unwrap_or(&self.fault_kind);
        let kind = match kind_name {
            "complete_failure" => FaultKind::CompleteFailure { floor: self.fault_floor },
            "precision_degradation" => {
                FaultKind::PrecisionDegradation { noise_sd_mult: self.fault_noise_sd_mult }
            }
            "drift" => FaultKind::Drift { slope: self.fault_slope },
            "bias" => FaultKind::Bias { offset: self.fault_offset },
            "shutter_drop" => FaultKind::ShutterDrop { drop: self.fault_drop },
            "stuck_replay" => FaultKind::StuckReplay { replay_len: self.fault_replay_len },
            other => {
                return Err(ConfigError::BadValue {
                    line: 0,
                    key: "fault.kind".into(),
                    detail: format!("unknown fault kind {other:?}"),
                })
            }
        };
        Ok(FaultSpec {
            kind,
            start: self.fault_start,
            duration: if self.fault_duration == 0 { None } else { Some(self.fault_duration) },
            channel: self.fault_channel,
            seed: self.fault_seed(),
        })
    }
}
