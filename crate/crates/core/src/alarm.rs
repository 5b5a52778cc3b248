//! Residue analysis and alarm generation: rolling statistics over the
//! forecast residue, threshold calibration on fault-free data, and the
//! exceed-threshold detection rule.
//!
//! The two monitored statistics over a trailing window of `window_w`
//! residues are the absolute value of the rolling mean, and the rolling
//! population standard deviation (divisor w). Thresholds are the
//! safety-scaled maxima each statistic reached on the calibration range;
//! detection uses strict inequality, so calibration data re-checked against
//! its own safety_factor=1 thresholds never alarms.

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use crate::forecast::ForecastSeries;
use crate::series::{Channel, SeriesPair};

/// Forecast residues r(t) = y(t) - yhat(t), aligned with the forecast that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueSeries {
    pub start: i64,
    pub residues: Vec<f64>,
}

/// Rolling statistics of a residue series. Entry `i` covers residues at
/// positions `i .. i + window_w`, i.e. it is stamped at index
/// `residue.start + window_w - 1 + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueStats {
    pub start: i64,
    pub window_w: usize,
    pub mean_stat: Vec<f64>,
    pub std_stat: Vec<f64>,
}

/// Calibration-learned alarm limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub mean_thr: f64,
    pub std_thr: f64,
    pub safety_factor: f64,
    pub calibration_range: Range<i64>,
    pub window_w: usize,
    pub format_version: u32,
}

pub const THRESHOLDS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Mean,
    Std,
    Both,
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::Mean => write!(f, "mean"),
            Trigger::Std => write!(f, "std"),
            Trigger::Both => write!(f, "both"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlarmEvent {
    pub t: i64,
    pub trigger: Trigger,
    pub mean_value: f64,
    pub std_value: f64,
}

/// A group of alarms close in time, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub start: i64,
    pub end: i64,
    pub mean_triggered: bool,
    pub std_triggered: bool,
}

#[derive(Debug, Error)]
pub enum AlarmError {
    #[error("actual and forecast ranges do not overlap")]
    NoOverlap,
    #[error("rolling window {window_w} exceeds residue length {len}")]
    WindowTooLarge { window_w: usize, len: usize },
    #[error("rolling window must be >= 2, got {0}")]
    WindowTooSmall(usize),
    #[error("cannot calibrate on empty statistics")]
    EmptyStats,
    #[error("safety_factor must be >= 1, got {0}")]
    InvalidSafetyFactor(f64),
    #[error("alarm events are not index-sorted")]
    UnsortedEvents,
    #[error("corrupt thresholds file: {0}")]
    CorruptFile(String),
    #[error("unsupported thresholds format version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Residue between the actual target channel and a forecast, over their
/// overlapping index range.
pub fn residue(actual: &SeriesPair, forecast: &ForecastSeries) -> Result<ResidueSeries, AlarmError> {
    let start = actual.start_index().max(forecast.start);
    let end = actual.end_index().min(forecast.end());
    if start > end {
        return Err(AlarmError::NoOverlap);
    }
    let residues = (start..=end)
        .map(|t| {
            let y = actual.value_at(t, Channel::G).expect("t in actual range");
            let yhat = forecast.at(t).expect("t in forecast range");
            y - yhat
        })
        .collect();
    Ok(ResidueSeries { start, residues })
}

/// Rolling |mean| and population standard deviation over trailing windows of
/// `window_w` residues. Each window is summed directly (two passes), so the
/// result matches a brute-force recomputation to rounding error.
pub fn rolling_stats(res: &ResidueSeries, window_w: usize) -> Result<ResidueStats, AlarmError> {
    if window_w < 2 {
        return Err(AlarmError::WindowTooSmall(window_w));
    }
    if res.residues.len() < window_w {
        return Err(AlarmError::WindowTooLarge { window_w, len: res.residues.len() });
    }
    let count = res.residues.len() - window_w + 1;
    let mut mean_stat = Vec::with_capacity(count);
    let mut std_stat = Vec::with_capacity(count);
    for i in 0..count {
        let window = &res.residues[i..i + window_w];
        let mean = window.iter().sum::<f64>() / window_w as f64;
        let var = window.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / window_w as f64;
        mean_stat.push(mean.abs());
        std_stat.push(var.sqrt());
    }
    Ok(ResidueStats {
        start: res.start + window_w as i64 - 1,
        window_w,
        mean_stat,
        std_stat,
    })
}

/// Thresholds are the safety-scaled maxima of each statistic on calibration
/// data.
pub fn calibrate(stats: &ResidueStats, safety_factor: f64) -> Result<Thresholds, AlarmError> {
    if stats.mean_stat.is_empty() || stats.std_stat.is_empty() {
        return Err(AlarmError::EmptyStats);
    }
    if safety_factor < 1.0 {
        return Err(AlarmError::InvalidSafetyFactor(safety_factor));
    }
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Thresholds {
        mean_thr: safety_factor * max(&stats.mean_stat),
        std_thr: safety_factor * max(&stats.std_stat),
        safety_factor,
        calibration_range: stats.start..stats.start + stats.mean_stat.len() as i64,
        window_w: stats.window_w,
        format_version: THRESHOLDS_FORMAT_VERSION,
    })
}

/// One alarm per position where a statistic strictly exceeds its threshold.
pub fn detect(stats: &ResidueStats, thr: &Thresholds) -> Vec<AlarmEvent> {
    let mut events = Vec::new();
    for (i, (&m, &s)) in stats.mean_stat.iter().zip(&stats.std_stat).enumerate() {
        let mean_exceeds = m > thr.mean_thr;
        let std_exceeds = s > thr.std_thr;
        if mean_exceeds || std_exceeds {
            let trigger = match (mean_exceeds, std_exceeds) {
                (true, true) => Trigger::Both,
                (true, false) => Trigger::Mean,
                (false, true) => Trigger::Std,
                (false, false) => unreachable!(),
            };
            events.push(AlarmEvent {
                t: stats.start + i as i64,
                trigger,
                mean_value: m,
                std_value: s,
            });
        }
    }
    events
}

/// Merges index-sorted alarms into episodes: consecutive events with index
/// difference <= gap join, and triggers are unioned.
pub fn merge_episodes(events: &[AlarmEvent], gap: i64) -> Result<Vec<Episode>, AlarmError> {
    if events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(AlarmError::UnsortedEvents);
    }
    let mut episodes: Vec<Episode> = Vec::new();
    for e in events {
        let mean_t = matches!(e.trigger, Trigger::Mean | Trigger::Both);
        let std_t = matches!(e.trigger, Trigger::Std | Trigger::Both);
        match episodes.last_mut() {
            Some(ep) if e.t - ep.end <= gap => {
                ep.end = e.t;
                ep.mean_triggered |= mean_t;
                ep.std_triggered |= std_t;
            }
            _ => episodes.push(Episode {
                start: e.t,
                end: e.t,
                mean_triggered: mean_t,
                std_triggered: std_t,
            }),
        }
    }
    Ok(episodes)
}

/// Alarms CSV: `t,trigger,mean_value,std_value,mean_thr,std_thr`.
pub fn emit_alarms_csv(
    events: &[AlarmEvent],
    thr: &Thresholds,
    path: &Path,
) -> Result<(), AlarmError> {
    let mut out = String::from("t,trigger,mean_value,std_value,mean_thr,std_thr\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.t, e.trigger, e.mean_value, e.std_value, thr.mean_thr, thr.std_thr
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn save_thresholds(thr: &Thresholds, path: &Path) -> Result<(), AlarmError> {
    let out = format!(
        "sensorfd-thresholds\nformat_version = {}\nmean_thr = {}\nstd_thr = {}\n\
         window_w = {}\nsafety_factor = {}\ncalibration_start = {}\ncalibration_end = {}\n",
        thr.format_version,
        thr.mean_thr,
        thr.std_thr,
        thr.window_w,
        thr.safety_factor,
        thr.calibration_range.start,
        thr.calibration_range.end
    );
    fs::write(path, out)?;
    Ok(())
}

pub fn load_thresholds(path: &Path) -> Result<Thresholds, AlarmError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("sensorfd-thresholds") {
        return Err(AlarmError::CorruptFile("missing magic line".into()));
    }
    let mut kv = std::collections::HashMap::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| AlarmError::CorruptFile(format!("bad line {line:?}")))?;
        kv.insert(k, v);
    }
    let get = |key: &str| -> Result<&str, AlarmError> {
        kv.get(key)
            .copied()
            .ok_or_else(|| AlarmError::CorruptFile(format!("missing key {key:?}")))
    };
    let version: u32 = get("format_version")?
        .parse()
        .map_err(|_| AlarmError::CorruptFile("bad format_version".into()))?;
    if version != THRESHOLDS_FORMAT_VERSION {
        return Err(AlarmError::VersionMismatch {
            found: version,
            supported: THRESHOLDS_FORMAT_VERSION,
        });
    }
    let parse_f = |key: &str| -> Result<f64, AlarmError> {
        get(key)?
            .parse()
            .map_err(|_| AlarmError::CorruptFile(format!("bad float for {key:?}")))
    };
    let parse_i = |key: &str| -> Result<i64, AlarmError> {
        get(key)?
            .parse()
            .map_err(|_| AlarmError::CorruptFile(format!("bad integer for {key:?}")))
    };
    Ok(Thresholds {
        mean_thr: parse_f("mean_thr")?,
        std_thr: parse_f("std_thr")?,
        window_w: parse_i("window_w")? as usize,
        safety_factor: parse_f("safety_factor")?,
        calibration_range: parse_i("calibration_start")?..parse_i("calibration_end")?,
        format_version: version,
    })
}
