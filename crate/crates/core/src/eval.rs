//! Model comparison, detection metrics against ground-truth fault masks,
//! and plot-ready CSV report emission.

use std::fs;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use crate::alarm::{AlarmEvent, ResidueStats, Thresholds, Trigger};
use crate::forecast::{forecast_series, ForecastSeries, TrainedModel};
use crate::series::{Channel, SeriesPair};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model_name: String,
    pub mse: f64,
    pub range: Range<i64>,
}

/// Per-model MSE on an identical index range, so values are comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub fault_start: i64,
    pub first_alarm: Option<i64>,
    /// first_alarm - fault_start, in samples.
    pub latency: Option<i64>,
    pub mean_triggered: bool,
    pub std_triggered: bool,
    pub false_alarms_prefault: usize,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("actual and forecast ranges do not overlap")]
    NoOverlap,
    #[error("models share no common forecastable range")]
    NoCommonRange,
    #[error("ground-truth mask marks no fault")]
    NoFaultInMask,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Mean squared error between the target channel and a forecast over their
/// overlapping range.
pub fn mse(actual: &SeriesPair, forecast: &ForecastSeries) -> Result<f64, EvalError> {
    let start = actual.start_index().max(forecast.start);
    let end = actual.end_index().min(forecast.end());
    if start > end {
        return Err(EvalError::NoOverlap);
    }
    let n = (end - start + 1) as f64;
    let sum: f64 = (start..=end)
        .map(|t| {
            let y = actual.value_at(t, Channel::G).expect("t in range");
            let yhat = forecast.at(t).expect("t in range");
            (y - yhat).powi(2)
        })
        .sum();
    Ok(sum / n)
}

/// Evaluates every model on the intersection of their feasible forecast
/// ranges within `test_range`, so differing warm-up windows stay fair.
pub fn compare_models(
    pair: &SeriesPair,
    models: &[&TrainedModel],
    test_range: Range<i64>,
) -> Result<ComparisonReport, EvalError> {
    let mut forecasts = Vec::with_capacity(models.len());
    let mut common_start = test_range.start;
    let mut common_end = test_range.end - 1;
    for model in models {
        let f = forecast_series(model, pair).map_err(|_| EvalError::NoCommonRange)?;
        common_start = common_start.max(f.start);
        common_end = common_end.min(f.end());
        forecasts.push(f);
    }
    common_end = common_end.min(pair.end_index());
    if common_start > common_end {
        return Err(EvalError::NoCommonRange);
    }
    let n = (common_end - common_start + 1) as f64;
    let rows = models
        .iter()
        .zip(&forecasts)
        .map(|(model, f)| {
            let sum: f64 = (common_start..=common_end)
                .map(|t| {
                    let y = pair.value_at(t, Channel::G).expect("t in range");
                    (y - f.at(t).expect("t in range")).powi(2)
                })
                .sum();
            ComparisonRow {
                model_name: model.name(),
                mse: sum / n,
                range: common_start..common_end + 1,
            }
        })
        .collect();
    Ok(ComparisonReport { rows })
}

/// Summarizes alarms against a ground-truth mask. `mask[i]` covers the
/// series position `i` relative to `series_start`.
pub fn detection_report(
    events: &[AlarmEvent],
    mask: &[bool],
    series_start: i64,
    warmup: i64,
) -> Result<DetectionReport, EvalError> {
    let fault_start = mask
        .iter()
        .position(|&m| m)
        .map(|i| series_start + i as i64)
        .ok_or(EvalError::NoFaultInMask)?;
    let first_alarm = events.iter().map(|e| e.t).find(|&t| t >= fault_start);
    let mut mean_triggered = false;
    let mut std_triggered = false;
    for e in events.iter().filter(|e| e.t >= fault_start) {
        mean_triggered |= matches!(e.trigger, Trigger::Mean | Trigger::Both);
        std_triggered |= matches!(e.trigger, Trigger::Std | Trigger::Both);
    }
    let false_alarms_prefault = events
        .iter()
        .filter(|e| e.t >= warmup && e.t < fault_start)
        .count();
    Ok(DetectionReport {
        fault_start,
        first_alarm,
        latency: first_alarm.map(|t| t - fault_start),
        mean_triggered,
        std_triggered,
        false_alarms_prefault,
    })
}

/// Comparison CSV: `model,mse,range_start,range_end`.
pub fn emit_comparison_csv(report: &ComparisonReport, path: &Path) -> Result<(), EvalError> {
    let mut out = String::from("model,mse,range_start,range_end\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.model_name, row.mse, row.range.start, row.range.end
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Detection CSV: `fault_start,first_alarm,latency,triggers,false_alarms_prefault`.
pub fn emit_detection_csv(report: &DetectionReport, path: &Path) -> Result<(), EvalError> {
    let opt = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
    let triggers = match (report.mean_triggered, report.std_triggered) {
        (true, true) => "mean+std",
        (true, false) => "mean",
        (false, true) => "std",
        (false, false) => "",
    };
    let out = format!(
        "fault_start,first_alarm,latency,triggers,false_alarms_prefault\n{},{},{},{},{}\n",
        report.fault_start,
        opt(report.first_alarm),
        opt(report.latency),
        triggers,
        report.false_alarms_prefault
    );
    fs::write(path, out)?;
    Ok(())
}

/// Plot-ready trace CSV over the detection range:
/// `t,actual,forecast,residue,mean_stat,std_stat,mean_thr,std_thr,alarm`.
/// Rows cover the forecast range; statistics cells are empty while the
/// rolling window is still filling.
#[allow(clippy::too_many_arguments)]
pub fn emit_trace_csv(
    pair: &SeriesPair,
    forecast: &ForecastSeries,
    stats: &ResidueStats,
    thr: &Thresholds,
    events: &[AlarmEvent],
    path: &Path,
) -> Result<(), EvalError> {
    let start = pair.start_index().max(forecast.start);
    let end = pair.end_index().min(forecast.end());
    if start > end {
        return Err(EvalError::NoOverlap);
    }
    let mut out = String::from("t,actual,forecast,residue,mean_stat,std_stat,mean_thr,std_thr,alarm\n");
    let alarm_at = |t: i64| events.iter().any(|e| e.t == t);
    for t in start..=end {
        let y = pair.value_at(t, Channel::G).expect("t in range");
        let yhat = forecast.at(t).expect("t in range");
        let stat_idx = t - stats.start;
        let (m, s) = if stat_idx >= 0 && (stat_idx as usize) < stats.mean_stat.len() {
            let i = stat_idx as usize;
            (stats.mean_stat[i].to_string(), stats.std_stat[i].to_string())
        } else {
            (String::new(), String::new())
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t,
            y,
            yhat,
            y - yhat,
            m,
            s,
            thr.mean_thr,
            thr.std_thr,
            if alarm_at(t) { 1 } else { 0 }
        ));
    }
    fs::write(path, out)?;
    Ok(())
}
