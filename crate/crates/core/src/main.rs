//! Command-line pipeline: simulate | inject | train | calibrate | detect |
//! compare | e2e. Each subcommand is a thin composition of library calls.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error, 3 `detect` found
//! alarms (for scripting).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sensorfd::alarm::{emit_alarms_csv, load_thresholds, save_thresholds};
use sensorfd::config::{ModelChoice, RunConfig};
use sensorfd::eval::emit_comparison_csv;
use sensorfd::fault::inject;
use sensorfd::forecast::{load_model, save_model};
use sensorfd::pipeline::{build_model, calibrate_stage, detect_stage, run_e2e};
use sensorfd::series::load_csv;
use sensorfd::sim::generate;

#[derive(Parser)]
#[command(name = "sensorfd", about = "Forecast-based fault detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a key=value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config file seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, String> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path).map_err(|e| e.to_string())?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.set_seed(seed);
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a correlated series pair and write it as CSV.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inject a fault into a series; output carries the fault mask column.
    Inject {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// complete_failure | precision_degradation | drift | bias |
        /// shutter_drop | stuck_replay
        #[arg(long)]
        fault: String,
        /// Fault parameter overrides, e.g. --param start=1000 --param offset=2.5
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Train the configured forecaster on a series file.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// naive | hard_subtraction | tcn_endo | tcn_exo (default from config)
        #[arg(long)]
        model: Option<String>,
    },
    /// Learn alarm thresholds from a fault-free calibration series.
    Calibrate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Raise alarms on a series; exits 3 when any alarm fired.
    Detect {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train all four forecasters and compare their test-range MSE.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline: simulate, inject, train, calibrate, detect, evaluate.
    E2e {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        outdir: PathBuf,
        /// Overrides the configured fault kind.
        #[arg(long)]
        fault: Option<String>,
    },
}

fn parse_model_choice(name: &str) -> Result<ModelChoice, String> {
    match name {
        "naive" => Ok(ModelChoice::Naive),
        "hard_subtraction" => Ok(ModelChoice::HardSubtraction),
        "tcn_endo" => Ok(ModelChoice::TcnEndogenous),
        "tcn_exo" => Ok(ModelChoice::TcnExogenous),
        other => Err(format!("unknown model {other:?}")),
    }
}

fn apply_fault_params(config: &mut RunConfig, params: &[String]) -> Result<(), String> {
    for p in params {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| format!("--param expects key=value, got {p:?}"))?;
        let full_key = format!("fault.{key}");
        // reuse the config parser so types and errors stay consistent
        let line = format!("{full_key} = {value}");
        let merged = RunConfig::parse(&line).map_err(|e| e.to_string())?;
        match key {
            "start" => config.fault_start = merged.fault_start,
            "duration" => config.fault_duration = merged.fault_duration,
            "channel" => config.fault_channel = merged.fault_channel,
            "floor" => config.fault_floor = merged.fault_floor,
            "noise_sd_mult" => config.fault_noise_sd_mult = merged.fault_noise_sd_mult,
            "slope" => config.fault_slope = merged.fault_slope,
            "offset" => config.fault_offset = merged.fault_offset,
            "drop" => config.fault_drop = merged.fault_drop,
            "replay_len" => config.fault_replay_len = merged.fault_replay_len,
            other => return Err(format!("unknown fault parameter {other:?}")),
        }
    }
    Ok(())
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, out } => {
            let config = config.load()?;
            let pair = generate(&config.sim).map_err(|e| e.to_string())?;
            pair.emit_csv(&out).map_err(|e| e.to_string())?;
            println!("wrote {} samples to {}", pair.len(), out.display());
        }
        Command::Inject { config, input, out, fault, params } => {
            let mut config = config.load()?;
            apply_fault_params(&mut config, &params)?;
            let pair = load_csv(&input).map_err(|e| e.to_string())?;
            let spec = config.fault_spec(Some(&fault)).map_err(|e| e.to_string())?;
            let (faulted, mask) = inject(&pair, &spec).map_err(|e| e.to_string())?;
            faulted.emit_csv(&out).map_err(|e| e.to_string())?;
            println!(
                "injected {} over {} samples, wrote {}",
                spec.kind.name(),
                mask.iter().filter(|&&m| m).count(),
                out.display()
            );
        }
        Command::Train { config, data, out, model } => {
            let config = config.load()?;
            let choice = match model {
                Some(name) => parse_model_choice(&name)?,
                None => config.model,
            };
            let pair = load_csv(&data).map_err(|e| e.to_string())?;
            let trained = build_model(&config, choice, &pair).map_err(|e| e.to_string())?;
            save_model(&trained, &out).map_err(|e| e.to_string())?;
            println!("trained {}, wrote {}", trained.name(), out.display());
        }
        Command::Calibrate { config, data, model, out } => {
            let config = config.load()?;
            let pair = load_csv(&data).map_err(|e| e.to_string())?;
            let model = load_model(&model).map_err(|e| e.to_string())?;
            let cal = calibrate_stage(&model, &pair, config.window_w, config.safety_factor)
                .map_err(|e| e.to_string())?;
            save_thresholds(&cal.thresholds, &out).map_err(|e| e.to_string())?;
            println!(
                "thresholds: mean {} std {}, wrote {}",
                cal.thresholds.mean_thr,
                cal.thresholds.std_thr,
                out.display()
            );
        }
        Command::Detect { config: _, data, model, thresholds, out } => {
            let pair = load_csv(&data).map_err(|e| e.to_string())?;
            let model = load_model(&model).map_err(|e| e.to_string())?;
            let thr = load_thresholds(&thresholds).map_err(|e| e.to_string())?;
            let det = detect_stage(&model, &pair, &thr).map_err(|e| e.to_string())?;
            emit_alarms_csv(&det.events, &thr, &out).map_err(|e| e.to_string())?;
            println!("{} alarms, wrote {}", det.events.len(), out.display());
            if !det.events.is_empty() {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Compare { config, data, out } => {
            let config = config.load()?;
            let pair = load_csv(&data).map_err(|e| e.to_string())?;
            let (train_slice, _, test_slice) =
                pair.split(&config.split).map_err(|e| e.to_string())?;
            let choices = [
                ModelChoice::Naive,
                ModelChoice::HardSubtraction,
                ModelChoice::TcnEndogenous,
                ModelChoice::TcnExogenous,
            ];
            let mut models = Vec::new();
            for choice in choices {
                models.push(build_model(&config, choice, &train_slice).map_err(|e| e.to_string())?);
            }
            let refs: Vec<&_> = models.iter().collect();
            let report = sensorfd::eval::compare_models(
                &test_slice,
                &refs,
                test_slice.start_index()..test_slice.end_index() + 1,
            )
            .map_err(|e| e.to_string())?;
            emit_comparison_csv(&report, &out).map_err(|e| e.to_string())?;
            for row in &report.rows {
                println!("{}: mse {}", row.model_name, row.mse);
            }
        }
        Command::E2e { config, outdir, fault } => {
            let config = config.load()?;
            let summary =
                run_e2e(&config, &outdir, fault.as_deref()).map_err(|e| e.to_string())?;
            println!(
                "fault at {}: {} alarms, first at {:?} (latency {:?})",
                summary.detection.fault_start,
                summary.events.len(),
                summary.detection.first_alarm,
                summary.detection.latency
            );
            for row in &summary.comparison.rows {
                println!("{}: mse {}", row.model_name, row.mse);
            }
            println!("reports written to {}", outdir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
