//! Forecast-based fault detection for paired sensor streams.
//!
//! The pipeline has three stages: one-step-ahead forecasting of a target
//! signal G from its own history or from a correlated leading signal C,
//! rolling analysis of the forecast residue, and threshold alarms whose
//! limits are learned on fault-free calibration data.
//!
//! Modules:
//! - [`series`]: domain types, CSV ingestion, windowing, splitting
//! - [`sim`]: deterministic correlated-signal simulator
//! - [`forecast`]: Naive, Hard Subtraction, and TCN forecasters with training
//! - [`alarm`]: residue statistics, threshold calibration, alarm generation
//! - [`fault`]: synthetic fault injection with ground-truth masks
//! - [`eval`]: model comparison and detection metrics
//! - [`config`] and [`pipeline`]: run configuration and end-to-end wiring
//!
//! See the crate examples for runnable walkthroughs of each capability, and
//! the `sensorfd` binary for the command-line pipeline.

pub mod alarm;
pub mod config;
pub mod eval;
pub mod fault;
pub mod forecast;
pub mod pipeline;
pub mod series;
pub mod sim;

pub use config::RunConfig;
pub use series::{Channel, Record, SeriesPair, SplitSpec};
