//! Short-term electricity load forecasting: persistence, Holt-Winters,
//! seasonal ARIMA, periodic AR and feature-based regressors, evaluated by a
//! rolling-origin backtest over 15-minute load data.

pub mod config;
pub mod engine;
pub mod error;
pub mod features;
pub mod holt_winters;
pub mod io;
pub mod mlp;
pub mod models;
pub mod ols;
pub mod par;
pub mod persistence;
pub mod sarima;
pub mod simplex;
pub mod spr;
pub mod synth;
pub mod timeseries;

pub use config::RunConfig;
pub use engine::{
    run_simulation, ForecastRecord, MetricsReport, Mode, SimConfig, SimulationOutput,
};
pub use error::{Error, Result};
pub use models::{build_forecaster, Forecaster, History, MODEL_NAMES};
pub use synth::{generate, SynthConfig, SynthOutput};
pub use timeseries::{GridSpec, LoadSeries, SeriesView};
