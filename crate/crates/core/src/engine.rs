//! Rolling-origin backtest: retrain every model at the start of each
//! evaluation day on all earlier data, emit forecasts on the update
//! schedule, and score them against the actuals.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::models::{build_forecaster, Forecaster, History};
use crate::timeseries::LoadSeries;

pub const THREADS_ENV: &str = "LOADCAST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One forecast of the whole day at 00:00.
    #[default]
    DayAhead,
    /// One forecast per update period, issued at each update boundary.
    Hourly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub models: Vec<String>,
    /// Parameter blocks keyed by model name.
    pub params: BTreeMap<String, Value>,
    pub mode: Mode,
    /// Intervals per forecast; must equal K (day-ahead) or K_h (hourly).
    pub horizon: Option<usize>,
    pub warmup_days: usize,
    /// First evaluated date (inclusive); defaults to the end of the warm-up.
    pub start: Option<NaiveDate>,
    /// Last evaluated date (inclusive); defaults to the last day of data.
    pub end: Option<NaiveDate>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            models: Vec::new(),
            params: BTreeMap::new(),
            mode: Mode::DayAhead,
            horizon: None,
            warmup_days: 30,
            start: None,
            end: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub model: String,
    /// Time the forecast is issued; every input precedes it.
    pub origin: NaiveDateTime,
    /// Start of the target interval.
    pub target: NaiveDateTime,
    pub day: usize,
    pub slot: usize,
    /// Index of the forecast block within the run.
    pub block: usize,
    pub forecast: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    /// `YYYY-MM`, or `full` for the whole evaluation span.
    pub period: String,
    pub count: usize,
    pub rmse: f64,
    pub mean_actual: f64,
    /// RMSE over the mean actual load; absent when the mean is zero.
    pub relative_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: String,
    pub months: Vec<PeriodMetrics>,
    pub full: PeriodMetrics,
    pub running_avg_rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: Mode,
    pub horizon: usize,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    pub models: Vec<ModelMetrics>,
}

impl MetricsReport {
    pub fn model(&self, name: &str) -> Option<&ModelMetrics> {
        self.models.iter().find(|m| m.model == name)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub records: Vec<ForecastRecord>,
    pub report: MetricsReport,
}

pub fn rmse(records: &[ForecastRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("RMSE of no records".into()));
    }
    let sse: f64 = records
        .iter()
        .map(|r| (r.forecast - r.actual).powi(2))
        .sum();
    Ok((sse / records.len() as f64).sqrt())
}

/// Cumulative mean of per-block RMSE; records must be grouped by block.
pub fn running_avg_rmse(records: &[ForecastRecord]) -> Vec<f64> {
    let mut trace = Vec::new();
    let mut total = 0.0;
    for block in records.chunk_by(|a, b| a.block == b.block && a.model == b.model) {
        total += rmse(block).expect("chunks are non-empty");
        trace.push(total / (trace.len() + 1) as f64);
    }
    trace
}

fn period_metrics(period: String, records: &[ForecastRecord]) -> Result<PeriodMetrics> {
    let rmse = rmse(records)?;
    let mean_actual = records.iter().map(|r| r.actual).sum::<f64>() / records.len() as f64;
    Ok(PeriodMetrics {
        period,
        count: records.len(),
        rmse,
        mean_actual,
        relative_rmse: (mean_actual > 0.0).then(|| rmse / mean_actual),
    })
}

fn model_metrics(model: &str, records: &[ForecastRecord]) -> Result<ModelMetrics> {
    let mut by_month: BTreeMap<(i32, u32), Vec<ForecastRecord>> = BTreeMap::new();
    for r in records {
        by_month
            .entry((r.target.year(), r.target.month()))
            .or_default()
            .push(r.clone());
    }
    let months = by_month
        .into_iter()
        .map(|((y, m), recs)| period_metrics(format!("{y:04}-{m:02}"), &recs))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelMetrics {
        model: model.to_string(),
        months,
        full: period_metrics("full".into(), records)?,
        running_avg_rmse: running_avg_rmse(records),
    })
}

/// Worker count from `LOADCAST_THREADS`; 0 or unset means one per core.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

pub fn run_simulation(
    load: &LoadSeries,
    solar: Option<&LoadSeries>,
    cfg: &SimConfig,
) -> Result<SimulationOutput> {
    if cfg.models.is_empty() {
        return Err(Error::InvalidConfig("no models selected".into()));
    }
    for key in cfg.params.keys() {
        if !cfg.models.contains(key) {
            return Err(Error::InvalidConfig(format!(
                "parameters given for unselected model {key}"
            )));
        }
    }
    let models = cfg
        .models
        .iter()
        .map(|name| build_forecaster(name, cfg.params.get(name), cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    run_simulation_with(load, solar, cfg, models)
}

/// Runs caller-supplied models; `cfg.models` and `cfg.params` are ignored.
pub fn run_simulation_with(
    load: &LoadSeries,
    solar: Option<&LoadSeries>,
    cfg: &SimConfig,
    models: Vec<Box<dyn Forecaster>>,
) -> Result<SimulationOutput> {
    let grid = *load.grid();
    let k = grid.intervals_per_day();
    let block_len = match cfg.mode {
        Mode::DayAhead => k,
        Mode::Hourly => grid.intervals_per_update(),
    };
    if let Some(h) = cfg.horizon {
        if h != block_len {
            return Err(Error::InvalidConfig(format!(
                "{:?} mode requires a horizon of {block_len} intervals, got {h}",
                cfg.mode
            )));
        }
    }
    let mut names: Vec<String> = Vec::new();
    for m in &models {
        if names.iter().any(|n| n == m.name()) {
            return Err(Error::InvalidConfig(format!(
                "model {} listed twice",
                m.name()
            )));
        }
        names.push(m.name().to_string());
        if cfg.warmup_days < m.min_history_days() {
            return Err(Error::InvalidConfig(format!(
                "warmup_days {} is below the {} days {} needs",
                cfg.warmup_days,
                m.min_history_days(),
                m.name()
            )));
        }
        if cfg.mode == Mode::DayAhead && !m.supports_day_ahead() {
            return Err(Error::InvalidConfig(format!(
                "{} only runs in hourly mode",
                m.name()
            )));
        }
        if m.needs_solar() && solar.is_none() {
            return Err(Error::MissingSolar(m.name().to_string()));
        }
    }
    if let Some(s) = solar {
        if s.dates() != load.dates() || s.grid() != load.grid() {
            return Err(Error::InvalidData(
                "solar series does not cover the load calendar".into(),
            ));
        }
    }

    let dates = load.dates();
    let mut first = cfg.warmup_days;
    if let Some(start) = cfg.start {
        first = first.max(dates.partition_point(|d| *d < start));
    }
    let mut last = load.num_days();
    if let Some(end) = cfg.end {
        last = last.min(dates.partition_point(|d| *d <= end));
    }
    if first >= last {
        return Err(Error::InsufficientHistory(format!(
            "no evaluation days: {} days of data, warm-up {}",
            load.num_days(),
            cfg.warmup_days
        )));
    }

    let history = History {
        load: load.view(),
        solar: solar.map(|s| s.values()),
    };
    let blocks_per_day = k / block_len;
    let run_model = |mut model: Box<dyn Forecaster>| -> Result<Vec<ForecastRecord>> {
        let name = model.name().to_string();
        let mut out = Vec::with_capacity((last - first) * k);
        for d in first..last {
            model.retrain(&history, d)?;
            for b in 0..blocks_per_day {
                let origin = d * k + b * block_len;
                let f = model.forecast(&history, origin, block_len)?;
                if f.len() != block_len {
                    return Err(Error::Shape(format!("{name} returned {} values", f.len())));
                }
                let origin_ts = load.timestamp(origin);
                let block = (d - first) * blocks_per_day + b;
                for (j, v) in f.into_iter().enumerate() {
                    let g = origin + j;
                    out.push(ForecastRecord {
                        model: name.clone(),
                        origin: origin_ts,
                        target: load.timestamp(g),
                        day: d,
                        slot: g % k,
                        block,
                        forecast: v,
                        actual: load.values()[g],
                    });
                }
            }
        }
        log::info!("{name}: {} forecasts", out.len());
        Ok(out)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let per_model: Vec<Vec<ForecastRecord>> = pool.install(|| {
        models
            .into_par_iter()
            .map(run_model)
            .collect::<Result<Vec<_>>>()
    })?;

    let mut metrics = Vec::with_capacity(per_model.len());
    for (name, recs) in names.iter().zip(&per_model) {
        metrics.push(model_metrics(name, recs)?);
    }
    let report = MetricsReport {
        mode: cfg.mode,
        horizon: block_len,
        first_day: dates[first],
        last_day: dates[last - 1],
        models: metrics,
    };
    Ok(SimulationOutput {
        records: per_model.into_iter().flatten().collect(),
        report,
    })
}
