//! N-day and N-same-day persistence forecasters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{LoadSeries, SeriesView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersistenceKind {
    /// Mean over the previous `N` calendar days.
    NDay,
    /// Mean over the previous `N` days with the same weekday position.
    NSameDay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistenceConfig {
    pub kind: PersistenceKind,
    pub history_days: usize,
}

impl PersistenceConfig {
    pub fn n_day(history_days: usize) -> Self {
        PersistenceConfig {
            kind: PersistenceKind::NDay,
            history_days,
        }
    }

    pub fn n_same_day(history_days: usize) -> Self {
        PersistenceConfig {
            kind: PersistenceKind::NSameDay,
            history_days,
        }
    }

    /// Complete days needed before the first forecastable day.
    pub fn required_days(&self) -> usize {
        match self.kind {
            PersistenceKind::NDay => self.history_days,
            PersistenceKind::NSameDay => 7 * self.history_days,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.history_days == 0 {
            return Err(Error::InvalidConfig(
                "persistence history_days must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn days_back(&self) -> impl Iterator<Item = usize> + '_ {
        let step = match self.kind {
            PersistenceKind::NDay => 1,
            PersistenceKind::NSameDay => 7,
        };
        (1..=self.history_days).map(move |i| i * step)
    }
}

/// Forecast `ŷ_d(t)` for all `t` of day `d`.
///
/// `d` may equal the number of days in the series (the day after the data).
pub fn persist_forecast(
    series: &LoadSeries,
    cfg: &PersistenceConfig,
    d: usize,
) -> Result<Vec<f64>> {
    let view = series.view();
    check_history(&view, cfg, d)?;
    Ok((0..view.k())
        .map(|t| persistence_value(&view, cfg, d, t))
        .collect())
}

pub(crate) fn check_history(
    view: &SeriesView<'_>,
    cfg: &PersistenceConfig,
    d: usize,
) -> Result<()> {
    cfg.validate()?;
    if d < cfg.required_days() {
        return Err(Error::InsufficientHistory(format!(
            "day {d} needs {} previous days",
            cfg.required_days()
        )));
    }
    if d > view.complete_days() {
        return Err(Error::InsufficientHistory(format!(
            "day {d} is more than one day past the {} complete days",
            view.complete_days()
        )));
    }
    Ok(())
}

/// `ŷ_d(t)`; callers guarantee the contributing days exist.
pub(crate) fn persistence_value(
    view: &SeriesView<'_>,
    cfg: &PersistenceConfig,
    d: usize,
    t: usize,
) -> f64 {
    let sum: f64 = cfg.days_back().map(|back| view.at(d - back, t)).sum();
    sum / cfg.history_days as f64
}
