//! Persistence-based autoregressive models: PAR, PARW (with solar input),
//! and the hourly PARH / PAReH variants.
//!
//! A row for global interval `g` on day `d` is
//! `[y(g-1), …, y(g-n), PM_nday(d, t)]`, plus `solar(g)` for PARW and
//! `PM_nsameday(d, t)` for PAReH. Training rows use actual lags; forecasts
//! substitute earlier forecasts for lags at or after the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::{DesignMatrix, LeastSquares, LinearModel};
use crate::persistence::{persistence_value, PersistenceConfig};
use crate::timeseries::{LoadSeries, SeriesView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParVariant {
    #[default]
    Par,
    Parw,
    Parh,
    Pareh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParConfig {
    /// Number of autoregressive lags `n`.
    pub ar_order: usize,
    /// History `N` of the N-day persistence column.
    pub history_days: usize,
    /// History of the N-same-day column (PAReH only).
    pub same_day_history: usize,
    #[serde(skip)]
    pub variant: ParVariant,
}

impl Default for ParConfig {
    fn default() -> Self {
        ParConfig {
            ar_order: 4,
            history_days: 10,
            same_day_history: 4,
            variant: ParVariant::Par,
        }
    }
}

impl ParConfig {
    pub fn with_variant(variant: ParVariant) -> Self {
        ParConfig {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ar_order == 0 || self.history_days == 0 || self.same_day_history == 0 {
            return Err(Error::InvalidConfig(
                "PAR ar_order, history_days and same_day_history must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn uses_solar(&self) -> bool {
        self.variant == ParVariant::Parw
    }

    fn n_day(&self) -> PersistenceConfig {
        PersistenceConfig::n_day(self.history_days)
    }

    fn same_day(&self) -> Option<PersistenceConfig> {
        (self.variant == ParVariant::Pareh)
            .then(|| PersistenceConfig::n_same_day(self.same_day_history))
    }

    /// First day whose intervals can form a training row.
    pub fn first_row_day(&self) -> usize {
        let mut d = self.history_days;
        if let Some(s) = self.same_day() {
            d = d.max(s.required_days());
        }
        d
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = (1..=self.ar_order).map(|i| format!("lag_{i}")).collect();
        cols.push("pm_n_day".into());
        if self.uses_solar() {
            cols.push("solar".into());
        }
        if self.same_day().is_some() {
            cols.push("pm_n_same_day".into());
        }
        cols
    }
}

/// Row for interval `g`; `lag(i)` supplies `y(g - i)`.
fn row(
    view: &SeriesView<'_>,
    solar: Option<&[f64]>,
    cfg: &ParConfig,
    g: usize,
    lag: impl Fn(usize) -> f64,
) -> Vec<f64> {
    let k = view.k();
    let (d, t) = (g / k, g % k);
    let mut r: Vec<f64> = (1..=cfg.ar_order).map(lag).collect();
    r.push(persistence_value(view, &cfg.n_day(), d, t));
    if cfg.uses_solar() {
        r.push(solar.expect("checked by caller")[g]);
    }
    if let Some(s) = cfg.same_day() {
        r.push(persistence_value(view, &s, d, t));
    }
    r
}

fn check_solar(cfg: &ParConfig, solar: Option<&[f64]>, needed: usize) -> Result<()> {
    if !cfg.uses_solar() {
        return Ok(());
    }
    match solar {
        None => Err(Error::MissingSolar("parw".into())),
        Some(s) if s.len() < needed => Err(Error::InvalidData(format!(
            "solar series covers {} intervals, {needed} needed",
            s.len()
        ))),
        Some(_) => Ok(()),
    }
}

/// Feeds the training rows of days `from_day..to_day` into `sink`.
pub(crate) fn for_each_training_row(
    view: &SeriesView<'_>,
    solar: Option<&[f64]>,
    cfg: &ParConfig,
    from_day: usize,
    to_day: usize,
    mut sink: impl FnMut(Vec<f64>, f64) -> Result<()>,
) -> Result<()> {
    let k = view.k();
    check_solar(cfg, solar, to_day * k)?;
    let start = from_day.max(cfg.first_row_day()) * k;
    let y = view.values;
    for g in start.max(cfg.ar_order)..to_day * k {
        sink(row(view, solar, cfg, g, |i| y[g - i]), y[g])?;
    }
    Ok(())
}

/// Design matrix and targets over every trainable interval of `series`.
pub fn build_design_par(
    series: &LoadSeries,
    cfg: &ParConfig,
    solar: Option<&LoadSeries>,
) -> Result<(DesignMatrix, Vec<f64>)> {
    cfg.validate()?;
    let days = series.num_days();
    if days <= cfg.first_row_day() {
        return Err(Error::InsufficientHistory(format!(
            "PAR design needs more than {} days, series has {days}",
            cfg.first_row_day()
        )));
    }
    let solar_values = solar.map(|s| s.values());
    let mut design = DesignMatrix::new(cfg.columns());
    let mut target = Vec::new();
    for_each_training_row(&series.view(), solar_values, cfg, 0, days, |r, y| {
        design.push_row(&r)?;
        target.push(y);
        Ok(())
    })?;
    Ok((design, target))
}

/// Least-squares state that absorbs whole days as they become available.
#[derive(Debug, Clone)]
pub(crate) struct ParTrainer {
    cfg: ParConfig,
    ls: LeastSquares,
    absorbed_days: usize,
}

impl ParTrainer {
    pub fn new(cfg: ParConfig) -> Self {
        ParTrainer {
            ls: LeastSquares::new(cfg.columns().len()),
            cfg,
            absorbed_days: 0,
        }
    }

    pub fn train(&mut self, view: &SeriesView<'_>, solar: Option<&[f64]>) -> Result<LinearModel> {
        let days = view.complete_days();
        if days <= self.cfg.first_row_day() {
            return Err(Error::InsufficientHistory(format!(
                "PAR training needs more than {} days",
                self.cfg.first_row_day()
            )));
        }
        let ls = &mut self.ls;
        for_each_training_row(view, solar, &self.cfg, self.absorbed_days, days, |r, y| {
            ls.push(&r, y)
        })?;
        self.absorbed_days = days;
        LinearModel::from_least_squares(self.cfg.columns(), &self.ls)
    }
}

/// Recursive multi-step forecast for `origin..origin + horizon`.
///
/// Only `series.values[..origin]` is read; lags at or after the origin come
/// from earlier steps of this forecast.
pub fn par_forecast(
    model: &LinearModel,
    series: &SeriesView<'_>,
    cfg: &ParConfig,
    origin: usize,
    horizon: usize,
    solar: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let k = series.k();
    let view = series.prefix(origin);
    if origin > series.len() {
        return Err(Error::InsufficientHistory(format!(
            "origin {origin} beyond the {} observed intervals",
            series.len()
        )));
    }
    if horizon == 0 {
        return Ok(Vec::new());
    }
    let last_day = (origin + horizon - 1) / k;
    if last_day * k > origin {
        return Err(Error::InsufficientHistory(
            "PAR horizon crosses into a day whose predecessor is not yet observed".into(),
        ));
    }
    if last_day < cfg.first_row_day() || origin < cfg.ar_order {
        return Err(Error::InsufficientHistory(format!(
            "PAR forecast needs {} days of history",
            cfg.first_row_day()
        )));
    }
    check_solar(cfg, solar, origin + horizon)?;
    let mut out: Vec<f64> = Vec::with_capacity(horizon);
    for j in 0..horizon {
        let g = origin + j;
        let r = row(&view, solar, cfg, g, |i| {
            if g - i < origin {
                view.values[g - i]
            } else {
                out[g - i - origin]
            }
        });
        out.push(model.predict(&r)?);
    }
    Ok(out)
}
