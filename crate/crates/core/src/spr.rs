//! Seasonal persistence-regressive models over the Ω feature set.
//!
//! SPR regresses `y_d(t)` on the day-type flag, the same slot one and seven
//! days back, and the day-view Ω of those days. SPRH uses lags `1..=N` and
//! adds two blocks tied to the hourly update schedule: the as-of Ω at the
//! last slot measured before the current update boundary, and the previous
//! day's Ω at the slot just before the next boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    compute_omega_view, feature_at_boundary, FeatureMatrix, Omega, OmegaConfig, OMEGA_LEN,
};
use crate::ols::{DesignMatrix, LeastSquares, LinearModel};
use crate::timeseries::{update_boundaries, LoadSeries, SeriesView};

/// Day lags of SPR.
pub const SPR_LAGS: [usize; 2] = [1, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SprVariant {
    Spr,
    Sprh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SprConfig {
    /// SPRH history `N`; SPR always uses lags {1, 7}.
    pub history_days: usize,
    pub omega: OmegaConfig,
}

impl Default for SprConfig {
    fn default() -> Self {
        SprConfig {
            history_days: 7,
            omega: OmegaConfig::default(),
        }
    }
}

impl SprConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history_days == 0 {
            return Err(Error::InvalidConfig(
                "SPRH history_days must be >= 1".into(),
            ));
        }
        self.omega.validate()
    }

    pub fn lags(&self, variant: SprVariant) -> Vec<usize> {
        match variant {
            SprVariant::Spr => SPR_LAGS.to_vec(),
            SprVariant::Sprh => (1..=self.history_days).collect(),
        }
    }

    /// Smallest day index with a full row.
    pub fn first_day(&self, variant: SprVariant) -> usize {
        self.lags(variant).into_iter().max().unwrap_or(0) + 1
    }

    pub fn columns(&self, variant: SprVariant) -> Vec<String> {
        let lags = self.lags(variant);
        let mut cols = vec!["day_type".to_string()];
        cols.extend(lags.iter().map(|m| format!("load_lag{m}")));
        for m in &lags {
            cols.extend(Omega::ALL.iter().map(|w| format!("{}_lag{m}", w.name())));
        }
        if variant == SprVariant::Sprh {
            cols.extend(
                Omega::ALL
                    .iter()
                    .map(|w| format!("{}_prev_update", w.name())),
            );
            cols.extend(
                Omega::ALL
                    .iter()
                    .map(|w| format!("{}_next_update_yesterday", w.name())),
            );
        }
        cols
    }
}

/// Ω over the days a row for day `d` can touch, plus one day of padding so
/// rolling windows and hourly differences at the first used day are exact.
struct LocalFeatures {
    fm: FeatureMatrix,
    base_day: usize,
}

impl LocalFeatures {
    fn new(view: &SeriesView<'_>, cfg: &SprConfig, variant: SprVariant, d: usize) -> Result<Self> {
        let k = view.k();
        let max_lag = cfg.first_day(variant) - 1;
        let base_day = d.saturating_sub(max_lag + 1);
        let end = view.len().min((d + 1) * k);
        let window = SeriesView {
            grid: view.grid,
            calendar: &view.calendar[base_day.min(view.calendar.len())..],
            values: &view.values[base_day * k..end],
        };
        Ok(LocalFeatures {
            fm: compute_omega_view(&window, &cfg.omega)?,
            base_day,
        })
    }

    fn day(&self, d: usize, t: usize) -> [f64; OMEGA_LEN] {
        self.fm.day_features((d - self.base_day) * self.fm_k() + t)
    }

    fn fm_k(&self) -> usize {
        self.fm.day_len()
    }
}

fn check_row(
    view: &SeriesView<'_>,
    cfg: &SprConfig,
    variant: SprVariant,
    d: usize,
    t: usize,
) -> Result<()> {
    let k = view.k();
    if t >= k {
        return Err(Error::InvalidConfig(format!(
            "interval {t} outside a {k}-slot day"
        )));
    }
    if d < cfg.first_day(variant) {
        return Err(Error::InsufficientHistory(format!(
            "{variant:?} rows need day index >= {}, got {d}",
            cfg.first_day(variant)
        )));
    }
    if view.complete_days() < d {
        return Err(Error::InsufficientHistory(format!(
            "day {} is not complete",
            view.complete_days()
        )));
    }
    Ok(())
}

fn row_from(
    view: &SeriesView<'_>,
    local: &LocalFeatures,
    cfg: &SprConfig,
    variant: SprVariant,
    d: usize,
    t: usize,
) -> Result<Vec<f64>> {
    let lags = cfg.lags(variant);
    let mut row = Vec::with_capacity(1 + lags.len() * (1 + OMEGA_LEN) + 2 * OMEGA_LEN);
    row.push(view.day_flag(d)?);
    row.extend(lags.iter().map(|m| view.at(d - m, t)));
    for m in &lags {
        row.extend(local.day(d - m, t));
    }
    if variant == SprVariant::Sprh {
        let (tau_minus, tau_plus) = update_boundaries(&view.grid, t);
        row.extend(feature_at_boundary(
            &local.fm,
            d - local.base_day,
            tau_minus,
        )?);
        let slot = (tau_plus - 1).min(view.k() - 1);
        row.extend(local.day(d - 1, slot));
    }
    Ok(row)
}

/// SPR row for day `d`, slot `t`; `fm` must be computed over the whole series.
pub fn build_design_spr(
    series: &LoadSeries,
    fm: &FeatureMatrix,
    cfg: &SprConfig,
    d: usize,
    t: usize,
) -> Result<Vec<f64>> {
    build_row(series, fm, cfg, SprVariant::Spr, d, t)
}

/// SPRH row for day `d`, slot `t`; `fm` must be computed over the whole series.
pub fn build_design_sprh(
    series: &LoadSeries,
    fm: &FeatureMatrix,
    cfg: &SprConfig,
    d: usize,
    t: usize,
) -> Result<Vec<f64>> {
    build_row(series, fm, cfg, SprVariant::Sprh, d, t)
}

fn build_row(
    series: &LoadSeries,
    fm: &FeatureMatrix,
    cfg: &SprConfig,
    variant: SprVariant,
    d: usize,
    t: usize,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let view = series.view();
    check_row(&view, cfg, variant, d, t)?;
    if d >= series.num_days() {
        return Err(Error::DayOutOfRange {
            day: d,
            days: series.num_days(),
        });
    }
    if fm.rows() != series.len() {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows, series {}",
            fm.rows(),
            series.len()
        )));
    }
    let local = LocalFeatures {
        fm: fm.clone(),
        base_day: 0,
    };
    row_from(&view, &local, cfg, variant, d, t)
}

/// Rows of day `d` for slots `slots`, computed from data in `view` only.
pub(crate) fn day_rows(
    view: &SeriesView<'_>,
    cfg: &SprConfig,
    variant: SprVariant,
    d: usize,
    slots: std::ops::Range<usize>,
) -> Result<Vec<Vec<f64>>> {
    if slots.is_empty() {
        return Ok(Vec::new());
    }
    check_row(view, cfg, variant, d, slots.end - 1)?;
    let local = LocalFeatures::new(view, cfg, variant, d)?;
    slots
        .map(|t| row_from(view, &local, cfg, variant, d, t))
        .collect()
}

/// Full design over every complete day with a row.
pub fn build_design(
    series: &LoadSeries,
    cfg: &SprConfig,
    variant: SprVariant,
) -> Result<(DesignMatrix, Vec<f64>)> {
    cfg.validate()?;
    let view = series.view();
    let k = view.k();
    let first = cfg.first_day(variant);
    if series.num_days() <= first {
        return Err(Error::InsufficientHistory(format!(
            "{variant:?} design needs more than {first} days"
        )));
    }
    let mut design = DesignMatrix::new(cfg.columns(variant));
    let mut target = Vec::new();
    for d in first..series.num_days() {
        for (t, r) in day_rows(&view, cfg, variant, d, 0..k)?
            .into_iter()
            .enumerate()
        {
            design.push_row(&r)?;
            target.push(view.at(d, t));
        }
    }
    Ok((design, target))
}

/// Incremental OLS over whole days for SPR and SPRH.
#[derive(Debug, Clone)]
pub(crate) struct SprTrainer {
    cfg: SprConfig,
    variant: SprVariant,
    ls: LeastSquares,
    next_day: usize,
}

impl SprTrainer {
    pub fn new(cfg: SprConfig, variant: SprVariant) -> Self {
        SprTrainer {
            ls: LeastSquares::new(cfg.columns(variant).len()),
            next_day: cfg.first_day(variant),
            cfg,
            variant,
        }
    }

    pub fn train(&mut self, view: &SeriesView<'_>) -> Result<LinearModel> {
        let k = view.k();
        let days = view.complete_days();
        if days <= self.cfg.first_day(self.variant) {
            return Err(Error::InsufficientHistory(format!(
                "{:?} training needs more than {} days",
                self.variant,
                self.cfg.first_day(self.variant)
            )));
        }
        for d in self.next_day..days {
            for (t, r) in day_rows(view, &self.cfg, self.variant, d, 0..k)?
                .into_iter()
                .enumerate()
            {
                self.ls.push(&r, view.at(d, t))?;
            }
        }
        self.next_day = self.next_day.max(days);
        LinearModel::from_least_squares(self.cfg.columns(self.variant), &self.ls)
    }
}

/// Forecasts slots `origin..origin + horizon` of a single day.
///
/// Rows read only `series.values[..origin]`: the lagged days are complete
/// and the current day's features are as-of the last measured slot.
pub fn spr_forecast(
    model: &LinearModel,
    series: &SeriesView<'_>,
    cfg: &SprConfig,
    variant: SprVariant,
    origin: usize,
    horizon: usize,
) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Ok(Vec::new());
    }
    let k = series.k();
    let (d, t0) = (origin / k, origin % k);
    if t0 + horizon > k {
        return Err(Error::InvalidConfig(
            "SPR forecasts stay within one day".into(),
        ));
    }
    if origin > series.len() {
        return Err(Error::InsufficientHistory(format!(
            "origin {origin} beyond the {} observed intervals",
            series.len()
        )));
    }
    if variant == SprVariant::Sprh {
        let (tau_minus, _) = update_boundaries(&series.grid, t0);
        if tau_minus != t0 || update_boundaries(&series.grid, t0 + horizon - 1).0 != t0 {
            return Err(Error::InvalidConfig(
                "SPRH forecasts start at an update boundary and cover one update period".into(),
            ));
        }
    }
    let view = series.prefix(origin);
    day_rows(&view, cfg, variant, d, t0..t0 + horizon)?
        .iter()
        .map(|r| model.predict(r))
        .collect()
}
