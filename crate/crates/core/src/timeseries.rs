//! Uniform-grid load series with calendar indexing.
//!
//! A day `d` is split into `K = 1440 / T` intervals indexed by `t`; the load
//! of interval `t` on day `d` lives at flat index `d * K + t`. Forecast updates
//! happen every `K_h` intervals, always aligned to midnight.

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interval length and forecast-update period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub interval_minutes: u32,
    pub update_period_hours: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            interval_minutes: 15,
            update_period_hours: 4,
        }
    }
}

impl GridSpec {
    pub fn new(interval_minutes: u32, update_period_hours: u32) -> Result<Self> {
        let grid = GridSpec {
            interval_minutes,
            update_period_hours,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.interval_minutes;
        if t == 0 || 1440 % t != 0 {
            return Err(Error::InvalidGrid(format!(
                "interval of {t} min does not divide a day"
            )));
        }
        // hourly features need whole intervals per clock hour
        if 60 % t != 0 {
            return Err(Error::InvalidGrid(format!(
                "interval of {t} min does not divide an hour"
            )));
        }
        let th = self.update_period_hours;
        if th == 0 || 24 % th != 0 {
            return Err(Error::InvalidGrid(format!(
                "update period of {th} h does not divide a day"
            )));
        }
        Ok(())
    }

    /// `K`, the number of intervals per day.
    pub fn intervals_per_day(&self) -> usize {
        (1440 / self.interval_minutes) as usize
    }

    /// `K_h`, the number of intervals between two forecast updates.
    pub fn intervals_per_update(&self) -> usize {
        (self.update_period_hours * 60 / self.interval_minutes) as usize
    }

    pub fn intervals_per_hour(&self) -> usize {
        (60 / self.interval_minutes) as usize
    }

    pub fn updates_per_day(&self) -> usize {
        self.intervals_per_day() / self.intervals_per_update()
    }

    pub fn interval(&self) -> Duration {
        Duration::minutes(self.interval_minutes as i64)
    }
}

/// Calendar day type used as the `f_d` regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayType {
    Workday,
    Weekend,
}

impl DayType {
    pub fn of(date: NaiveDate) -> DayType {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Workday,
        }
    }

    pub fn flag(self) -> f64 {
        match self {
            DayType::Workday => 0.0,
            DayType::Weekend => 1.0,
        }
    }
}

/// Previous and next update boundaries around interval `t` of a day.
///
/// Returns `(tau_minus, tau_plus)` with `tau_minus <= t < tau_plus` and the
/// next boundary clamped to the end of the day.
pub fn update_boundaries(grid: &GridSpec, t: usize) -> (usize, usize) {
    let kh = grid.intervals_per_update();
    let k = grid.intervals_per_day();
    let block = t / kh;
    (block * kh, ((block + 1) * kh).min(k))
}

/// An ingested load series: whole days only, all values finite and non-negative.
///
/// Days carry their own calendar dates so that days rejected during ingestion
/// can be dropped while the remaining ones stay contiguous in day-index space.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSeries {
    grid: GridSpec,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl LoadSeries {
    pub fn new(grid: GridSpec, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        let k = grid.intervals_per_day();
        if values.len() != dates.len() * k {
            return Err(Error::Shape(format!(
                "{} values for {} days of {k} intervals",
                values.len(),
                dates.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(format!(
                "day dates not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidData(format!(
                "value {v} at index {i} is not a finite non-negative load"
            )));
        }
        Ok(LoadSeries {
            grid,
            dates,
            values,
        })
    }

    /// Series of consecutive calendar days starting at `start`.
    pub fn from_start(grid: GridSpec, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let k = grid.intervals_per_day();
        if !values.len().is_multiple_of(k) {
            return Err(Error::Shape(format!(
                "{} values is not a whole number of {k}-interval days",
                values.len()
            )));
        }
        let dates = consecutive_dates(start, values.len() / k);
        LoadSeries::new(grid, dates, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_days(&self) -> usize {
        self.dates.len()
    }

    pub fn start_timestamp(&self) -> Option<NaiveDateTime> {
        self.dates.first().map(|d| d.and_hms_opt(0, 0, 0).unwrap())
    }

    /// Loads `y_d(0..K)` of day `d`.
    pub fn day_slice(&self, d: usize) -> Result<&[f64]> {
        if d >= self.num_days() {
            return Err(Error::DayOutOfRange {
                day: d,
                days: self.num_days(),
            });
        }
        let k = self.grid.intervals_per_day();
        Ok(&self.values[d * k..(d + 1) * k])
    }

    pub fn day_type(&self, d: usize) -> DayType {
        DayType::of(self.dates[d])
    }

    pub fn timestamp(&self, g: usize) -> NaiveDateTime {
        self.view().timestamp(g)
    }

    pub fn view(&self) -> SeriesView<'_> {
        SeriesView {
            grid: self.grid,
            calendar: &self.dates,
            values: &self.values,
        }
    }

    /// The first `len` values, with the full calendar still attached.
    pub fn prefix(&self, len: usize) -> SeriesView<'_> {
        SeriesView {
            grid: self.grid,
            calendar: &self.dates,
            values: &self.values[..len.min(self.values.len())],
        }
    }

    /// Applies `f` to every value, keeping grid and calendar.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Result<LoadSeries> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i, v))
            .collect();
        LoadSeries::new(self.grid, self.dates.clone(), values)
    }

    /// Dates of this series followed by `extra` consecutive days after the last one.
    pub fn extended_calendar(&self, extra: usize) -> Vec<NaiveDate> {
        let mut dates = self.dates.clone();
        if let Some(&last) = self.dates.last() {
            dates.extend(consecutive_dates(last + Duration::days(1), extra));
        }
        dates
    }
}

pub(crate) fn consecutive_dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    (0..n).map(|i| start + Duration::days(i as i64)).collect()
}

/// Borrowed load values on a day-aligned grid.
///
/// `values` may end mid-day (a forecast origin); `calendar` may extend beyond
/// the values so that day types of the days being forecast are known.
#[derive(Debug, Clone, Copy)]
pub struct SeriesView<'a> {
    pub grid: GridSpec,
    pub calendar: &'a [NaiveDate],
    pub values: &'a [f64],
}

impl<'a> SeriesView<'a> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn k(&self) -> usize {
        self.grid.intervals_per_day()
    }

    /// Number of days whose K intervals are all present.
    pub fn complete_days(&self) -> usize {
        self.values.len() / self.k()
    }

    pub fn at(&self, d: usize, t: usize) -> f64 {
        self.values[d * self.k() + t]
    }

    pub fn day_flag(&self, d: usize) -> Result<f64> {
        self.calendar
            .get(d)
            .map(|&date| DayType::of(date).flag())
            .ok_or(Error::DayOutOfRange {
                day: d,
                days: self.calendar.len(),
            })
    }

    pub fn timestamp(&self, g: usize) -> NaiveDateTime {
        let k = self.k();
        let (d, t) = (g / k, g % k);
        let date = match self.calendar.get(d) {
            Some(&date) => date,
            None => {
                let last = *self.calendar.last().expect("empty calendar");
                last + Duration::days((d + 1 - self.calendar.len()) as i64)
            }
        };
        date.and_hms_opt(0, 0, 0).unwrap() + self.grid.interval() * t as i32
    }

    pub fn prefix(&self, len: usize) -> SeriesView<'a> {
        SeriesView {
            values: &self.values[..len.min(self.values.len())],
            ..*self
        }
    }
}
