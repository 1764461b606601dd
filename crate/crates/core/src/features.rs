//! The causal load features Ω: rolling sum, hourly total, relative
//! consumption, hourly difference, and low/high consumption flags.
//!
//! Every feature is computed in two views:
//!
//! * the *day* view describes a completed day (daily totals and clock hours
//!   are taken in full) and is used when a feature enters a model as a lag;
//! * the *as-of* view at interval `g` only looks at measurements up to and
//!   including `g` and is used for the day that is still in progress.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{LoadSeries, SeriesView};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaConfig {
    /// Trailing window of the rolling sum, in intervals.
    pub rolling_window: usize,
    pub low_flag_ratio: f64,
    pub high_flag_ratio: f64,
    /// Denominators below this are treated as zero.
    pub epsilon_div: f64,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        OmegaConfig {
            rolling_window: 8,
            low_flag_ratio: 0.2,
            high_flag_ratio: 1.5,
            epsilon_div: 1e-9,
        }
    }
}

impl OmegaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rolling_window == 0 {
            return Err(Error::InvalidConfig("rolling_window must be >= 1".into()));
        }
        if !(0.0 < self.low_flag_ratio && self.low_flag_ratio < 1.0 && 1.0 < self.high_flag_ratio) {
            return Err(Error::InvalidConfig(
                "flag ratios must satisfy 0 < low < 1 < high".into(),
            ));
        }
        if self.epsilon_div.is_nan() || self.epsilon_div < 0.0 {
            return Err(Error::InvalidConfig("epsilon_div must be >= 0".into()));
        }
        Ok(())
    }
}

/// One element of Ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Omega {
    RollingSum,
    HourlyTotal,
    RelativeConsumption,
    HourlyDiff,
    LowFlag,
    HighFlag,
}

impl Omega {
    pub const ALL: [Omega; 6] = [
        Omega::RollingSum,
        Omega::HourlyTotal,
        Omega::RelativeConsumption,
        Omega::HourlyDiff,
        Omega::LowFlag,
        Omega::HighFlag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Omega::RollingSum => "rolling_sum",
            Omega::HourlyTotal => "hourly_total",
            Omega::RelativeConsumption => "relative_consumption",
            Omega::HourlyDiff => "hourly_diff",
            Omega::LowFlag => "low_flag",
            Omega::HighFlag => "high_flag",
        }
    }
}

pub const OMEGA_LEN: usize = Omega::ALL.len();

pub type OmegaVector = [f64; OMEGA_LEN];

/// Per-interval feature columns over a load timeline.
///
/// Columns, in schema order: `load`, `day_type`, the six day-view Ω
/// columns, then the six as-of Ω columns prefixed with `asof_`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    k: usize,
    load: Vec<f64>,
    day_type: Vec<f64>,
    day: [Vec<f64>; OMEGA_LEN],
    asof: [Vec<f64>; OMEGA_LEN],
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.load.len()
    }

    /// Intervals per day of the underlying grid.
    pub fn day_len(&self) -> usize {
        self.k
    }

    pub fn schema() -> Vec<String> {
        let mut cols = vec!["load".to_string(), "day_type".to_string()];
        cols.extend(Omega::ALL.iter().map(|w| w.name().to_string()));
        cols.extend(Omega::ALL.iter().map(|w| format!("asof_{}", w.name())));
        cols
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match name {
            "load" => return Some(&self.load),
            "day_type" => return Some(&self.day_type),
            _ => {}
        }
        let (asof, base) = match name.strip_prefix("asof_") {
            Some(rest) => (true, rest),
            None => (false, name),
        };
        let i = Omega::ALL.iter().position(|w| w.name() == base)?;
        Some(if asof { &self.asof[i] } else { &self.day[i] })
    }

    /// Day-view Ω at global interval `g`.
    pub fn day_features(&self, g: usize) -> OmegaVector {
        std::array::from_fn(|i| self.day[i][g])
    }

    /// As-of Ω at global interval `g` (uses measurements `<= g` only).
    pub fn asof_features(&self, g: usize) -> OmegaVector {
        std::array::from_fn(|i| self.asof[i][g])
    }

    /// Writes the matrix as CSV with the schema as header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::schema())?;
        for g in 0..self.rows() {
            let mut rec = vec![self.load[g].to_string(), self.day_type[g].to_string()];
            rec.extend(self.day.iter().map(|c| c[g].to_string()));
            rec.extend(self.asof.iter().map(|c| c[g].to_string()));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Computes Ω for every interval of `series`.
pub fn compute_omega(series: &LoadSeries, cfg: &OmegaConfig) -> Result<FeatureMatrix> {
    if series.num_days() < 2 {
        return Err(Error::InsufficientHistory(format!(
            "feature computation needs 2 complete days, series has {}",
            series.num_days()
        )));
    }
    compute_omega_view(&series.view(), cfg)
}

/// Computes Ω over a view that may end mid-day. The trailing partial day is
/// summarised by whatever of it has been measured.
pub fn compute_omega_view(view: &SeriesView<'_>, cfg: &OmegaConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let y = view.values;
    let n = y.len();
    let k = view.k();
    let h = view.grid.intervals_per_hour();
    let eps = cfg.epsilon_div;

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in y {
        acc += v;
        prefix.push(acc);
    }
    let range_sum = |a: usize, b: usize| prefix[b.min(n)] - prefix[a.min(n)];

    let n_days = n.div_ceil(k);
    let mut day_type = vec![0.0; n];
    for d in 0..n_days {
        let flag = view.day_flag(d)?;
        day_type[d * k..((d + 1) * k).min(n)].fill(flag);
    }

    let mut day: [Vec<f64>; OMEGA_LEN] = std::array::from_fn(|_| vec![0.0; n]);
    let mut asof: [Vec<f64>; OMEGA_LEN] = std::array::from_fn(|_| vec![0.0; n]);

    for g in 0..n {
        let d = g / k;
        let day_start = d * k;
        let day_end = (day_start + k).min(n);
        let hour_start = g - (g - day_start) % h;
        let rolling = range_sum((g + 1).saturating_sub(cfg.rolling_window), g + 1);
        let prev_hour = if hour_start >= h {
            range_sum(hour_start - h, hour_start)
        } else {
            0.0
        };

        let day_total = range_sum(day_start, day_end);
        let day_mean = day_total / (day_end - day_start) as f64;
        let hour_total = range_sum(hour_start, hour_start + h);
        let v = y[g];
        day[0][g] = rolling;
        day[1][g] = hour_total;
        day[2][g] = if day_total < eps { 0.0 } else { v / day_total };
        day[3][g] = hour_total - prev_hour;
        day[4][g] = flag(v < cfg.low_flag_ratio * day_mean);
        day[5][g] = flag(v > cfg.high_flag_ratio * day_mean);

        let cum = range_sum(day_start, g + 1);
        let cum_mean = cum / (g + 1 - day_start) as f64;
        let hour_to_date = range_sum(hour_start, g + 1);
        asof[0][g] = rolling;
        asof[1][g] = hour_to_date;
        asof[2][g] = if cum < eps { 0.0 } else { v / cum };
        asof[3][g] = hour_to_date - prev_hour;
        asof[4][g] = flag(v < cfg.low_flag_ratio * cum_mean);
        asof[5][g] = flag(v > cfg.high_flag_ratio * cum_mean);
    }

    Ok(FeatureMatrix {
        k,
        load: y.to_vec(),
        day_type,
        day,
        asof,
    })
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Last measured Ω before update boundary `boundary` of day `d`.
///
/// The features are the as-of view at slot `boundary - 1` of day `d`; for
/// `boundary == 0` they come from the last slot of day `d - 1`.
pub fn feature_at_boundary(fm: &FeatureMatrix, d: usize, boundary: usize) -> Result<OmegaVector> {
    let k = fm.k;
    if boundary > k {
        return Err(Error::InvalidConfig(format!(
            "boundary {boundary} beyond day length {k}"
        )));
    }
    let g = if boundary == 0 {
        if d == 0 {
            return Err(Error::InsufficientHistory(
                "boundary 0 of day 0 has no preceding measurement".into(),
            ));
        }
        d * k - 1
    } else {
        d * k + boundary - 1
    };
    if g >= fm.rows() {
        return Err(Error::InsufficientHistory(format!(
            "interval {g} not yet measured ({} rows)",
            fm.rows()
        )));
    }
    Ok(fm.asof_features(g))
}
