//! Seeded synthetic community load (and optional solar irradiance).
//!
//! Each day is the base profile scaled by day type. The morning-activity
//! window of the profile may move an hour earlier or later, drawn
//! independently per day, and Gaussian noise is added and clipped at zero.

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{consecutive_dates, DayType, GridSpec, LoadSeries};

/// Hourly anchors (kW at hh:00) of the default profile: night trough, a
/// sharp morning peak, a midday dip, and the evening peak.
const HOURLY_PROFILE: [f64; 24] = [
    0.45, 0.40, 0.38, 0.37, 0.38, 0.45, 0.80, 1.45, 1.10, 0.70, 0.62, 0.66, 0.78, 0.70, 0.58, 0.56,
    0.64, 0.85, 1.15, 1.32, 1.25, 1.05, 0.80, 0.58,
];

const LOAD_STREAM: u64 = 1;
const SHIFT_STREAM: u64 = 2;
const SOLAR_STREAM: u64 = 3;

/// Default 96-slot profile, linearly interpolated between hourly anchors.
pub fn default_profile() -> Vec<f64> {
    (0..96)
        .map(|t| {
            let (h, q) = (t / 4, (t % 4) as f64 / 4.0);
            HOURLY_PROFILE[h] * (1.0 - q) + HOURLY_PROFILE[(h + 1) % 24] * q
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub days: usize,
    pub seed: u64,
    pub start: NaiveDate,
    /// kW per 15-minute slot.
    pub base_profile: Vec<f64>,
    pub weekday_scale: f64,
    pub weekend_scale: f64,
    /// Standard deviation of the additive noise (kW).
    pub noise_std: f64,
    /// Per-day probability that the morning window moves by ±`shift_slots`.
    pub shift_probability: f64,
    /// Slots `[from, to)` forming the morning-activity window.
    pub morning_window: (usize, usize),
    pub shift_slots: usize,
    pub solar: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            days: 365,
            seed: 2016,
            start: NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
            base_profile: default_profile(),
            weekday_scale: 1.0,
            weekend_scale: 1.25,
            noise_std: 0.05,
            shift_probability: 0.3,
            morning_window: (16, 48),
            shift_slots: 4,
            solar: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let k = self.base_profile.len();
        if self.days == 0 {
            return Err(Error::InvalidConfig(
                "synthetic data needs at least one day".into(),
            ));
        }
        if k != 96 {
            return Err(Error::InvalidConfig(format!(
                "base profile has {k} slots, expected 96"
            )));
        }
        if self.base_profile.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "base profile must be finite and non-negative".into(),
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig("noise_std must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.shift_probability) {
            return Err(Error::InvalidConfig(
                "shift_probability must lie in [0, 1]".into(),
            ));
        }
        if self.weekday_scale < 0.0 || self.weekend_scale < 0.0 {
            return Err(Error::InvalidConfig("day-type scales must be >= 0".into()));
        }
        let (a, b) = self.morning_window;
        if a > b || b > k || (a < b && (a < self.shift_slots || b + self.shift_slots > k)) {
            return Err(Error::InvalidConfig(format!(
                "morning window {a}..{b} shifted by {} leaves the day",
                self.shift_slots
            )));
        }
        Ok(())
    }

    fn scale(&self, date: NaiveDate) -> f64 {
        match DayType::of(date) {
            DayType::Workday => self.weekday_scale,
            DayType::Weekend => self.weekend_scale,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub load: LoadSeries,
    /// Irradiance (W/m²) on the load grid when enabled.
    pub solar: Option<LoadSeries>,
    /// Per-day morning shift in multiples of `shift_slots` (-1, 0 or 1).
    pub shifts: Vec<i32>,
}

/// Noise-free profile of one day given its shift.
pub fn day_profile(cfg: &SynthConfig, date: NaiveDate, shift: i32) -> Vec<f64> {
    let (a, b) = cfg.morning_window;
    let scale = cfg.scale(date);
    let offset = shift as isize * cfg.shift_slots as isize;
    (0..cfg.base_profile.len())
        .map(|t| {
            let src = if (a..b).contains(&t) {
                (t as isize - offset) as usize
            } else {
                t
            };
            cfg.base_profile[src] * scale
        })
        .collect()
}

fn draw_shifts(cfg: &SynthConfig) -> Vec<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHIFT_STREAM);
    (0..cfg.days)
        .map(|_| {
            let u: f64 = rng.gen();
            if u < cfg.shift_probability / 2.0 {
                -1
            } else if u < cfg.shift_probability {
                1
            } else {
                0
            }
        })
        .collect()
}

/// Clear-sky bell between sunrise and sunset times a daily cloud factor.
fn solar_day(date: NaiveDate, rng: &mut ChaCha8Rng, noise: &Normal<f64>) -> Vec<f64> {
    let doy = date.ordinal() as f64;
    // day length swings between about 8.5 h and 16 h over the year
    let season = (2.0 * std::f64::consts::PI * (doy - 172.0) / 365.25).cos();
    let half_day = 6.1 + 1.9 * season;
    let peak = 550.0 + 350.0 * season;
    let cloud: f64 = rng.gen_range(0.3..1.0);
    (0..96)
        .map(|t| {
            let hour = t as f64 / 4.0 + 0.125;
            let x = (hour - 12.5) / half_day;
            if x.abs() >= 1.0 {
                // keep the stream aligned regardless of daylight length
                let _ = noise.sample(rng);
                0.0
            } else {
                let clear = peak * (std::f64::consts::FRAC_PI_2 * x).cos().powi(2);
                (clear * cloud + noise.sample(rng)).max(0.0)
            }
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let grid = GridSpec::default();
    let dates = consecutive_dates(cfg.start, cfg.days);
    let shifts = draw_shifts(cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(LOAD_STREAM);
    let noise = Normal::new(0.0, cfg.noise_std.max(f64::MIN_POSITIVE)).expect("validated");
    let mut values = Vec::with_capacity(cfg.days * 96);
    for (date, &shift) in dates.iter().zip(&shifts) {
        for p in day_profile(cfg, *date, shift) {
            let e = if cfg.noise_std > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            values.push((p + e).max(0.0));
        }
    }
    let load = LoadSeries::new(grid, dates.clone(), values)?;

    let solar = if cfg.solar {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(SOLAR_STREAM);
        let noise = Normal::new(0.0, 15.0).expect("constant");
        let values = dates
            .iter()
            .flat_map(|d| solar_day(*d, &mut rng, &noise))
            .collect();
        Some(LoadSeries::new(grid, dates, values)?)
    } else {
        None
    };
    Ok(SynthOutput {
        load,
        solar,
        shifts,
    })
}
