//! Additive triple exponential smoothing with a daily season.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::LoadSeries;

/// Smoothing factors for level, trend, and season.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl HwParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = HwParams { alpha, beta, gamma };
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(0.0 < v && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name}={v} outside (0, 1)")));
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwState {
    pub level: f64,
    pub trend: f64,
    /// One offset per season slot; slot of global interval `g` is `g % L`.
    pub seasonal: Vec<f64>,
    /// Global index of the last absorbed observation.
    pub cursor: usize,
}

impl HwState {
    pub fn season_len(&self) -> usize {
        self.seasonal.len()
    }

    /// Absorbs the observation at `cursor + 1`.
    pub fn update(&self, y: f64, params: &HwParams) -> Result<HwState> {
        let mut next = self.clone();
        next.update_in_place(y, params)?;
        Ok(next)
    }

    pub fn update_in_place(&mut self, y: f64, params: &HwParams) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::InvalidData(format!("non-finite observation {y}")));
        }
        self.step(y, params);
        Ok(())
    }

    #[inline]
    fn step(&mut self, y: f64, p: &HwParams) {
        let g = self.cursor + 1;
        let slot = g % self.seasonal.len();
        let s_prev = self.seasonal[slot];
        let (l_prev, b_prev) = (self.level, self.trend);
        let level = p.alpha * (y - s_prev) + (1.0 - p.alpha) * (l_prev + b_prev);
        self.trend = p.beta * (level - l_prev) + (1.0 - p.beta) * b_prev;
        self.seasonal[slot] = p.gamma * (y - l_prev - b_prev) + (1.0 - p.gamma) * s_prev;
        self.level = level;
        self.cursor = g;
    }

    /// Forecasts for `cursor + 1 ..= cursor + horizon`.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let l = self.seasonal.len();
        (1..=horizon)
            .map(|h| self.level + h as f64 * self.trend + self.seasonal[(self.cursor + h) % l])
            .collect()
    }

    /// Rolls the state forward through `values[cursor + 1 .. end]`.
    pub fn roll_to(&mut self, values: &[f64], end: usize, params: &HwParams) -> Result<()> {
        while self.cursor + 1 < end {
            self.update_in_place(values[self.cursor + 1], params)?;
        }
        Ok(())
    }
}

/// Two-season initial state; the returned state sits at the end of day 0.
///
/// `init_days` is the number of leading days the heuristic may consume and
/// must be at least 2.
pub fn hw_init(series: &LoadSeries, init_days: usize) -> Result<HwState> {
    if init_days < 2 {
        return Err(Error::InvalidConfig(
            "Holt-Winters initialisation needs at least 2 days".into(),
        ));
    }
    if series.num_days() < init_days {
        return Err(Error::InsufficientHistory(format!(
            "initialisation needs {init_days} days, series has {}",
            series.num_days()
        )));
    }
    init_from_values(series.values(), series.grid().intervals_per_day())
}

pub(crate) fn init_from_values(values: &[f64], k: usize) -> Result<HwState> {
    if values.len() < 2 * k {
        return Err(Error::InsufficientHistory(
            "Holt-Winters initialisation needs 2 complete days".into(),
        ));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let m0 = mean(&values[..k]);
    let m1 = mean(&values[k..2 * k]);
    Ok(HwState {
        level: m0,
        trend: (m1 - m0) / k as f64,
        seasonal: values[..k].iter().map(|v| v - m0).collect(),
        cursor: k - 1,
    })
}

/// In-sample one-step-ahead SSE from the initial state to the end of `values`.
pub fn one_step_sse(values: &[f64], k: usize, params: &HwParams) -> Result<f64> {
    let mut state = init_from_values(values, k)?;
    let mut sse = 0.0;
    for &y in &values[k..] {
        let slot = (state.cursor + 1) % k;
        let e = y - (state.level + state.trend + state.seasonal[slot]);
        sse += e * e;
        state.step(y, params);
    }
    Ok(sse)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwFit {
    pub params: HwParams,
    pub sse: f64,
}

pub const MIN_FIT_DAYS: usize = 10;

/// Fits (α, β, γ) by a 0.1-step grid over (0, 1)³ followed by a 0.01-step
/// pattern search from the grid optimum.
pub fn hw_fit(series: &LoadSeries) -> Result<HwFit> {
    fit_values(series.values(), series.grid().intervals_per_day())
}

pub(crate) fn fit_values(values: &[f64], k: usize) -> Result<HwFit> {
    if values.len() < MIN_FIT_DAYS * k {
        return Err(Error::InsufficientHistory(format!(
            "Holt-Winters fit needs {MIN_FIT_DAYS} days of training data"
        )));
    }
    let coarse: Vec<u32> = (1..=9).map(|i| i * 10).collect();
    let mut cache = HashMap::new();
    let (mut best, mut best_sse) = grid_search_hundredths(values, k, &coarse, &mut cache)?;

    // Pattern search in hundredths; ties keep the lexicographically smaller point.
    for _ in 0..500 {
        let mut neighbours = Vec::with_capacity(6);
        for axis in 0..3 {
            for delta in [-1i32, 1] {
                let mut p = best;
                let v = p[axis] as i32 + delta;
                if (1..=99).contains(&v) {
                    p[axis] = v as u32;
                    neighbours.push(p);
                }
            }
        }
        neighbours.sort();
        let scored = evaluate_all(values, k, &neighbours, &mut cache)?;
        let mut moved = false;
        for (p, sse) in scored {
            if sse < best_sse {
                best = p;
                best_sse = sse;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(HwFit {
        params: from_hundredths(best),
        sse: best_sse,
    })
}

/// Exhaustive search over `axis`³ (values in hundredths). Lexicographically
/// first minimiser wins.
fn grid_search_hundredths(
    values: &[f64],
    k: usize,
    axis: &[u32],
    cache: &mut HashMap<[u32; 3], f64>,
) -> Result<([u32; 3], f64)> {
    let mut cells = Vec::with_capacity(axis.len().pow(3));
    for &a in axis {
        for &b in axis {
            for &c in axis {
                cells.push([a, b, c]);
            }
        }
    }
    let scored = evaluate_all(values, k, &cells, cache)?;
    let mut best = scored[0];
    for &(p, sse) in &scored[1..] {
        if sse < best.1 {
            best = (p, sse);
        }
    }
    Ok(best)
}

/// Grid search over an explicit axis of factor values.
pub fn hw_grid_search(values: &[f64], k: usize, axis: &[f64]) -> Result<HwFit> {
    let hundredths: Vec<u32> = axis.iter().map(|v| (v * 100.0).round() as u32).collect();
    let (p, sse) = grid_search_hundredths(values, k, &hundredths, &mut HashMap::new())?;
    Ok(HwFit {
        params: from_hundredths(p),
        sse,
    })
}

fn evaluate_all(
    values: &[f64],
    k: usize,
    points: &[[u32; 3]],
    cache: &mut HashMap<[u32; 3], f64>,
) -> Result<Vec<([u32; 3], f64)>> {
    let missing: Vec<[u32; 3]> = points
        .iter()
        .filter(|p| !cache.contains_key(*p))
        .copied()
        .collect();
    let fresh: Vec<Result<([u32; 3], f64)>> = missing
        .par_iter()
        .map(|p| Ok((*p, one_step_sse(values, k, &from_hundredths(*p))?)))
        .collect();
    for r in fresh {
        let (p, sse) = r?;
        cache.insert(p, sse);
    }
    Ok(points.iter().map(|p| (*p, cache[p])).collect())
}

fn from_hundredths(p: [u32; 3]) -> HwParams {
    HwParams {
        alpha: p[0] as f64 / 100.0,
        beta: p[1] as f64 / 100.0,
        gamma: p[2] as f64 / 100.0,
    }
}
