//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use loadcast::engine::{run_simulation_with, ForecastRecord};
use loadcast::features::{compute_omega, feature_at_boundary, FeatureMatrix, Omega, OmegaConfig};
use loadcast::holt_winters::{hw_fit, hw_init, HwParams, HwState};
use loadcast::io::write_report_table;
use loadcast::mlp::{MlpModel, HIDDEN_UNITS};
use loadcast::ols::{fit_ols, DesignMatrix, LinearModel};
use loadcast::par::{par_forecast, ParConfig, ParVariant};
use loadcast::persistence::{persist_forecast, PersistenceConfig};
use loadcast::sarima::{
    css_residuals, sarima_fit, sarima_forecast, undifference, SarimaCoefficients, SarimaFitOptions,
    SarimaModel, SarimaOrder,
};
use loadcast::timeseries::update_boundaries;
use loadcast::{
    build_forecaster, generate, run_simulation, Forecaster, GridSpec, History, LoadSeries, Mode,
    SeriesView, SimConfig, SynthConfig, MODEL_NAMES,
};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn series(values: Vec<f64>) -> LoadSeries {
    let start = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
    LoadSeries::from_start(GridSpec::default(), start, values).unwrap()
}

fn random_series(days: usize, seed: u64) -> LoadSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    series((0..days * 96).map(|_| rng.gen_range(0.0..3.0)).collect())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- oracles

fn naive_persistence(y: &[f64], d: usize, step: usize, n: usize) -> Vec<f64> {
    (0..96)
        .map(|t| {
            let mut acc = 0.0;
            for i in 1..=n {
                acc += y[(d - i * step) * 96 + t];
            }
            acc / n as f64
        })
        .collect()
}

/// Every Ω column rebuilt by materializing each window.
fn naive_omega(y: &[f64], cfg: &OmegaConfig) -> Vec<(String, Vec<f64>)> {
    let n = y.len();
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
    for asof in [false, true] {
        let mut c: [Vec<f64>; 6] = Default::default();
        for g in 0..n {
            let day: Vec<f64> =
                y[g / 96 * 96..if asof { g + 1 } else { g / 96 * 96 + 96 }].to_vec();
            let hs = g / 4 * 4;
            let hour: Vec<f64> = y[hs..if asof { g + 1 } else { hs + 4 }].to_vec();
            let prev: Vec<f64> = if hs >= 4 {
                y[hs - 4..hs].to_vec()
            } else {
                Vec::new()
            };
            let window: Vec<f64> = y[(g + 1).saturating_sub(cfg.rolling_window)..=g].to_vec();
            let total = sum(&day);
            let mean = total / day.len() as f64;
            c[0].push(sum(&window));
            c[1].push(sum(&hour));
            c[2].push(if total < cfg.epsilon_div {
                0.0
            } else {
                y[g] / total
            });
            c[3].push(sum(&hour) - sum(&prev));
            c[4].push(if y[g] < cfg.low_flag_ratio * mean {
                1.0
            } else {
                0.0
            });
            c[5].push(if y[g] > cfg.high_flag_ratio * mean {
                1.0
            } else {
                0.0
            });
        }
        for (w, col) in Omega::ALL.iter().zip(c) {
            let name = if asof {
                format!("asof_{}", w.name())
            } else {
                w.name().to_string()
            };
            cols.push((name, col));
        }
    }
    cols
}

/// Least squares through the normal equations and Gauss-Jordan elimination.
fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, &t) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
            a[i][p] += r[i] * t;
        }
    }
    for c in 0..p {
        let piv = (c..p)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, piv);
        for i in 0..p {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in c..=p {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

/// One literal step of the three smoothing recursions.
fn hw_step(l: f64, b: f64, s: f64, y: f64, p: &HwParams) -> (f64, f64, f64) {
    let level = p.alpha * (y - s) + (1.0 - p.alpha) * (l + b);
    let trend = p.beta * (level - l) + (1.0 - p.beta) * b;
    let season = p.gamma * (y - l - b) + (1.0 - p.gamma) * s;
    (level, trend, season)
}

/// `(1,1,1)(1,1,1)S` residuals, written term by term.
fn literal_sarima_residuals(y: &[f64], c: [f64; 4], s: usize) -> Vec<f64> {
    let [phi, th, sphi, sth] = c;
    let w: Vec<f64> = (s + 1..y.len())
        .map(|t| y[t] - y[t - 1] - y[t - s] + y[t - s - 1])
        .collect();
    let mut e = vec![0.0; w.len()];
    let start = s + 1;
    for t in start..w.len() {
        let ar = w[t] - phi * w[t - 1] - sphi * w[t - s] + phi * sphi * w[t - s - 1];
        e[t] = ar + th * e[t - 1] + sth * e[t - s] - th * sth * e[t - s - 1];
    }
    e[start..].to_vec()
}

/// PAR forecast with explicit feedback of earlier predictions.
fn literal_par(
    y: &[f64],
    coef: &[f64],
    n: usize,
    big_n: usize,
    origin: usize,
    h: usize,
) -> Vec<f64> {
    let mut ext = y[..origin].to_vec();
    for g in origin..origin + h {
        let (d, t) = (g / 96, g % 96);
        let mut v = 0.0;
        for i in 1..=n {
            v += coef[i - 1] * ext[g - i];
        }
        let pm: f64 = (1..=big_n).map(|i| y[(d - i) * 96 + t]).sum::<f64>() / big_n as f64;
        v += coef[n] * pm;
        ext.push(v);
    }
    ext[origin..].to_vec()
}

fn oracle_equivalence() -> Check {
    // persistence
    for seed in 0..5 {
        let s = random_series(35, seed);
        let got = ok(persist_forecast(&s, &PersistenceConfig::n_day(10), 20))?;
        let e = max_abs_diff(&got, &naive_persistence(s.values(), 20, 1, 10));
        ensure!(e <= 1e-12, "n_day differs by {e}");
        let got = ok(persist_forecast(&s, &PersistenceConfig::n_same_day(4), 33))?;
        let e = max_abs_diff(&got, &naive_persistence(s.values(), 33, 7, 4));
        ensure!(e <= 1e-12, "n_same_day differs by {e}");
    }

    // Ω, including a day of zeros and the boundary lookup
    let cfg = OmegaConfig::default();
    for seed in 0..3 {
        let mut s = random_series(5, 100 + seed);
        if seed == 0 {
            s = ok(s.map_values(|i, v| if (96..192).contains(&i) { 0.0 } else { v }))?;
        }
        let fm = ok(compute_omega(&s, &cfg))?;
        for (name, want) in naive_omega(s.values(), &cfg) {
            let got = fm.column(&name).ok_or(format!("missing column {name}"))?;
            let e = max_abs_diff(got, &want);
            ensure!(e <= 1e-9, "omega column {name} differs by {e}");
        }
        for d in 1..5 {
            for b in [0, 16, 32, 48, 64, 80] {
                let g = if b == 0 { d * 96 - 1 } else { d * 96 + b - 1 };
                let got = ok(feature_at_boundary(&fm, d, b))?;
                ensure!(got == fm.asof_features(g), "boundary lookup d={d} b={b}");
            }
        }
    }

    // OLS
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().sum::<f64>() + rng.gen_range(-1.0..1.0))
            .collect();
        let names = (0..6).map(|i| format!("x{i}")).collect();
        let model = ok(fit_ols(&ok(DesignMatrix::from_rows(names, &rows))?, &y))?;
        let e = max_abs_diff(&model.coefficients, &normal_equations(&rows, &y));
        ensure!(e <= 1e-8, "OLS differs from normal equations by {e}");
    }

    // Holt-Winters recursions
    let s = random_series(6, 21);
    let p = HwParams::new(0.3, 0.05, 0.2).map_err(|e| e.to_string())?;
    let mut state = ok(hw_init(&s, 2))?;
    let (mut l, mut b, mut season) = (state.level, state.trend, state.seasonal.clone());
    ok(state.roll_to(s.values(), s.len(), &p))?;
    for g in 96..s.len() {
        let (nl, nb, ns) = hw_step(l, b, season[g % 96], s.values()[g], &p);
        l = nl;
        b = nb;
        season[g % 96] = ns;
    }
    ensure!(
        (state.level - l).abs() <= 1e-10 && (state.trend - b).abs() <= 1e-12,
        "HW level/trend differ"
    );
    ensure!(
        max_abs_diff(&state.seasonal, &season) <= 1e-10,
        "HW seasonal differs"
    );
    let fc = state.forecast(10);
    let want: Vec<f64> = (1..=10)
        .map(|h| l + h as f64 * b + season[(s.len() - 1 + h) % 96])
        .collect();
    ensure!(max_abs_diff(&fc, &want) <= 1e-10, "HW forecast differs");

    // SARIMA residuals
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let y: Vec<f64> = (0..80).map(|_| rng.gen_range(0.0..5.0)).collect();
        let c = [
            rng.gen_range(-0.9..0.9),
            rng.gen_range(-0.9..0.9),
            rng.gen_range(-0.9..0.9),
            rng.gen_range(-0.9..0.9),
        ];
        let order = SarimaOrder::daily(4);
        let got = ok(css_residuals(
            &order,
            &SarimaCoefficients::from_flat(&order, &c),
            &y,
        ))?;
        let e = max_abs_diff(&got, &literal_sarima_residuals(&y, c, 4));
        ensure!(e <= 1e-10, "SARIMA residuals differ by {e}");
    }

    // PAR recursive forecast
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let s = random_series(14, rng.gen());
        let cfg = ParConfig {
            ar_order: 4,
            history_days: 10,
            ..ParConfig::with_variant(ParVariant::Parh)
        };
        let coef: Vec<f64> = (0..5).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let model = LinearModel {
            columns: cfg.columns(),
            coefficients: coef.clone(),
            training_rows: 0,
            residual_rmse: 0.0,
        };
        let origin = 12 * 96 + rng.gen_range(0..80);
        let got = ok(par_forecast(&model, &s.view(), &cfg, origin, 16, None))?;
        let e = max_abs_diff(&got, &literal_par(s.values(), &coef, 4, 10, origin, 16));
        ensure!(e <= 1e-12, "PAR forecast differs by {e}");
    }
    Ok(())
}

// ---------------------------------------------------------------- fixed points

struct Oracle;

impl Forecaster for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }
    fn min_history_days(&self) -> usize {
        0
    }
    fn retrain(&mut self, _: &History<'_>, _: usize) -> loadcast::Result<()> {
        Ok(())
    }
    fn forecast(
        &self,
        h: &History<'_>,
        origin: usize,
        horizon: usize,
    ) -> loadcast::Result<Vec<f64>> {
        Ok(h.load.values[origin..origin + horizon].to_vec())
    }
}

fn analytic_fixed_points() -> Check {
    ensure!(
        update_boundaries(&GridSpec::default(), 20) == (16, 32),
        "boundaries t=20"
    );
    ensure!(
        update_boundaries(&GridSpec::default(), 0) == (0, 16),
        "boundaries t=0"
    );
    ensure!(
        update_boundaries(&GridSpec::default(), 95) == (80, 96),
        "boundaries t=95"
    );

    // persistence with one day of history
    let s = random_series(10, 1);
    ensure!(
        ok(persist_forecast(&s, &PersistenceConfig::n_day(1), 9))? == ok(s.day_slice(8))?,
        "n_day N=1"
    );
    ensure!(
        ok(persist_forecast(&s, &PersistenceConfig::n_same_day(1), 9))? == ok(s.day_slice(2))?,
        "n_same_day N=1"
    );
    let flat = series(vec![1.0; 192]);
    ensure!(
        ok(persist_forecast(&flat, &PersistenceConfig::n_day(1), 2))? == vec![1.0; 96],
        "constant persistence"
    );

    // Ω on a constant series
    let fm: FeatureMatrix = ok(compute_omega(
        &series(vec![1.0; 3 * 96]),
        &OmegaConfig::default(),
    ))?;
    for g in 96..fm.rows() {
        let f = fm.day_features(g);
        ensure!(
            f == [8.0, 4.0, 1.0 / 96.0, 0.0, 0.0, 0.0],
            "constant Ω at {g}: {f:?}"
        );
    }

    // Holt-Winters
    // with β = 0 the trend persists and the level still advances by it
    let state = HwState {
        level: 1.3,
        trend: 0.0,
        seasonal: (0..96).map(|t| t as f64 / 50.0).collect(),
        cursor: 95,
    };
    let zero = HwParams {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };
    let next = ok(state.update(7.5, &zero))?;
    ensure!(
        next == HwState {
            cursor: 96,
            ..state.clone()
        },
        "HW zero-gain"
    );
    let fixed = HwState {
        level: 2.5,
        trend: 0.0,
        seasonal: vec![0.0; 96],
        cursor: 10,
    };
    let moved = ok(fixed.update(
        2.5,
        &HwParams {
            alpha: 0.4,
            beta: 0.3,
            gamma: 0.7,
        },
    ))?;
    ensure!(
        moved
            == HwState {
                cursor: 11,
                ..fixed.clone()
            },
        "HW constant fixed point"
    );
    let hand = HwState {
        level: 1.0,
        trend: 0.5,
        seasonal: vec![0.2; 96],
        cursor: 0,
    };
    let half = HwParams {
        alpha: 0.5,
        beta: 0.5,
        gamma: 0.5,
    };
    let h = ok(hand.update(2.0, &half))?;
    // ℓ = .5(2-.2)+.5(1.5) = 1.65; τ = .5(.65)+.25 = .575; σ = .5(2-1.5)+.1 = .35
    ensure!(
        (h.level - 1.65).abs() < 1e-15 && (h.trend - 0.575).abs() < 1e-15,
        "HW hand step {h:?}"
    );
    ensure!((h.seasonal[1] - 0.35).abs() < 1e-15, "HW hand seasonal");
    ensure!(fixed.forecast(5) == vec![2.5; 5], "HW flat forecast");
    let trend = HwState {
        level: 0.0,
        trend: 1.0,
        seasonal: vec![0.0; 96],
        cursor: 0,
    };
    ensure!(trend.forecast(3) == vec![1.0, 2.0, 3.0], "HW pure trend");

    // SARIMA with zero coefficients reduces to the differencing algebra
    let y = random_series(12, 3).values().to_vec();
    let order = SarimaOrder::daily(96);
    let m = ok(SarimaModel::from_coefficients(
        order,
        SarimaCoefficients::zeros(&order),
        &y,
    ))?;
    let n = y.len();
    let want = y[n - 1] + y[n - 96] - y[n - 97];
    ensure!(
        ok(sarima_forecast(&m, 1))?[0] == want,
        "zero-coefficient SARIMA"
    );

    // degenerate PAR
    let s = random_series(14, 4);
    let cfg = ParConfig::with_variant(ParVariant::Parh);
    let mut coef = vec![0.0; cfg.columns().len()];
    coef[cfg.ar_order] = 1.0;
    let model = LinearModel {
        columns: cfg.columns(),
        coefficients: coef,
        training_rows: 0,
        residual_rmse: 0.0,
    };
    let got = ok(par_forecast(&model, &s.view(), &cfg, 13 * 96, 96, None))?;
    ensure!(
        got == ok(persist_forecast(&s, &PersistenceConfig::n_day(10), 13))?,
        "PAR with b0=1 is persistence"
    );
    let cfg1 = ParConfig { ar_order: 1, ..cfg };
    let unit = LinearModel {
        columns: cfg1.columns(),
        coefficients: vec![1.0, 0.0],
        training_rows: 0,
        residual_rmse: 0.0,
    };
    let origin = 13 * 96 + 40;
    let got = ok(par_forecast(&unit, &s.view(), &cfg1, origin, 16, None))?;
    ensure!(got == vec![s.values()[origin - 1]; 16], "PAR unit root");

    // perfect foresight scores zero
    let out = ok(generate(&SynthConfig {
        days: 35,
        solar: false,
        ..Default::default()
    }))?;
    for mode in [Mode::DayAhead, Mode::Hourly] {
        let cfg = SimConfig {
            mode,
            warmup_days: 2,
            ..Default::default()
        };
        let run = ok(run_simulation_with(
            &out.load,
            None,
            &cfg,
            vec![Box::new(Oracle)],
        ))?;
        let m = &run.report.models[0];
        ensure!(
            m.full.rmse == 0.0 && m.full.relative_rmse == Some(0.0),
            "perfect forecast scored {:?}",
            m.full
        );
        ensure!(
            m.months.iter().all(|p| p.rmse == 0.0),
            "perfect forecast monthly RMSE"
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- causality

fn non_anticipativity() -> Check {
    let out = ok(generate(&SynthConfig {
        days: 34,
        solar: false,
        ..Default::default()
    }))?;
    let load = out.load;
    let k = 96;
    let day = 32;
    let calendar = load.dates().to_vec();
    let clean = History {
        load: SeriesView {
            grid: GridSpec::default(),
            calendar: &calendar,
            values: load.values(),
        },
        solar: None,
    };
    for name in ["hwh", "sarimah", "parh", "pareh", "sprh"] {
        let mut reference = ok(build_forecaster(name, None, 0))?;
        ok(reference.retrain(&clean, day))?;
        for b in 0..6 {
            let origin = day * k + b * 16;
            let want = ok(reference.forecast(&clean, origin, 16))?;
            let mut rng = ChaCha8Rng::seed_from_u64(b as u64);
            let poisoned: Vec<f64> = load
                .values()
                .iter()
                .enumerate()
                .map(|(g, &v)| {
                    if g >= origin {
                        1e4 * rng.gen::<f64>()
                    } else {
                        v
                    }
                })
                .collect();
            let history = History {
                load: SeriesView {
                    grid: GridSpec::default(),
                    calendar: &calendar,
                    values: &poisoned,
                },
                solar: None,
            };
            let mut model = ok(build_forecaster(name, None, 0))?;
            ok(model.retrain(&history, day))?;
            let got = ok(model.forecast(&history, origin, 16))?;
            let same = got
                .iter()
                .zip(&want)
                .all(|(a, b)| a.to_bits() == b.to_bits());
            ensure!(same, "{name} changed at origin slot {}", b * 16);
            // truncating the data at the origin must not matter either
            let cut = History {
                load: SeriesView {
                    values: &load.values()[..origin],
                    ..clean.load
                },
                solar: None,
            };
            let got = ok(model.forecast(&cut, origin, 16))?;
            ensure!(
                got.iter()
                    .zip(&want)
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
                "{name} reads past the origin"
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- numerics

fn numerical_checks() -> Check {
    // SPNN gradient against central differences
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n_in = 5;
    let rows = 40;
    let z: Vec<f64> = (0..rows * n_in).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let y: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut model = MlpModel::init(n_in, HIDDEN_UNITS, 9);
    model.b1 = vec![0.3, -0.1, 0.5, 0.2];
    model.b2 = 0.4;
    let (_, grad) = model.loss_and_grad(&z, &y);
    let p0 = model.params();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..p0.len() {
        let mut probe = model.clone();
        let mut p = p0.clone();
        p[i] += step;
        ok(probe.set_params(&p))?;
        let up = probe.loss_and_grad(&z, &y).0;
        p[i] -= 2.0 * step;
        ok(probe.set_params(&p))?;
        let down = probe.loss_and_grad(&z, &y).0;
        let fd = (up - down) / (2.0 * step);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8));
    }
    ensure!(worst <= 1e-4, "MLP gradient relative error {worst}");

    // OLS optimality and recovery
    let truth = [0.4, 0.2, 0.1, 0.05, 0.25];
    let noise = Normal::new(0.0, 0.01).unwrap();
    let x: Vec<Vec<f64>> = (0..5000)
        .map(|_| (0..5).map(|_| rng.gen_range(0.0..2.0)).collect())
        .collect();
    let t: Vec<f64> = x
        .iter()
        .map(|r| r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + noise.sample(&mut rng))
        .collect();
    let names = (0..5).map(|i| format!("x{i}")).collect();
    let fit = ok(fit_ols(&ok(DesignMatrix::from_rows(names, &x))?, &t))?;
    for (c, want) in fit.coefficients.iter().zip(&truth) {
        ensure!(
            (c - want).abs() <= 0.02,
            "OLS recovered {:?}",
            fit.coefficients
        );
    }
    let r: Vec<f64> = x
        .iter()
        .zip(&t)
        .map(|(row, y)| y - ok(fit.predict(row)).unwrap())
        .collect();
    let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
    for j in 0..5 {
        let dot: f64 = x.iter().zip(&r).map(|(row, e)| row[j] * e).sum();
        ensure!(
            dot.abs() <= 1e-8 * norm,
            "normal equation {j} violated by {dot}"
        );
    }

    // Holt-Winters recovery on data from its own recursion
    let p = HwParams::new(0.5, 0.1, 0.3).unwrap();
    let profile: Vec<f64> = (0..96)
        .map(|t| 2.0 + (2.0 * std::f64::consts::PI * t as f64 / 96.0).sin())
        .collect();
    let mut values = profile.clone();
    values.extend(profile.iter().map(|v| v + 0.01));
    let mut state = ok(hw_init(&series(values.clone()), 2))?;
    ok(state.roll_to(&values, values.len(), &p))?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.1).unwrap();
    while values.len() < 40 * 96 {
        let v = state.forecast(1)[0] + noise.sample(&mut rng);
        values.push(v);
        ok(state.update_in_place(v, &p))?;
    }
    // loads must be non-negative; shifting leaves the one-step errors unchanged
    let low = values.iter().copied().fold(f64::INFINITY, f64::min);
    let fit = ok(hw_fit(&series(
        values.iter().map(|v| v - low + 1.0).collect(),
    )))?
    .params;
    ensure!(
        (fit.alpha - 0.5).abs() <= 0.05
            && (fit.beta - 0.1).abs() <= 0.05
            && (fit.gamma - 0.3).abs() <= 0.05,
        "HW recovered {fit:?}"
    );

    // SARIMA recovery
    let s = 96;
    let (phi, th, sphi, sth) = (0.5, 0.3, 0.4, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let burn = 4 * s;
    let total = 60 * s + burn;
    let (mut w, mut e) = (vec![0.0; total], vec![0.0; total]);
    let at = |v: &Vec<f64>, i: isize| if i >= 0 { v[i as usize] } else { 0.0 };
    for t in 0..total {
        let (ti, si) = (t as isize, s as isize);
        e[t] = 0.05 * normal.sample(&mut rng);
        w[t] = phi * at(&w, ti - 1) + sphi * at(&w, ti - si) - phi * sphi * at(&w, ti - si - 1)
            + e[t]
            - th * at(&e, ti - 1)
            - sth * at(&e, ti - si)
            + th * sth * at(&e, ti - si - 1);
    }
    let head: Vec<f64> = (0..s + 1).map(|i| 10.0 + (i % s) as f64 * 0.1).collect();
    let y = ok(undifference(&w[burn..], &head, 1, 1, s))?;
    let model = ok(sarima_fit(
        &y,
        SarimaOrder::daily(s),
        &SarimaFitOptions::default(),
    ))?;
    let got = model.coefficients.to_flat();
    for (g, t) in got.iter().zip([phi, th, sphi, sth]) {
        ensure!((g - t).abs() <= 0.1, "SARIMA recovered {got:?}");
    }
    Ok(())
}

// ---------------------------------------------------------------- end to end

/// Full-year relative RMSE per model, frozen from the first run with generator
/// seed 2016 and model seed 2016.
const FROZEN: [(&str, f64); 13] = [
    ("n_day", 0.1815849174041372),
    ("n_same_day", 0.1456753951606951),
    ("hw", 0.2451669643657252),
    ("hwh", 0.25057139556725266),
    ("sarima", 0.18986068055361371),
    ("sarimah", 0.16815134460874287),
    ("par", 0.22098571314627488),
    ("parw", 0.22084740999369812),
    ("parh", 0.20113789743512533),
    ("pareh", 0.1476677785318311),
    ("spr", 0.1546139005586676),
    ("sprh", 0.13977066355223733),
    ("spnn", 0.15611269355992086),
];

fn yearly_run() -> Check {
    let data = ok(generate(&SynthConfig::default()))?;
    let cfg = SimConfig {
        models: MODEL_NAMES.iter().map(|s| s.to_string()).collect(),
        mode: Mode::Hourly,
        seed: 2016,
        ..Default::default()
    };
    let started = Instant::now();
    let run = ok(run_simulation(&data.load, data.solar.as_ref(), &cfg))?;
    let elapsed = started.elapsed();
    ensure!(
        elapsed < Duration::from_secs(15 * 60),
        "yearly run took {elapsed:?}"
    );

    let mut table = Vec::new();
    ok(write_report_table(
        &mut table,
        std::slice::from_ref(&run.report),
    ))?;
    let table = String::from_utf8(table).unwrap();
    print!(
        "{}",
        table
            .lines()
            .map(|l| format!("    {l}\n"))
            .collect::<String>()
    );
    let header = table.lines().next().unwrap_or_default();
    let months: Vec<String> = (1..=12).map(|m| format!("2016-{m:02}")).collect();
    ensure!(
        header == format!("group,model,{},full", months.join(",")),
        "table header {header}"
    );
    ensure!(
        table.lines().count() == 1 + MODEL_NAMES.len(),
        "table has {} lines",
        table.lines().count()
    );

    let rel = |name: &str| {
        run.report
            .model(name)
            .and_then(|m| m.full.relative_rmse)
            .unwrap_or(f64::NAN)
    };
    let (sprh, n_day, parh) = (rel("sprh"), rel("n_day"), rel("parh"));
    println!(
        "    sprh {sprh:.6}  n_day {n_day:.6}  parh {parh:.6}  ({:.1} s)",
        elapsed.as_secs_f64()
    );
    ensure!(
        sprh < n_day && sprh < parh,
        "sprh {sprh} is not below n_day {n_day} and parh {parh}"
    );

    let mut drift = Vec::new();
    for (name, want) in FROZEN {
        let got = rel(name);
        if (got - want).abs() > 1e-9 * want.max(1.0) {
            drift.push(format!("(\"{name}\", {got:?})"));
        }
    }
    ensure!(
        drift.is_empty(),
        "regression values moved: {}",
        drift.join(", ")
    );
    Ok(())
}

fn persistence_noise_sanity() -> Check {
    let sigma = 0.05;
    let data = ok(generate(&SynthConfig {
        weekend_scale: 1.0,
        shift_probability: 0.0,
        noise_std: sigma,
        solar: false,
        ..Default::default()
    }))?;
    let cfg = SimConfig {
        models: vec!["n_day".into()],
        warmup_days: 10,
        ..Default::default()
    };
    let run = ok(run_simulation(&data.load, None, &cfg))?;
    let got = run.report.models[0].full.rmse;
    let want = sigma * (1.0f64 + 0.1).sqrt();
    println!("    n_day RMSE {got:.6}, expected {want:.6}");
    ensure!(
        (got - want).abs() <= 0.05 * want,
        "n_day RMSE {got} vs {want}"
    );
    Ok(())
}

fn schedule_correctness() -> Check {
    let data = ok(generate(&SynthConfig {
        days: 40,
        ..Default::default()
    }))?;
    for (mode, blocks, len) in [(Mode::Hourly, 6, 16), (Mode::DayAhead, 1, 96)] {
        let cfg = SimConfig {
            models: vec!["n_day".into(), "parh".into(), "sprh".into()]
                .into_iter()
                .filter(|m| mode == Mode::Hourly || m != "sprh")
                .collect(),
            mode,
            ..Default::default()
        };
        let run = ok(run_simulation(&data.load, data.solar.as_ref(), &cfg))?;
        ensure!(
            run.report.horizon == len,
            "{mode:?} horizon {}",
            run.report.horizon
        );
        for name in &cfg.models {
            let recs: Vec<&ForecastRecord> =
                run.records.iter().filter(|r| &r.model == name).collect();
            ensure!(recs.len() == 10 * 96, "{name}: {} records", recs.len());
            let mut n_blocks = 0;
            for chunk in recs.chunk_by(|a, b| a.block == b.block) {
                ensure!(chunk.len() == len, "{name}: block of {}", chunk.len());
                let first = chunk[0];
                ensure!(
                    first.slot % len == 0 && first.origin == first.target,
                    "{name}: block starts at {}",
                    first.slot
                );
                for (j, r) in chunk.iter().enumerate() {
                    ensure!(
                        r.day == first.day && r.slot == first.slot + j && r.origin == first.origin,
                        "{name}: block layout"
                    );
                }
                n_blocks += 1;
            }
            ensure!(n_blocks == 10 * blocks, "{name}: {n_blocks} blocks");
            for d in 30..40 {
                let slots: Vec<usize> =
                    recs.iter().filter(|r| r.day == d).map(|r| r.slot).collect();
                ensure!(
                    slots == (0..96).collect::<Vec<_>>(),
                    "{name}: day {d} not partitioned"
                );
            }
        }
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("analytic fixed points", analytic_fixed_points),
        ("non-anticipativity of hourly models", non_anticipativity),
        ("numerical checks", numerical_checks),
        ("yearly hourly run", yearly_run),
        ("n_day noise sanity", persistence_noise_sanity),
        ("schedule correctness", schedule_correctness),
    ];
    let limits = [
        60.0,
        f64::INFINITY,
        120.0,
        f64::INFINITY,
        900.0,
        f64::INFINITY,
        f64::INFINITY,
    ];
    let mut failed = 0;
    for ((name, check), limit) in criteria.into_iter().zip(limits) {
        let started = Instant::now();
        let mut result = check();
        let secs = started.elapsed().as_secs_f64();
        if result.is_ok() && secs > limit {
            result = Err(format!("took {secs:.1} s, limit {limit} s"));
        }
        match result {
            Ok(()) => println!("PASS {name} ({secs:.1} s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
