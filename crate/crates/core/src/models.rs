//! Model registry and the common forecasting interface used by the engine.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::holt_winters::{fit_values, init_from_values, HwParams, HwState};
use crate::mlp::{mlp_continue, mlp_train, MlpConfig, MlpModel};
use crate::ols::{DesignMatrix, LinearModel};
use crate::par::{par_forecast, ParConfig, ParTrainer, ParVariant};
use crate::persistence::{check_history, persistence_value, PersistenceConfig};
use crate::sarima::{
    aic_order_search, sarima_fit, sarima_forecast, SarimaFitOptions, SarimaModel, SarimaOrder,
};
use crate::spr::{day_rows, spr_forecast, SprConfig, SprTrainer, SprVariant};
use crate::timeseries::SeriesView;

pub const MODEL_NAMES: [&str; 13] = [
    "n_day",
    "n_same_day",
    "hw",
    "hwh",
    "sarima",
    "sarimah",
    "par",
    "parw",
    "parh",
    "pareh",
    "spr",
    "sprh",
    "spnn",
];

/// Data visible to a model. Values may extend past the forecast origin;
/// models read only what precedes it.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub load: SeriesView<'a>,
    /// Solar irradiance on the load grid, used as a perfect solar forecast.
    pub solar: Option<&'a [f64]>,
}

pub trait Forecaster: Send {
    fn name(&self) -> &str;

    /// Complete days needed before the first forecastable day.
    fn min_history_days(&self) -> usize;

    fn needs_solar(&self) -> bool {
        false
    }

    /// Whether one forecast at the start of a day may cover the whole day.
    fn supports_day_ahead(&self) -> bool {
        true
    }

    /// Refits on the days before `day`.
    fn retrain(&mut self, history: &History<'_>, day: usize) -> Result<()>;

    /// Forecasts `origin..origin + horizon` within the day of `origin`,
    /// using data before `origin` only.
    fn forecast(&self, history: &History<'_>, origin: usize, horizon: usize) -> Result<Vec<f64>>;
}

fn check_window(history: &History<'_>, origin: usize, horizon: usize) -> Result<(usize, usize)> {
    let k = history.load.k();
    let (d, t0) = (origin / k, origin % k);
    if horizon == 0 || t0 + horizon > k {
        return Err(Error::InvalidConfig(format!(
            "forecast window {t0}+{horizon} must lie within one {k}-slot day"
        )));
    }
    if origin > history.load.len() {
        return Err(Error::InsufficientHistory(format!(
            "origin {origin} beyond the {} observed intervals",
            history.load.len()
        )));
    }
    Ok((d, t0))
}

fn check_day(history: &History<'_>, day: usize) -> Result<()> {
    if day > history.load.complete_days() {
        return Err(Error::InsufficientHistory(format!(
            "cannot train on days before {day}: only {} complete days",
            history.load.complete_days()
        )));
    }
    Ok(())
}

fn trained_for(trained_day: Option<usize>, d: usize, name: &str) -> Result<()> {
    match trained_day {
        Some(td) if td == d => Ok(()),
        _ => Err(Error::InsufficientHistory(format!(
            "{name} must be retrained at the start of day {d} before forecasting it"
        ))),
    }
}

fn params<T: DeserializeOwned + Default>(name: &str, value: Option<&Value>) -> Result<T> {
    match value {
        None | Some(Value::Null) => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidConfig(format!("parameters for {name}: {e}"))),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PersistenceParams {
    history_days: usize,
}

struct Persistence {
    name: &'static str,
    cfg: PersistenceConfig,
}

impl Forecaster for Persistence {
    fn name(&self) -> &str {
        self.name
    }

    fn min_history_days(&self) -> usize {
        self.cfg.required_days()
    }

    fn retrain(&mut self, _history: &History<'_>, _day: usize) -> Result<()> {
        Ok(())
    }

    fn forecast(&self, history: &History<'_>, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let (d, t0) = check_window(history, origin, horizon)?;
        let view = history.load.prefix(d * history.load.k());
        check_history(&view, &self.cfg, d)?;
        Ok((t0..t0 + horizon)
            .map(|t| persistence_value(&view, &self.cfg, d, t))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HwModelParams {
    /// Fixed smoothing factors; fitted daily when absent.
    fixed: Option<HwParams>,
}

struct HoltWinters {
    hourly: bool,
    fixed: Option<HwParams>,
    fitted: Option<(HwParams, HwState)>,
    trained_day: Option<usize>,
}

impl Forecaster for HoltWinters {
    fn name(&self) -> &str {
        if self.hourly {
            "hwh"
        } else {
            "hw"
        }
    }

    fn min_history_days(&self) -> usize {
        crate::holt_winters::MIN_FIT_DAYS
    }

    fn retrain(&mut self, history: &History<'_>, day: usize) -> Result<()> {
        check_day(history, day)?;
        let k = history.load.k();
        let values = &history.load.values[..day * k];
        let params = match self.fixed {
            Some(p) => p,
            None => fit_values(values, k)?.params,
        };
        let mut state = init_from_values(values, k)?;
        state.roll_to(values, values.len(), &params)?;
        self.fitted = Some((params, state));
        self.trained_day = Some(day);
        Ok(())
    }

    fn forecast(&self, history: &History<'_>, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let (d, t0) = check_window(history, origin, horizon)?;
        trained_for(self.trained_day, d, self.name())?;
        let (params, state) = self.fitted.as_ref().expect("trained");
        if self.hourly {
            let mut s = state.clone();
            s.roll_to(history.load.values, origin, params)?;
            Ok(s.forecast(horizon))
        } else {
            Ok(state.forecast(t0 + horizon)[t0..].to_vec())
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SarimaParams {
    /// Defaults to `(1,1,1)(1,1,1)K`.
    order: Option<SarimaOrder>,
    /// Candidate orders for an AIC search at the first training.
    search: Option<Vec<SarimaOrder>>,
    fit: Option<SarimaFitOptions>,
}

struct Sarima {
    hourly: bool,
    order: Option<SarimaOrder>,
    search: Option<Vec<SarimaOrder>>,
    opts: SarimaFitOptions,
    model: Option<SarimaModel>,
    trained_day: Option<usize>,
}

impl Forecaster for Sarima {
    fn name(&self) -> &str {
        if self.hourly {
            "sarimah"
        } else {
            "sarima"
        }
    }

    fn min_history_days(&self) -> usize {
        self.opts.min_seasons
    }

    fn retrain(&mut self, history: &History<'_>, day: usize) -> Result<()> {
        check_day(history, day)?;
        let k = history.load.k();
        let y = &history.load.values[..day * k];
        if let Some(candidates) = self.search.take() {
            self.order = Some(aic_order_search(y, &candidates, &self.opts)?);
        }
        let order = *self.order.get_or_insert(SarimaOrder::daily(k));
        self.model = Some(sarima_fit(y, order, &self.opts)?);
        self.trained_day = Some(day);
        Ok(())
    }

    fn forecast(&self, history: &History<'_>, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let (d, t0) = check_window(history, origin, horizon)?;
        trained_for(self.trained_day, d, self.name())?;
        let model = self.model.as_ref().expect("trained");
        if self.hourly {
            let mut m = model.clone();
            m.extend(&history.load.values[m.observed()..origin]);
            sarima_forecast(&m, horizon)
        } else {
            Ok(sarima_forecast(model, t0 + horizon)?[t0..].to_vec())
        }
    }
}

struct Par {
    name: &'static str,
    cfg: ParConfig,
    trainer: ParTrainer,
    model: Option<LinearModel>,
    trained_day: Option<usize>,
}

impl Par {
    fn hourly(&self) -> bool {
        matches!(self.cfg.variant, ParVariant::Parh | ParVariant::Pareh)
    }
}

impl Forecaster for Par {
    fn name(&self) -> &str {
        self.name
    }

    fn min_history_days(&self) -> usize {
        self.cfg.first_row_day() + 1
    }

    fn needs_solar(&self) -> bool {
        self.cfg.uses_solar()
    }

    fn retrain(&mut self, history: &History<'_>, day: usize) -> Result<()> {
        check_day(history, day)?;
        let view = history.load.prefix(day * history.load.k());
        self.model = Some(self.trainer.train(&view, history.solar)?);
        self.trained_day = Some(day);
        Ok(())
    }

    fn forecast(&self, history: &History<'_>, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let (d, t0) = check_window(history, origin, horizon)?;
        trained_for(self.trained_day, d, self.name)?;
        let model = self.model.as_ref().expect("trained");
        if self.hourly() {
            par_forecast(
                model,
                &history.load,
                &self.cfg,
                origin,
                horizon,
                history.solar,
            )
        } else {
            let start = d * history.load.k();
            let f = par_forecast(
                model,
                &history.load,
                &self.cfg,
                start,
                t0 + horizon,
                history.solar,
            )?;
            Ok(f[t0..].to_vec())
        }
    }
}

struct Spr {
    cfg: SprConfig,
    variant: SprVariant,
    trainer: SprTrainer,
    model: Option<LinearModel>,
    trained_day: Option<usize>,
}

impl Forecaster for Spr {
    fn name(&self) -> &str {
        match self.variant {
            SprVariant::Spr => "spr",
            SprVariant::Sprh => "sprh",
        }
    }

    fn min_history_days(&self) -> usize {
        self.cfg.first_day(self.variant) + 1
    }

    fn supports_day_ahead(&self) -> bool {
        self.variant == SprVariant::Spr
    }

    fn retrain(&mut self, history: &History<'_>, day: usize) -> Result<()> {
        check_day(history, day)?;
        let view = history.load.prefix(day * history.load.k());
        self.model = Some(self.trainer.train(&view)?);
        self.trained_day = Some(day);
        Ok(())
    }

    fn forecast(&self, history: &History<'_>, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let (d, t0) = check_window(history, origin, horizon)?;
        trained_for(self.trained_day, d, self.name())?;
        let model = self.model.as_ref().expect("trained");
        match self.variant {
            SprVariant::Sprh => spr_forecast(
                model,
                &history.load,
                &self.cfg,
                self.variant,
                origin,
                horizon,
            ),
            // SPR rows depend only on earlier days, so any origin in the day
            // sees the same inputs as the day start.
            SprVariant::Spr => {
                let start = d * history.load.k();
                let f = spr_forecast(
                    model,
                    &history.load,
                    &self.cfg,
                    self.variant,
                    start,
                    t0 + horizon,
                )?;
                Ok(f[t0..].to_vec())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SpnnParams {
    features: SprConfig,
    network: MlpConfig,
}

struct Spnn {
    cfg: SprConfig,
    net: MlpConfig,
    seed: u64,
    design: DesignMatrix,
    target: Vec<f64>,
    next_day: usize,
    model: Option<MlpModel>,
    trained_day: Option<usize>,
}

impl Forecaster for Spnn {
    fn name(&self) -> &str {
        "spnn"
    }

    fn min_history_days(&self) -> usize {
        self.cfg.first_day(SprVariant::Spr) + 1
    }

    fn retrain(&mut self, history: &History<'_>, day: usize) -> Result<()> {
        check_day(history, day)?;
        let k = history.load.k();
        let view = history.load.prefix(day * k);
        self.next_day = self.next_day.max(self.cfg.first_day(SprVariant::Spr));
        for d in self.next_day..day {
            for (t, r) in day_rows(&view, &self.cfg, SprVariant::Spr, d, 0..k)?
                .iter()
                .enumerate()
            {
                self.design.push_row(r)?;
                self.target.push(view.at(d, t));
            }
        }
        self.next_day = self.next_day.max(day);
        self.model = Some(match &self.model {
            None => mlp_train(
                &self.design,
                &self.target,
                self.seed,
                self.net.epochs,
                self.net.learning_rate,
            )?,
            Some(m) => mlp_continue(
                m,
                &self.design,
                &self.target,
                self.net.retrain_epochs,
                self.net.learning_rate,
            )?,
        });
        self.trained_day = Some(day);
        Ok(())
    }

    fn forecast(&self, history: &History<'_>, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let (d, t0) = check_window(history, origin, horizon)?;
        trained_for(self.trained_day, d, "spnn")?;
        let model = self.model.as_ref().expect("trained");
        let view = history.load.prefix(d * history.load.k());
        day_rows(&view, &self.cfg, SprVariant::Spr, d, t0..t0 + horizon)?
            .iter()
            .map(|r| model.predict(r))
            .collect()
    }
}

/// Builds a registered model. `params` is the model's JSON parameter block;
/// unknown keys are rejected.
pub fn build_forecaster(
    name: &str,
    params_json: Option<&Value>,
    seed: u64,
) -> Result<Box<dyn Forecaster>> {
    let model: Box<dyn Forecaster> = match name {
        "n_day" | "n_same_day" => {
            let (name, cfg): (&'static str, PersistenceConfig) = if name == "n_day" {
                ("n_day", PersistenceConfig::n_day(10))
            } else {
                ("n_same_day", PersistenceConfig::n_same_day(4))
            };
            let cfg = match params_json {
                None | Some(Value::Null) => cfg,
                Some(v) => {
                    let p: PersistenceParams = serde_json::from_value(v.clone())
                        .map_err(|e| Error::InvalidConfig(format!("parameters for {name}: {e}")))?;
                    PersistenceConfig {
                        history_days: p.history_days,
                        ..cfg
                    }
                }
            };
            cfg.validate()?;
            Box::new(Persistence { name, cfg })
        }
        "hw" | "hwh" => {
            let p: HwModelParams = params(name, params_json)?;
            if let Some(f) = p.fixed {
                HwParams::new(f.alpha, f.beta, f.gamma)?;
            }
            Box::new(HoltWinters {
                hourly: name == "hwh",
                fixed: p.fixed,
                fitted: None,
                trained_day: None,
            })
        }
        "sarima" | "sarimah" => {
            let p: SarimaParams = params(name, params_json)?;
            if let Some(o) = &p.order {
                o.validate()?;
            }
            if let Some(c) = &p.search {
                if c.is_empty() {
                    return Err(Error::InvalidConfig("empty SARIMA search grid".into()));
                }
                for o in c {
                    o.validate_search()?;
                }
            }
            Box::new(Sarima {
                hourly: name == "sarimah",
                order: p.order,
                search: p.search,
                opts: p.fit.unwrap_or_default(),
                model: None,
                trained_day: None,
            })
        }
        "par" | "parw" | "parh" | "pareh" => {
            let (name, variant): (&'static str, ParVariant) = match name {
                "par" => ("par", ParVariant::Par),
                "parw" => ("parw", ParVariant::Parw),
                "parh" => ("parh", ParVariant::Parh),
                _ => ("pareh", ParVariant::Pareh),
            };
            let mut cfg: ParConfig = params(name, params_json)?;
            cfg.variant = variant;
            cfg.validate()?;
            Box::new(Par {
                name,
                cfg,
                trainer: ParTrainer::new(cfg),
                model: None,
                trained_day: None,
            })
        }
        "spr" | "sprh" => {
            let cfg: SprConfig = params(name, params_json)?;
            cfg.validate()?;
            let variant = if name == "spr" {
                SprVariant::Spr
            } else {
                SprVariant::Sprh
            };
            Box::new(Spr {
                cfg,
                variant,
                trainer: SprTrainer::new(cfg, variant),
                model: None,
                trained_day: None,
            })
        }
        "spnn" => {
            let p: SpnnParams = params(name, params_json)?;
            p.features.validate()?;
            p.network.validate()?;
            Box::new(Spnn {
                cfg: p.features,
                net: p.network,
                seed,
                design: DesignMatrix::new(p.features.columns(SprVariant::Spr)),
                target: Vec::new(),
                next_day: 0,
                model: None,
                trained_day: None,
            })
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(model)
}
