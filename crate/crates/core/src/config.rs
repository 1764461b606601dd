//! JSON run configuration. Unknown keys anywhere are rejected.
//!
//! ```json
//! {
//!   "grid": {"interval_minutes": 15, "update_period_hours": 4},
//!   "load": "load.csv",
//!   "solar": "solar.csv",
//!   "output_dir": "out",
//!   "models": ["n_day", "parh", "sprh"],
//!   "params": {"parh": {"ar_order": 4}},
//!   "mode": "hourly",
//!   "warmup_days": 30,
//!   "start": "2016-02-01",
//!   "end": null,
//!   "horizon": null,
//!   "seed": 0
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{Mode, SimConfig};
use crate::error::{Error, Result};
use crate::models::MODEL_NAMES;
use crate::timeseries::GridSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub load: Option<PathBuf>,
    pub solar: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub models: Vec<String>,
    pub params: BTreeMap<String, Value>,
    pub mode: Mode,
    pub horizon: Option<usize>,
    pub warmup_days: usize,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        RunConfig {
            grid: GridSpec::default(),
            load: None,
            solar: None,
            output_dir: None,
            models: sim.models,
            params: sim.params,
            mode: sim.mode,
            horizon: sim.horizon,
            warmup_days: sim.warmup_days,
            start: sim.start,
            end: sim.end,
            seed: sim.seed,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    /// Parses, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.load, &mut cfg.solar, &mut cfg.output_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("config lists no models".into()));
        }
        for name in &self.models {
            if !MODEL_NAMES.contains(&name.as_str()) {
                return Err(Error::UnknownModel(format!(
                    "unknown model `{name}` (known: {})",
                    MODEL_NAMES.join(", ")
                )));
            }
        }
        for p in [&self.load, &self.solar].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::InvalidConfig(format!(
                    "{} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn to_sim_config(&self) -> SimConfig {
        SimConfig {
            models: self.models.clone(),
            params: self.params.clone(),
            mode: self.mode,
            horizon: self.horizon,
            warmup_days: self.warmup_days,
            start: self.start,
            end: self.end,
            seed: self.seed,
        }
    }
}
