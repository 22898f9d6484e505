//! Run configuration: a sectioned TOML file bundling model parameters,
//! the contact-rate diffusion and the experiment settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cir::{CirParameters, RateScheme};
use crate::ensemble::{EnsembleConfig, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::indicators::IndicatorOptions;
use crate::integrator::Tolerances;
use crate::model::{Model, ModelParameters};

/// The China parameter set shipped with the crate.
pub const BUNDLED_DEFAULT: &str = include_str!("../config/china.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub steps_per_day: u32,
    pub abs_tol_per_capita: f64,
    pub rel_tol: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            steps_per_day: 6,
            abs_tol_per_capita: Tolerances::DEFAULT_ABS_PER_CAPITA,
            rel_tol: Tolerances::DEFAULT_REL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSettings {
    pub paths: usize,
    pub seed: u64,
    pub report_days: Vec<u32>,
    pub percentile_ws: f64,
    #[serde(default)]
    pub scheme: RateScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub histogram_bins: usize,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings {
            paths: 1 << 15,
            seed: 42,
            report_days: vec![69, 119],
            percentile_ws: 0.95,
            scheme: RateScheme::Exact,
            workers: None,
            histogram_bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Trajectory,
    Summary,
    Indicators,
    Histograms,
    Curves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub emit: Vec<Emit>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: PathBuf::from("output"),
            emit: vec![Emit::Trajectory, Emit::Summary, Emit::Indicators, Emit::Histograms, Emit::Curves],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParameters,
    pub cir: CirParameters,
    #[serde(default)]
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub ensemble: EnsembleSettings,
    #[serde(default)]
    pub indicators: IndicatorOptions,
    #[serde(default)]
    pub output: OutputSettings,
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } if !field.contains('.') => {
            Error::InvalidParameter { field: format!("{section}.{field}"), reason }
        }
        e => e,
    }
}

impl RunConfig {
    pub fn bundled_default() -> Self {
        Self::parse(BUNDLED_DEFAULT).expect("bundled configuration is valid")
    }

    /// Parses and validates TOML text.
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| in_section("model", e))?;
        self.cir.validate()?;
        let s = &self.simulation;
        if s.steps_per_day == 0 {
            return Err(Error::invalid("simulation.steps_per_day", "must be at least 1"));
        }
        if !(s.abs_tol_per_capita.is_finite() && s.abs_tol_per_capita > 0.0) {
            return Err(Error::invalid("simulation.abs_tol_per_capita", "must be positive"));
        }
        if !(s.rel_tol.is_finite() && s.rel_tol >= 0.0) {
            return Err(Error::invalid("simulation.rel_tol", "must be non-negative"));
        }
        let e = &self.ensemble;
        if e.paths == 0 {
            return Err(Error::invalid("ensemble.paths", "at least one path is required"));
        }
        if !(0.0..=1.0).contains(&e.percentile_ws) {
            return Err(Error::invalid("ensemble.percentile_ws", "must lie in [0, 1]"));
        }
        if e.histogram_bins == 0 {
            return Err(Error::invalid("ensemble.histogram_bins", "must be at least 1"));
        }
        if e.workers == Some(0) {
            return Err(Error::invalid("ensemble.workers", "must be at least 1"));
        }
        let horizon = (self.model.end - self.model.t0).num_days();
        if let Some(day) = e.report_days.iter().find(|d| i64::from(**d) > horizon) {
            return Err(Error::invalid(
                "ensemble.report_days",
                format!("day {day} lies beyond the horizon of {horizon} days"),
            ));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Model> {
        Model::new(self.model.clone()).map_err(|e| in_section("model", e))
    }

    pub fn grid(&self, model: &Model) -> Result<TimeGrid> {
        TimeGrid::daily(model.horizon() as u32, self.simulation.steps_per_day)
    }

    pub fn tolerances(&self, model: &Model) -> Tolerances {
        Tolerances {
            abs_tol: self.simulation.abs_tol_per_capita * model.population(),
            rel_tol: self.simulation.rel_tol,
        }
    }

    pub fn ensemble_config(&self, model: &Model) -> Result<EnsembleConfig> {
        let config = EnsembleConfig {
            n_paths: self.ensemble.paths,
            master_seed: self.ensemble.seed,
            cir: self.cir,
            scheme: self.ensemble.scheme,
            grid: self.grid(model)?,
            tolerances: self.tolerances(model),
            report_times: self.ensemble.report_days.clone(),
            percentile_ws: self.ensemble.percentile_ws,
            indicators: self.indicators,
            workers: self.ensemble.workers,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn emits(&self, what: Emit) -> bool {
        self.output.emit.contains(&what)
    }
}
