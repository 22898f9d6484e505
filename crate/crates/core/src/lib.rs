//! Stochastic θ-SEIHRD epidemic model.
//!
//! The contact rate of detected infectious people follows a CIR diffusion.
//! Each Monte Carlo path samples that rate exactly on a uniform grid and
//! then integrates the nine-compartment system with an adaptive
//! Dormand–Prince scheme. Ensembles are reduced to per-time mean,
//! interquartile interval and worst-case percentile, for the compartments
//! and for the derived outputs (cumulative cases, `R_e`, hospital load,
//! infection attribution).
//!
//! ```
//! use seihrd::{integrate_deterministic, Model, TimeGrid, Tolerances};
//!
//! let model = Model::china();
//! let grid = TimeGrid::daily(119, 6).unwrap();
//! let traj = integrate_deterministic(&model, &grid, Tolerances::for_population(model.population())).unwrap();
//! let deaths = traj.state_at_day(119.0).unwrap().d;
//! assert!((deaths - 417.0).abs() < 5.0);
//! ```

pub mod cir;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod indicators;
pub mod integrator;
pub mod model;
pub mod output;

pub use cir::{CirParameters, RatePath, RateScheme};
pub use config::RunConfig;
pub use ensemble::{EnsembleConfig, EnsembleSamples, EnsembleSummary, Variable};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use indicators::{ConvalescenceLag, IndicatorOptions, IndicatorSeries};
pub use integrator::{integrate, integrate_deterministic, Tolerances, Trajectory};
pub use model::{Compartment, Model, ModelParameters, StateVector};
