//! Monte Carlo ensembles over contact-rate paths and their per-time
//! statistics.
//!
//! Path `i` draws its rate path from a generator keyed by
//! `(master_seed, i)`, and results are gathered in path order, so the
//! output does not depend on the number of workers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cir::{path_rng, CirParameters, RateScheme};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::indicators::{IndicatorOptions, IndicatorSeries};
use crate::integrator::{integrate, Tolerances, Trajectory};
use crate::model::{Compartment, Model};

/// A scalar observable of one path at one time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Compartment(Compartment),
    /// The realized contact rate.
    Beta,
    CumulativeCases,
    CumulativeDeaths,
    ReproductionNumber,
    Hospitalized,
    MaxHospitalized,
    GammaE,
    GammaIu,
    GammaH,
    /// `I_u + R_u`: everyone who went through the undetected route.
    UndetectedCumulative,
    DailyReported,
    DailyDeaths,
    DailyRecovered,
}

impl Variable {
    /// The nine compartments followed by the output indicators.
    pub fn table() -> Vec<Variable> {
        let mut v: Vec<Variable> = Compartment::ALL.iter().map(|c| Variable::Compartment(*c)).collect();
        v.extend([
            Variable::CumulativeCases,
            Variable::CumulativeDeaths,
            Variable::ReproductionNumber,
            Variable::Hospitalized,
            Variable::MaxHospitalized,
            Variable::GammaE,
            Variable::GammaIu,
            Variable::GammaH,
        ]);
        v
    }

    /// The epidemic curves: cumulative, hospital and daily series.
    pub fn curves() -> Vec<Variable> {
        vec![
            Variable::CumulativeCases,
            Variable::UndetectedCumulative,
            Variable::Hospitalized,
            Variable::DailyReported,
            Variable::DailyDeaths,
            Variable::DailyRecovered,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::Compartment(c) => c.name(),
            Variable::Beta => "beta",
            Variable::CumulativeCases => "cm",
            Variable::CumulativeDeaths => "dm",
            Variable::ReproductionNumber => "Re",
            Variable::Hospitalized => "Hos",
            Variable::MaxHospitalized => "MHos",
            Variable::GammaE => "GammaE",
            Variable::GammaIu => "GammaIu",
            Variable::GammaH => "GammaH",
            Variable::UndetectedCumulative => "undetected_cumulative",
            Variable::DailyReported => "daily_reported",
            Variable::DailyDeaths => "daily_deaths",
            Variable::DailyRecovered => "daily_recovered",
        }
    }

    fn is_daily(self) -> bool {
        matches!(self, Variable::DailyReported | Variable::DailyDeaths | Variable::DailyRecovered)
    }

    /// Value at grid node `node`, which is integer day `day`.
    fn evaluate(self, traj: &Trajectory, ind: Option<&IndicatorSeries>, node: usize, day: usize) -> f64 {
        let s = &traj.states()[node];
        let ind = || ind.expect("indicator series required");
        match self {
            Variable::Compartment(c) => s.get(c).max(0.0),
            Variable::Beta => traj.rate_path().values()[node],
            Variable::CumulativeCases => ind().c_m[node],
            Variable::CumulativeDeaths => ind().d_m[node],
            Variable::ReproductionNumber => ind().r_e[node],
            Variable::Hospitalized => ind().hos[node],
            Variable::MaxHospitalized => ind().mhos[node],
            Variable::GammaE => ind().gamma_e[node],
            Variable::GammaIu => ind().gamma_iu[node],
            Variable::GammaH => ind().gamma_h[node],
            Variable::UndetectedCumulative => (s.iu + s.ru).max(0.0),
            Variable::DailyReported => ind().daily.reported[day],
            Variable::DailyDeaths => ind().daily.deaths[day],
            Variable::DailyRecovered => ind().daily.recovered[day],
        }
    }

    fn needs_indicators(self) -> bool {
        !matches!(self, Variable::Compartment(_) | Variable::Beta | Variable::UndetectedCumulative)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Compartment::ALL
            .iter()
            .map(|c| Variable::Compartment(*c))
            .chain(Variable::table())
            .chain(Variable::curves())
            .chain([Variable::Beta])
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid("variable", format!("unknown variable `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub master_seed: u64,
    pub cir: CirParameters,
    pub scheme: RateScheme,
    pub grid: TimeGrid,
    pub tolerances: Tolerances,
    /// Days at which statistics are reported.
    pub report_times: Vec<u32>,
    /// Probability of the worst-case percentile.
    pub percentile_ws: f64,
    pub indicators: IndicatorOptions,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::invalid("paths", "at least one path is required"));
        }
        self.cir.validate()?;
        self.tolerances.validate()?;
        if !(0.0..=1.0).contains(&self.percentile_ws) {
            return Err(Error::invalid("percentile_ws", format!("must be a probability, got {}", self.percentile_ws)));
        }
        for &day in &self.report_times {
            if self.grid.node_at(day as f64).is_none() {
                return Err(Error::invalid("report_times", format!("day {day} is not a node of the simulation grid")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        Ok(())
    }
}

/// Samples path `index` of the ensemble and integrates it.
pub fn simulate_path(model: &Model, config: &EnsembleConfig, index: u64) -> Result<Trajectory> {
    let mut rng = path_rng(config.master_seed, index);
    let rates = config.scheme.sample(&config.grid, &config.cir, &mut rng);
    integrate(model, model.initial_state(), rates, config.tolerances)
        .map_err(|e| Error::Path { index, source: Box::new(e) })
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Every trajectory of the ensemble, in path order. Memory grows with
/// `n_paths × nodes`; use [`run_ensemble`] for large ensembles.
pub fn run_trajectories(model: &Model, config: &EnsembleConfig) -> Result<Vec<Trajectory>> {
    config.validate()?;
    with_workers(config.workers, || {
        (0..config.n_paths as u64).into_par_iter().map(|i| simulate_path(model, config, i)).collect()
    })?
}

/// One observable at one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub variable: Variable,
    pub day: u32,
}

/// Per-probe samples across the ensemble, in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSamples {
    probes: Vec<Probe>,
    /// Probe-major: `values[p * n_paths + path]`.
    values: Vec<f64>,
    n_paths: usize,
}

impl EnsembleSamples {
    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn get(&self, variable: Variable, day: u32) -> Option<&[f64]> {
        self.probes
            .iter()
            .position(|p| p.variable == variable && p.day == day)
            .map(|p| &self.values[p * self.n_paths..(p + 1) * self.n_paths])
    }

    fn slices(&self) -> impl Iterator<Item = (&Probe, &[f64])> {
        self.probes.iter().zip(self.values.chunks(self.n_paths.max(1)))
    }

    /// Samples of already computed trajectories.
    pub fn from_trajectories(
        trajectories: &[Trajectory],
        model: &Model,
        probes: &[Probe],
        opts: &IndicatorOptions,
    ) -> Result<Self> {
        let rows = trajectories.iter().map(|t| observe(t, model, probes, opts)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows(probes.to_vec(), &rows))
    }

    fn from_rows(probes: Vec<Probe>, rows: &[Vec<f64>]) -> Self {
        let n_paths = rows.len();
        let mut values = vec![0.0; probes.len() * n_paths];
        for (path, row) in rows.iter().enumerate() {
            for (p, v) in row.iter().enumerate() {
                values[p * n_paths + path] = *v;
            }
        }
        EnsembleSamples { probes, values, n_paths }
    }
}

fn observe(traj: &Trajectory, model: &Model, probes: &[Probe], opts: &IndicatorOptions) -> Result<Vec<f64>> {
    let indicators = if probes.iter().any(|p| p.variable.needs_indicators()) {
        Some(IndicatorSeries::compute(traj, model, opts)?)
    } else {
        None
    };
    probes
        .iter()
        .map(|p| {
            let node = traj
                .grid()
                .node_at(p.day as f64)
                .ok_or_else(|| Error::invalid("report_times", format!("day {} is not a grid node", p.day)))?;
            let day = if p.variable.is_daily() {
                let first = traj.grid().t_start().ceil() as u32;
                (p.day - first) as usize
            } else {
                0
            };
            Ok(p.variable.evaluate(traj, indicators.as_ref(), node, day))
        })
        .collect()
}

/// Probes for every table variable at every report time.
pub fn report_probes(config: &EnsembleConfig) -> Vec<Probe> {
    config
        .report_times
        .iter()
        .flat_map(|&day| Variable::table().into_iter().map(move |variable| Probe { variable, day }))
        .collect()
}

/// Probes for every curve at every day of the grid.
pub fn curve_probes(config: &EnsembleConfig) -> Vec<Probe> {
    let first = config.grid.t_start().ceil() as u32;
    let last = config.grid.t_end().floor() as u32;
    Variable::curves().into_iter().flat_map(|variable| (first..=last).map(move |day| Probe { variable, day })).collect()
}

const CHUNK: usize = 1024;

/// Runs the ensemble keeping only the probed values of each path.
pub fn run_ensemble(model: &Model, config: &EnsembleConfig) -> Result<EnsembleSamples> {
    run_probes(model, config, &report_probes(config))
}

/// Runs the ensemble for an arbitrary probe set.
pub fn run_probes(model: &Model, config: &EnsembleConfig, probes: &[Probe]) -> Result<EnsembleSamples> {
    config.validate()?;
    let n = config.n_paths;
    let mut values = vec![0.0; probes.len() * n];
    let observe_path = |i: usize| -> Result<Vec<f64>> {
        let traj = simulate_path(model, config, i as u64)?;
        observe(&traj, model, probes, &config.indicators)
            .map_err(|e| Error::Path { index: i as u64, source: Box::new(e) })
    };
    with_workers(config.workers, || -> Result<()> {
        for start in (0..n).step_by(CHUNK) {
            let end = (start + CHUNK).min(n);
            let rows = (start..end).into_par_iter().map(observe_path).collect::<Result<Vec<_>>>()?;
            for (offset, row) in rows.into_iter().enumerate() {
                for (p, v) in row.into_iter().enumerate() {
                    values[p * n + start + offset] = v;
                }
            }
        }
        Ok(())
    })??;
    Ok(EnsembleSamples { probes: probes.to_vec(), values, n_paths: n })
}

/// Sample quantile by linear interpolation between order statistics at
/// rank `h = (n − 1) p + 1` (one-based).
pub fn quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must be a probability, got {p}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Marginal statistics of one probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub variable: Variable,
    pub day: u32,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    /// Worst-case percentile.
    pub p_ws: f64,
    pub median: f64,
    /// Standard error of the mean.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub rows: Vec<SummaryRow>,
    pub samples: usize,
    pub percentile_ws: f64,
}

impl EnsembleSummary {
    pub fn row(&self, variable: Variable, day: u32) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.variable == variable && r.day == day)
    }
}

/// Reduces ensemble samples to mean, quartiles and the worst-case percentile.
pub fn summarize(samples: &EnsembleSamples, percentile_ws: f64) -> Result<EnsembleSummary> {
    if samples.n_paths() == 0 {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&percentile_ws) {
        return Err(Error::invalid("percentile_ws", "must be a probability"));
    }
    let rows = samples.slices().map(|(probe, xs)| summarize_slice(probe, xs, percentile_ws)).collect();
    Ok(EnsembleSummary { rows, samples: samples.n_paths(), percentile_ws })
}

fn summarize_slice(probe: &Probe, xs: &[f64], percentile_ws: f64) -> SummaryRow {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    SummaryRow {
        variable: probe.variable,
        day: probe.day,
        mean,
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        p_ws: quantile_sorted(&sorted, percentile_ws),
        median: quantile_sorted(&sorted, 0.5),
        std_error: (var / n).sqrt(),
    }
}

/// Summary of the table variables over a set of trajectories.
pub fn summarize_trajectories(
    trajectories: &[Trajectory],
    model: &Model,
    config: &EnsembleConfig,
) -> Result<EnsembleSummary> {
    let samples = EnsembleSamples::from_trajectories(trajectories, model, &report_probes(config), &config.indicators)?;
    summarize(&samples, config.percentile_ws)
}

/// Equal-width bins over `[min, max]` of the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.max - self.min) / self.counts.len() as f64
    }

    /// `(lower, upper, count)` for every bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        let w = self.bin_width();
        self.counts.iter().enumerate().map(move |(i, c)| {
            let lower = self.min + i as f64 * w;
            let upper = if i + 1 == self.counts.len() { self.max } else { lower + w };
            (lower, upper, *c)
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub const DEFAULT_BINS: usize = 50;

pub fn histogram(samples: &[f64], bin_count: usize) -> Result<Histogram> {
    if bin_count == 0 {
        return Err(Error::invalid("bins", "at least one bin is required"));
    }
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0u64; bin_count];
    let width = (max - min) / bin_count as f64;
    for x in samples {
        let bin = if width > 0.0 { (((x - min) / width) as usize).min(bin_count - 1) } else { 0 };
        counts[bin] += 1;
    }
    Ok(Histogram { min, max, counts })
}
