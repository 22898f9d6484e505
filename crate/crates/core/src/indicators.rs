//! Epidemiological outputs derived from a trajectory: cumulative cases,
//! effective reproduction number, hospital load, infection attribution
//! and daily curves.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::integrator::Trajectory;
use crate::model::{CoefficientSnapshot, Model, StateVector};

/// How the convalescence period `C_o` is converted into a lag on the grid
/// when computing `Hos(t) = H_D + p (H_R + R_d(t) − R_d(t − lag))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvalescenceLag {
    /// `C_o` counts grid steps, i.e. the lag is `C_o · Δt` days. This is the
    /// reading under which the published hospital-load figures are recovered.
    #[default]
    GridSteps,
    /// `C_o` counts days.
    Days,
}

impl ConvalescenceLag {
    /// Lag expressed as a number of grid nodes.
    pub fn nodes(self, convalescence: f64, dt: f64) -> usize {
        match self {
            ConvalescenceLag::GridSteps => convalescence.round() as usize,
            ConvalescenceLag::Days => (convalescence / dt).round() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorOptions {
    #[serde(default)]
    pub convalescence_lag: ConvalescenceLag,
}

/// Every indicator of one trajectory. Node series have one entry per grid
/// node, daily series one entry per integer day starting at day 0.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub c_m: Vec<f64>,
    pub d_m: Vec<f64>,
    pub r_e: Vec<f64>,
    pub hos: Vec<f64>,
    pub mhos: Vec<f64>,
    pub gamma_e: Vec<f64>,
    pub gamma_iu: Vec<f64>,
    pub gamma_h: Vec<f64>,
    pub daily: DailySeries,
}

impl IndicatorSeries {
    pub fn compute(traj: &Trajectory, model: &Model, opts: &IndicatorOptions) -> Result<Self> {
        let hos = hospitalized_load(traj, model, opts);
        let attribution = attribution_integrals(traj, model);
        Ok(IndicatorSeries {
            c_m: cumulative_cases(traj),
            d_m: traj.states().iter().map(|s| s.d.max(0.0)).collect(),
            r_e: effective_reproduction_series(traj, model),
            mhos: running_max(&hos),
            hos,
            gamma_e: attribution.gamma_e,
            gamma_iu: attribution.gamma_iu,
            gamma_h: attribution.gamma_h,
            daily: daily_series(traj)?,
        })
    }
}

/// `c_m = H_R + H_D + R_d + D` at every node.
pub fn cumulative_cases(traj: &Trajectory) -> Vec<f64> {
    traj.states().iter().map(|s| (s.hr + s.hd + s.rd + s.d).max(0.0)).collect()
}

/// `c_m(t0) + ∫ θ γ_I I ds` by the composite trapezoid rule.
pub fn cumulative_cases_integral(traj: &Trajectory, model: &Model) -> Vec<f64> {
    let states = traj.states();
    let grid = traj.grid();
    let integrand = |i: usize| {
        let t = grid.time(i);
        model.detection_fraction(t) * model.transition_rates(t).gamma_i * states[i].i
    };
    let first = &states[0];
    let mut acc = first.hr + first.hd + first.rd + first.d;
    let mut out = Vec::with_capacity(states.len());
    out.push(acc);
    let mut prev = integrand(0);
    for i in 1..states.len() {
        let cur = integrand(i);
        acc += 0.5 * grid.dt() * (prev + cur);
        out.push(acc);
        prev = cur;
    }
    out
}

/// Effective reproduction number for a state and contact rate at time `t`.
pub fn effective_reproduction(model: &Model, state: &StateVector, t: f64, beta: f64) -> f64 {
    let c = model.coefficients(t);
    reproduction_from(&c, state, beta, model.population())
}

fn reproduction_from(c: &CoefficientSnapshot, state: &StateVector, beta: f64, population: f64) -> f64 {
    let CoefficientSnapshot { m, theta, omega, rates: r, scalers: a } = *c;
    let beta_e = beta * a.a_e;
    let beta_iu = beta * a.a_iu;
    let beta_hr = beta * a.a_hr;
    let beta_hd = beta * a.a_hd;
    let u_e = (((m * beta_iu * (1.0 - theta) * r.gamma_hr + m * beta_hr * r.gamma_iu * (theta - omega)) * r.gamma_i
        + m * beta * r.gamma_hr * r.gamma_iu)
        * r.gamma_e
        + m * beta_e * r.gamma_i * r.gamma_hr * r.gamma_iu)
        * r.gamma_hd
        + m * beta_hd * omega * r.gamma_e * r.gamma_i * r.gamma_hr * r.gamma_iu;
    let rates = r.gamma_e * r.gamma_i * r.gamma_hr * r.gamma_hd * r.gamma_iu;
    (u_e / rates * state.s.max(0.0) / population).max(0.0)
}

/// `R_e` at every node, using the realized rate at that node.
pub fn effective_reproduction_series(traj: &Trajectory, model: &Model) -> Vec<f64> {
    let grid = traj.grid();
    traj.states()
        .iter()
        .zip(traj.rate_path().values())
        .enumerate()
        .map(|(i, (s, beta))| effective_reproduction(model, s, grid.time(i), *beta))
        .collect()
}

/// `Hos(t) = H_D + p (H_R + R_d(t) − R_d(t − lag))` with `R_d = 0` before `t0`.
pub fn hospitalized_load(traj: &Trajectory, model: &Model, opts: &IndicatorOptions) -> Vec<f64> {
    let p = model.params();
    let lag = opts.convalescence_lag.nodes(p.convalescence, traj.grid().dt());
    let states = traj.states();
    states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let released = if i >= lag { states[i - lag].rd } else { 0.0 };
            (s.hd + p.hospitalized_fraction * (s.hr + s.rd - released)).max(0.0)
        })
        .collect()
}

/// Running maximum of a series.
pub fn running_max(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(f64::NEG_INFINITY, |best, &x| {
            *best = best.max(x);
            Some(*best)
        })
        .collect()
}

/// Cumulative infections caused by `E`, `I_u` and `H = H_R + H_D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub gamma_e: Vec<f64>,
    pub gamma_iu: Vec<f64>,
    pub gamma_h: Vec<f64>,
}

/// Trapezoidal quadrature of the attribution integrands. Within a cell the
/// contact rate is the held value that drove the integrator there.
pub fn attribution_integrals(traj: &Trajectory, model: &Model) -> Attribution {
    let grid = traj.grid();
    let states = traj.states();
    let n = model.population();
    // Integrands without the contact-rate factor.
    let density = |i: usize| {
        let c = model.coefficients(grid.time(i));
        let s = &states[i];
        let w = c.m * s.s / n;
        [w * c.scalers.a_e * s.e, w * c.scalers.a_iu * s.iu, w * (c.scalers.a_hr * s.hr + c.scalers.a_hd * s.hd)]
    };
    let mut out = Attribution {
        gamma_e: vec![0.0; states.len()],
        gamma_iu: vec![0.0; states.len()],
        gamma_h: vec![0.0; states.len()],
    };
    let mut acc = [0.0; 3];
    let mut prev = density(0);
    for i in 1..states.len() {
        let cur = density(i);
        let beta = traj.rate_path().values()[i - 1];
        for k in 0..3 {
            acc[k] += 0.5 * grid.dt() * beta * (prev[k] + cur[k]).max(0.0);
        }
        out.gamma_e[i] = acc[0];
        out.gamma_iu[i] = acc[1];
        out.gamma_h[i] = acc[2];
        prev = cur;
    }
    out
}

/// Per-day increments; entry 0 is the cumulative value on day 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub reported: Vec<f64>,
    pub deaths: Vec<f64>,
    pub recovered: Vec<f64>,
}

/// Day-over-day differences of a cumulative series sampled at integer days.
/// Round-off below zero is clipped.
pub fn daily_from_cumulative(cumulative: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(cumulative.len());
    if let Some(first) = cumulative.first() {
        out.push(first.max(0.0));
    }
    out.extend(cumulative.windows(2).map(|w| (w[1] - w[0]).max(0.0)));
    out
}

pub fn daily_series(traj: &Trajectory) -> Result<DailySeries> {
    let days = traj.grid().day_nodes()?;
    let at_days = |f: fn(&StateVector) -> f64| -> Vec<f64> { days.iter().map(|&i| f(&traj.states()[i])).collect() };
    Ok(DailySeries {
        reported: daily_from_cumulative(&at_days(|s| s.hr + s.hd + s.rd + s.d)),
        deaths: daily_from_cumulative(&at_days(|s| s.d)),
        recovered: daily_from_cumulative(&at_days(|s| s.rd)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cir::RatePath;
    use crate::grid::TimeGrid;
    use crate::integrator::{integrate, integrate_deterministic, Tolerances};

    fn deterministic() -> (Model, Trajectory) {
        let model = Model::china();
        let grid = TimeGrid::daily(119, 6).unwrap();
        let traj = integrate_deterministic(&model, &grid, Tolerances::for_population(model.population())).unwrap();
        (model, traj)
    }

    #[test]
    fn zero_susceptibles_have_zero_reproduction() {
        let model = Model::china();
        let s = StateVector { e: 10.0, i: 5.0, ..Default::default() };
        assert_eq!(effective_reproduction(&model, &s, 30.0, 0.2887), 0.0);
    }

    #[test]
    fn indicators_start_at_zero() {
        let (model, traj) = deterministic();
        let ind = IndicatorSeries::compute(&traj, &model, &IndicatorOptions::default()).unwrap();
        assert_eq!(ind.c_m[0], 0.0);
        assert_eq!(ind.gamma_e[0], 0.0);
        assert_eq!(ind.gamma_iu[0], 0.0);
        assert_eq!(ind.gamma_h[0], 0.0);
        assert_eq!(ind.daily.reported.len(), 120);
    }

    #[test]
    fn daily_differences() {
        assert_eq!(daily_from_cumulative(&[0.0, 1.0, 3.0, 6.0]), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(daily_from_cumulative(&[0.0, 0.0, 0.0]), vec![0.0; 3]);
        assert_eq!(daily_from_cumulative(&[2.0, 2.0 - 1e-12]), vec![2.0, 0.0]);
        assert!(daily_from_cumulative(&[]).is_empty());
    }

    #[test]
    fn all_zero_trajectory_gives_zero_daily_series() {
        let model = Model::china();
        let grid = TimeGrid::daily(3, 6).unwrap();
        let s = StateVector { s: model.population(), ..Default::default() };
        let traj = integrate(&model, s, RatePath::constant(grid, 0.3), Tolerances::for_population(model.population()))
            .unwrap();
        let daily = daily_series(&traj).unwrap();
        assert!(daily.reported.iter().chain(&daily.deaths).chain(&daily.recovered).all(|v| *v == 0.0));
    }

    #[test]
    fn early_hospital_load_has_no_release_term() {
        let (model, traj) = deterministic();
        for opts in [ConvalescenceLag::Days, ConvalescenceLag::GridSteps] {
            let hos = hospitalized_load(&traj, &model, &IndicatorOptions { convalescence_lag: opts });
            let lag = opts.nodes(14.0, traj.grid().dt());
            for (h, s) in hos.iter().zip(traj.states()).take(lag) {
                assert!((h - (s.hd + s.hr + s.rd).max(0.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lag_conversion() {
        assert_eq!(ConvalescenceLag::Days.nodes(14.0, 1.0 / 6.0), 84);
        assert_eq!(ConvalescenceLag::GridSteps.nodes(14.0, 1.0 / 6.0), 14);
    }

    #[test]
    fn running_max_is_monotone() {
        assert_eq!(running_max(&[1.0, 3.0, 2.0, 5.0, 4.0]), vec![1.0, 3.0, 3.0, 5.0, 5.0]);
    }

    #[test]
    fn cumulative_cases_forms_agree() {
        let (model, traj) = deterministic();
        let sum_form = cumulative_cases(&traj);
        let integral_form = cumulative_cases_integral(&traj, &model);
        for (a, b) in sum_form.iter().zip(&integral_form).skip(6) {
            assert!((a - b).abs() <= 1e-3 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn reproduction_decays_after_control() {
        let (model, traj) = deterministic();
        let r = effective_reproduction_series(&traj, &model);
        let g = traj.grid();
        assert!(r[g.node_at(119.0).unwrap()] < r[g.node_at(69.0).unwrap()]);
        assert!(r.iter().all(|v| *v >= 0.0));
    }
}
