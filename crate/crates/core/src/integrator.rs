//! Adaptive Dormand–Prince 5(4) integration of the compartment system
//! along a piecewise-constant contact-rate path.
//!
//! The rate is held at its left-node value over each grid cell and the
//! adaptive sub-steps never cross a cell boundary, so every grid node is
//! hit exactly.

use serde::{Deserialize, Serialize};

use crate::cir::RatePath;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::{Model, StateVector, COMPARTMENTS};

/// Local error tolerances; `abs_tol` is in persons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Tolerances {
    pub const DEFAULT_ABS_PER_CAPITA: f64 = 1e-8;
    pub const DEFAULT_REL: f64 = 1e-6;

    /// `abs_tol = 1e-8 N`, `rel_tol = 1e-6`.
    pub fn for_population(population: f64) -> Self {
        Tolerances { abs_tol: Self::DEFAULT_ABS_PER_CAPITA * population, rel_tol: Self::DEFAULT_REL }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            return Err(Error::invalid("abs_tol", "must be positive"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return Err(Error::invalid("rel_tol", "must be non-negative"));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince step: fifth-order solution, embedded error estimate
/// and the derivative at the new point (first stage of the next step).
pub struct Step<const N: usize> {
    pub y: [f64; N],
    pub error: [f64; N],
    pub dydt: [f64; N],
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (w, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * w * ki;
        }
    }
    out
}

/// Single step of size `h` from `(t, y)` with `k1 = f(t, y)` supplied.
pub fn dopri_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Step<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &combine(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y5 = combine(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y5);
    let mut error = [0.0; N];
    for i in 0..N {
        error[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Step { y: y5, error, dydt: k7 }
}

/// Step-size controller around [`dopri_step`].
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tolerances: Tolerances,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
}

/// Result of advancing over one interval.
#[derive(Debug, Clone, Copy)]
pub struct Advance<const N: usize> {
    pub y: [f64; N],
    /// Suggested size for the next step.
    pub h_next: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(tolerances: Tolerances) -> Self {
        Dopri5 { tolerances, safety: 0.9, min_factor: 0.2, max_factor: 5.0 }
    }

    fn error_norm<const N: usize>(&self, y0: &[f64; N], step: &Step<N>) -> f64 {
        let Tolerances { abs_tol, rel_tol } = self.tolerances;
        let sum: f64 = (0..N)
            .map(|i| {
                let scale = abs_tol + rel_tol * y0[i].abs().max(step.y[i].abs());
                (step.error[i] / scale).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    }

    /// Integrates from `t0` to exactly `t1`, starting with step `h`.
    pub fn advance<const N: usize, F>(&self, f: &mut F, t0: f64, t1: f64, y0: [f64; N], h: f64) -> Result<Advance<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let span = t1 - t0;
        let mut t = t0;
        let mut y = y0;
        let mut h_prop = h;
        let mut k1 = f(t, &y);
        let mut accepted = 0;
        let mut rejected = 0;
        while t < t1 {
            let remaining = t1 - t;
            // Avoid leaving a sliver at the end of the interval.
            let truncated = h_prop >= remaining || remaining - h_prop < 1e-10 * span;
            let h = if truncated { remaining } else { h_prop };
            if h < 1e-12 * t.abs().max(1.0) {
                return Err(Error::Integration { t, reason: format!("step size {h:e} underflowed") });
            }
            let step = dopri_step(f, t, &y, &k1, h);
            let err = self.error_norm(&y, &step);
            if err.is_finite() && err <= 1.0 {
                t = if truncated { t1 } else { t + h };
                y = step.y;
                k1 = step.dydt;
                accepted += 1;
                let factor = if err == 0.0 {
                    self.max_factor
                } else {
                    (self.safety * err.powf(-0.2)).clamp(self.min_factor, self.max_factor)
                };
                h_prop = if truncated { h_prop.max(h * factor) } else { h * factor };
            } else {
                rejected += 1;
                let factor = if err.is_finite() {
                    (self.safety * err.powf(-0.2)).clamp(self.min_factor, 1.0)
                } else {
                    self.min_factor
                };
                h_prop = h * factor;
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { t: t1, reason: "state became non-finite".into() });
        }
        Ok(Advance { y, h_next: h_prop, accepted, rejected })
    }
}

/// One realization: a state per grid node and the rate path that drove it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    states: Vec<StateVector>,
    rate_path: RatePath,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        self.rate_path.grid()
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn rate_path(&self) -> &RatePath {
        &self.rate_path
    }

    pub fn state_at_day(&self, day: f64) -> Option<&StateVector> {
        self.grid().node_at(day).map(|i| &self.states[i])
    }
}

/// Solves the system over the grid of `rate_path`, holding the rate at
/// `rate_path[i]` on the cell `[t_i, t_{i+1}]`.
pub fn integrate(
    model: &Model,
    initial: StateVector,
    rate_path: RatePath,
    tolerances: Tolerances,
) -> Result<Trajectory> {
    tolerances.validate()?;
    if !initial.is_finite() || initial.to_array().iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("initial", "compartments must be finite and non-negative"));
    }
    let grid = *rate_path.grid();
    let solver = Dopri5::new(tolerances);
    let mut states = Vec::with_capacity(grid.nodes());
    states.push(initial);
    let mut y = initial.to_array();
    let mut h = grid.dt();
    for (i, &beta) in rate_path.values()[..grid.cells()].iter().enumerate() {
        let mut rhs = |t: f64, y: &[f64; COMPARTMENTS]| {
            let c = model.coefficients(t);
            model.vector_field_with(&StateVector::from_array(*y), beta, &c).to_array()
        };
        let step = solver.advance(&mut rhs, grid.time(i), grid.time(i + 1), y, h)?;
        y = step.y;
        h = step.h_next.min(grid.dt());
        states.push(StateVector::from_array(y));
    }
    Ok(Trajectory { states, rate_path })
}

/// The deterministic model: constant `beta_I` from the standard initial data.
pub fn integrate_deterministic(model: &Model, grid: &TimeGrid, tolerances: Tolerances) -> Result<Trajectory> {
    let path = RatePath::constant(*grid, model.params().beta_i);
    integrate(model, model.initial_state(), path, tolerances)
}
