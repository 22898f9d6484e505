//! Uniform time grids.

use crate::error::{Error, Result};

/// Uniform grid `t_i = t_start + i * dt`, `i = 0..nodes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    nodes: usize,
}

impl TimeGrid {
    /// `(t_end - t_start) / dt` must be a whole number of steps.
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
            return Err(Error::invalid("t_end", format!("must exceed t_start ({t_start}), got {t_end}")));
        }
        let steps = (t_end - t_start) / dt;
        let whole = steps.round();
        if (steps - whole).abs() > 1e-9 * whole.max(1.0) {
            return Err(Error::invalid("dt", format!("{dt} does not divide [{t_start}, {t_end}] into whole steps")));
        }
        Ok(TimeGrid { t_start, dt, nodes: whole as usize + 1 })
    }

    /// `[0, days]` split into `steps_per_day` cells per day, so every
    /// integer day is a node.
    pub fn daily(days: u32, steps_per_day: u32) -> Result<Self> {
        if steps_per_day == 0 {
            return Err(Error::invalid("steps_per_day", "must be at least 1"));
        }
        if days == 0 {
            return Err(Error::invalid("days", "horizon must be at least one day"));
        }
        Ok(TimeGrid { t_start: 0.0, dt: 1.0 / steps_per_day as f64, nodes: (days * steps_per_day) as usize + 1 })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.nodes - 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn cells(&self) -> usize {
        self.nodes - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes).map(|i| self.time(i))
    }

    /// Index of the node at time `t`, if `t` sits on the grid.
    pub fn node_at(&self, t: f64) -> Option<usize> {
        let x = (t - self.t_start) / self.dt;
        let i = x.round();
        if i < 0.0 || (x - i).abs() > 1e-6 || i as usize >= self.nodes {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Node indices of the integer days `0, 1, ..` contained in the grid.
    pub fn day_nodes(&self) -> Result<Vec<usize>> {
        let first = self.t_start.ceil() as i64;
        let last = self.t_end().floor() as i64;
        (first..=last)
            .map(|day| {
                self.node_at(day as f64).ok_or_else(|| Error::invalid("dt", format!("day {day} is not a grid node")))
            })
            .collect()
    }
}
