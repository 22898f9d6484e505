//! Mean-reverting square-root (CIR) diffusion for the contact rate.
//!
//! `dβ = ν(μ − β) dt + σ √β dW`
//!
//! Paths are drawn from the exact transition law: conditional on `β(s)`,
//! `β(s + δ) / c` follows a non-central chi-squared distribution with
//! `d = 4νμ/σ²` degrees of freedom and non-centrality `e^{−νδ} β(s) / c`,
//! where `c = σ²(1 − e^{−νδ}) / (4ν)`. An Euler–Maruyama scheme with full
//! truncation is kept for cross-checking the exact sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirParameters {
    /// Mean-reversion speed (1/day).
    pub nu: f64,
    /// Long-term mean.
    pub mu: f64,
    /// Volatility.
    pub sigma: f64,
    /// Value at `t0`.
    pub beta0: f64,
}

impl CirParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::invalid("cir.nu", format!("must be positive, got {}", self.nu)));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid("cir.mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("cir.sigma", format!("must be non-negative, got {}", self.sigma)));
        }
        if !(self.beta0.is_finite() && self.beta0 >= 0.0) {
            return Err(Error::invalid("cir.beta0", format!("must be non-negative, got {}", self.beta0)));
        }
        Ok(())
    }

    /// Feller ratio `4νμ/σ²`, infinite when `σ = 0`.
    pub fn dof(&self) -> f64 {
        4.0 * self.nu * self.mu / (self.sigma * self.sigma)
    }

    /// Conditional mean of `β(s + delta)` given `β(s) = from`.
    pub fn conditional_mean(&self, from: f64, delta: f64) -> f64 {
        let decay = (-self.nu * delta).exp();
        from * decay + self.mu * (1.0 - decay)
    }

    /// Conditional variance of `β(s + delta)` given `β(s) = from`.
    pub fn conditional_variance(&self, from: f64, delta: f64) -> f64 {
        let decay = (-self.nu * delta).exp();
        let s2 = self.sigma * self.sigma;
        from * s2 * decay * (1.0 - decay) / self.nu + self.mu * s2 * (1.0 - decay).powi(2) / (2.0 * self.nu)
    }
}

/// Scale `c` and degrees of freedom `d` of the exact transition over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionConstants {
    pub c: f64,
    pub d: f64,
    /// `e^{−νδ}`
    pub decay: f64,
}

impl TransitionConstants {
    pub fn noncentrality(&self, from: f64) -> f64 {
        self.decay * from / self.c
    }
}

pub fn transition_constants(delta: f64, p: &CirParameters) -> Result<TransitionConstants> {
    if p.sigma == 0.0 {
        return Err(Error::Degenerate("sigma = 0 has no chi-squared transition; use the deterministic path".into()));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    let decay = (-p.nu * delta).exp();
    Ok(TransitionConstants { c: p.sigma * p.sigma * (1.0 - decay) / (4.0 * p.nu), d: p.dof(), decay })
}

/// Non-central chi-squared sampler for a fixed number of degrees of freedom.
///
/// For `d > 1` a draw is `χ²(d − 1) + (Z + √λ)²`; otherwise it is
/// `χ²(d + 2K)` with `K ~ Poisson(λ/2)`. Neither branch rejects.
#[derive(Debug, Clone)]
pub struct NoncentralChiSquared {
    dof: f64,
    central: Option<ChiSquared<f64>>,
}

impl NoncentralChiSquared {
    pub fn new(dof: f64) -> Result<Self> {
        if !(dof.is_finite() && dof > 0.0) {
            return Err(Error::invalid("dof", format!("degrees of freedom must be positive and finite, got {dof}")));
        }
        let central = if dof > 1.0 {
            Some(ChiSquared::new(dof - 1.0).map_err(|e| Error::invalid("dof", e.to_string()))?)
        } else {
            None
        };
        Ok(NoncentralChiSquared { dof, central })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn sample<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> f64 {
        debug_assert!(lambda >= 0.0);
        match &self.central {
            Some(central) => {
                let z: f64 = rng.sample(StandardNormal);
                let shifted = z + lambda.sqrt();
                central.sample(rng) + shifted * shifted
            }
            None => {
                let k =
                    if lambda > 0.0 { Poisson::new(lambda / 2.0).map(|p| p.sample(rng)).unwrap_or(0.0) } else { 0.0 };
                ChiSquared::new(self.dof + 2.0 * k).expect("positive degrees of freedom").sample(rng)
            }
        }
    }
}

/// One draw from `χ²(d, λ)`.
pub fn sample_noncentral_chisq<R: Rng + ?Sized>(d: f64, lambda: f64, rng: &mut R) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid("lambda", format!("non-centrality must be non-negative, got {lambda}")));
    }
    Ok(NoncentralChiSquared::new(d)?.sample(lambda, rng))
}

/// Contact-rate values on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl RatePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(Error::invalid(
                "rate_path",
                format!("{} values for a grid of {} nodes", values.len(), grid.nodes()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid("rate_path", format!("value {v} is not a non-negative rate")));
        }
        Ok(RatePath { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        RatePath { grid, values: vec![value; grid.nodes()] }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// How contact-rate paths are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateScheme {
    #[default]
    Exact,
    EulerMaruyama,
}

impl RateScheme {
    pub fn sample<R: Rng + ?Sized>(self, grid: &TimeGrid, p: &CirParameters, rng: &mut R) -> RatePath {
        match self {
            RateScheme::Exact => sample_path(grid, p, rng),
            RateScheme::EulerMaruyama => euler_maruyama_path(grid, p, rng),
        }
    }
}

/// Noise-free mean-reversion curve `μ + (β0 − μ) e^{−ν(t − t_start)}`.
pub fn deterministic_path(grid: &TimeGrid, p: &CirParameters) -> RatePath {
    let t0 = grid.t_start();
    let values = grid
        .times()
        .map(|t| if p.beta0 == p.mu { p.mu } else { p.mu + (p.beta0 - p.mu) * (-p.nu * (t - t0)).exp() })
        .collect();
    RatePath { grid: *grid, values }
}

/// Exact path on the grid; with `σ = 0` this is [`deterministic_path`].
pub fn sample_path<R: Rng + ?Sized>(grid: &TimeGrid, p: &CirParameters, rng: &mut R) -> RatePath {
    if p.sigma == 0.0 {
        return deterministic_path(grid, p);
    }
    let k = transition_constants(grid.dt(), p).expect("sigma > 0 and dt > 0");
    let chi = NoncentralChiSquared::new(k.d).expect("finite positive dof");
    let mut values = Vec::with_capacity(grid.nodes());
    let mut beta = p.beta0;
    values.push(beta);
    for _ in 1..grid.nodes() {
        beta = k.c * chi.sample(k.noncentrality(beta), rng);
        values.push(beta);
    }
    RatePath { grid: *grid, values }
}

/// Full-truncation Euler–Maruyama path.
pub fn euler_maruyama_path<R: Rng + ?Sized>(grid: &TimeGrid, p: &CirParameters, rng: &mut R) -> RatePath {
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let mut values = Vec::with_capacity(grid.nodes());
    let mut beta = p.beta0;
    values.push(beta);
    for _ in 1..grid.nodes() {
        let z: f64 = if p.sigma > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
        let next = beta + p.nu * (p.mu - beta) * dt + p.sigma * beta.max(0.0).sqrt() * sqrt_dt * z;
        beta = next.max(0.0);
        values.push(beta);
    }
    RatePath { grid: *grid, values }
}

/// Generator for path `index` of an ensemble: stream `index` of a ChaCha
/// keystream keyed by `master_seed`, so a path's draws do not depend on
/// which worker runs it or in what order.
pub fn path_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
