//! The θ-SEIHRD compartments, their parameters and the time-dependent
//! coefficients that drive the vector field.
//!
//! Time is measured in days since `t0`. Every coefficient is a pure
//! function of `t` and the parameter set, so a [`Model`] can be shared
//! read-only across any number of workers.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of compartments in the state vector.
pub const COMPARTMENTS: usize = 9;

/// Fixed and calibrated scalars of the model plus its calendar anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    /// Total population `N`.
    pub population: u64,
    pub t0: NaiveDate,
    /// Date the control measure starts.
    pub lambda1: NaiveDate,
    /// Date the detection fraction reaches its upper level.
    pub lambda2: NaiveDate,
    /// Final simulated date `T`.
    pub end: NaiveDate,
    pub theta_low: f64,
    pub theta_high: f64,
    /// Fraction of infections produced by hospitalized people.
    pub alpha_h: f64,
    pub d_e: f64,
    pub d_i: f64,
    pub d_iu: f64,
    /// Maximum reduction of `d_i` reached under full control.
    pub d_g: f64,
    /// Extra days spent in `H_D` compared to `H_R`.
    pub delta_r: f64,
    /// Convalescence period `C_o`.
    pub convalescence: f64,
    /// Fraction `p` of `H_R` that is hospitalized.
    pub hospitalized_fraction: f64,
    pub beta_i: f64,
    pub c_e: f64,
    pub c_u: f64,
    pub delta_omega: f64,
    pub omega_low: f64,
    pub kappa1: f64,
}

impl ModelParameters {
    /// The China calibration: 1 December 2019 to 29 March 2020.
    pub fn china() -> Self {
        let date = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date");
        ModelParameters {
            population: 1_400_812_636,
            t0: date(2019, 12, 1),
            lambda1: date(2020, 1, 23),
            lambda2: date(2020, 2, 8),
            end: date(2020, 3, 29),
            theta_low: 0.14,
            theta_high: 0.65,
            alpha_h: 0.0275,
            d_e: 5.5,
            d_i: 6.7,
            d_iu: 7.3,
            d_g: 6.0,
            delta_r: 7.0,
            convalescence: 14.0,
            hospitalized_fraction: 1.0,
            beta_i: 0.2887,
            c_e: 0.3643,
            c_u: 0.4010,
            delta_omega: 0.0206,
            omega_low: 0.0157,
            kappa1: 0.1082,
        }
    }

    /// Upper fatality bound `omega_low + delta_omega`.
    pub fn omega_high(&self) -> f64 {
        self.omega_low + self.delta_omega
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 1 {
            return Err(Error::invalid("population", "must be at least 1"));
        }
        if !(self.t0 < self.lambda1 && self.lambda1 < self.lambda2 && self.lambda2 < self.end) {
            return Err(Error::invalid(
                "lambda1",
                format!(
                    "dates must satisfy t0 < lambda1 < lambda2 < end, got {} / {} / {} / {}",
                    self.t0, self.lambda1, self.lambda2, self.end
                ),
            ));
        }
        let unit = [
            ("theta_low", self.theta_low),
            ("theta_high", self.theta_high),
            ("alpha_h", self.alpha_h),
            ("hospitalized_fraction", self.hospitalized_fraction),
            ("c_e", self.c_e),
            ("c_u", self.c_u),
            ("delta_omega", self.delta_omega),
            ("omega_low", self.omega_low),
        ];
        for (field, value) in unit {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::invalid(field, format!("must lie in [0, 1], got {value}")));
            }
        }
        let durations = [("d_e", self.d_e), ("d_i", self.d_i), ("d_iu", self.d_iu)];
        for (field, value) in durations {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("must be a positive duration, got {value}")));
            }
        }
        for (field, value) in [("d_g", self.d_g), ("delta_r", self.delta_r), ("convalescence", self.convalescence)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(field, format!("must be non-negative, got {value}")));
            }
        }
        if self.d_g >= self.d_i {
            return Err(Error::invalid(
                "d_g",
                format!(
                    "must be smaller than d_i ({}) so that gamma_I = 1/(d_I - g(t)) stays finite and positive, got {}",
                    self.d_i, self.d_g
                ),
            ));
        }
        if self.omega_high() > self.theta_low {
            return Err(Error::invalid(
                "omega_low",
                format!(
                    "omega_low + delta_omega ({}) must not exceed theta_low ({})",
                    self.omega_high(),
                    self.theta_low
                ),
            ));
        }
        if self.theta_low > self.theta_high {
            return Err(Error::invalid("theta_high", "must be at least theta_low"));
        }
        if self.theta_low <= 0.0 {
            return Err(Error::invalid("theta_low", "must be positive (A_HR divides by theta)"));
        }
        if self.alpha_h >= 1.0 {
            return Err(Error::invalid("alpha_h", "must be smaller than 1"));
        }
        if !(self.beta_i.is_finite() && self.beta_i >= 0.0) {
            return Err(Error::invalid("beta_i", "must be a non-negative contact rate"));
        }
        if !(0.0..=0.2).contains(&self.kappa1) {
            return Err(Error::invalid("kappa1", format!("must lie in [0, 0.2], got {}", self.kappa1)));
        }
        Ok(())
    }
}

/// One of the nine compartments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compartment {
    S,
    E,
    I,
    Iu,
    HR,
    HD,
    Rd,
    Ru,
    D,
}

impl Compartment {
    pub const ALL: [Compartment; COMPARTMENTS] = [
        Compartment::S,
        Compartment::E,
        Compartment::I,
        Compartment::Iu,
        Compartment::HR,
        Compartment::HD,
        Compartment::Rd,
        Compartment::Ru,
        Compartment::D,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::E => "E",
            Compartment::I => "I",
            Compartment::Iu => "Iu",
            Compartment::HR => "HR",
            Compartment::HD => "HD",
            Compartment::Rd => "Rd",
            Compartment::Ru => "Ru",
            Compartment::D => "D",
        }
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Persons in each compartment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub s: f64,
    pub e: f64,
    pub i: f64,
    pub iu: f64,
    pub hr: f64,
    pub hd: f64,
    pub rd: f64,
    pub ru: f64,
    pub d: f64,
}

impl StateVector {
    pub fn from_array(a: [f64; COMPARTMENTS]) -> Self {
        let [s, e, i, iu, hr, hd, rd, ru, d] = a;
        StateVector { s, e, i, iu, hr, hd, rd, ru, d }
    }

    pub fn to_array(self) -> [f64; COMPARTMENTS] {
        [self.s, self.e, self.i, self.iu, self.hr, self.hd, self.rd, self.ru, self.d]
    }

    pub fn get(&self, c: Compartment) -> f64 {
        self.to_array()[c.index()]
    }

    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }

    /// Clamp integrator round-off below zero.
    pub fn clipped(self) -> Self {
        Self::from_array(self.to_array().map(|v| v.max(0.0)))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Compartment transition rates at one instant, in 1/day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRates {
    pub gamma_e: f64,
    pub gamma_i: f64,
    pub gamma_iu: f64,
    pub gamma_hr: f64,
    pub gamma_hd: f64,
}

/// Dimensionless factors relating each contact rate to `beta_I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactScalers {
    pub a_e: f64,
    pub a_iu: f64,
    pub a_hr: f64,
    pub a_hd: f64,
}

impl ContactScalers {
    /// Evaluates the scalers, rejecting a zero detection fraction or a
    /// fatality rate of one.
    pub fn compute(theta: f64, omega: f64, rates: &TransitionRates, params: &ModelParameters) -> Result<Self> {
        if theta <= 0.0 {
            return Err(Error::Degenerate(format!("detection fraction theta = {theta} makes A_HR undefined")));
        }
        if omega >= 1.0 {
            return Err(Error::Degenerate(format!("fatality rate omega = {omega} makes A_Iu undefined")));
        }
        if params.alpha_h >= 1.0 {
            return Err(Error::Degenerate("alpha_h = 1 makes A_HR undefined".into()));
        }
        Ok(Self::evaluate(theta, omega, rates, params))
    }

    fn evaluate(theta: f64, omega: f64, rates: &TransitionRates, params: &ModelParameters) -> Self {
        let a_e = params.c_e;
        let a_iu = params.c_u + (1.0 - params.c_u) * (1.0 - theta) / (1.0 - omega);
        let alpha = params.alpha_h;
        // Hospital share of the mean infectious contacts; H_R and H_D
        // sojourns are weighted by their inflow fractions.
        let community = 1.0 / rates.gamma_i + a_e / rates.gamma_e + (1.0 - theta) * a_iu / rates.gamma_iu;
        let hospital = theta * ((1.0 - omega / theta) / rates.gamma_hr + (omega / theta) / rates.gamma_hd);
        let a_h = alpha * community / ((1.0 - alpha) * hospital);
        ContactScalers { a_e, a_iu, a_hr: a_h, a_hd: a_h }
    }
}

/// Every time-varying coefficient at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSnapshot {
    pub m: f64,
    pub theta: f64,
    pub omega: f64,
    pub rates: TransitionRates,
    pub scalers: ContactScalers,
}

/// A validated parameter set with its calendar anchors resolved to days.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParameters,
    population: f64,
    lambda1: f64,
    lambda2: f64,
    horizon: f64,
}

impl Model {
    pub fn new(params: ModelParameters) -> Result<Self> {
        params.validate()?;
        let days = |d: NaiveDate| (d - params.t0).num_days() as f64;
        Ok(Model {
            population: params.population as f64,
            lambda1: days(params.lambda1),
            lambda2: days(params.lambda2),
            horizon: days(params.end),
            params,
        })
    }

    pub fn china() -> Self {
        Self::new(ModelParameters::china()).expect("bundled parameters are valid")
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn population(&self) -> f64 {
        self.population
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Length of the simulation window in days.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Days elapsed since `t0`.
    pub fn day_index(&self, date: NaiveDate) -> Result<u32> {
        if date < self.params.t0 || date > self.params.end {
            return Err(Error::DateOutOfRange { date, start: self.params.t0, end: self.params.end });
        }
        Ok((date - self.params.t0).num_days() as u32)
    }

    /// `S = N - 1`, `E = 1`, everything else empty.
    pub fn initial_state(&self) -> StateVector {
        StateVector { s: self.population - 1.0, e: 1.0, ..StateVector::default() }
    }

    /// Efficiency `m(t)` shared by every contact route.
    pub fn control_measure(&self, t: f64) -> f64 {
        if t <= self.lambda1 {
            1.0
        } else {
            (-self.params.kappa1 * (t - self.lambda1)).exp()
        }
    }

    pub fn detection_fraction(&self, t: f64) -> f64 {
        let p = &self.params;
        if t <= self.lambda1 {
            p.theta_low
        } else if t >= self.lambda2 {
            p.theta_high
        } else {
            let w = (t - self.lambda1) / (self.lambda2 - self.lambda1);
            p.theta_low + (p.theta_high - p.theta_low) * w
        }
    }

    pub fn fatality_rate(&self, t: f64) -> f64 {
        self.fatality_from_control(self.control_measure(t))
    }

    fn fatality_from_control(&self, m: f64) -> f64 {
        m * self.params.omega_high() + (1.0 - m) * self.params.omega_low
    }

    pub fn transition_rates(&self, t: f64) -> TransitionRates {
        self.rates_from_control(self.control_measure(t))
    }

    fn rates_from_control(&self, m: f64) -> TransitionRates {
        let p = &self.params;
        let g = p.d_g * (1.0 - m);
        let recover = 1.0 / (p.d_iu + g);
        TransitionRates {
            gamma_e: 1.0 / p.d_e,
            gamma_i: 1.0 / (p.d_i - g),
            gamma_iu: recover,
            gamma_hr: recover,
            gamma_hd: 1.0 / (p.d_iu + g + p.delta_r),
        }
    }

    pub fn contact_scalers(&self, t: f64) -> Result<ContactScalers> {
        let m = self.control_measure(t);
        ContactScalers::compute(
            self.detection_fraction(t),
            self.fatality_from_control(m),
            &self.rates_from_control(m),
            &self.params,
        )
    }

    /// All coefficients at `t`. Validation in [`Model::new`] guarantees the
    /// scalers are well defined.
    pub fn coefficients(&self, t: f64) -> CoefficientSnapshot {
        let m = self.control_measure(t);
        let theta = self.detection_fraction(t);
        let omega = self.fatality_from_control(m);
        let rates = self.rates_from_control(m);
        let scalers = ContactScalers::evaluate(theta, omega, &rates, &self.params);
        CoefficientSnapshot { m, theta, omega, rates, scalers }
    }

    /// Weighted infectious mass `M(t)`.
    pub fn infectious_pressure(&self, state: &StateVector, t: f64) -> f64 {
        pressure(state, &self.coefficients(t))
    }

    /// Right-hand side of the nine-compartment system for contact rate `beta`.
    pub fn vector_field(&self, state: &StateVector, t: f64, beta: f64) -> StateVector {
        let c = self.coefficients(t);
        self.vector_field_with(state, beta, &c)
    }

    pub(crate) fn vector_field_with(&self, y: &StateVector, beta: f64, c: &CoefficientSnapshot) -> StateVector {
        let r = &c.rates;
        let infections = beta * y.s * pressure(y, c) / self.population;
        let leaving_i = r.gamma_i * y.i;
        let to_rd = r.gamma_hr * y.hr;
        let to_ru = r.gamma_iu * y.iu;
        let to_d = r.gamma_hd * y.hd;
        let leaving_e = r.gamma_e * y.e;
        StateVector {
            s: -infections,
            e: infections - leaving_e,
            i: leaving_e - leaving_i,
            iu: (1.0 - c.theta) * leaving_i - to_ru,
            hr: (c.theta - c.omega) * leaving_i - to_rd,
            hd: c.omega * leaving_i - to_d,
            rd: to_rd,
            ru: to_ru,
            d: to_d,
        }
    }
}

fn pressure(y: &StateVector, c: &CoefficientSnapshot) -> f64 {
    let a = &c.scalers;
    c.m * (a.a_e * y.e + y.i + a.a_iu * y.iu + a.a_hr * y.hr + a.a_hd * y.hd)
}
