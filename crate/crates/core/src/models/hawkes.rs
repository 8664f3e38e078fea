//! Univariate Hawkes intensity with an exponential kernel and no
//! immigrant rate: `lambda(t) = sum_{t_i < t} beta exp(-beta (t - t_i))`.

use crate::domain::{Event, Timestamp};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    /// Kernel decay rate per hour.
    pub beta: f64,
    /// Immigrant arrival rate, held at zero.
    #[serde(default)]
    pub lambda0: f64,
}

impl HawkesParams {
    pub fn new(beta: f64) -> Result<Self> {
        let p = HawkesParams { beta, lambda0: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.lambda0 != 0.0 {
            return Err(Error::InvalidParams(
                "the immigrant rate lambda0 is fixed at 0".into(),
            ));
        }
        Ok(())
    }
}

/// Intensity at `t` from time-sorted event times, via the O(n) recursion
/// `lambda <- lambda exp(-beta dt) + beta` at each event. Events at or
/// after `t` are ignored.
pub fn hawkes_intensity_times(times: &[Timestamp], t: Timestamp, params: &HawkesParams) -> f64 {
    let beta = params.beta;
    let mut lambda = 0.0;
    let mut prev: Option<Timestamp> = None;
    for &ti in times.iter().take_while(|&&ti| ti < t) {
        if let Some(p) = prev {
            debug_assert!(ti >= p, "event times must be sorted");
            lambda *= (-beta * ti.hours_since(p)).exp();
        }
        lambda += beta;
        prev = Some(ti);
    }
    match prev {
        Some(p) => params.lambda0 + lambda * (-beta * t.hours_since(p)).exp(),
        None => params.lambda0,
    }
}

pub fn hawkes_intensity(events: &[Event], t: Timestamp, params: &HawkesParams) -> f64 {
    let times: Vec<Timestamp> = events.iter().map(|e| e.timestamp).collect();
    hawkes_intensity_times(&times, t, params)
}
