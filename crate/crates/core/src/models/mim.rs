//! Memory Imprint Model: an imprint jumps toward 1 at every interaction
//! and decays with a fixed half-life in between.
//!
//! Between events the imprint is `s + r(t)(1 - s)`, where the recall `r`
//! is the imprint at the last event decayed by `exp(-dt ln2 / L)`. At an
//! event it becomes `s + mu + (1 - mu) r (1 - s)`, capped at 1. The base
//! level `s` defaults to 0, which gives the plain reinforce-and-decay
//! recursion.

use crate::domain::{Event, Timestamp};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MimParams {
    /// Imprint half-life in hours.
    pub half_life: f64,
    /// Reinforcement applied at each event.
    pub mu: f64,
    /// Listing threshold: only imprints strictly above it are listed.
    pub theta: f64,
    /// Constant base level added to every imprint.
    #[serde(default)]
    pub s_base: f64,
}

impl MimParams {
    pub fn new(half_life: f64, mu: f64, theta: f64) -> Result<Self> {
        let p = MimParams {
            half_life,
            mu,
            theta,
            s_base: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_base(mut self, s_base: f64) -> Result<Self> {
        self.s_base = s_base;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_life.is_finite() && self.half_life > 0.0) {
            return Err(Error::InvalidParams(format!(
                "half-life must be positive, got {}",
                self.half_life
            )));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidParams(format!("mu must lie in (0, 1], got {}", self.mu)));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::InvalidParams(format!(
                "theta must lie in [0, 1), got {}",
                self.theta
            )));
        }
        if self.theta >= self.mu {
            return Err(Error::InvalidParams(format!(
                "theta ({}) must be below mu ({}) or no alter can ever be listed",
                self.theta, self.mu
            )));
        }
        if !(0.0..1.0).contains(&self.s_base) {
            return Err(Error::InvalidParams(format!(
                "base level must lie in [0, 1), got {}",
                self.s_base
            )));
        }
        Ok(())
    }

    fn decay_rate(&self) -> f64 {
        LN_2 / self.half_life
    }
}

/// Imprint of one dyad right after its most recent event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimState {
    pub w_last: f64,
    /// Time of the last processed event; `None` before the first one.
    pub t_last: Option<Timestamp>,
    pub s_base: f64,
}

impl MimState {
    pub fn fresh(s_base: f64) -> Self {
        MimState {
            w_last: 0.0,
            t_last: None,
            s_base,
        }
    }
}

/// Imprint at the last event decayed to time `t`.
pub fn mim_recall(state: &MimState, t: Timestamp, params: &MimParams) -> Result<f64> {
    match state.t_last {
        None => Ok(0.0),
        Some(last) if t < last => Err(Error::OrderingViolation { last, got: t }),
        Some(last) => Ok(state.w_last * (-t.hours_since(last) * params.decay_rate()).exp()),
    }
}

/// Applies the reinforcement jump for an event at `t_event`.
pub fn mim_process_event(state: &MimState, t_event: Timestamp, params: &MimParams) -> Result<MimState> {
    let r = mim_recall(state, t_event, params)?;
    let s = state.s_base;
    let w = (s + params.mu + (1.0 - params.mu) * r * (1.0 - s)).min(1.0);
    Ok(MimState {
        w_last: w,
        t_last: Some(t_event),
        s_base: s,
    })
}

/// Imprint at `t` after folding over time-sorted event times.
pub fn mim_score_times(times: &[Timestamp], t: Timestamp, params: &MimParams) -> Result<f64> {
    if times.is_empty() {
        return Ok(0.0);
    }
    let mut state = MimState::fresh(params.s_base);
    for &te in times {
        state = mim_process_event(&state, te, params)?;
    }
    let s = state.s_base;
    Ok(s + mim_recall(&state, t, params)? * (1.0 - s))
}

pub fn mim_score(events: &[Event], t: Timestamp, params: &MimParams) -> Result<f64> {
    let times: Vec<Timestamp> = events.iter().map(|e| e.timestamp).collect();
    mim_score_times(&times, t, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const H: i64 = 3600;

    fn params(l: f64, mu: f64) -> MimParams {
        MimParams::new(l, mu, 0.0).unwrap()
    }

    fn state(w: f64, t: i64) -> MimState {
        MimState {
            w_last: w,
            t_last: Some(Timestamp(t)),
            s_base: 0.0,
        }
    }

    #[test]
    fn recall_halves_after_one_half_life() {
        let p = params(10.0, 0.4);
        let r = mim_recall(&state(0.4, 0), Timestamp(10 * H), &p).unwrap();
        assert_relative_eq!(r, 0.2, max_relative = 1e-12);
        let r = mim_recall(&state(0.4, 0), Timestamp(0), &p).unwrap();
        assert_eq!(r, 0.4);
        let r = mim_recall(&state(1.0, 0), Timestamp(48 * H), &params(24.0, 0.4)).unwrap();
        assert_relative_eq!(r, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn recall_before_last_event_is_rejected() {
        let p = params(10.0, 0.4);
        assert!(matches!(
            mim_recall(&state(0.4, 100), Timestamp(99), &p),
            Err(Error::OrderingViolation { .. })
        ));
    }

    #[test]
    fn first_event_sets_mu() {
        let p = params(10.0, 0.4);
        let s = mim_process_event(&MimState::fresh(0.0), Timestamp(5), &p).unwrap();
        assert_eq!(s.w_last, 0.4);
    }

    #[test]
    fn reinforcement_on_decayed_imprint() {
        let p = params(10.0, 0.4);
        // w = 1.0 decayed by one half-life gives r = 0.5
        let s = mim_process_event(&state(1.0, 0), Timestamp(10 * H), &p).unwrap();
        assert_relative_eq!(s.w_last, 0.4 + 0.6 * 0.5, max_relative = 1e-12);
    }

    #[test]
    fn simultaneous_events_do_not_decay() {
        let p = params(10.0, 0.4);
        let s1 = mim_process_event(&MimState::fresh(0.0), Timestamp(7), &p).unwrap();
        let s2 = mim_process_event(&s1, Timestamp(7), &p).unwrap();
        assert_eq!(s1.w_last, 0.4);
        assert_relative_eq!(s2.w_last, 0.64, max_relative = 1e-15);
    }

    #[test]
    fn score_examples() {
        let p = params(10.0, 0.4);
        let t = Timestamp(1000 * H);
        assert_eq!(mim_score_times(&[], t, &p).unwrap(), 0.0);
        let one = mim_score_times(&[Timestamp(990 * H)], t, &p).unwrap();
        assert_relative_eq!(one, 0.2, max_relative = 1e-12);
        let two = mim_score_times(&[Timestamp(980 * H), Timestamp(990 * H)], t, &p).unwrap();
        assert_relative_eq!(two, 0.26, max_relative = 1e-12);
    }

    #[test]
    fn unsorted_history_is_rejected() {
        let p = params(10.0, 0.4);
        let r = mim_score_times(&[Timestamp(10), Timestamp(5)], Timestamp(20), &p);
        assert!(matches!(r, Err(Error::OrderingViolation { .. })));
    }

    #[test]
    fn base_level_keeps_printed_form() {
        let p = params(10.0, 0.4).with_base(0.1).unwrap();
        let s = mim_process_event(&MimState::fresh(0.1), Timestamp(0), &p).unwrap();
        assert_relative_eq!(s.w_last, 0.5, max_relative = 1e-12);
        let score = mim_score_times(&[Timestamp(0)], Timestamp(10 * H), &p).unwrap();
        assert_relative_eq!(score, 0.1 + 0.25 * 0.9, max_relative = 1e-12);
        // saturating
        let s = mim_process_event(&state(1.0, 0), Timestamp(0), &MimParams {
            s_base: 0.5,
            ..p
        })
        .unwrap();
        assert_eq!(s.w_last, 1.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(MimParams::new(0.0, 0.4, 0.1).is_err());
        assert!(MimParams::new(10.0, 0.0, 0.0).is_err());
        assert!(MimParams::new(10.0, 1.2, 0.1).is_err());
        assert!(MimParams::new(10.0, 0.4, 0.4).is_err());
        assert!(MimParams::new(10.0, 0.4, 0.5).is_err());
        assert!(MimParams::new(10.0, 1.0, 0.99).is_ok());
    }
}
