//! Seeded black-box maximizer used to fit model parameters.
//!
//! Half of the budget goes to a rotated Halton sequence over the unit cube;
//! the rest refines around the best point found so far inside a box whose
//! half-width halves after each round. The trials of budget `ceil(b/2)` are
//! a subset of those of budget `b`, so more budget never finds less. Trial order, and therefore the log,
//! is fixed by the seed whatever the thread count.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
}

impl ParamRange {
    pub fn new(name: &str, lower: f64, upper: f64, scale: Scale) -> Self {
        ParamRange {
            name: name.to_string(),
            lower,
            upper,
            scale,
        }
    }

    fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self.scale {
            Scale::Linear => self.lower + u * (self.upper - self.lower),
            Scale::Log => (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamRange>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamRange>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Config("empty search space".into()));
        }
        for p in &params {
            if !(p.lower < p.upper) || !p.lower.is_finite() || !p.upper.is_finite() {
                return Err(Error::Config(format!(
                    "parameter {:?}: lower bound {} must be below upper bound {}",
                    p.name, p.lower, p.upper
                )));
            }
            if p.scale == Scale::Log && p.lower <= 0.0 {
                return Err(Error::Config(format!(
                    "parameter {:?}: log scale needs a positive lower bound",
                    p.name
                )));
            }
        }
        Ok(SearchSpace { params })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        self.params
            .iter()
            .zip(unit)
            .map(|(p, &u)| p.from_unit(u))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TunerConfig {
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub seed: u64,
}

fn default_budget() -> usize {
    100
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            budget: default_budget(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Explore,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub stage: Stage,
    pub params: Vec<f64>,
    pub objective: f64,
    /// False when the point fell outside the model's admissible region and
    /// was scored 0.
    pub valid: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    pub best_index: usize,
    pub trials: Vec<TrialRecord>,
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let inv = 1.0 / f64::from(base);
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += (index % b) as f64 * f;
        index /= b;
        f *= inv;
    }
    r
}

/// Halton point `index` (1-based) rotated by `shift` modulo 1.
fn halton(index: u64, shift: &[f64]) -> Vec<f64> {
    shift
        .iter()
        .enumerate()
        .map(|(k, s)| (radical_inverse(index, PRIMES[k]) + s).fract())
        .collect()
}

/// First trial with the highest objective among the first `explore`
/// exploration trials and every refinement trial.
fn incumbent(trials: &[TrialRecord], explore: usize) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for t in trials {
        if t.stage == Stage::Explore && t.index >= explore {
            continue;
        }
        if best.is_none_or(|(b, _)| t.objective > b) {
            best = Some((t.objective, t.index));
        }
    }
    best.map(|(_, i)| i)
}

/// Maximizes `objective` over `space` with `config.budget` evaluations.
///
/// An objective returning [`Error::InvalidParams`] scores 0 for that trial;
/// any other error aborts the search.
pub fn tune<F>(objective: F, space: &SearchSpace, config: &TunerConfig) -> Result<TuneResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if config.budget == 0 {
        return Err(Error::Config("tuning budget must be at least 1".into()));
    }
    let d = space.dim();
    if d == 0 {
        return Err(Error::Config("empty search space".into()));
    }
    if d > PRIMES.len() {
        return Err(Error::Config(format!(
            "search space has {d} dimensions, at most {} supported",
            PRIMES.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let explore_shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let refine_shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();

    let evaluate = |batch: Vec<(usize, Stage, Vec<f64>)>| -> Result<Vec<(Vec<f64>, TrialRecord)>> {
        batch
            .into_par_iter()
            .map(|(index, stage, unit)| {
                let params = space.from_unit(&unit);
                let (objective, valid) = match objective(&params) {
                    Ok(v) => (v, true),
                    Err(Error::InvalidParams(why)) => {
                        log::debug!("trial {index} invalid ({why}); scored 0");
                        (0.0, false)
                    }
                    Err(e) => return Err(e),
                };
                let record = TrialRecord {
                    index,
                    stage,
                    params,
                    objective,
                    valid,
                    seed: config.seed,
                };
                Ok((unit, record))
            })
            .collect()
    };

    let n_explore = config.budget.div_ceil(2);
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(config.budget);
    let mut units: Vec<Vec<f64>> = Vec::with_capacity(config.budget);
    let absorb = |results: Vec<(Vec<f64>, TrialRecord)>,
                      trials: &mut Vec<TrialRecord>,
                      units: &mut Vec<Vec<f64>>| {
        for (unit, rec) in results {
            units.push(unit);
            trials.push(rec);
        }
    };

    let batch = (0..n_explore)
        .map(|i| (i, Stage::Explore, halton(i as u64 + 1, &explore_shift)))
        .collect();
    absorb(evaluate(batch)?, &mut trials, &mut units);

    // Refinement is nested: the run for budget b first replays the
    // refinement of budget ceil(b/2), then adds its own rounds. Every trial
    // of a smaller budget in the halving chain is therefore also a trial of
    // the larger one.
    let mut chain = vec![config.budget];
    while *chain.last().unwrap() > 1 {
        let b = *chain.last().unwrap();
        chain.push(b.div_ceil(2));
    }
    chain.reverse();

    let per_round = (2 * d).max(2);
    let mut refine_index = 1u64;
    for &b in &chain {
        let visible_explore = b.div_ceil(2);
        let fresh = b / 2 - b.div_ceil(2) / 2;
        let mut half_width = 0.5 / (visible_explore as f64).powf(1.0 / d as f64);
        let mut done = 0;
        while done < fresh {
            let m = per_round.min(fresh - done);
            let center = incumbent(&trials, visible_explore)
                .map(|i| units[i].clone())
                .expect("at least one explored point");
            let batch = (0..m)
                .map(|k| {
                    let v = halton(refine_index + k as u64, &refine_shift);
                    let unit = center
                        .iter()
                        .zip(&v)
                        .map(|(c, v)| (c + half_width * (2.0 * v - 1.0)).clamp(0.0, 1.0))
                        .collect();
                    (trials.len() + k, Stage::Refine, unit)
                })
                .collect();
            refine_index += m as u64;
            absorb(evaluate(batch)?, &mut trials, &mut units);
            done += m;
            half_width *= 0.5;
        }
    }

    let best_index = incumbent(&trials, n_explore).expect("budget >= 1");
    Ok(TuneResult {
        best_params: trials[best_index].params.clone(),
        best_objective: trials[best_index].objective,
        best_index,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_space() -> SearchSpace {
        SearchSpace::new(vec![ParamRange::new("x", 0.0, 1.0, Scale::Linear)]).unwrap()
    }

    fn quadratic(p: &[f64]) -> Result<f64> {
        Ok(1.0 - (p[0] - 0.3).powi(2))
    }

    #[test]
    fn finds_known_optimum() {
        let r = tune(quadratic, &unit_space(), &TunerConfig { budget: 64, seed: 1 }).unwrap();
        assert!((r.best_params[0] - 0.3).abs() < 0.02, "{:?}", r.best_params);
        assert_eq!(r.trials.len(), 64);
    }

    #[test]
    fn single_trial_budget() {
        let r = tune(quadratic, &unit_space(), &TunerConfig { budget: 1, seed: 9 }).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.best_params, r.trials[0].params);
        assert_eq!(r.trials[0].stage, Stage::Explore);
    }

    #[test]
    fn same_seed_same_log() {
        let cfg = TunerConfig { budget: 20, seed: 5 };
        let a = tune(quadratic, &unit_space(), &cfg).unwrap();
        let b = tune(quadratic, &unit_space(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = tune(quadratic, &unit_space(), &TunerConfig { budget: 20, seed: 6 }).unwrap();
        assert_ne!(a.trials, c.trials);
    }

    #[test]
    fn best_matches_log_maximum() {
        let space = SearchSpace::new(vec![
            ParamRange::new("a", 1.0, 1000.0, Scale::Log),
            ParamRange::new("b", -1.0, 1.0, Scale::Linear),
        ])
        .unwrap();
        let f = |p: &[f64]| Ok(-(p[0].ln() - 3.0).powi(2) - p[1].powi(2));
        let r = tune(f, &space, &TunerConfig { budget: 40, seed: 2 }).unwrap();
        let max = r.trials.iter().map(|t| t.objective).fold(f64::MIN, f64::max);
        assert_eq!(r.best_objective, max);
        assert_eq!(r.trials[r.best_index].params, r.best_params);
        for t in &r.trials {
            assert!((1.0..=1000.0).contains(&t.params[0]));
            assert!((-1.0..=1.0).contains(&t.params[1]));
        }
    }

    #[test]
    fn smaller_budget_trials_are_contained() {
        let space = SearchSpace::new(vec![
            ParamRange::new("a", 0.0, 1.0, Scale::Linear),
            ParamRange::new("b", 0.0, 1.0, Scale::Linear),
        ])
        .unwrap();
        let f = |p: &[f64]| Ok((7.0 * p[0]).sin() * (5.0 * p[1]).cos());
        for seed in 0..5 {
            for b in [3usize, 8, 13, 50] {
                let small = tune(f, &space, &TunerConfig { budget: b.div_ceil(2), seed }).unwrap();
                let large = tune(f, &space, &TunerConfig { budget: b, seed }).unwrap();
                for t in &small.trials {
                    assert!(large.trials.iter().any(|u| u.params == t.params), "budget {b}");
                }
                assert!(large.best_objective >= small.best_objective);
            }
        }
    }

    #[test]
    fn explore_prefix_is_budget_independent() {
        let small = tune(quadratic, &unit_space(), &TunerConfig { budget: 8, seed: 3 }).unwrap();
        let large = tune(quadratic, &unit_space(), &TunerConfig { budget: 16, seed: 3 }).unwrap();
        assert_eq!(small.trials[..4], large.trials[..4]);
    }

    #[test]
    fn invalid_points_score_zero() {
        let f = |p: &[f64]| {
            if p[0] > 0.5 {
                Err(Error::InvalidParams("too big".into()))
            } else {
                Ok(1.0 + p[0])
            }
        };
        let r = tune(f, &unit_space(), &TunerConfig { budget: 30, seed: 4 }).unwrap();
        assert!(r.trials.iter().any(|t| !t.valid && t.objective == 0.0));
        assert!(r.best_params[0] <= 0.5);
    }

    #[test]
    fn other_errors_abort() {
        let f = |_: &[f64]| Err(Error::ProtocolViolation("peek".into()));
        assert!(matches!(
            tune(f, &unit_space(), &TunerConfig { budget: 4, seed: 0 }),
            Err(Error::ProtocolViolation(_))
        ));
    }

    #[test]
    fn bad_spaces_rejected() {
        assert!(SearchSpace::new(vec![]).is_err());
        assert!(SearchSpace::new(vec![ParamRange::new("x", 1.0, 1.0, Scale::Linear)]).is_err());
        assert!(SearchSpace::new(vec![ParamRange::new("x", 0.0, 1.0, Scale::Log)]).is_err());
        assert!(tune(quadratic, &unit_space(), &TunerConfig { budget: 0, seed: 0 }).is_err());
    }
}
