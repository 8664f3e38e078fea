//! Ranking models behind one interface: score each candidate alter from
//! its event history, sort, filter and truncate.

mod baseline;
mod hawkes;
mod mim;

pub use baseline::{
    frequency_score, frequency_score_times, random_score, recency_score, recency_score_times,
};
pub use hawkes::{hawkes_intensity, hawkes_intensity_times, HawkesParams};
pub use mim::{mim_process_event, mim_recall, mim_score, mim_score_times, MimParams, MimState};

use crate::domain::{Dataset, DyadHistory, ParticipantId, RankedList, Timestamp, MAX_LISTED_ALTERS};
use crate::error::{Error, Result};
use crate::tuning::{ParamRange, Scale, SearchSpace};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Everything a model may look at when ranking one ego at one time: the
/// event history of every counterpart strictly before `at`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTask {
    pub ego: ParticipantId,
    pub at: Timestamp,
    pub candidates: Vec<DyadHistory>,
}

impl RankingTask {
    pub fn build(dataset: &Dataset, ego: ParticipantId, at: Timestamp) -> Self {
        RankingTask {
            ego,
            at,
            candidates: dataset.dyad_histories(ego, at),
        }
    }

    pub fn event_count(&self) -> usize {
        self.candidates.iter().map(|c| c.times.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Random,
    Recency,
    Frequency,
    Mim,
    Hawkes,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Random,
        ModelKind::Recency,
        ModelKind::Frequency,
        ModelKind::Mim,
        ModelKind::Hawkes,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Random => "Random",
            ModelKind::Recency => "Recency",
            ModelKind::Frequency => "Frequency",
            ModelKind::Mim => "MIM",
            ModelKind::Hawkes => "Hawkes",
        }
    }

    /// Names of the tunable parameters, in search-space order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Mim => &["half_life", "mu", "theta"],
            ModelKind::Hawkes => &["beta"],
            _ => &[],
        }
    }

    /// Default search ranges; `None` for models without parameters.
    pub fn search_space(self) -> Option<SearchSpace> {
        let params = match self {
            ModelKind::Mim => vec![
                ParamRange::new("half_life", 1.0, 8760.0, Scale::Log),
                ParamRange::new("mu", 0.01, 1.0, Scale::Linear),
                ParamRange::new("theta", 0.0, 0.99, Scale::Linear),
            ],
            ModelKind::Hawkes => vec![ParamRange::new("beta", 1e-4, 10.0, Scale::Log)],
            _ => return None,
        };
        Some(SearchSpace::new(params).expect("static ranges are valid"))
    }

    /// Builds a concrete model from a parameter vector in
    /// [`param_names`](Self::param_names) order.
    pub fn instantiate(self, params: &[f64], seed: u64, s_base: f64) -> Result<Model> {
        let want = self.param_names().len();
        if params.len() != want {
            return Err(Error::InvalidParams(format!(
                "{} takes {want} parameters, got {}",
                self.label(),
                params.len()
            )));
        }
        Ok(match self {
            ModelKind::Mim => {
                Model::Mim(MimParams::new(params[0], params[1], params[2])?.with_base(s_base)?)
            }
            ModelKind::Hawkes => Model::Hawkes(HawkesParams::new(params[0])?),
            ModelKind::Frequency => Model::Frequency,
            ModelKind::Recency => Model::Recency,
            ModelKind::Random => Model::Random { seed },
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mim" => Ok(ModelKind::Mim),
            "hawkes" => Ok(ModelKind::Hawkes),
            "frequency" => Ok(ModelKind::Frequency),
            "recency" => Ok(ModelKind::Recency),
            "random" => Ok(ModelKind::Random),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// A fully parameterized scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Mim(MimParams),
    Hawkes(HawkesParams),
    Frequency,
    Recency,
    Random { seed: u64 },
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Mim(_) => ModelKind::Mim,
            Model::Hawkes(_) => ModelKind::Hawkes,
            Model::Frequency => ModelKind::Frequency,
            Model::Recency => ModelKind::Recency,
            Model::Random { .. } => ModelKind::Random,
        }
    }

    pub fn score(&self, ego: ParticipantId, history: &DyadHistory, at: Timestamp) -> Result<f64> {
        let times = &history.times;
        Ok(match self {
            Model::Mim(p) => mim_score_times(times, at, p)?,
            Model::Hawkes(p) => hawkes_intensity_times(times, at, p),
            Model::Frequency => frequency_score_times(times, at),
            Model::Recency => recency_score_times(times, at),
            Model::Random { seed } => random_score(ego, history.alter, at, *seed),
        })
    }

    fn listable(&self, score: f64) -> bool {
        match self {
            Model::Mim(p) => score > p.theta,
            _ => score > f64::NEG_INFINITY,
        }
    }

    /// Scores every candidate and returns at most 20 of them, best first.
    ///
    /// Equal scores go to the earlier first contact, then the lower id.
    pub fn rank(&self, task: &RankingTask) -> Result<RankedList> {
        let mut scored: Vec<(f64, Timestamp, ParticipantId)> = Vec::with_capacity(task.candidates.len());
        for c in &task.candidates {
            if c.times.is_empty() {
                continue;
            }
            let s = self.score(task.ego, c, task.at)?;
            if self.listable(s) {
                scored.push((s, c.first_contact(), c.alter));
            }
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        scored.truncate(MAX_LISTED_ALTERS);
        Ok(RankedList {
            ego: task.ego,
            at: task.at,
            entries: scored.into_iter().map(|(s, _, a)| (a, s)).collect(),
        })
    }
}

/// Ranks the candidates of `ego` at `t` using events strictly before `t`.
pub fn rank_candidates(
    dataset: &Dataset,
    ego: ParticipantId,
    t: Timestamp,
    model: &Model,
) -> Result<RankedList> {
    if !dataset.is_participant(ego) {
        return Err(Error::NotFound(ego));
    }
    model.rank(&RankingTask::build(dataset, ego, t))
}

/// A model as the evaluation protocol sees it: something that may be tuned
/// and then ranks tasks given a parameter vector.
pub trait RankingModel: Send + Sync {
    fn name(&self) -> String;

    /// Space to tune over; `None` when the model has nothing to fit (or its
    /// parameters are pinned).
    fn search_space(&self) -> Option<SearchSpace>;

    /// Parameters used when nothing is tuned.
    fn fixed_params(&self) -> Vec<f64>;

    fn rank(&self, task: &RankingTask, params: &[f64]) -> Result<RankedList>;
}

/// A built-in model, either pinned to fixed parameters or left to the tuner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Pinned parameters; tunable kinds without them are tuned.
    pub fixed: Option<Vec<f64>>,
    /// Seed of the random baseline.
    pub seed: u64,
    /// MIM base level.
    pub s_base: f64,
}

impl ModelSpec {
    pub fn tuned(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            fixed: None,
            seed: 0,
            s_base: 0.0,
        }
    }

    pub fn fixed(model: Model) -> Self {
        let (kind, params, seed, s_base) = match model {
            Model::Mim(p) => (ModelKind::Mim, vec![p.half_life, p.mu, p.theta], 0, p.s_base),
            Model::Hawkes(p) => (ModelKind::Hawkes, vec![p.beta], 0, 0.0),
            Model::Frequency => (ModelKind::Frequency, vec![], 0, 0.0),
            Model::Recency => (ModelKind::Recency, vec![], 0, 0.0),
            Model::Random { seed } => (ModelKind::Random, vec![], seed, 0.0),
        };
        ModelSpec {
            kind,
            fixed: Some(params),
            seed,
            s_base,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The five models with tunable ones left free.
    pub fn standard_suite(random_seed: u64) -> Vec<ModelSpec> {
        ModelKind::ALL
            .iter()
            .map(|&k| ModelSpec::tuned(k).with_seed(random_seed))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.fixed {
            self.kind.instantiate(p, self.seed, self.s_base)?;
        }
        if !(0.0..1.0).contains(&self.s_base) {
            return Err(Error::Config(format!("s_base {} outside [0, 1)", self.s_base)));
        }
        Ok(())
    }
}

impl RankingModel for ModelSpec {
    fn name(&self) -> String {
        self.kind.label().to_string()
    }

    fn search_space(&self) -> Option<SearchSpace> {
        match self.fixed {
            Some(_) => None,
            None => self.kind.search_space(),
        }
    }

    fn fixed_params(&self) -> Vec<f64> {
        self.fixed.clone().unwrap_or_default()
    }

    fn rank(&self, task: &RankingTask, params: &[f64]) -> Result<RankedList> {
        self.kind.instantiate(params, self.seed, self.s_base)?.rank(task)
    }
}
