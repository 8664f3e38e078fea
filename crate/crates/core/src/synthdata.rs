//! Synthetic study populations with planted relationship strengths.
//!
//! Each ego gets a handful of real ties with heavy-tailed latent strengths
//! plus a crowd of weak background contacts. Every dyad emits events from a
//! self-exciting point process whose baseline rate is proportional to the
//! current strength, simulated by thinning. At the end of each semester the
//! ego lists its strongest ties and grades them by binning (optionally
//! noisy) strength into per-question quantiles, so ground truth and the
//! event log share a common cause.

use crate::domain::{
    AlterAnswer, Channel, Dataset, Event, ParticipantId, Question, QuestionSchema, SurveyResponse,
    Timestamp, MAX_LISTED_ALTERS, SECONDS_PER_HOUR,
};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const HOURS_PER_YEAR: f64 = 8760.0;

/// Latent strength of each (ego, alter, semester).
pub type LatentTruth = BTreeMap<(ParticipantId, ParticipantId, u32), f64>;

/// One graded survey question and the quantile cut points that turn a
/// strength quantile into its ordinal level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionBins {
    pub id: String,
    /// Labels from most distant to closest; one more than `cuts`.
    pub levels: Vec<String>,
    /// Increasing interior quantiles in (0, 1).
    pub cuts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub name: String,
    pub egos: usize,
    pub semesters: u32,
    /// Hours between consecutive survey waves.
    pub semester_hours: f64,
    /// Study start, seconds since the epoch.
    pub start: i64,
    pub ties_min: usize,
    pub ties_max: usize,
    /// Shape of the log-normal strength distribution.
    pub strength_sigma: f64,
    /// Baseline events per hour per unit strength.
    pub event_rate: f64,
    /// Branching ratio of the self-excitation, in [0, 1).
    pub burstiness: f64,
    /// Decay of the self-excitation kernel, per hour.
    pub burst_decay: f64,
    pub background_min: usize,
    pub background_max: usize,
    /// Strength of background contacts relative to a unit tie.
    pub background_strength: f64,
    /// Per-semester probability that a tie's strength is redrawn.
    pub churn: f64,
    /// Standard deviation of log-strength noise added per question.
    pub answer_noise: f64,
    /// Standard deviation, in years, of reported tie duration.
    pub duration_noise: f64,
    /// Longest pre-study tie age in years (reached as strength grows).
    pub duration_scale: f64,
    pub questions: Vec<QuestionBins>,
    pub seed: u64,
    /// Offset applied to every generated id, so that twin populations do
    /// not share participants.
    pub id_base: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let q = |id: &str, levels: &[&str], cuts: &[f64]| QuestionBins {
            id: id.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
            cuts: cuts.to_vec(),
        };
        SynthConfig {
            name: "synthetic".into(),
            egos: 196,
            semesters: 4,
            semester_hours: 120.0 * 24.0,
            start: 1_313_971_200, // 2011-08-22
            ties_min: 10,
            ties_max: 40,
            strength_sigma: 1.0,
            event_rate: 0.004,
            burstiness: 0.5,
            burst_decay: 2.0,
            background_min: 200,
            background_max: 500,
            background_strength: 0.05,
            churn: 0.25,
            answer_noise: 0.5,
            duration_noise: 1.0,
            duration_scale: 3.0,
            questions: vec![
                q(
                    "closeness",
                    &["Distant", "Less than close", "Close", "Especially close"],
                    &[0.4, 0.7, 0.9],
                ),
                q("similarity", &["Not similar", "Somewhat similar", "Very similar"], &[0.35, 0.75]),
                q(
                    "emotional",
                    &["Not significant", "Somewhat", "Significant", "Very significant"],
                    &[0.5, 0.8, 0.95],
                ),
            ],
            seed: 2022,
            id_base: 0,
        }
    }
}

impl SynthConfig {
    /// Noise-free answers and stable strengths: the survey ranking then
    /// equals the latent strength order.
    pub fn monotone(mut self) -> Self {
        self.churn = 0.0;
        self.answer_noise = 0.0;
        self.duration_noise = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("synthetic config: {what}")));
        if self.egos == 0 || self.semesters == 0 {
            return bad("need at least one ego and one semester");
        }
        if !(self.semester_hours > 0.0) {
            return bad("semester length must be positive");
        }
        if self.start < 0 {
            return bad("start must be a non-negative epoch time");
        }
        if self.ties_min == 0 || self.ties_min > self.ties_max {
            return bad("tie count range must be non-empty and start at 1 or more");
        }
        if self.background_min > self.background_max {
            return bad("background contact range is empty");
        }
        if self.ties_max + self.background_max >= ALTER_BLOCK as usize {
            return bad("too many contacts per ego");
        }
        if !(self.strength_sigma > 0.0) {
            return bad("strength sigma must be positive");
        }
        if !(self.event_rate >= 0.0) || !(self.background_strength >= 0.0) {
            return bad("rates must be non-negative");
        }
        if !(0.0..1.0).contains(&self.burstiness) || !(self.burst_decay > 0.0) {
            return bad("burstiness must lie in [0, 1) with a positive decay");
        }
        if !(0.0..=1.0).contains(&self.churn) {
            return bad("churn must be a probability");
        }
        if !(self.answer_noise >= 0.0 && self.duration_noise >= 0.0 && self.duration_scale >= 0.0) {
            return bad("noise levels must be non-negative");
        }
        if self.questions.is_empty() {
            return bad("at least one graded question is required");
        }
        for q in &self.questions {
            if q.levels.len() != q.cuts.len() + 1 {
                return bad("each question needs exactly one more level than cut points");
            }
            let mut prev = 0.0;
            for &c in &q.cuts {
                if !(c > prev && c < 1.0) {
                    return bad("cut points must increase strictly inside (0, 1)");
                }
                prev = c;
            }
        }
        let max_id = u64::from(self.id_base)
            + self.egos as u64
            + self.egos as u64 * u64::from(ALTER_BLOCK);
        if max_id > u64::from(u32::MAX) {
            return bad("id range overflows");
        }
        Ok(())
    }

    pub fn schema(&self) -> QuestionSchema {
        let mut questions: Vec<Question> = self
            .questions
            .iter()
            .map(|q| {
                let labels: Vec<&str> = q.levels.iter().map(String::as_str).collect();
                Question::ordinal(&q.id, &labels)
            })
            .collect();
        questions.push(Question::rational("duration"));
        QuestionSchema::new(questions).expect("validated question ids")
    }

    /// Time of survey wave `k` (1-based).
    pub fn wave_time(&self, k: u32) -> Timestamp {
        Timestamp(self.start).plus_hours(self.semester_hours * f64::from(k))
    }
}

const ALTER_BLOCK: u32 = 1000;

struct Tie {
    alter: ParticipantId,
    /// Strength per semester, index 0 = semester 1.
    strengths: Vec<f64>,
    prior_years: f64,
}

struct EgoPlan {
    ego: ParticipantId,
    ties: Vec<Tie>,
    background: Vec<(ParticipantId, f64)>,
}

fn plan_ego(cfg: &SynthConfig, index: usize, strength: &LogNormal<f64>) -> EgoPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2 * index as u64);
    let ego = ParticipantId(cfg.id_base + index as u32);
    let first_alter = cfg.id_base + cfg.egos as u32 + index as u32 * ALTER_BLOCK;

    let n_ties = rng.random_range(cfg.ties_min..=cfg.ties_max);
    let ties = (0..n_ties)
        .map(|j| {
            let s0 = strength.sample(&mut rng);
            let mut strengths = vec![s0];
            for _ in 1..cfg.semesters {
                let prev = *strengths.last().unwrap();
                let next = if rng.random::<f64>() < cfg.churn {
                    strength.sample(&mut rng)
                } else {
                    prev
                };
                strengths.push(next);
            }
            Tie {
                alter: ParticipantId(first_alter + j as u32),
                strengths,
                prior_years: cfg.duration_scale * s0 / (1.0 + s0),
            }
        })
        .collect();

    let n_bg = rng.random_range(cfg.background_min..=cfg.background_max);
    let background = (0..n_bg)
        .map(|j| {
            let id = ParticipantId(first_alter + (n_ties + j) as u32);
            (id, cfg.background_strength * strength.sample(&mut rng).min(1.0))
        })
        .collect();
    EgoPlan {
        ego,
        ties,
        background,
    }
}

/// Event times in hours since study start for one dyad, by thinning a
/// self-exciting process with piecewise-constant baseline `rates`.
fn simulate_dyad(cfg: &SynthConfig, rates: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let jump = cfg.burstiness * cfg.burst_decay;
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut excite = 0.0;
    for (k, &base) in rates.iter().enumerate() {
        let seg_end = cfg.semester_hours * (k + 1) as f64;
        loop {
            let bound = base + excite;
            if bound <= 0.0 {
                t = seg_end;
                break;
            }
            let wait = Exp::new(bound).expect("positive rate").sample(rng);
            if t + wait >= seg_end {
                excite *= (-cfg.burst_decay * (seg_end - t)).exp();
                t = seg_end;
                break;
            }
            t += wait;
            excite *= (-cfg.burst_decay * wait).exp();
            if rng.random::<f64>() * bound <= base + excite {
                out.push(t);
                excite += jump;
            }
        }
    }
    out
}

fn emit_events(
    cfg: &SynthConfig,
    ego: ParticipantId,
    alter: ParticipantId,
    hours: &[f64],
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Event>,
) {
    let start = Timestamp(cfg.start);
    for &h in hours {
        let ts = Timestamp(start.0 + (h * SECONDS_PER_HOUR).floor() as i64);
        let (sender, receiver) = if rng.random::<bool>() {
            (ego, alter)
        } else {
            (alter, ego)
        };
        let (channel, length) = if rng.random::<f64>() < 0.25 {
            (Channel::Call, 10 + rng.random_range(0..600))
        } else {
            (Channel::Text, rng.random_range(1..=160))
        };
        out.push(Event {
            timestamp: ts,
            sender,
            receiver,
            channel,
            length,
        });
    }
}

fn level_of(u: f64, cuts: &[f64]) -> u32 {
    cuts.iter().filter(|&&c| u >= c).count() as u32
}

/// Empirical quantile of `x` within sorted `pool`.
fn quantile_of(x: f64, pool: &[f64]) -> f64 {
    pool.partition_point(|&v| v <= x) as f64 / pool.len() as f64
}

/// Generates a dataset and the planted strengths behind it.
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, LatentTruth)> {
    cfg.validate()?;
    let strength =
        LogNormal::new(0.0, cfg.strength_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let plans: Vec<EgoPlan> = (0..cfg.egos)
        .into_par_iter()
        .map(|i| plan_ego(cfg, i, &strength))
        .collect();

    // Population log-strength pool, for quantile binning of answers.
    let mut pool: Vec<f64> = plans
        .iter()
        .flat_map(|p| p.ties.iter().flat_map(|t| t.strengths.iter().map(|s| s.ln())))
        .collect();
    pool.sort_by(f64::total_cmp);

    let per_ego: Vec<(Vec<Event>, Vec<SurveyResponse>)> = plans
        .par_iter()
        .enumerate()
        .map(|(i, plan)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(2 * i as u64 + 1);
            let mut events = Vec::new();
            for tie in &plan.ties {
                let rates: Vec<f64> = tie.strengths.iter().map(|s| cfg.event_rate * s).collect();
                let hours = simulate_dyad(cfg, &rates, &mut rng);
                emit_events(cfg, plan.ego, tie.alter, &hours, &mut rng, &mut events);
            }
            for &(alter, s) in &plan.background {
                let rates = vec![cfg.event_rate * s; cfg.semesters as usize];
                let hours = simulate_dyad(cfg, &rates, &mut rng);
                emit_events(cfg, plan.ego, alter, &hours, &mut rng, &mut events);
            }
            let surveys = (1..=cfg.semesters)
                .map(|k| survey_for(cfg, plan, k, &pool, &mut rng))
                .collect();
            (events, surveys)
        })
        .collect();

    let mut truth = LatentTruth::new();
    for plan in &plans {
        for tie in &plan.ties {
            for (k, &s) in tie.strengths.iter().enumerate() {
                truth.insert((plan.ego, tie.alter, k as u32 + 1), s);
            }
        }
    }
    let (events, surveys): (Vec<Vec<Event>>, Vec<Vec<SurveyResponse>>) = per_ego.into_iter().unzip();
    let dataset = Dataset::new(
        cfg.name.clone(),
        events.into_iter().flatten().collect(),
        surveys.into_iter().flatten().collect(),
        cfg.schema(),
    )?;
    Ok((dataset, truth))
}

fn survey_for(
    cfg: &SynthConfig,
    plan: &EgoPlan,
    semester: u32,
    pool: &[f64],
    rng: &mut ChaCha8Rng,
) -> SurveyResponse {
    let k = semester as usize - 1;
    let mut order: Vec<&Tie> = plan.ties.iter().collect();
    order.sort_by(|a, b| b.strengths[k].total_cmp(&a.strengths[k]).then(a.alter.cmp(&b.alter)));
    order.truncate(MAX_LISTED_ALTERS);

    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let elapsed_years = cfg.semester_hours * f64::from(semester) / HOURS_PER_YEAR;
    let alters = order
        .into_iter()
        .map(|tie| {
            let log_s = tie.strengths[k].ln();
            let graded_answers = cfg
                .questions
                .iter()
                .map(|q| {
                    let noisy = log_s + cfg.answer_noise * noise.sample(rng);
                    (q.id.clone(), level_of(quantile_of(noisy, pool), &q.cuts))
                })
                .collect();
            let duration = (tie.prior_years + elapsed_years + cfg.duration_noise * noise.sample(rng))
                .max(0.0);
            AlterAnswer {
                alter: tie.alter,
                graded_answers,
                duration,
            }
        })
        .collect();
    SurveyResponse {
        ego: plan.ego,
        survey_time: cfg.wave_time(semester),
        semester_index: semester,
        alters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundtruth::tournament_rank;

    fn small() -> SynthConfig {
        SynthConfig {
            egos: 12,
            semesters: 3,
            background_min: 5,
            background_max: 20,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (a, ta) = generate(&small()).unwrap();
        let (b, tb) = generate(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate(&SynthConfig { seed: 9, ..small() }).unwrap();
        assert_ne!(a.events(), c.events());
    }

    #[test]
    fn surveys_respect_invariants() {
        let (d, _) = generate(&small()).unwrap();
        assert_eq!(d.surveys().len(), 12 * 3);
        for s in d.surveys() {
            assert!(s.alters.len() >= 10 && s.alters.len() <= MAX_LISTED_ALTERS);
            s.validate(d.schema()).unwrap();
        }
    }

    #[test]
    fn zero_rate_gives_empty_log() {
        let (d, _) = generate(&SynthConfig { event_rate: 0.0, ..small() }).unwrap();
        assert!(d.events().is_empty());
        assert_eq!(d.surveys().len(), 36);
    }

    #[test]
    fn monotone_answers_recover_latent_order() {
        let cfg = small().monotone();
        let (d, truth) = generate(&cfg).unwrap();
        for s in d.surveys() {
            let gt = tournament_rank(s, d.schema()).unwrap();
            let mut latent: Vec<(f64, ParticipantId)> = s
                .alters
                .iter()
                .map(|a| (truth[&(s.ego, a.alter, s.semester_index)], a.alter))
                .collect();
            latent.sort_by(|a, b| b.0.total_cmp(&a.0));
            let expected: Vec<ParticipantId> = latent.into_iter().map(|(_, a)| a).collect();
            assert_eq!(gt.ranked_alters, expected);
        }
    }

    #[test]
    fn twin_ids_do_not_overlap() {
        let (a, _) = generate(&small()).unwrap();
        let (b, _) = generate(&SynthConfig { id_base: 1_000_000, seed: 3, ..small() }).unwrap();
        assert!(a.egos().is_disjoint(&b.egos()));
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(generate(&SynthConfig { egos: 0, ..small() }).is_err());
        assert!(generate(&SynthConfig { burstiness: 1.0, ..small() }).is_err());
        let mut cfg = small();
        cfg.questions[0].cuts = vec![0.5, 0.4, 0.9];
        assert!(generate(&cfg).is_err());
    }
}
