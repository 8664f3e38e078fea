//! Leakage sentinel: the only door through which training reads data.
//!
//! Every survey and event handed to a tuner passes through a
//! [`TrainingView`], which checks its fold membership and timestamp against
//! the release's cutoffs and counts the access. Any breach is a hard
//! [`Error::ProtocolViolation`].

use crate::domain::{Dataset, ParticipantId, SurveyResponse, Timestamp};
use crate::error::{Error, Result};
use crate::models::RankingTask;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentinelStats {
    pub survey_accesses: usize,
    pub event_accesses: usize,
    /// Reads of test-fold surveys, surveys at or after the test wave, or
    /// events at or after the cutoff. A completed run always reports 0.
    pub violations: usize,
}

impl SentinelStats {
    pub fn merge(self, other: SentinelStats) -> SentinelStats {
        SentinelStats {
            survey_accesses: self.survey_accesses + other.survey_accesses,
            event_accesses: self.event_accesses + other.event_accesses,
            violations: self.violations + other.violations,
        }
    }
}

#[derive(Debug)]
pub struct TrainingView<'a> {
    dataset: &'a Dataset,
    label: String,
    egos: &'a BTreeSet<ParticipantId>,
    /// Training surveys are the ones with a semester index in this set.
    semesters: Option<BTreeSet<u32>>,
    survey_cutoff: Timestamp,
    event_cutoff: Timestamp,
    surveys: AtomicUsize,
    events: AtomicUsize,
    violations: AtomicUsize,
}

impl<'a> TrainingView<'a> {
    /// Staggered view: surveys of `semesters` strictly before
    /// `survey_cutoff`, events strictly before `event_cutoff`.
    pub fn staggered(
        dataset: &'a Dataset,
        label: String,
        egos: &'a BTreeSet<ParticipantId>,
        semesters: &[u32],
        survey_cutoff: Timestamp,
        event_cutoff: Timestamp,
    ) -> Self {
        TrainingView {
            dataset,
            label,
            egos,
            semesters: Some(semesters.iter().copied().collect()),
            survey_cutoff,
            event_cutoff,
            surveys: AtomicUsize::new(0),
            events: AtomicUsize::new(0),
            violations: AtomicUsize::new(0),
        }
    }

    /// Whole-span view used when training and test populations are disjoint.
    pub fn unrestricted(dataset: &'a Dataset, label: String, egos: &'a BTreeSet<ParticipantId>) -> Self {
        TrainingView {
            dataset,
            label,
            egos,
            semesters: None,
            survey_cutoff: Timestamp::MAX,
            event_cutoff: Timestamp::MAX,
            surveys: AtomicUsize::new(0),
            events: AtomicUsize::new(0),
            violations: AtomicUsize::new(0),
        }
    }

    fn breach(&self, what: String) -> Error {
        self.violations.fetch_add(1, Ordering::Relaxed);
        Error::ProtocolViolation(format!("{}: {what}", self.label))
    }

    /// Training surveys selected by the release schedule, each verified to
    /// precede the tested wave.
    pub fn surveys(&self) -> Result<Vec<&'a SurveyResponse>> {
        let mut out = Vec::new();
        for ego in self.egos {
            for s in self.dataset.surveys_of(*ego) {
                let scheduled = self
                    .semesters
                    .as_ref()
                    .is_none_or(|sems| sems.contains(&s.semester_index));
                if !scheduled {
                    continue;
                }
                if s.survey_time >= self.survey_cutoff {
                    return Err(self.breach(format!(
                        "training survey of ego {} (semester {}) at {} is not before the test wave at {}",
                        s.ego, s.semester_index, s.survey_time, self.survey_cutoff
                    )));
                }
                self.surveys.fetch_add(1, Ordering::Relaxed);
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Event histories of a training ego before `at`, clipped to the event
    /// cutoff.
    pub fn task(&self, ego: ParticipantId, at: Timestamp) -> Result<RankingTask> {
        if !self.egos.contains(&ego) {
            return Err(self.breach(format!("ego {ego} is not in the training fold")));
        }
        let before = at.min(self.event_cutoff);
        let task = RankingTask {
            ego,
            at,
            candidates: self.dataset.dyad_histories(ego, before),
        };
        for c in &task.candidates {
            if let Some(&last) = c.times.last() {
                if last >= self.event_cutoff {
                    return Err(self.breach(format!(
                        "event of ego {ego} at {last} is not before the cutoff {}",
                        self.event_cutoff
                    )));
                }
            }
        }
        self.events.fetch_add(task.event_count(), Ordering::Relaxed);
        Ok(task)
    }

    pub fn stats(&self) -> SentinelStats {
        SentinelStats {
            survey_accesses: self.surveys.load(Ordering::Relaxed),
            event_accesses: self.events.load(Ordering::Relaxed),
            violations: self.violations.load(Ordering::Relaxed),
        }
    }
}
