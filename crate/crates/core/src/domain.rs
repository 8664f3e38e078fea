//! Canonical data model: communication events, ego surveys, and the
//! dataset container every other module reads from.
//!
//! Time is stored as integer seconds since the epoch. Conversion to hours
//! happens only inside the model kernels.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Surveys list at most this many alters; models truncate to the same length.
pub const MAX_LISTED_ALTERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub u32);

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ParticipantId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.trim().parse().map(ParticipantId)
    }
}

/// Seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const MAX: Timestamp = Timestamp(i64::MAX);

    pub fn new(seconds: i64) -> Result<Self> {
        if seconds < 0 {
            return Err(Error::Validation(format!("negative timestamp {seconds}")));
        }
        Ok(Timestamp(seconds))
    }

    /// Seconds elapsed from `earlier` to `self`.
    pub fn seconds_since(self, earlier: Timestamp) -> i64 {
        self.0 - earlier.0
    }

    /// Hours elapsed from `earlier` to `self`.
    pub fn hours_since(self, earlier: Timestamp) -> f64 {
        self.seconds_since(earlier) as f64 / SECONDS_PER_HOUR
    }

    pub fn plus_hours(self, hours: f64) -> Timestamp {
        Timestamp(self.0 + (hours * SECONDS_PER_HOUR).round() as i64)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Call,
    Text,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Call => "call",
            Channel::Text => "text",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "voice" => Ok(Channel::Call),
            "text" | "sms" => Ok(Channel::Text),
            other => Err(Error::Validation(format!("filtered channel {other:?}"))),
        }
    }
}

/// One directed communication. Imprint models ignore the direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: Timestamp,
    pub sender: ParticipantId,
    pub receiver: ParticipantId,
    pub channel: Channel,
    /// Seconds for calls, characters (or 0) for texts.
    pub length: u64,
}

impl Event {
    pub fn new(
        timestamp: Timestamp,
        sender: ParticipantId,
        receiver: ParticipantId,
        channel: Channel,
        length: u64,
    ) -> Result<Self> {
        if sender == receiver {
            return Err(Error::Validation(format!(
                "sender equals receiver ({sender}) at {timestamp}"
            )));
        }
        if timestamp.0 < 0 {
            return Err(Error::Validation(format!("negative timestamp {timestamp}")));
        }
        Ok(Event {
            timestamp,
            sender,
            receiver,
            channel,
            length,
        })
    }

    fn sort_key(&self) -> (Timestamp, ParticipantId, ParticipantId, Channel, u64) {
        (self.timestamp, self.sender, self.receiver, self.channel, self.length)
    }

    /// The other endpoint when `who` takes part in this event.
    pub fn counterpart(&self, who: ParticipantId) -> Option<ParticipantId> {
        if self.sender == who {
            Some(self.receiver)
        } else if self.receiver == who {
            Some(self.sender)
        } else {
            None
        }
    }

    pub fn involves_dyad(&self, a: ParticipantId, b: ParticipantId) -> bool {
        (self.sender == a && self.receiver == b) || (self.sender == b && self.receiver == a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionKind {
    /// Graded answer picked from an ordered list of modalities.
    Ordinal,
    /// Open numeric answer; the self-reported tie duration.
    Rational,
}

/// Which end of the scale means "closer to the ego".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    HigherIsCloser,
    LowerIsCloser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub kind: QuestionKind,
    /// Modality labels ordered from most distant (level 0) to closest.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    #[serde(default)]
    pub direction: Direction,
}

impl Question {
    pub fn ordinal(id: &str, levels: &[&str]) -> Self {
        Question {
            id: id.to_string(),
            kind: QuestionKind::Ordinal,
            levels: levels.iter().map(|s| s.to_string()).collect(),
            direction: Direction::HigherIsCloser,
        }
    }

    pub fn rational(id: &str) -> Self {
        Question {
            id: id.to_string(),
            kind: QuestionKind::Rational,
            levels: Vec::new(),
            direction: Direction::HigherIsCloser,
        }
    }
}

/// The questions that take part in the significance tournament.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct QuestionSchema {
    pub questions: Vec<Question>,
}

impl QuestionSchema {
    pub fn new(questions: Vec<Question>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for q in &questions {
            if !seen.insert(q.id.as_str()) {
                return Err(Error::Schema(format!("duplicate question id {:?}", q.id)));
            }
            if q.kind == QuestionKind::Ordinal && q.levels.len() < 2 {
                return Err(Error::Schema(format!(
                    "ordinal question {:?} needs at least two levels",
                    q.id
                )));
            }
        }
        Ok(QuestionSchema { questions })
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlterAnswer {
    pub alter: ParticipantId,
    /// Question id to ordinal level (0 = most distant modality).
    pub graded_answers: BTreeMap<String, u32>,
    /// Self-reported tie duration in years.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub ego: ParticipantId,
    pub survey_time: Timestamp,
    pub semester_index: u32,
    pub alters: Vec<AlterAnswer>,
}

impl SurveyResponse {
    /// Checks the per-response invariants against a schema.
    pub fn validate(&self, schema: &QuestionSchema) -> Result<()> {
        if self.semester_index == 0 {
            return Err(Error::Validation(format!(
                "ego {} survey at {}: semester index must be positive",
                self.ego, self.survey_time
            )));
        }
        if self.alters.len() > MAX_LISTED_ALTERS {
            return Err(Error::Validation(format!(
                "ego {} survey at {} lists {} alters (max {MAX_LISTED_ALTERS})",
                self.ego,
                self.survey_time,
                self.alters.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for a in &self.alters {
            if !seen.insert(a.alter) {
                return Err(Error::Validation(format!(
                    "ego {} survey at {} lists alter {} twice",
                    self.ego, self.survey_time, a.alter
                )));
            }
            if !a.duration.is_finite() || a.duration < 0.0 {
                return Err(Error::Validation(format!(
                    "alter {} has invalid duration {}",
                    a.alter, a.duration
                )));
            }
            for (qid, level) in &a.graded_answers {
                let q = schema
                    .get(qid)
                    .ok_or_else(|| Error::Schema(format!("unknown question {qid:?}")))?;
                if q.kind == QuestionKind::Ordinal && *level as usize >= q.levels.len() {
                    return Err(Error::Validation(format!(
                        "alter {} answer {level} to {qid:?} exceeds {} modalities",
                        a.alter,
                        q.levels.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ordered (alter, score) list produced by a model or by ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub ego: ParticipantId,
    pub at: Timestamp,
    pub entries: Vec<(ParticipantId, f64)>,
}

impl RankedList {
    pub fn alters(&self) -> Vec<ParticipantId> {
        self.entries.iter().map(|(a, _)| *a).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Time-sorted events between an ego and one counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadHistory {
    pub alter: ParticipantId,
    pub times: Vec<Timestamp>,
}

impl DyadHistory {
    pub fn first_contact(&self) -> Timestamp {
        self.times[0]
    }
}

/// Immutable container of one study's events and surveys.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    events: Vec<Event>,
    surveys: Vec<SurveyResponse>,
    schema: QuestionSchema,
    participants: BTreeSet<ParticipantId>,
    // indices into `events`, ascending, per endpoint
    by_participant: BTreeMap<ParticipantId, Vec<u32>>,
}

impl Dataset {
    /// Sorts and validates the inputs and builds the per-participant index.
    pub fn new(
        name: impl Into<String>,
        mut events: Vec<Event>,
        mut surveys: Vec<SurveyResponse>,
        schema: QuestionSchema,
    ) -> Result<Self> {
        for e in &events {
            if e.sender == e.receiver {
                return Err(Error::Validation(format!(
                    "self-addressed event from {} at {}",
                    e.sender, e.timestamp
                )));
            }
        }
        events.sort_by_key(|e| e.sort_key());
        surveys.sort_by_key(|s| (s.ego, s.semester_index, s.survey_time));

        for s in &surveys {
            s.validate(&schema)?;
        }
        for w in surveys.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.ego == b.ego {
                if a.semester_index == b.semester_index {
                    return Err(Error::Validation(format!(
                        "ego {} has two surveys for semester {}",
                        a.ego, a.semester_index
                    )));
                }
                if a.survey_time >= b.survey_time {
                    return Err(Error::Validation(format!(
                        "ego {} survey times not increasing across semesters {} and {}",
                        a.ego, a.semester_index, b.semester_index
                    )));
                }
            }
        }

        let mut by_participant: BTreeMap<ParticipantId, Vec<u32>> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            by_participant.entry(e.sender).or_default().push(i as u32);
            by_participant.entry(e.receiver).or_default().push(i as u32);
        }
        let mut participants: BTreeSet<ParticipantId> = by_participant.keys().copied().collect();
        participants.extend(surveys.iter().map(|s| s.ego));

        Ok(Dataset {
            name: name.into(),
            events,
            surveys,
            schema,
            participants,
            by_participant,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn surveys(&self) -> &[SurveyResponse] {
        &self.surveys
    }

    pub fn schema(&self) -> &QuestionSchema {
        &self.schema
    }

    pub fn is_participant(&self, id: ParticipantId) -> bool {
        self.participants.contains(&id)
    }

    /// Every participant that took at least one survey.
    pub fn egos(&self) -> BTreeSet<ParticipantId> {
        self.surveys.iter().map(|s| s.ego).collect()
    }

    pub fn surveys_of(&self, ego: ParticipantId) -> impl Iterator<Item = &SurveyResponse> {
        let start = self.surveys.partition_point(|s| s.ego < ego);
        self.surveys[start..].iter().take_while(move |s| s.ego == ego)
    }

    /// Semester index to the earliest survey time of that wave.
    pub fn semester_waves(&self) -> BTreeMap<u32, Timestamp> {
        let mut waves: BTreeMap<u32, Timestamp> = BTreeMap::new();
        for s in &self.surveys {
            waves
                .entry(s.semester_index)
                .and_modify(|t| *t = (*t).min(s.survey_time))
                .or_insert(s.survey_time);
        }
        waves
    }

    fn events_involving(&self, who: ParticipantId) -> impl Iterator<Item = &Event> {
        self.by_participant
            .get(&who)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&i| &self.events[i as usize])
    }

    /// Events between `ego` and `other` strictly before `before`, either direction.
    pub fn undirected_dyad_events(
        &self,
        ego: ParticipantId,
        other: ParticipantId,
        before: Timestamp,
    ) -> Result<Vec<&Event>> {
        if !self.is_participant(ego) {
            return Err(Error::NotFound(ego));
        }
        Ok(self
            .events_involving(ego)
            .take_while(|e| e.timestamp < before)
            .filter(|e| e.involves_dyad(ego, other))
            .collect())
    }

    /// Everyone who exchanged at least one event with `ego` before `before`.
    pub fn candidate_alters(&self, ego: ParticipantId, before: Timestamp) -> BTreeSet<ParticipantId> {
        self.events_involving(ego)
            .take_while(|e| e.timestamp < before)
            .filter_map(|e| e.counterpart(ego))
            .collect()
    }

    /// Per-counterpart event times of `ego` strictly before `before`,
    /// ordered by counterpart id.
    pub fn dyad_histories(&self, ego: ParticipantId, before: Timestamp) -> Vec<DyadHistory> {
        let mut grouped: BTreeMap<ParticipantId, Vec<Timestamp>> = BTreeMap::new();
        for e in self.events_involving(ego).take_while(|e| e.timestamp < before) {
            if let Some(other) = e.counterpart(ego) {
                grouped.entry(other).or_default().push(e.timestamp);
            }
        }
        grouped
            .into_iter()
            .map(|(alter, times)| DyadHistory { alter, times })
            .collect()
    }

    /// Copy restricted to the given egos, the given semester indices
    /// (renumbered from 1), and events inside `[from, until)` that touch
    /// one of the egos.
    pub fn restricted(
        &self,
        name: impl Into<String>,
        egos: &BTreeSet<ParticipantId>,
        semesters: std::ops::RangeInclusive<u32>,
        from: Timestamp,
        until: Timestamp,
    ) -> Result<Dataset> {
        let first = *semesters.start();
        let events = self
            .events
            .iter()
            .filter(|e| e.timestamp >= from && e.timestamp < until)
            .filter(|e| egos.contains(&e.sender) || egos.contains(&e.receiver))
            .cloned()
            .collect();
        let surveys = self
            .surveys
            .iter()
            .filter(|s| egos.contains(&s.ego) && semesters.contains(&s.semester_index))
            .map(|s| SurveyResponse {
                semester_index: s.semester_index - first + 1,
                ..s.clone()
            })
            .collect();
        Dataset::new(name, events, surveys, self.schema.clone())
    }
}
