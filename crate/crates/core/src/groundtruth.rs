//! Survey answers to ranked ground truth by pairwise tournament.
//!
//! Every pair of listed alters meets once per question. The alter whose
//! answer sits closer to the ego gets a point; equal answers give both a
//! point. Totals decide the order, then reported duration, then id.

use crate::domain::{
    Dataset, Direction, ParticipantId, QuestionKind, QuestionSchema, SurveyResponse, Timestamp,
};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRanking {
    pub ego: ParticipantId,
    pub at: Timestamp,
    pub semester_index: u32,
    pub ranked_alters: Vec<ParticipantId>,
    pub points: BTreeMap<ParticipantId, u32>,
}

impl GroundTruthRanking {
    pub fn len(&self) -> usize {
        self.ranked_alters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked_alters.is_empty()
    }
}

/// Answer value on a comparable scale, or `None` when missing.
fn answer_value(
    response: &SurveyResponse,
    idx: usize,
    qid: &str,
    kind: QuestionKind,
) -> Option<f64> {
    let a = &response.alters[idx];
    match kind {
        QuestionKind::Ordinal => a.graded_answers.get(qid).map(|&l| f64::from(l)),
        QuestionKind::Rational => Some(a.duration),
    }
}

/// Tournament points for each listed alter, in listing order.
fn tournament_points(response: &SurveyResponse, schema: &QuestionSchema) -> Result<Vec<u32>> {
    for a in &response.alters {
        for qid in a.graded_answers.keys() {
            if schema.get(qid).is_none() {
                return Err(Error::Schema(format!(
                    "alter {} answers unknown question {qid:?}",
                    a.alter
                )));
            }
        }
    }

    let n = response.alters.len();
    let mut points = vec![0u32; n];
    for q in &schema.questions {
        let values: Vec<Option<f64>> = (0..n)
            .map(|i| answer_value(response, i, &q.id, q.kind))
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let (Some(vi), Some(vj)) = (values[i], values[j]) else {
                    log::debug!(
                        "ego {}: skipping {:?} between {} and {} (missing answer)",
                        response.ego,
                        q.id,
                        response.alters[i].alter,
                        response.alters[j].alter
                    );
                    continue;
                };
                let closer = match q.direction {
                    Direction::HigherIsCloser => vi.total_cmp(&vj),
                    Direction::LowerIsCloser => vj.total_cmp(&vi),
                };
                match closer {
                    Ordering::Greater => points[i] += 1,
                    Ordering::Less => points[j] += 1,
                    Ordering::Equal => {
                        points[i] += 1;
                        points[j] += 1;
                    }
                }
            }
        }
    }
    Ok(points)
}

/// Ranks one survey's alters by tournament points.
pub fn tournament_rank(
    response: &SurveyResponse,
    schema: &QuestionSchema,
) -> Result<GroundTruthRanking> {
    let points = tournament_points(response, schema)?;
    let mut order: Vec<usize> = (0..response.alters.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&response.alters[i], &response.alters[j]);
        points[j]
            .cmp(&points[i])
            .then_with(|| b.duration.total_cmp(&a.duration))
            .then_with(|| a.alter.cmp(&b.alter))
    });
    Ok(GroundTruthRanking {
        ego: response.ego,
        at: response.survey_time,
        semester_index: response.semester_index,
        ranked_alters: order.iter().map(|&i| response.alters[i].alter).collect(),
        points: order
            .iter()
            .map(|&i| (response.alters[i].alter, points[i]))
            .collect(),
    })
}

/// One ranking per survey response, keyed by (ego, survey time).
pub fn build_ground_truth(
    dataset: &Dataset,
) -> Result<BTreeMap<(ParticipantId, Timestamp), GroundTruthRanking>> {
    let rankings: Vec<GroundTruthRanking> = dataset
        .surveys()
        .par_iter()
        .map(|s| tournament_rank(s, dataset.schema()))
        .collect::<Result<_>>()?;
    Ok(rankings.into_iter().map(|r| ((r.ego, r.at), r)).collect())
}
