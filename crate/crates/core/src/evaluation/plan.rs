use crate::domain::{Dataset, ParticipantId, Timestamp};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const FOLDS: usize = 3;

/// What one test semester may train on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Release {
    /// Semester whose surveys are scored.
    pub semester: u32,
    /// Semesters whose training-fold surveys may be fitted.
    pub train_semesters: Vec<u32>,
    /// Wave times of those semesters.
    pub train_survey_times: Vec<Timestamp>,
    /// Training sees only events strictly before this (the previous wave).
    pub train_event_cutoff: Timestamp,
    /// Opening time of the tested wave; every training survey must precede it.
    pub test_survey_time: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<BTreeSet<ParticipantId>>,
    pub releases: Vec<Release>,
}

impl FoldPlan {
    /// Egos of every fold except `fold`.
    pub fn training_egos(&self, fold: usize) -> BTreeSet<ParticipantId> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }
}

/// Shuffles the egos with `seed` and deals them into three folds whose sizes
/// differ by at most one; schedules one release per semester after the first.
pub fn make_fold_plan(dataset: &Dataset, seed: u64) -> Result<FoldPlan> {
    let mut egos: Vec<ParticipantId> = dataset.egos().into_iter().collect();
    if egos.len() < FOLDS {
        return Err(Error::Config(format!(
            "{} egos cannot fill {FOLDS} folds",
            egos.len()
        )));
    }
    egos.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (base, extra) = (egos.len() / FOLDS, egos.len() % FOLDS);
    let mut folds = Vec::with_capacity(FOLDS);
    let mut rest = egos.as_slice();
    for i in 0..FOLDS {
        let (head, tail) = rest.split_at(base + usize::from(i < extra));
        folds.push(head.iter().copied().collect());
        rest = tail;
    }

    let waves: Vec<(u32, Timestamp)> = dataset.semester_waves().into_iter().collect();
    let releases = (1..waves.len())
        .map(|k| Release {
            semester: waves[k].0,
            train_semesters: waves[..k].iter().map(|w| w.0).collect(),
            train_survey_times: waves[..k].iter().map(|w| w.1).collect(),
            train_event_cutoff: waves[k - 1].1,
            test_survey_time: waves[k].1,
        })
        .collect();

    Ok(FoldPlan {
        seed,
        folds,
        releases,
    })
}
