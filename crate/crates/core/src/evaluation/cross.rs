//! Cross-population transfer: fit on one population, score on another.

use super::protocol::{fit, model_names, training_set, LabeledTask, ProtocolConfig};
use super::report::{summarize, CellRecord, EvalReport, ReportKind, TuningEntry};
use super::sentinel::{SentinelStats, TrainingView};
use crate::domain::{Dataset, ParticipantId, Timestamp};
use crate::error::{Error, Result};
use crate::groundtruth::tournament_rank;
use crate::metrics::rbo;
use crate::models::{RankingModel, RankingTask};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::ops::RangeInclusive;

/// Cuts a large population into three ego groups of `target_egos` each
/// (dropping the surplus at random) and crosses them with two semester
/// windows, giving six datasets. Each keeps only its window's surveys,
/// renumbered from 1, and the events from the wave before the window up to
/// its last wave.
pub fn make_cross_subgroups(
    large: &Dataset,
    target_egos: usize,
    halves: (RangeInclusive<u32>, RangeInclusive<u32>),
    seed: u64,
) -> Result<Vec<Dataset>> {
    let mut egos: Vec<ParticipantId> = large.egos().into_iter().collect();
    if target_egos == 0 || egos.len() < 3 * target_egos {
        return Err(Error::Config(format!(
            "{} egos cannot form three groups of {target_egos}",
            egos.len()
        )));
    }
    egos.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let dropped = egos.len() - 3 * target_egos;
    log::info!("dropping {dropped} of {} egos before splitting", egos.len());

    let waves = large.semester_waves();
    let last_survey = |sem: u32| -> Option<Timestamp> {
        large
            .surveys()
            .iter()
            .filter(|s| s.semester_index == sem)
            .map(|s| s.survey_time)
            .max()
    };

    let mut out = Vec::with_capacity(6);
    for (g, group) in egos[..3 * target_egos].chunks(target_egos).enumerate() {
        let group: BTreeSet<ParticipantId> = group.iter().copied().collect();
        for half in [&halves.0, &halves.1] {
            let (a, b) = (*half.start(), *half.end());
            if a == 0 || a > b || !waves.contains_key(&a) || !waves.contains_key(&b) {
                return Err(Error::Config(format!(
                    "semester window {a}..={b} is not covered by the survey waves"
                )));
            }
            let from = waves
                .range(..a)
                .next_back()
                .map(|(_, &t)| t)
                .unwrap_or(Timestamp(0));
            let until = Timestamp(last_survey(b).expect("wave exists").0 + 1);
            out.push(large.restricted(
                format!("{}/g{}-s{a}-{b}", large.name, g + 1),
                &group,
                half.clone(),
                from,
                until,
            )?);
        }
    }
    Ok(out)
}

/// Fits each tunable model once per training population over its whole
/// span, then scores every test population from its second semester on.
/// Each (train, test) pair yields one length-weighted score; the final
/// score averages the pairs.
pub fn run_cross_eval(
    trains: &[Dataset],
    tests: &[Dataset],
    models: &[&dyn RankingModel],
    config: &ProtocolConfig,
) -> Result<EvalReport> {
    config.rbo.validate()?;
    let names = model_names(models)?;
    if trains.is_empty() || tests.is_empty() {
        return Err(Error::Config("cross evaluation needs training and test data".into()));
    }
    for tr in trains {
        let tr_egos = tr.egos();
        for te in tests {
            if let Some(shared) = tr_egos.intersection(&te.egos()).next() {
                return Err(Error::ProtocolViolation(format!(
                    "ego {shared} appears in both {} and {}",
                    tr.name, te.name
                )));
            }
        }
    }

    let fitted: Vec<(Vec<Vec<f64>>, Vec<TuningEntry>, SentinelStats)> = trains
        .par_iter()
        .enumerate()
        .map(|(i, tr)| {
            let egos = tr.egos();
            let view = TrainingView::unrestricted(tr, format!("training set {}", tr.name), &egos);
            let train = training_set(&view, tr.schema())?;
            let mut params = Vec::new();
            let mut tuning = Vec::new();
            for (model, name) in models.iter().zip(&names) {
                let (p, result) = fit(*model, &train, config)?;
                if let Some(result) = result {
                    tuning.push(TuningEntry {
                        fold: i,
                        semester: 0,
                        model: name.clone(),
                        param_names: model
                            .search_space()
                            .map(|s| s.names().into_iter().map(String::from).collect())
                            .unwrap_or_default(),
                        result,
                    });
                }
                params.push(p);
            }
            Ok((params, tuning, view.stats()))
        })
        .collect::<Result<_>>()?;

    let test_sets: Vec<Vec<LabeledTask>> = tests
        .par_iter()
        .map(|te| {
            let first = *te.semester_waves().keys().next().unwrap_or(&1);
            te.surveys()
                .iter()
                .filter(|s| s.semester_index > first)
                .map(|s| {
                    Ok(LabeledTask {
                        task: RankingTask::build(te, s.ego, s.survey_time),
                        truth: tournament_rank(s, te.schema())?.ranked_alters,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..trains.len())
        .flat_map(|i| (0..tests.len()).map(move |j| (i, j)))
        .collect();
    let per_pair: Vec<Vec<CellRecord>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair, &(i, j))| {
            let mut records = Vec::new();
            for lt in &test_sets[j] {
                for ((model, name), params) in models.iter().zip(&names).zip(&fitted[i].0) {
                    let predicted = model.rank(&lt.task, params)?;
                    records.push(CellRecord {
                        fold: pair,
                        semester: lt_semester(&tests[j], lt),
                        ego: lt.task.ego,
                        model: name.clone(),
                        rbo: rbo(&predicted.alters(), &lt.truth, &config.rbo)?,
                        truth_len: lt.truth.len(),
                    });
                }
            }
            Ok(records)
        })
        .collect::<Result<_>>()?;

    let records: Vec<CellRecord> = per_pair.into_iter().flatten().collect();
    let mut tuning = Vec::new();
    let mut sentinel = SentinelStats::default();
    for (_, t, s) in fitted {
        tuning.extend(t);
        sentinel = sentinel.merge(s);
    }
    let label = format!(
        "{} -> {}",
        common_label(trains.iter().map(|d| d.name.as_str())),
        common_label(tests.iter().map(|d| d.name.as_str()))
    );
    Ok(EvalReport {
        kind: ReportKind::Cross,
        label,
        rbo: config.rbo,
        summaries: summarize(&records, &names)?,
        records,
        tuning,
        sentinel,
    })
}

fn lt_semester(dataset: &Dataset, lt: &LabeledTask) -> u32 {
    dataset
        .surveys_of(lt.task.ego)
        .find(|s| s.survey_time == lt.task.at)
        .map(|s| s.semester_index)
        .unwrap_or(0)
}

/// Shared prefix before the first '/' of subgroup names, or the single name.
fn common_label<'a>(names: impl Iterator<Item = &'a str>) -> String {
    let roots: BTreeSet<&str> = names.map(|n| n.split('/').next().unwrap_or(n)).collect();
    roots.into_iter().collect::<Vec<_>>().join("+")
}
