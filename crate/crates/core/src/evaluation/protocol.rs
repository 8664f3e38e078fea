//! Staggered three-fold evaluation.
//!
//! For every fold and every semester after the first, tunable models are
//! fitted on the other folds' earlier surveys with events cut at the
//! previous wave, then every model ranks the held-out egos at the tested
//! wave and is scored by RBO against their tournament ground truth.

use super::plan::{FoldPlan, Release};
use super::report::{summarize, CellRecord, EvalReport, ReportKind, TuningEntry};
use super::sentinel::{SentinelStats, TrainingView};
use crate::domain::{Dataset, ParticipantId, QuestionSchema};
use crate::error::{Error, Result};
use crate::groundtruth::{build_ground_truth, tournament_rank};
use crate::metrics::{rbo, weighted_mean_rbo, RboConfig};
use crate::models::{RankingModel, RankingTask};
use crate::tuning::{tune, TuneResult, TunerConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub rbo: RboConfig,
    pub tuner: TunerConfig,
}

/// A ranking task paired with the ground-truth order it is scored against.
#[derive(Debug, Clone)]
pub struct LabeledTask {
    pub task: RankingTask,
    pub truth: Vec<ParticipantId>,
}

/// Training tasks for every survey the view releases.
pub fn training_set(view: &TrainingView<'_>, schema: &QuestionSchema) -> Result<Vec<LabeledTask>> {
    view.surveys()?
        .par_iter()
        .map(|s| {
            let truth = tournament_rank(s, schema)?.ranked_alters;
            let task = view.task(s.ego, s.survey_time)?;
            Ok(LabeledTask { task, truth })
        })
        .collect()
}

/// Length-weighted mean RBO of `model` with `params` over `tasks`. A set
/// without any listed alter scores 0.
pub fn objective(
    model: &dyn RankingModel,
    params: &[f64],
    tasks: &[LabeledTask],
    config: &RboConfig,
) -> Result<f64> {
    let scores: Vec<(f64, usize)> = tasks
        .par_iter()
        .map(|lt| {
            let predicted = model.rank(&lt.task, params)?;
            Ok((rbo(&predicted.alters(), &lt.truth, config)?, lt.truth.len()))
        })
        .collect::<Result<_>>()?;
    match weighted_mean_rbo(&scores) {
        Err(Error::UndefinedAverage) => Ok(0.0),
        other => other,
    }
}

/// Tunes `model` on `tasks` when it has a search space; otherwise returns
/// its fixed parameters.
pub fn fit(
    model: &dyn RankingModel,
    tasks: &[LabeledTask],
    config: &ProtocolConfig,
) -> Result<(Vec<f64>, Option<TuneResult>)> {
    match model.search_space() {
        None => Ok((model.fixed_params(), None)),
        Some(space) => {
            let result = tune(
                |p| objective(model, p, tasks, &config.rbo),
                &space,
                &config.tuner,
            )?;
            Ok((result.best_params.clone(), Some(result)))
        }
    }
}

pub(crate) fn model_names(models: &[&dyn RankingModel]) -> Result<Vec<String>> {
    let names: Vec<String> = models.iter().map(|m| m.name()).collect();
    let unique: BTreeSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(Error::Config(format!("duplicate model names in {names:?}")));
    }
    if names.is_empty() {
        return Err(Error::Config("no models to evaluate".into()));
    }
    Ok(names)
}

struct CellOutput {
    records: Vec<CellRecord>,
    tuning: Vec<TuningEntry>,
    sentinel: SentinelStats,
}

fn param_names(model: &dyn RankingModel) -> Vec<String> {
    model
        .search_space()
        .map(|s| s.names().into_iter().map(String::from).collect())
        .unwrap_or_default()
}

/// Runs the full staggered protocol.
pub fn run_protocol(
    dataset: &Dataset,
    plan: &FoldPlan,
    models: &[&dyn RankingModel],
    config: &ProtocolConfig,
) -> Result<EvalReport> {
    config.rbo.validate()?;
    let names = model_names(models)?;
    if plan.releases.is_empty() {
        return Err(Error::Config(
            "the protocol needs at least two survey waves".into(),
        ));
    }
    let truth = build_ground_truth(dataset)?;

    let cells: Vec<(usize, &Release)> = (0..plan.folds.len())
        .flat_map(|f| plan.releases.iter().map(move |r| (f, r)))
        .collect();

    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(fold, release)| {
            let train_egos = plan.training_egos(fold);
            let view = TrainingView::staggered(
                dataset,
                format!("fold {fold}, semester {}", release.semester),
                &train_egos,
                &release.train_semesters,
                release.test_survey_time,
                release.train_event_cutoff,
            );
            let train = training_set(&view, dataset.schema())?;

            let tests: Vec<LabeledTask> = plan.folds[fold]
                .iter()
                .flat_map(|&ego| {
                    dataset
                        .surveys_of(ego)
                        .filter(|s| s.semester_index == release.semester)
                })
                .map(|s| LabeledTask {
                    task: RankingTask::build(dataset, s.ego, s.survey_time),
                    truth: truth[&(s.ego, s.survey_time)].ranked_alters.clone(),
                })
                .collect();

            let mut records = Vec::with_capacity(tests.len() * models.len());
            let mut tuning = Vec::new();
            let mut fitted = Vec::with_capacity(models.len());
            for (model, name) in models.iter().zip(&names) {
                let (params, result) = fit(*model, &train, config)?;
                if let Some(result) = result {
                    tuning.push(TuningEntry {
                        fold,
                        semester: release.semester,
                        model: name.clone(),
                        param_names: param_names(*model),
                        result,
                    });
                }
                fitted.push(params);
            }
            for lt in &tests {
                for ((model, name), params) in models.iter().zip(&names).zip(&fitted) {
                    let predicted = model.rank(&lt.task, params)?;
                    records.push(CellRecord {
                        fold,
                        semester: release.semester,
                        ego: lt.task.ego,
                        model: name.clone(),
                        rbo: rbo(&predicted.alters(), &lt.truth, &config.rbo)?,
                        truth_len: lt.truth.len(),
                    });
                }
            }
            Ok(CellOutput {
                records,
                tuning,
                sentinel: view.stats(),
            })
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut tuning = Vec::new();
    let mut sentinel = SentinelStats::default();
    for out in outputs {
        records.extend(out.records);
        tuning.extend(out.tuning);
        sentinel = sentinel.merge(out.sentinel);
    }
    let summaries = summarize(&records, &names)?;
    Ok(EvalReport {
        kind: ReportKind::Within,
        label: dataset.name.clone(),
        rbo: config.rbo,
        records,
        summaries,
        tuning,
        sentinel,
    })
}
