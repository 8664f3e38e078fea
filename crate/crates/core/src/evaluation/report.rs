use super::sentinel::SentinelStats;
use crate::domain::ParticipantId;
use crate::error::Result;
use crate::metrics::{weighted_mean_rbo, RboConfig};
use crate::tuning::TuneResult;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Score of one model on one tested survey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// Fold index, or the (train, test) pair index in cross evaluation.
    pub fold: usize,
    pub semester: u32,
    pub ego: ParticipantId,
    pub model: String,
    pub rbo: f64,
    pub truth_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    /// Length-weighted mean RBO per fold (or per train/test pair).
    pub fold_scores: Vec<f64>,
    /// Mean of the fold scores.
    pub final_score: f64,
    /// Variance of per-survey RBO over every weighted survey, all folds pooled.
    pub survey_variance: f64,
    /// Variance of the fold scores.
    pub fold_variance: f64,
    pub surveys: usize,
}

/// Parameters a tunable model settled on for one release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningEntry {
    pub fold: usize,
    pub semester: u32,
    pub model: String,
    pub param_names: Vec<String>,
    pub result: TuneResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Within,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: ReportKind,
    /// Dataset name, or "train -> test" for cross evaluation.
    pub label: String,
    pub rbo: RboConfig,
    pub records: Vec<CellRecord>,
    pub summaries: Vec<ModelSummary>,
    pub tuning: Vec<TuningEntry>,
    pub sentinel: SentinelStats,
}

impl EvalReport {
    pub fn summary(&self, model: &str) -> Option<&ModelSummary> {
        self.summaries.iter().find(|s| s.model == model)
    }
}

fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Order-insensitive mean: values are summed in sorted order.
fn mean_sorted(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Aggregates per-survey records into per-model summaries, in `models`
/// order. Folds in which a model has no weighted survey are left out.
pub fn summarize(records: &[CellRecord], models: &[String]) -> Result<Vec<ModelSummary>> {
    models
        .iter()
        .map(|model| {
            let mut by_fold: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
            for r in records.iter().filter(|r| &r.model == model) {
                by_fold.entry(r.fold).or_default().push((r.rbo, r.truth_len));
            }
            let mut fold_scores = Vec::new();
            for (fold, scores) in &by_fold {
                match weighted_mean_rbo(scores) {
                    Ok(v) => fold_scores.push(v),
                    Err(_) => log::warn!("model {model}: fold {fold} has no weighted survey"),
                }
            }
            let weighted: Vec<f64> = records
                .iter()
                .filter(|r| &r.model == model && r.truth_len > 0)
                .map(|r| r.rbo)
                .collect();
            let final_score = if fold_scores.is_empty() {
                f64::NAN
            } else {
                mean_sorted(&fold_scores)
            };
            Ok(ModelSummary {
                model: model.clone(),
                fold_variance: variance(&fold_scores),
                fold_scores,
                final_score,
                survey_variance: variance(&weighted),
                surveys: weighted.len(),
            })
        })
        .collect()
}
