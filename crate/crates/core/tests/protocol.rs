use memimprint::domain::{Dataset, ParticipantId, RankedList, Timestamp};
use memimprint::evaluation::{
    make_cross_subgroups, make_fold_plan, run_cross_eval, run_protocol, EvalReport, ProtocolConfig,
};
use memimprint::groundtruth::build_ground_truth;
use memimprint::metrics::weighted_mean_rbo;
use memimprint::models::{ModelKind, ModelSpec, RankingModel, RankingTask};
use memimprint::synthdata::{generate, SynthConfig};
use memimprint::tuning::{SearchSpace, TunerConfig};
use memimprint::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// Answers every task with the survey's own ground truth.
struct Oracle(BTreeMap<(ParticipantId, Timestamp), Vec<ParticipantId>>);

impl RankingModel for Oracle {
    fn name(&self) -> String {
        "Oracle".into()
    }
    fn search_space(&self) -> Option<SearchSpace> {
        None
    }
    fn fixed_params(&self) -> Vec<f64> {
        vec![]
    }
    fn rank(&self, task: &RankingTask, _: &[f64]) -> Result<RankedList> {
        let truth = self.0.get(&(task.ego, task.at)).cloned().unwrap_or_default();
        Ok(RankedList {
            ego: task.ego,
            at: task.at,
            entries: truth.into_iter().map(|a| (a, 1.0)).collect(),
        })
    }
}

fn small(egos: usize, seed: u64) -> Dataset {
    let cfg = SynthConfig {
        egos,
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg).unwrap().0
}

fn quick() -> ProtocolConfig {
    ProtocolConfig {
        tuner: TunerConfig { budget: 8, seed: 5 },
        ..ProtocolConfig::default()
    }
}

fn run(d: &Dataset, plan_seed: u64, models: &[ModelSpec]) -> EvalReport {
    let plan = make_fold_plan(d, plan_seed).unwrap();
    let refs: Vec<&dyn RankingModel> = models.iter().map(|m| m as &dyn RankingModel).collect();
    run_protocol(d, &plan, &refs, &quick()).unwrap()
}

#[test]
fn oracle_scores_one() {
    let d = small(12, 1);
    let truth = build_ground_truth(&d)
        .unwrap()
        .into_iter()
        .map(|(k, v)| (k, v.ranked_alters))
        .collect();
    let oracle = Oracle(truth);
    let plan = make_fold_plan(&d, 0).unwrap();
    let r = run_protocol(&d, &plan, &[&oracle], &quick()).unwrap();
    let s = r.summary("Oracle").unwrap();
    assert!((s.final_score - 1.0).abs() < 1e-9);
    assert!(r.records.iter().all(|c| c.truth_len == 0 || (c.rbo - 1.0).abs() < 1e-9));
}

#[test]
fn random_is_near_zero() {
    let d = small(50, 2);
    let r = run(&d, 0, &[ModelSpec::tuned(ModelKind::Random).with_seed(11)]);
    let s = r.summary("Random").unwrap();
    assert!(s.final_score < 0.1, "random scored {}", s.final_score);
}

#[test]
fn four_semesters_make_nine_cells() {
    let d = small(9, 3);
    let r = run(&d, 0, &[ModelSpec::tuned(ModelKind::Recency)]);
    let cells: BTreeSet<(usize, u32)> = r.records.iter().map(|c| (c.fold, c.semester)).collect();
    assert_eq!(cells.len(), 9);
    assert!(r.records.iter().all(|c| c.semester >= 2));
    assert_eq!(r.sentinel.violations, 0);
    assert!(r.sentinel.survey_accesses > 0);
}

#[test]
fn reruns_are_identical() {
    let d = small(12, 4);
    let suite = ModelSpec::standard_suite(9);
    let a = run(&d, 6, &suite);
    let b = run(&d, 6, &suite);
    assert_eq!(a, b);
}

#[test]
fn final_score_is_mean_of_fold_means() {
    let d = small(15, 5);
    let r = run(&d, 1, &[ModelSpec::tuned(ModelKind::Frequency)]);
    let folds: Vec<f64> = (0..3)
        .map(|f| {
            let scores: Vec<(f64, usize)> = r
                .records
                .iter()
                .filter(|c| c.fold == f)
                .map(|c| (c.rbo, c.truth_len))
                .collect();
            weighted_mean_rbo(&scores).unwrap()
        })
        .collect();
    let s = r.summary("Frequency").unwrap();
    assert!((s.final_score - folds.iter().sum::<f64>() / 3.0).abs() < 1e-12);
}

#[test]
fn fold_relabeling_keeps_scores() {
    let d = small(12, 6);
    let suite = vec![ModelSpec::tuned(ModelKind::Mim), ModelSpec::tuned(ModelKind::Frequency)];
    let refs: Vec<&dyn RankingModel> = suite.iter().map(|m| m as &dyn RankingModel).collect();
    let plan = make_fold_plan(&d, 2).unwrap();
    let mut swapped = plan.clone();
    swapped.folds.reverse();
    let a = run_protocol(&d, &plan, &refs, &quick()).unwrap();
    let b = run_protocol(&d, &swapped, &refs, &quick()).unwrap();
    for m in ["MIM", "Frequency"] {
        assert_eq!(
            a.summary(m).unwrap().final_score.to_bits(),
            b.summary(m).unwrap().final_score.to_bits()
        );
    }
}

#[test]
fn cross_subgroups_and_transfer() {
    let cfg = SynthConfig {
        egos: 20,
        semesters: 6,
        seed: 8,
        ..SynthConfig::default()
    };
    let (large, _) = generate(&cfg).unwrap();
    let groups = make_cross_subgroups(&large, 6, (1..=3, 4..=6), 1).unwrap();
    assert_eq!(groups.len(), 6);
    for g in &groups {
        assert_eq!(g.egos().len(), 6);
        let sems: BTreeSet<u32> = g.surveys().iter().map(|s| s.semester_index).collect();
        assert_eq!(sems, BTreeSet::from([1, 2, 3]));
    }
    let other = small(9, 99);
    let suite = vec![ModelSpec::tuned(ModelKind::Hawkes)];
    let refs: Vec<&dyn RankingModel> = suite.iter().map(|m| m as &dyn RankingModel).collect();
    let shifted = SynthConfig {
        egos: 9,
        seed: 100,
        id_base: 1_000_000,
        ..SynthConfig::default()
    };
    let (twin, _) = generate(&shifted).unwrap();
    let r = run_cross_eval(&[other.clone()], &[twin], &refs, &quick()).unwrap();
    assert!(r.summary("Hawkes").unwrap().final_score > 0.0);
    assert_eq!(r.sentinel.violations, 0);
    assert!(r.records.iter().all(|c| c.semester >= 2));

    assert!(matches!(
        run_cross_eval(&[other.clone()], &[other], &refs, &quick()),
        Err(Error::ProtocolViolation(_))
    ));
    assert!(matches!(
        make_cross_subgroups(&large, 7, (1..=3, 4..=6), 1),
        Err(Error::Config(_))
    ));
}
