//! Evaluation protocols: staggered three-fold cross-validation within one
//! population and transfer between populations.

mod cross;
mod plan;
mod protocol;
mod report;
mod sentinel;

pub use cross::{make_cross_subgroups, run_cross_eval};
pub use plan::{make_fold_plan, FoldPlan, Release, FOLDS};
pub use protocol::{fit, objective, run_protocol, training_set, LabeledTask, ProtocolConfig};
pub use report::{summarize, CellRecord, EvalReport, ModelSummary, ReportKind, TuningEntry};
pub use sentinel::{SentinelStats, TrainingView};
