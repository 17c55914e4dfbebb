//! Evaluation harness: data ingestion, cross-validated splitting for the
//! standard and item-cold-start protocols, and top-n ranking metrics with
//! confidence intervals.

mod data;
mod harness;
mod metrics;
mod split;

pub use data::{from_records, load_interactions, InteractionData, Provenance};
pub use harness::{build_plans, evaluate, evaluate_with_plans, score_fold, FoldModel, FoldScores, ModelFactory};
pub use metrics::{coverage, hr_at_n, mean_ci95, mrr_at_n, paired_t, EvalReport, MetricSummary, PairedT};
pub use split::{split, Holdout, Scenario, SplitPlan};
