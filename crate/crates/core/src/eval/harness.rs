//! Generic fold-by-fold evaluation driver.
//!
//! A [`ModelFactory`] trains one [`FoldModel`] per fold; the harness owns
//! ranking, exclusion of seen items, and metric aggregation. Split plans
//! are a pure function of (data, scenario, seed, fold), so two factories
//! evaluated with the same plans are paired by construction.

use crate::error::{Error, Result};
use crate::model::rank_top_n;
use crate::Recommendations;

use super::data::InteractionData;
use super::metrics::{coverage, hr_at_n, mean_ci95, mrr_at_n, EvalReport};
use super::split::{split_with_folds, Holdout, Scenario, SplitPlan};

pub trait FoldModel {
    /// Standard scenario: scores over the train item space for one user's
    /// preference vector.
    fn score_items(&self, preferences: &[f64]) -> Result<Vec<f64>> {
        let _ = preferences;
        Err(Error::Unsupported("score_items"))
    }

    /// Cold-start scenario: scores over the train user space for a cold
    /// item given by its index in the full data item space.
    fn score_users(&self, cold_item: usize) -> Result<Vec<f64>> {
        let _ = cold_item;
        Err(Error::Unsupported("score_users"))
    }
}

pub trait ModelFactory {
    fn fit_fold(&self, plan: &SplitPlan) -> Result<Box<dyn FoldModel + '_>>;
}

/// Per-fold metric values produced by [`score_fold`].
#[derive(Clone, Debug)]
pub struct FoldScores {
    pub mrr: f64,
    pub hr: f64,
    pub coverage: f64,
    pub cases: usize,
}

/// Scores one fitted model against a fold's holdout at cutoff `n`.
pub fn score_fold(model: &dyn FoldModel, plan: &SplitPlan, n: usize) -> Result<FoldScores> {
    let mut mrr_sum = 0.0;
    let mut hr_sum = 0.0;
    let mut recs: Vec<Recommendations> = Vec::new();
    let cases;
    let denom;
    match &plan.holdout {
        Holdout::Standard(holdout) => {
            cases = holdout.len();
            denom = count_nonempty_columns(&plan.train);
            for &(user, target) in holdout {
                let preferences = plan.train.user_row(user);
                let scores = model.score_items(&preferences)?;
                let seen: Vec<bool> = preferences.iter().map(|&p| p > 0.0).collect();
                let ranked = rank_top_n(&scores, Some(&seen), n);
                mrr_sum += mrr_at_n(&ranked, target, n);
                hr_sum += hr_at_n(&ranked, target, n);
                recs.push(ranked);
            }
        }
        Holdout::ColdStart(holdout) => {
            cases = holdout.len();
            denom = plan.train.n_users();
            for &(cold_item, probe) in holdout {
                let scores = model.score_users(cold_item)?;
                let ranked = rank_top_n(&scores, None, n);
                mrr_sum += mrr_at_n(&ranked, probe, n);
                hr_sum += hr_at_n(&ranked, probe, n);
                recs.push(ranked);
            }
        }
    }
    let cases_f = cases.max(1) as f64;
    Ok(FoldScores {
        mrr: mrr_sum / cases_f,
        hr: hr_sum / cases_f,
        coverage: coverage(&recs, denom),
        cases,
    })
}

fn count_nonempty_columns(data: &InteractionData) -> usize {
    let mut seen = vec![false; data.n_items()];
    for &c in data.matrix.col_indices() {
        seen[c] = true;
    }
    seen.iter().filter(|&&s| s).count()
}

/// All fold plans for a configuration; cache and share these to pair
/// models on identical splits.
pub fn build_plans(
    data: &InteractionData,
    scenario: Scenario,
    folds: usize,
    seed: u64,
) -> Result<Vec<SplitPlan>> {
    (0..folds)
        .map(|fold| split_with_folds(data, scenario, fold, seed, folds))
        .collect()
}

pub fn evaluate(
    factory: &dyn ModelFactory,
    data: &InteractionData,
    scenario: Scenario,
    n: usize,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    let plans = build_plans(data, scenario, folds, seed)?;
    evaluate_with_plans(factory, &plans, n)
}

pub fn evaluate_with_plans(
    factory: &dyn ModelFactory,
    plans: &[SplitPlan],
    n: usize,
) -> Result<EvalReport> {
    let mut mrr = Vec::with_capacity(plans.len());
    let mut hr = Vec::with_capacity(plans.len());
    let mut cov = Vec::with_capacity(plans.len());
    let mut cases = Vec::with_capacity(plans.len());
    for plan in plans {
        let annotate = |e: Error| Error::Fold {
            fold: plan.fold_index,
            source: Box::new(e),
        };
        let model = factory.fit_fold(plan).map_err(annotate)?;
        let scores = score_fold(model.as_ref(), plan, n).map_err(annotate)?;
        mrr.push(scores.mrr);
        hr.push(scores.hr);
        cov.push(scores.coverage);
        cases.push(scores.cases);
    }
    Ok(EvalReport {
        scenario: plans
            .first()
            .map(|p| p.scenario.to_string())
            .unwrap_or_else(|| Scenario::Standard.to_string()),
        n,
        folds: plans.len(),
        mrr: mean_ci95(&mrr),
        hr: mean_ci95(&hr),
        coverage: mean_ci95(&cov),
        cases_per_fold: cases,
    })
}
