//! Wiring between the model and the evaluation harness.
//!
//! [`HybridSvdFactory`] trains one model per fold (with the fold's feature
//! catalog restricted to warm items in the cold-start protocol) and exposes
//! the scoring surfaces the harness expects. [`evaluate_sweep`] is the
//! economical grid driver: one fit per (fold, alpha) at the largest rank,
//! every smaller rank by truncation, and one Cholesky symbolic analysis per
//! fold shared across the whole alpha sweep via refactorization.

use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::eval::{
    build_plans, mean_ci95, score_fold, EvalReport, FoldModel, InteractionData, ModelFactory,
    Scenario, SplitPlan,
};
use crate::model::{fit_with_factors, ColdStartMap, HybridSvdModel};
use crate::similarity::{side_similarity, FeatureCatalog, SideSimilarity};
use crate::svd::SvdOptions;

#[derive(Clone, Debug)]
pub struct HybridConfig {
    /// Item-side blending weight; 0 disables side information entirely.
    pub alpha: f64,
    /// Column scaling exponent for the interaction matrix.
    pub d: f64,
    pub k: usize,
    pub svd: SvdOptions,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            d: 1.0,
            k: 10,
            svd: SvdOptions::default(),
        }
    }
}

/// Trains HybridSVD per fold. The catalog (aligned to the full data item
/// order) is required whenever alpha > 0 or the scenario is cold start.
pub struct HybridSvdFactory<'a> {
    pub config: HybridConfig,
    pub catalog: Option<&'a FeatureCatalog>,
}

impl<'a> HybridSvdFactory<'a> {
    pub fn new(config: HybridConfig, catalog: Option<&'a FeatureCatalog>) -> Self {
        Self { config, catalog }
    }
}

pub struct FittedFold<'a> {
    model: HybridSvdModel,
    cold_map: Option<ColdStartMap>,
    catalog: Option<&'a FeatureCatalog>,
}

impl FittedFold<'_> {
    pub fn model(&self) -> &HybridSvdModel {
        &self.model
    }
}

impl FoldModel for FittedFold<'_> {
    fn score_items(&self, preferences: &[f64]) -> Result<Vec<f64>> {
        self.model.score_items(preferences)
    }

    fn score_users(&self, cold_item: usize) -> Result<Vec<f64>> {
        let catalog = self
            .catalog
            .ok_or(Error::Unsupported("cold start needs a feature catalog"))?;
        let map = self
            .cold_map
            .as_ref()
            .ok_or(Error::Unsupported("cold start map was not built"))?;
        let features = catalog.entity_features(cold_item);
        let latent = map.cold_item_embed(&features)?;
        self.model.cold_item_scores(&latent)
    }
}

/// Similarity over the fold's train items, or None for alpha = 0.
fn fold_similarity(
    catalog: Option<&FeatureCatalog>,
    plan: &SplitPlan,
    alpha: f64,
) -> Result<Option<(SideSimilarity, FeatureCatalog)>> {
    let Some(catalog) = catalog else {
        if alpha > 0.0 {
            return Err(Error::Unsupported("alpha > 0 requires a feature catalog"));
        }
        return Ok(None);
    };
    let train_catalog = catalog.restrict_rows(&plan.data_item_of_train);
    if alpha == 0.0 {
        return Ok(Some((
            SideSimilarity {
                matrix: crate::sparse::SparseMatrix::identity(train_catalog.n_entities()),
                alpha: 0.0,
                z_norm: 1.0,
            },
            train_catalog,
        )));
    }
    let sim = side_similarity(&train_catalog, alpha)?;
    Ok(Some((sim, train_catalog)))
}

impl ModelFactory for HybridSvdFactory<'_> {
    fn fit_fold(&self, plan: &SplitPlan) -> Result<Box<dyn FoldModel + '_>> {
        let cfg = &self.config;
        let fold_sim = fold_similarity(self.catalog, plan, cfg.alpha)?;
        let (item_sim, train_catalog) = match fold_sim {
            Some((sim, cat)) => (Some(sim), Some(cat)),
            None => (None, None),
        };
        let use_sim = item_sim.as_ref().filter(|s| s.alpha > 0.0);
        let item_factor = use_sim
            .map(|s| CholeskyFactor::new(&s.matrix))
            .transpose()?;
        let model = fit_with_factors(
            &plan.train.matrix,
            use_sim,
            item_factor.as_ref(),
            None,
            None,
            cfg.k.min(plan.train.n_users().min(plan.train.n_items())),
            cfg.d,
            &cfg.svd,
        )?;
        let cold_map = match (&train_catalog, plan.scenario) {
            (Some(cat), Scenario::ColdStart) => Some(model.cold_start_map(cat)?),
            _ => None,
        };
        Ok(Box::new(FittedFold {
            model,
            cold_map,
            catalog: self.catalog,
        }))
    }
}

/// One evaluation grid entry.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
    pub report: EvalReport,
}

/// Counters proving the advertised training economy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    /// Full model fits: folds x |alphas|, never folds x |alphas| x |ks|.
    pub fits: usize,
    /// Fresh symbolic analyses: one per fold when any alpha > 0.
    pub symbolic_analyses: usize,
    /// Numeric refactorizations reusing a previous symbolic analysis.
    pub refactorizations: usize,
}

/// Evaluates the full (alpha, k, n) grid over shared split plans.
///
/// For each fold and alpha one model is fitted at max(ks); every smaller
/// rank is obtained by truncation. Within a fold, similarity blends share
/// one Cholesky symbolic analysis across alphas.
pub fn evaluate_sweep(
    data: &InteractionData,
    catalog: Option<&FeatureCatalog>,
    scenario: Scenario,
    alphas: &[f64],
    ks: &[usize],
    ns: &[usize],
    d: f64,
    svd: &SvdOptions,
    folds: usize,
    seed: u64,
) -> Result<(Vec<SweepEntry>, SweepStats)> {
    let k_max = ks.iter().copied().max().ok_or(Error::Unsupported(
        "evaluate_sweep needs at least one rank",
    ))?;
    let plans = build_plans(data, scenario, folds, seed)?;
    let mut stats = SweepStats::default();

    // fold-major accumulation: per (alpha, k, n) metric vectors over folds
    let mut acc: Vec<Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<usize>)>> =
        vec![
            vec![(Vec::new(), Vec::new(), Vec::new(), Vec::new()); ks.len() * ns.len()];
            alphas.len()
        ];

    for plan in &plans {
        let annotate = |e: Error| Error::Fold {
            fold: plan.fold_index,
            source: Box::new(e),
        };
        let mut chol: Option<CholeskyFactor> = None;
        for (ai, &alpha) in alphas.iter().enumerate() {
            let fold_sim = fold_similarity(catalog, plan, alpha).map_err(annotate)?;
            let (item_sim, train_catalog) = match fold_sim {
                Some((sim, cat)) => (Some(sim), Some(cat)),
                None => (None, None),
            };
            let use_sim = item_sim.as_ref().filter(|s| s.alpha > 0.0);
            let item_factor = match use_sim {
                None => None,
                Some(s) => Some(match &chol {
                    Some(prev) => {
                        stats.refactorizations += 1;
                        prev.refactorize(&s.matrix).map_err(annotate)?
                    }
                    None => {
                        stats.symbolic_analyses += 1;
                        CholeskyFactor::new(&s.matrix).map_err(annotate)?
                    }
                }),
            };
            if let Some(f) = item_factor.as_ref() {
                chol = Some(f.clone());
            }

            let model = fit_with_factors(
                &plan.train.matrix,
                use_sim,
                item_factor.as_ref(),
                None,
                None,
                k_max.min(plan.train.n_users().min(plan.train.n_items())),
                d,
                svd,
            )
            .map_err(annotate)?;
            stats.fits += 1;

            for (ki, &k) in ks.iter().enumerate() {
                let truncated = model.truncate(k.min(model.k())).map_err(annotate)?;
                let cold_map = match (&train_catalog, plan.scenario) {
                    (Some(cat), Scenario::ColdStart) => {
                        Some(truncated.cold_start_map(cat).map_err(annotate)?)
                    }
                    _ => None,
                };
                let fold_model = FittedFold {
                    model: truncated,
                    cold_map,
                    catalog,
                };
                for (ni, &n) in ns.iter().enumerate() {
                    let scores = score_fold(&fold_model, plan, n).map_err(annotate)?;
                    let slot = &mut acc[ai][ki * ns.len() + ni];
                    slot.0.push(scores.mrr);
                    slot.1.push(scores.hr);
                    slot.2.push(scores.coverage);
                    slot.3.push(scores.cases);
                }
            }
        }
    }

    let mut entries = Vec::new();
    for (ai, &alpha) in alphas.iter().enumerate() {
        for (ki, &k) in ks.iter().enumerate() {
            for (ni, &n) in ns.iter().enumerate() {
                let (mrr, hr, cov, cases) = &acc[ai][ki * ns.len() + ni];
                entries.push(SweepEntry {
                    alpha,
                    k,
                    n,
                    report: EvalReport {
                        scenario: scenario.to_string(),
                        n,
                        folds,
                        mrr: mean_ci95(mrr),
                        hr: mean_ci95(hr),
                        coverage: mean_ci95(cov),
                        cases_per_fold: cases.clone(),
                    },
                });
            }
        }
    }
    Ok((entries, stats))
}
