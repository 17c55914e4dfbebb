//! Ranking metrics and fold-level aggregation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::model::Recommendations;

/// Reciprocal rank of the target within the top n, else 0.
pub fn mrr_at_n(ranked: &Recommendations, target: usize, n: usize) -> f64 {
    match ranked.rank_of(target) {
        Some(rank) if rank <= n => 1.0 / rank as f64,
        _ => 0.0,
    }
}

/// 1 if the target appears within the top n, else 0.
pub fn hr_at_n(ranked: &Recommendations, target: usize, n: usize) -> f64 {
    match ranked.rank_of(target) {
        Some(rank) if rank <= n => 1.0,
        _ => 0.0,
    }
}

/// Fraction of distinct recommended entities relative to the number of
/// distinct entities in training.
pub fn coverage(all_recommendations: &[Recommendations], n_train_entities: usize) -> f64 {
    if n_train_entities == 0 {
        return 0.0;
    }
    let unique: std::collections::BTreeSet<usize> = all_recommendations
        .iter()
        .flat_map(|r| r.entity_ids.iter().copied())
        .collect();
    unique.len() as f64 / n_train_entities as f64
}

/// Per-fold values with their mean and 95% CI half-width (absent for a
/// single fold).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub ci95: Option<f64>,
}

/// mean and t-based 95% half-width over fold values.
pub fn mean_ci95(per_fold: &[f64]) -> MetricSummary {
    let n = per_fold.len();
    let mean = per_fold.iter().sum::<f64>() / n as f64;
    let ci95 = if n < 2 {
        None
    } else {
        let var =
            per_fold.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("valid dof")
            .inverse_cdf(0.975);
        Some(t * (var / n as f64).sqrt())
    };
    MetricSummary {
        per_fold: per_fold.to_vec(),
        mean,
        ci95,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PairedT {
    pub t: f64,
    pub mean_diff: f64,
    /// One-sided p-value for mean(a - b) > 0.
    pub p_one_sided: f64,
}

/// Paired t-test of `a` against `b` on matched folds.
pub fn paired_t(a: &[f64], b: &[f64]) -> PairedT {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    assert!(n >= 2, "paired t needs at least two folds");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    if se == 0.0 {
        let p = if mean > 0.0 {
            0.0
        } else if mean < 0.0 {
            1.0
        } else {
            0.5
        };
        return PairedT {
            t: if mean == 0.0 { 0.0 } else { f64::INFINITY.copysign(mean) },
            mean_diff: mean,
            p_one_sided: p,
        };
    }
    let t = mean / se;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof");
    PairedT {
        t,
        mean_diff: mean,
        p_one_sided: 1.0 - dist.cdf(t),
    }
}

/// Cross-validated metrics for one model configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: String,
    pub n: usize,
    pub folds: usize,
    pub mrr: MetricSummary,
    pub hr: MetricSummary,
    pub coverage: MetricSummary,
    pub cases_per_fold: Vec<usize>,
}

impl EvalReport {
    /// `metric,cutoff,mean,ci95` lines; ci95 prints as `na` for one fold.
    pub fn to_text(&self) -> String {
        let fmt = |name: &str, s: &MetricSummary| {
            let ci = s
                .ci95
                .map(|c| format!("{c:.6}"))
                .unwrap_or_else(|| "na".to_string());
            format!("{name},{},{:.6},{}\n", self.n, s.mean, ci)
        };
        let mut out = String::from("metric,cutoff,mean,ci95\n");
        out.push_str(&fmt("mrr", &self.mrr));
        out.push_str(&fmt("hr", &self.hr));
        out.push_str(&fmt("coverage", &self.coverage));
        out
    }

    pub fn to_json(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
