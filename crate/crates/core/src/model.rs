//! The HybridSVD model: training, rank truncation, folding-in, cold start.
//!
//! Training factorizes the auxiliary matrix C_K^T R C_S through the
//! operator-defined Lanczos SVD, where C_S and C_K are the (permutation
//! wrapped) Cholesky factors of the item and user side similarities. The
//! auxiliary product is never materialized: applying the operator is three
//! matrix-vector products. Absent similarities mean identity factors, which
//! reduces the whole model to plain truncated SVD of the interactions.
//!
//! Factor blocks kept on the model:
//! - `u_hat`, `v_hat`: singular vectors of the auxiliary matrix;
//! - `u = C_K^-T u_hat`, `v = C_S^-T v_hat`: original-space embeddings,
//!   orthonormal under the similarity inner products (U^T K U = V^T S V = I);
//! - `v_right = C_S v_hat`: the companion block for folding-in, so that
//!   item scores for a preference vector p are v (v_right^T p).

use serde::{Deserialize, Serialize};

use crate::cholesky::CholeskyFactor;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::similarity::{FeatureCatalog, SideSimilarity};
use crate::sparse::SparseMatrix;
use crate::svd::{dense_svd, truncated_svd, SvdFactors, SvdOptions};

/// C_K^T R C_S as a matrix-free operator.
pub struct AuxiliaryOperator<'a> {
    interactions: &'a SparseMatrix,
    user_factor: Option<&'a CholeskyFactor>,
    item_factor: Option<&'a CholeskyFactor>,
}

impl<'a> AuxiliaryOperator<'a> {
    pub fn new(
        interactions: &'a SparseMatrix,
        user_factor: Option<&'a CholeskyFactor>,
        item_factor: Option<&'a CholeskyFactor>,
    ) -> Self {
        Self {
            interactions,
            user_factor,
            item_factor,
        }
    }

    /// Dense materialization of the auxiliary matrix; test-scale oracle for
    /// the operator path.
    pub fn materialize(&self) -> DenseMatrix {
        let (m, n) = (self.n_rows(), self.n_cols());
        let mut out = DenseMatrix::zeros(m, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.apply(&e);
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    }
}

impl LinearOperator for AuxiliaryOperator<'_> {
    fn n_rows(&self) -> usize {
        self.interactions.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.interactions.n_cols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let sx = match self.item_factor {
            Some(f) => f.mul_vec(x, false).expect("item factor dimension"),
            None => x.to_vec(),
        };
        let rx = self.interactions.matvec(&sx).expect("operator dimension");
        match self.user_factor {
            Some(f) => f.mul_vec(&rx, true).expect("user factor dimension"),
            None => rx,
        }
    }

    fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        let kx = match self.user_factor {
            Some(f) => f.mul_vec(x, false).expect("user factor dimension"),
            None => x.to_vec(),
        };
        let rtx = self.interactions.matvec_t(&kx).expect("operator dimension");
        match self.item_factor {
            Some(f) => f.mul_vec(&rtx, true).expect("item factor dimension"),
            None => rtx,
        }
    }
}

/// Ranked entities with non-increasing scores; ties broken by ascending id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    pub entity_ids: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Recommendations {
    pub fn len(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity_ids.is_empty()
    }

    /// 1-based rank of the entity, if present.
    pub fn rank_of(&self, entity: usize) -> Option<usize> {
        self.entity_ids.iter().position(|&e| e == entity).map(|p| p + 1)
    }
}

/// Top-n by score with deterministic tie-breaking (ascending entity id).
/// Entities flagged in `exclude` never appear.
pub fn rank_top_n(scores: &[f64], exclude: Option<&[bool]>, n: usize) -> Recommendations {
    let mut ids: Vec<usize> = (0..scores.len())
        .filter(|&i| exclude.map_or(true, |mask| !mask[i]))
        .collect();
    ids.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    ids.truncate(n);
    let scores = ids.iter().map(|&i| scores[i]).collect();
    Recommendations {
        entity_ids: ids,
        scores,
    }
}

#[derive(Clone, Debug)]
pub struct HybridSvdModel {
    sigma: Vec<f64>,
    u_hat: DenseMatrix,
    v_hat: DenseMatrix,
    u: DenseMatrix,
    v: DenseMatrix,
    v_right: DenseMatrix,
    scaling_d: f64,
    item_alpha: Option<f64>,
    user_alpha: Option<f64>,
}

/// Trains a model of rank `k_max`.
///
/// Steps: scale the interaction columns by D^(d-1), Cholesky-factor the
/// side similarities (absent ones mean identity factors and are skipped),
/// run the Lanczos SVD on the composed operator, then derive the
/// original-space factors by triangular solves and multiplications.
pub fn fit(
    interactions: &SparseMatrix,
    item_sim: Option<&SideSimilarity>,
    user_sim: Option<&SideSimilarity>,
    k_max: usize,
    d: f64,
    opts: &SvdOptions,
) -> Result<HybridSvdModel> {
    let item_factor = item_sim
        .map(|s| CholeskyFactor::new(&s.matrix))
        .transpose()?;
    let user_factor = user_sim
        .map(|s| CholeskyFactor::new(&s.matrix))
        .transpose()?;
    fit_with_factors(
        interactions,
        item_sim,
        item_factor.as_ref(),
        user_sim,
        user_factor.as_ref(),
        k_max,
        d,
        opts,
    )
}

/// Like [`fit`] but with caller-supplied Cholesky factors, so a sweep over
/// blending weights can reuse one symbolic analysis via refactorization.
#[allow(clippy::too_many_arguments)]
pub fn fit_with_factors(
    interactions: &SparseMatrix,
    item_sim: Option<&SideSimilarity>,
    item_factor: Option<&CholeskyFactor>,
    user_sim: Option<&SideSimilarity>,
    user_factor: Option<&CholeskyFactor>,
    k_max: usize,
    d: f64,
    opts: &SvdOptions,
) -> Result<HybridSvdModel> {
    let (m, n) = (interactions.n_rows(), interactions.n_cols());
    if interactions.nnz() == 0 {
        return Err(Error::EmptyAfterFilter);
    }
    if k_max == 0 || k_max > m.min(n) {
        return Err(Error::RankOutOfRange {
            k: k_max,
            max: m.min(n),
        });
    }
    if let Some(s) = item_sim {
        if s.matrix.n_rows() != n {
            return Err(Error::DimensionMismatch {
                context: "item similarity",
                expected: n,
                got: s.matrix.n_rows(),
            });
        }
    }
    if let Some(s) = user_sim {
        if s.matrix.n_rows() != m {
            return Err(Error::DimensionMismatch {
                context: "user similarity",
                expected: m,
                got: s.matrix.n_rows(),
            });
        }
    }

    let scaled = interactions.scale_columns(d)?;
    let op = AuxiliaryOperator::new(&scaled, user_factor, item_factor);
    let factors = truncated_svd(&op, k_max, opts)?;
    Ok(derive_model(
        factors,
        item_factor,
        user_factor,
        d,
        item_sim.map(|s| s.alpha),
        user_sim.map(|s| s.alpha),
    )?)
}

fn derive_model(
    factors: SvdFactors,
    item_factor: Option<&CholeskyFactor>,
    user_factor: Option<&CholeskyFactor>,
    scaling_d: f64,
    item_alpha: Option<f64>,
    user_alpha: Option<f64>,
) -> Result<HybridSvdModel> {
    let SvdFactors {
        left: u_hat,
        singular_values: sigma,
        right: v_hat,
    } = factors;
    let u = match user_factor {
        Some(f) => f.solve_lower(&u_hat, true)?,
        None => u_hat.clone(),
    };
    let v = match item_factor {
        Some(f) => f.solve_lower(&v_hat, true)?,
        None => v_hat.clone(),
    };
    let v_right = match item_factor {
        Some(f) => f.mul_lower(&v_hat, false)?,
        None => v_hat.clone(),
    };
    Ok(HybridSvdModel {
        sigma,
        u_hat,
        v_hat,
        u,
        v,
        v_right,
        scaling_d,
        item_alpha,
        user_alpha,
    })
}

impl HybridSvdModel {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn n_users(&self) -> usize {
        self.u.n_rows()
    }

    pub fn n_items(&self) -> usize {
        self.v.n_rows()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn u_hat(&self) -> &DenseMatrix {
        &self.u_hat
    }

    pub fn v_hat(&self) -> &DenseMatrix {
        &self.v_hat
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    /// V_l of the folding-in identity; equal to `v` by construction.
    pub fn v_left(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn v_right(&self) -> &DenseMatrix {
        &self.v_right
    }

    pub fn scaling_d(&self) -> f64 {
        self.scaling_d
    }

    pub fn item_alpha(&self) -> Option<f64> {
        self.item_alpha
    }

    pub fn user_alpha(&self) -> Option<f64> {
        self.user_alpha
    }

    /// Keeps the leading `k` factors; pure slicing, no recomputation.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k > self.k() {
            return Err(Error::RankOutOfRange { k, max: self.k() });
        }
        Ok(Self {
            sigma: self.sigma[..k].to_vec(),
            u_hat: self.u_hat.slice_columns(k),
            v_hat: self.v_hat.slice_columns(k),
            u: self.u.slice_columns(k),
            v: self.v.slice_columns(k),
            v_right: self.v_right.slice_columns(k),
            scaling_d: self.scaling_d,
            item_alpha: self.item_alpha,
            user_alpha: self.user_alpha,
        })
    }

    /// Folding-in item scores for a preference vector: V_l (V_r^T p).
    pub fn score_items(&self, preferences: &[f64]) -> Result<Vec<f64>> {
        let q = self.v_right.transpose_mul_vec(preferences)?;
        self.v.mul_vec(&q)
    }

    /// Top-n item recommendations for a preference indicator vector.
    pub fn recommend(
        &self,
        preferences: &[f64],
        n: usize,
        exclude_seen: bool,
    ) -> Result<Recommendations> {
        let scores = self.score_items(preferences)?;
        let mask: Option<Vec<bool>> = exclude_seen
            .then(|| preferences.iter().map(|&p| p > 0.0).collect());
        Ok(rank_top_n(&scores, mask.as_deref(), n))
    }

    /// Linear map from feature space to the latent item space, W = V^T S F,
    /// computed as V_r^T F (the triangular factors cancel against V).
    pub fn cold_start_map(&self, catalog: &FeatureCatalog) -> Result<ColdStartMap> {
        if catalog.n_entities() != self.n_items() {
            return Err(Error::DimensionMismatch {
                context: "cold_start_map",
                expected: self.n_items(),
                got: catalog.n_entities(),
            });
        }
        let k = self.k();
        let f = catalog.assignments();
        let mut w = DenseMatrix::zeros(k, f.n_cols());
        for item in 0..f.n_rows() {
            let (cols, vals) = f.row(item);
            for (&c, &fv) in cols.iter().zip(vals) {
                for l in 0..k {
                    let cur = w.get(l, c);
                    w.set(l, c, cur + self.v_right.get(item, l) * fv);
                }
            }
        }
        let solver = dense_svd(&w.transpose());
        Ok(ColdStartMap { w, solver })
    }

    /// User scores for a cold item latent vector: U (sigma ⊙ v).
    pub fn cold_item_scores(&self, latent: &[f64]) -> Result<Vec<f64>> {
        if latent.len() != self.k() {
            return Err(Error::DimensionMismatch {
                context: "cold_item_scores",
                expected: self.k(),
                got: latent.len(),
            });
        }
        let weighted: Vec<f64> = latent
            .iter()
            .zip(&self.sigma)
            .map(|(v, s)| v * s)
            .collect();
        self.u.mul_vec(&weighted)
    }

    /// Top-n users for a cold item latent vector.
    pub fn cold_item_users(&self, latent: &[f64], n: usize) -> Result<Recommendations> {
        let scores = self.cold_item_scores(latent)?;
        Ok(rank_top_n(&scores, None, n))
    }

    /// max |U_hat^T U_hat - I| and max |V_hat^T V_hat - I|.
    pub fn auxiliary_orthogonality_error(&self) -> f64 {
        let gu = self
            .u_hat
            .transpose_matmul(&self.u_hat)
            .expect("gram")
            .max_abs_diff_identity();
        let gv = self
            .v_hat
            .transpose_matmul(&self.v_hat)
            .expect("gram")
            .max_abs_diff_identity();
        gu.max(gv)
    }

    /// max |V^T S V - I| against an explicit similarity matrix (identity
    /// when absent). The user side is the same check with U and K.
    pub fn item_orthogonality_error(&self, item_sim: Option<&SideSimilarity>) -> f64 {
        weighted_gram_error(&self.v, item_sim)
    }

    pub fn user_orthogonality_error(&self, user_sim: Option<&SideSimilarity>) -> f64 {
        weighted_gram_error(&self.u, user_sim)
    }
}

fn weighted_gram_error(x: &DenseMatrix, sim: Option<&SideSimilarity>) -> f64 {
    let sx = match sim {
        Some(s) => {
            let cols: Vec<Vec<f64>> = (0..x.n_cols())
                .map(|j| s.matrix.matvec(x.column(j)).expect("similarity dimension"))
                .collect();
            DenseMatrix::from_columns(x.n_rows(), &cols)
        }
        None => x.clone(),
    };
    x.transpose_matmul(&sx)
        .expect("gram")
        .max_abs_diff_identity()
}

/// Feature-to-latent map with a cached rank-revealing factorization of W^T
/// for minimum-norm least-squares embedding of cold items.
#[derive(Clone, Debug)]
pub struct ColdStartMap {
    w: DenseMatrix,
    solver: SvdFactors,
}

impl ColdStartMap {
    pub fn w(&self) -> &DenseMatrix {
        &self.w
    }

    /// Minimum-norm least-squares solution of W^T v = f.
    pub fn cold_item_embed(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.w.n_cols() {
            return Err(Error::DimensionMismatch {
                context: "cold_item_embed",
                expected: self.w.n_cols(),
                got: features.len(),
            });
        }
        if features.iter().all(|&f| f == 0.0) {
            return Err(Error::ColdItemNoFeatures);
        }
        let sigma1 = self.solver.singular_values.first().copied().unwrap_or(0.0);
        let cutoff = sigma1 * 1e-12;
        let k = self.w.n_rows();
        let mut v = vec![0.0; k];
        for (i, &s) in self.solver.singular_values.iter().enumerate() {
            if s <= cutoff {
                break;
            }
            let c: f64 = self
                .solver
                .left
                .column(i)
                .iter()
                .zip(features)
                .map(|(a, b)| a * b)
                .sum();
            let c = c / s;
            for (vj, &r) in v.iter_mut().zip(self.solver.right.column(i)) {
                *vj += c * r;
            }
        }
        Ok(v)
    }
}

/// Serializable container for a fitted model plus entity labels and
/// similarity provenance. JSON round-trips are lossless for f64 values.
#[derive(Serialize, Deserialize)]
pub struct ModelContainer {
    pub k: usize,
    pub sigma: Vec<f64>,
    pub u_hat: DenseMatrix,
    pub v_hat: DenseMatrix,
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub v_right: DenseMatrix,
    pub scaling_d: f64,
    pub item_alpha: Option<f64>,
    pub user_alpha: Option<f64>,
    pub feature_hash: Option<u64>,
    pub user_labels: Vec<String>,
    pub item_labels: Vec<String>,
}

impl ModelContainer {
    pub fn new(
        model: &HybridSvdModel,
        user_labels: Vec<String>,
        item_labels: Vec<String>,
        feature_hash: Option<u64>,
    ) -> Self {
        Self {
            k: model.k(),
            sigma: model.sigma.clone(),
            u_hat: model.u_hat.clone(),
            v_hat: model.v_hat.clone(),
            u: model.u.clone(),
            v: model.v.clone(),
            v_right: model.v_right.clone(),
            scaling_d: model.scaling_d,
            item_alpha: model.item_alpha,
            user_alpha: model.user_alpha,
            feature_hash,
            user_labels,
            item_labels,
        }
    }

    pub fn into_model(self) -> HybridSvdModel {
        HybridSvdModel {
            sigma: self.sigma,
            u_hat: self.u_hat,
            v_hat: self.v_hat,
            u: self.u,
            v: self.v,
            v_right: self.v_right,
            scaling_d: self.scaling_d,
            item_alpha: self.item_alpha,
            user_alpha: self.user_alpha,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{blend, load_features, side_similarity};

    fn table1() -> SparseMatrix {
        let t = [
            (0usize, 0usize, 1.0),
            (0, 2, 1.0),
            (0, 3, 1.0),
            (1, 0, 1.0),
            (1, 1, 1.0),
            (1, 3, 1.0),
            (2, 0, 1.0),
            (2, 3, 1.0),
        ];
        SparseMatrix::from_triplets(&t, 3, 5).unwrap()
    }

    fn toy_similarity(z35: f64, alpha: f64) -> SideSimilarity {
        let mut triplets: Vec<(usize, usize, f64)> = (0..5).map(|i| (i, i, 1.0)).collect();
        triplets.push((2, 4, z35));
        triplets.push((4, 2, z35));
        let z = SparseMatrix::from_triplets(&triplets, 5, 5).unwrap();
        blend(&z, alpha).unwrap()
    }

    const TOM: [f64; 5] = [1.0, 0.0, 0.0, 1.0, 1.0];

    #[test]
    fn pure_svd_assigns_uniform_scores_to_items_2_and_3() {
        let model = fit(&table1(), None, None, 2, 1.0, &SvdOptions::default()).unwrap();
        let scores = model.score_items(&TOM).unwrap();
        assert!((scores[1] - scores[2]).abs() < 1e-8);
        assert!((scores[1] - 0.3).abs() < 0.05);
    }

    #[test]
    fn hybrid_favors_item3_over_item2() {
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            let sim = toy_similarity(0.5, alpha);
            let model = fit(&table1(), Some(&sim), None, 2, 1.0, &SvdOptions::default())
                .unwrap();
            let scores = model.score_items(&TOM).unwrap();
            assert!(
                scores[2] > scores[1],
                "alpha = {alpha}: item3 {} vs item2 {}",
                scores[2],
                scores[1]
            );
        }
    }

    #[test]
    fn hybrid_reproduces_published_toy_scores() {
        // direct link z_35 = 1 at alpha = 0.5 lands on the published pair
        let sim = toy_similarity(1.0, 0.5);
        let model = fit(&table1(), Some(&sim), None, 2, 1.0, &SvdOptions::default())
            .unwrap();
        let scores = model.score_items(&TOM).unwrap();
        assert!((scores[1] - 0.1).abs() <= 0.05, "item2 = {}", scores[1]);
        assert!((scores[2] - 0.6).abs() <= 0.05, "item3 = {}", scores[2]);
    }

    #[test]
    fn reduction_to_pure_svd_matches_dense_oracle() {
        let r = table1();
        let model = fit(&r, None, None, 2, 1.0, &SvdOptions::default()).unwrap();
        let oracle = dense_svd(&r.to_dense()).truncate(2);
        for i in 0..2 {
            assert!(
                (model.sigma()[i] - oracle.singular_values[i]).abs()
                    <= 1e-8 * oracle.singular_values[0]
            );
        }
        // score vectors against the oracle's projector for every user row
        for u in 0..3 {
            let p: Vec<f64> = (0..5).map(|j| r.get(u, j)).collect();
            let q = oracle.right.transpose_mul_vec(&p).unwrap();
            let oracle_scores = oracle.right.mul_vec(&q).unwrap();
            let scores = model.score_items(&p).unwrap();
            for (a, b) in scores.iter().zip(&oracle_scores) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn orthogonality_under_similarity_inner_product() {
        let sim = toy_similarity(0.5, 0.7);
        let model = fit(&table1(), Some(&sim), None, 2, 1.0, &SvdOptions::default())
            .unwrap();
        assert!(model.auxiliary_orthogonality_error() < 1e-8);
        assert!(model.item_orthogonality_error(Some(&sim)) < 1e-6);
        assert!(model.user_orthogonality_error(None) < 1e-6);
    }

    #[test]
    fn truncate_slices_prefixes() {
        let model = fit(&table1(), None, None, 3, 1.0, &SvdOptions::default()).unwrap();
        let cut = model.truncate(2).unwrap();
        assert_eq!(cut.k(), 2);
        assert_eq!(cut.sigma(), &model.sigma()[..2]);
        assert_eq!(cut.v().values(), model.v().slice_columns(2).values());
        let same = model.truncate(3).unwrap();
        assert_eq!(same.sigma(), model.sigma());
        assert!(model.truncate(4).is_err());
    }

    #[test]
    fn known_user_folding_in_is_exact() {
        let r = table1();
        let k = 2;
        let model = fit(&r, None, None, k, 1.0, &SvdOptions::default()).unwrap();
        // rank-k reconstruction row: sum_i sigma_i u[u,i] v[:,i]
        for u in 0..3 {
            let p: Vec<f64> = (0..5).map(|j| r.get(u, j)).collect();
            let scores = model.score_items(&p).unwrap();
            for j in 0..5 {
                let mut recon = 0.0;
                for i in 0..k {
                    recon += model.sigma()[i] * model.u().get(u, i) * model.v().get(j, i);
                }
                assert!((scores[j] - recon).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn recommend_excludes_seen_and_breaks_ties_by_id() {
        let model = fit(&table1(), None, None, 2, 1.0, &SvdOptions::default()).unwrap();
        let recs = model.recommend(&TOM, 5, true).unwrap();
        // items 0, 3, 4 are in the history; only 1 and 2 remain
        assert_eq!(recs.entity_ids, vec![1, 2]);
        assert!(recs.scores[0] >= recs.scores[1]);
        // equal scores, so ascending id ordering is the tie-break

        let all_seen = [1.0; 5];
        let recs = model.recommend(&all_seen, 5, true).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn cold_start_map_matches_triple_product() {
        let records: Vec<(String, String)> = vec![
            ("Item1".into(), "tag:a".into()),
            ("Item2".into(), "tag:b".into()),
            ("Item3".into(), "tag:c".into()),
            ("Item3".into(), "shared:x".into()),
            ("Item4".into(), "tag:d".into()),
            ("Item5".into(), "tag:e".into()),
            ("Item5".into(), "shared:x".into()),
        ];
        let catalog = load_features(&records).unwrap().catalog;
        let sim = side_similarity(&catalog, 0.6).unwrap();
        let model = fit(&table1(), Some(&sim), None, 2, 1.0, &SvdOptions::default())
            .unwrap();
        let map = model.cold_start_map(&catalog).unwrap();
        assert_eq!(map.w().n_rows(), 2);
        assert_eq!(map.w().n_cols(), 6);

        // brute force V^T S F
        let s_dense = sim.matrix.to_dense();
        let f_dense = catalog.assignments().to_dense();
        let vts = model.v().transpose().matmul(&s_dense).unwrap();
        let w_oracle = vts.matmul(&f_dense).unwrap();
        assert!(map.w().max_abs_diff(&w_oracle) <= 1e-10);
    }

    #[test]
    fn cold_map_identity_when_features_equal_latents() {
        // S = I and F = V means W = V^T V = I (k x k)
        let model = fit(&table1(), None, None, 2, 1.0, &SvdOptions::default()).unwrap();
        let w = model
            .v()
            .transpose_matmul(model.v())
            .unwrap();
        assert!(w.max_abs_diff_identity() < 1e-10);
    }

    #[test]
    fn cold_item_embed_consistent_system() {
        let records: Vec<(String, String)> = vec![
            ("a".into(), "f1".into()),
            ("b".into(), "f2".into()),
            ("c".into(), "f1".into()),
            ("c".into(), "f3".into()),
            ("d".into(), "f4".into()),
            ("e".into(), "f5".into()),
        ];
        let catalog = load_features(&records).unwrap().catalog;
        let model = fit(&table1(), None, None, 2, 1.0, &SvdOptions::default()).unwrap();
        let map = model.cold_start_map(&catalog).unwrap();

        // f = W^T x is consistent, so the residual must vanish
        let x = [0.3, -0.7];
        let f = map.w().transpose_mul_vec(&x).unwrap();
        let v = map.cold_item_embed(&f).unwrap();
        let back = map.w().transpose_mul_vec(&v).unwrap();
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).abs() <= 1e-8);
        }

        let zero = vec![0.0; map.w().n_cols()];
        assert!(matches!(
            map.cold_item_embed(&zero),
            Err(Error::ColdItemNoFeatures)
        ));
    }

    #[test]
    fn cold_item_scores_basis_probe() {
        let model = fit(&table1(), None, None, 2, 1.0, &SvdOptions::default()).unwrap();
        let scores = model.cold_item_scores(&[1.0, 0.0]).unwrap();
        for u in 0..3 {
            assert!((scores[u] - model.sigma()[0] * model.u().get(u, 0)).abs() < 1e-12);
        }
        let zero = model.cold_item_scores(&[0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pure_svd_cold_identity_u_sigma_equals_rv() {
        // U sigma v == R V v for PureSVD
        let r = table1();
        let model = fit(&r, None, None, 2, 1.0, &SvdOptions::default()).unwrap();
        let v = [0.4, -1.3];
        let lhs = model.cold_item_scores(&v).unwrap();
        let vv = model.v().mul_vec(&v).unwrap();
        let rhs = r.matvec(&vv).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn container_round_trip_is_lossless() {
        let sim = toy_similarity(0.5, 0.4);
        let model = fit(&table1(), Some(&sim), None, 2, 0.5, &SvdOptions::default())
            .unwrap();
        let container = ModelContainer::new(
            &model,
            vec!["Alice".into(), "Bob".into(), "Carol".into()],
            (1..=5).map(|i| format!("Item{i}")).collect(),
            Some(42),
        );
        let json = container.to_json().unwrap();
        let restored = ModelContainer::from_json(&json).unwrap().into_model();
        assert_eq!(restored.sigma(), model.sigma());
        assert_eq!(restored.u().values(), model.u().values());
        assert_eq!(restored.v_right().values(), model.v_right().values());
        assert_eq!(restored.scaling_d(), model.scaling_d());
        assert_eq!(restored.item_alpha(), Some(0.4));
    }

    #[test]
    fn empty_interactions_rejected() {
        let empty = SparseMatrix::from_triplets(&[], 3, 5).unwrap();
        assert!(matches!(
            fit(&empty, None, None, 2, 1.0, &SvdOptions::default()),
            Err(Error::EmptyAfterFilter)
        ));
    }

    #[test]
    fn operator_matches_materialized_product() {
        let sim = toy_similarity(0.5, 0.6);
        let user_z = SparseMatrix::from_triplets(
            &[
                (0, 0, 1.0),
                (1, 1, 1.0),
                (2, 2, 1.0),
                (0, 1, 0.3),
                (1, 0, 0.3),
            ],
            3,
            3,
        )
        .unwrap();
        let user_sim = blend(&user_z, 0.5).unwrap();
        let item_factor = CholeskyFactor::new(&sim.matrix).unwrap();
        let user_factor = CholeskyFactor::new(&user_sim.matrix).unwrap();
        let r = table1();
        let op = AuxiliaryOperator::new(&r, Some(&user_factor), Some(&item_factor));
        let dense = op.materialize();
        let lanczos = truncated_svd(&op, 2, &SvdOptions::default()).unwrap();
        let oracle = dense_svd(&dense);
        for i in 0..2 {
            assert!(
                (lanczos.singular_values[i] - oracle.singular_values[i]).abs()
                    <= 1e-8 * oracle.singular_values[0]
            );
        }
    }
}
