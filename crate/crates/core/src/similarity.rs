//! Side-similarity construction from categorical features.
//!
//! Features arrive as (entity, label) records, get one-hot encoded into a
//! sparse binary matrix F, and turn into a similarity through the scaled
//! Common Neighbors count Z = F F^T / m followed by the blend
//! S = (1 - alpha) I + alpha Z. The blend is the only knob: alpha = 0
//! recovers the identity (and the model built on it degenerates to plain
//! truncated SVD of the interactions).

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::mix_key;
use crate::sparse::SparseMatrix;

/// Off-diagonal similarities below this are dropped after scaling to keep
/// Cholesky fill bounded.
const SPARSIFY_TOL: f64 = 1e-9;

/// One-hot feature assignments for a set of entities.
#[derive(Clone, Debug)]
pub struct FeatureCatalog {
    assignments: SparseMatrix,
    feature_names: Vec<String>,
    entity_ids: Vec<String>,
}

/// Result of loading feature records: the catalog plus entities that ended
/// up with no usable features (blank labels only).
#[derive(Clone, Debug)]
pub struct FeatureLoad {
    pub catalog: FeatureCatalog,
    pub rejects: Vec<String>,
}

/// Builds a catalog from (entity, feature label) records. Entities and
/// features are indexed in first-appearance order; duplicate pairs collapse
/// to a single assignment. Entities whose labels are all blank are listed
/// in the rejects report instead of the catalog.
pub fn load_features(records: &[(String, String)]) -> Result<FeatureLoad> {
    if records.is_empty() {
        return Err(Error::EmptyFeatures);
    }
    let mut entity_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut entity_order: Vec<&str> = Vec::new();
    let mut feature_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut feature_order: Vec<&str> = Vec::new();
    let mut pairs: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
    let mut has_feature: Vec<bool> = Vec::new();

    for (entity, label) in records {
        let e = *entity_index.entry(entity).or_insert_with(|| {
            entity_order.push(entity);
            has_feature.push(false);
            entity_order.len() - 1
        });
        if label.trim().is_empty() {
            continue;
        }
        let f = *feature_index.entry(label).or_insert_with(|| {
            feature_order.push(label);
            feature_order.len() - 1
        });
        has_feature[e] = true;
        // duplicate (entity, feature) pairs collapse to a single assignment
        pairs.insert((e, f));
    }

    let rejects: Vec<String> = entity_order
        .iter()
        .zip(&has_feature)
        .filter(|(_, ok)| !**ok)
        .map(|(e, _)| e.to_string())
        .collect();
    let kept: Vec<usize> = has_feature
        .iter()
        .enumerate()
        .filter(|(_, ok)| **ok)
        .map(|(i, _)| i)
        .collect();
    let mut remap = vec![usize::MAX; entity_order.len()];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }

    let triplets: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|(e, f)| (remap[e], f, 1.0))
        .collect();
    let assignments =
        SparseMatrix::from_triplets(&triplets, kept.len(), feature_order.len())?;
    Ok(FeatureLoad {
        catalog: FeatureCatalog {
            assignments,
            feature_names: feature_order.iter().map(|s| s.to_string()).collect(),
            entity_ids: kept
                .iter()
                .map(|&i| entity_order[i].to_string())
                .collect(),
        },
        rejects,
    })
}

/// Reads `entity_id,feature_label` records from a CSV file with a header.
pub fn read_feature_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::MalformedRow {
                line: idx + 2,
                reason: "expected entity_id,feature_label".into(),
            });
        }
        out.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(out)
}

impl FeatureCatalog {
    pub fn n_entities(&self) -> usize {
        self.assignments.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.assignments.n_cols()
    }

    /// Binary assignment matrix F (entities x features).
    pub fn assignments(&self) -> &SparseMatrix {
        &self.assignments
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn entity_ids(&self) -> &[String] {
        &self.entity_ids
    }

    pub fn feature_index(&self, label: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == label)
    }

    /// Reorders rows to match the given entity universe. Entities missing
    /// from the catalog make this fail with the full list, mirroring the
    /// pipeline rule that interactions and features must agree exactly.
    pub fn align(&self, entity_ids: &[String]) -> Result<FeatureCatalog> {
        let index: BTreeMap<&str, usize> = self
            .entity_ids
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();
        let missing: Vec<String> = entity_ids
            .iter()
            .filter(|e| !index.contains_key(e.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingFeatures { missing });
        }
        let rows: Vec<usize> = entity_ids.iter().map(|e| index[e.as_str()]).collect();
        Ok(self.restrict_rows(&rows))
    }

    /// Catalog over a subset of entities (rows), keeping the feature space.
    pub fn restrict_rows(&self, rows: &[usize]) -> FeatureCatalog {
        let mut triplets = Vec::new();
        for (new_row, &old_row) in rows.iter().enumerate() {
            let (cols, vals) = self.assignments.row(old_row);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((new_row, c, v));
            }
        }
        FeatureCatalog {
            assignments: SparseMatrix::from_triplets(
                &triplets,
                rows.len(),
                self.assignments.n_cols(),
            )
            .expect("restricted rows in range"),
            feature_names: self.feature_names.clone(),
            entity_ids: rows.iter().map(|&r| self.entity_ids[r].clone()).collect(),
        }
    }

    /// Indicator vector over the feature space for a set of labels; unknown
    /// labels are returned separately.
    pub fn feature_vector(&self, labels: &[String]) -> (Vec<f64>, Vec<String>) {
        let mut f = vec![0.0; self.n_features()];
        let mut unknown = Vec::new();
        for label in labels {
            match self.feature_index(label) {
                Some(idx) => f[idx] = 1.0,
                None => unknown.push(label.clone()),
            }
        }
        (f, unknown)
    }

    /// Feature indicator row for one entity.
    pub fn entity_features(&self, entity: usize) -> Vec<f64> {
        let mut f = vec![0.0; self.n_features()];
        let (cols, vals) = self.assignments.row(entity);
        for (&c, &v) in cols.iter().zip(vals) {
            f[c] = v;
        }
        f
    }

    /// Order-sensitive content hash for provenance records.
    pub fn content_hash(&self) -> u64 {
        let mut parts: Vec<u64> = Vec::new();
        for (i, j, v) in self.assignments.to_triplets() {
            parts.push(i as u64);
            parts.push(j as u64);
            parts.push(v.to_bits());
        }
        for name in &self.feature_names {
            parts.push(mix_key(&name.bytes().map(u64::from).collect::<Vec<_>>()));
        }
        for id in &self.entity_ids {
            parts.push(mix_key(&id.bytes().map(u64::from).collect::<Vec<_>>()));
        }
        mix_key(&parts)
    }
}

/// Scaled Common Neighbors similarity: Z = F F^T / m with m the largest
/// element of F F^T, then the diagonal forced to one. Off-diagonal entries
/// land in [0, 1]; values below the sparsification threshold are dropped.
pub fn common_neighbors(catalog: &FeatureCatalog) -> Result<SparseMatrix> {
    Ok(common_neighbors_scaled(catalog)?.0)
}

/// Same as [`common_neighbors`] but also returns the normalization m.
pub fn common_neighbors_scaled(catalog: &FeatureCatalog) -> Result<(SparseMatrix, f64)> {
    let f = catalog.assignments();
    let n = f.n_rows();
    if f.nnz() == 0 {
        return Err(Error::EmptyFeatures);
    }

    // entity lists per feature (columns of F)
    let ft = f.transpose();

    // row-wise Gram accumulation of F F^T
    let mut scratch = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut gram_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut m = 0.0f64;
    for i in 0..n {
        let (feats, fvals) = f.row(i);
        for (&feat, &fv) in feats.iter().zip(fvals) {
            let (entities, evals) = ft.row(feat);
            for (&e, &ev) in entities.iter().zip(evals) {
                if scratch[e] == 0.0 {
                    touched.push(e);
                }
                scratch[e] += fv * ev;
            }
        }
        touched.sort_unstable();
        let mut row = Vec::with_capacity(touched.len());
        for &e in &touched {
            let g = scratch[e];
            scratch[e] = 0.0;
            m = m.max(g);
            row.push((e, g));
        }
        touched.clear();
        gram_rows.push(row);
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        triplets.push((i, i, 1.0));
    }
    for (i, row) in gram_rows.into_iter().enumerate() {
        for (j, g) in row {
            if j == i {
                continue;
            }
            let z = g / m;
            if z >= SPARSIFY_TOL {
                triplets.push((i, j, z));
            }
        }
    }
    Ok((SparseMatrix::from_triplets(&triplets, n, n)?, m))
}

/// Blended symmetric positive (semi-)definite side similarity.
#[derive(Clone, Debug)]
pub struct SideSimilarity {
    pub matrix: SparseMatrix,
    pub alpha: f64,
    /// Normalization constant m from the Common Neighbors scaling; 1 when
    /// the underlying Z was supplied directly.
    pub z_norm: f64,
}

/// S = (1 - alpha) I + alpha Z. Z must be symmetric with a unit diagonal.
/// alpha = 0 produces the exact identity matrix.
pub fn blend(z: &SparseMatrix, alpha: f64) -> Result<SideSimilarity> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let n = z.n_rows();
    if z.n_cols() != n {
        return Err(Error::DimensionMismatch {
            context: "blend",
            expected: n,
            got: z.n_cols(),
        });
    }
    let asym = z.max_asymmetry();
    if asym > 1e-12 {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
            tol: 1e-12,
        });
    }
    for i in 0..n {
        if (z.get(i, i) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSimilarity(format!(
                "Z must have a unit diagonal, found {} at ({i}, {i})",
                z.get(i, i)
            )));
        }
    }
    if alpha == 0.0 {
        return Ok(SideSimilarity {
            matrix: SparseMatrix::identity(n),
            alpha,
            z_norm: 1.0,
        });
    }
    let mut triplets = Vec::with_capacity(z.nnz());
    for (i, j, v) in z.to_triplets() {
        if i == j {
            triplets.push((i, j, 1.0));
        } else {
            triplets.push((i, j, alpha * v));
        }
    }
    Ok(SideSimilarity {
        matrix: SparseMatrix::from_triplets(&triplets, n, n)?,
        alpha,
        z_norm: 1.0,
    })
}

/// Full pipeline: one-hot catalog -> scaled Common Neighbors -> blend.
pub fn side_similarity(catalog: &FeatureCatalog, alpha: f64) -> Result<SideSimilarity> {
    let (z, m) = common_neighbors_scaled(catalog)?;
    let mut s = blend(&z, alpha)?;
    s.z_norm = m;
    Ok(s)
}

/// Diagnostic verdict from the diagonal-dominance screen. Dominance is
/// sufficient but not necessary for positive definiteness, so a warning is
/// not fatal; the Cholesky pivot check is the final arbiter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Definiteness {
    /// Strictly diagonally dominant with the given worst-row margin.
    Ok { margin: f64 },
    /// Dominance violated by the given amount; Cholesky may still succeed.
    Warn { margin: f64 },
    /// A non-positive diagonal entry: definitely not positive definite.
    Fail { row: usize },
}

pub fn definiteness_guard(s: &SideSimilarity) -> Definiteness {
    let m = &s.matrix;
    let mut margin = f64::INFINITY;
    for i in 0..m.n_rows() {
        let (cols, vals) = m.row(i);
        let mut diag = 0.0;
        let mut off = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            if c == i {
                diag = v;
            } else {
                off += v.abs();
            }
        }
        if diag <= 0.0 {
            return Definiteness::Fail { row: i };
        }
        margin = margin.min(diag - off);
    }
    if margin > 0.0 {
        Definiteness::Ok { margin }
    } else {
        Definiteness::Warn { margin }
    }
}
