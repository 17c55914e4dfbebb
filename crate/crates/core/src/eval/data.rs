//! Interaction data ingestion: CSV parsing, rating binarization, and
//! iterative k-core filtering.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub source: String,
    pub threshold: f64,
}

/// Binary user-item interactions with label arrays mapping matrix indices
/// back to external ids.
#[derive(Clone, Debug)]
pub struct InteractionData {
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub matrix: SparseMatrix,
    pub provenance: Provenance,
}

impl InteractionData {
    pub fn n_users(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_items(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// Dense preference row for one user.
    pub fn user_row(&self, user: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.n_items()];
        let (cols, vals) = self.matrix.row(user);
        for (&c, &v) in cols.iter().zip(vals) {
            p[c] = v;
        }
        p
    }

    /// Item indices of one user's interactions.
    pub fn user_items(&self, user: usize) -> &[usize] {
        self.matrix.row(user).0
    }
}

/// Loads `user_id,item_id,rating[,timestamp]` CSV (header required).
/// Ratings below the threshold are dropped, the rest become 1. Users and
/// items are then filtered to the (min_user, min_item) core iteratively
/// until stable.
pub fn load_interactions(
    path: &Path,
    threshold: f64,
    min_user: usize,
    min_item: usize,
) -> Result<InteractionData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let mut records = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record?;
        if record.len() < 3 {
            return Err(Error::MalformedRow {
                line,
                reason: "expected user_id,item_id,rating[,timestamp]".into(),
            });
        }
        let rating: f64 = record[2].trim().parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("rating `{}` is not a number", &record[2]),
        })?;
        records.push((record[0].to_string(), record[1].to_string(), rating));
    }
    from_records(
        records,
        threshold,
        min_user,
        min_item,
        path.display().to_string(),
    )
}

/// Same pipeline over in-memory records; used by the synthetic generators
/// and tests.
pub fn from_records(
    records: Vec<(String, String, f64)>,
    threshold: f64,
    min_user: usize,
    min_item: usize,
    source: String,
) -> Result<InteractionData> {
    // binarize and dedupe
    let mut pairs: std::collections::BTreeSet<(String, String)> = std::collections::BTreeSet::new();
    for (user, item, rating) in records {
        if rating >= threshold {
            pairs.insert((user, item));
        }
    }

    // iterative k-core
    loop {
        let mut user_counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut item_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (u, i) in &pairs {
            *user_counts.entry(u).or_default() += 1;
            *item_counts.entry(i).or_default() += 1;
        }
        let before = pairs.len();
        let kept: std::collections::BTreeSet<(String, String)> = pairs
            .iter()
            .filter(|(u, i)| {
                user_counts[u.as_str()] >= min_user && item_counts[i.as_str()] >= min_item
            })
            .cloned()
            .collect();
        let stable = kept.len() == before;
        pairs = kept;
        if stable {
            break;
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }

    // index users and items in first-appearance (sorted) order
    let mut user_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut item_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut triplets = Vec::with_capacity(pairs.len());
    for (u, i) in &pairs {
        let ui = *user_index.entry(u).or_insert_with(|| {
            user_ids.push(u.clone());
            user_ids.len() - 1
        });
        let ii = *item_index.entry(i).or_insert_with(|| {
            item_ids.push(i.clone());
            item_ids.len() - 1
        });
        triplets.push((ui, ii, 1.0));
    }
    let matrix = SparseMatrix::from_triplets(&triplets, user_ids.len(), item_ids.len())?;
    Ok(InteractionData {
        user_ids,
        item_ids,
        matrix,
        provenance: Provenance { source, threshold },
    })
}
