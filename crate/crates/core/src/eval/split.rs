//! Cross-validation splits for the standard and item-cold-start protocols.
//!
//! Standard: users are partitioned into `folds` disjoint blocks by a
//! seed-keyed shuffle. In each fold one item is withdrawn uniformly at
//! random from every test user (users with a single interaction are
//! skipped); the rest of their row stays in the training matrix.
//!
//! Cold start: items are partitioned the same way; the fold's block is
//! removed from training entirely. Users left with no warm items are
//! dropped. Every cold item is probed against one randomly chosen user
//! who interacted with it.
//!
//! Holdout draws use counter-based keys (seed, fold, entity), so a draw
//! for one entity never changes when other entities are added.

use crate::error::{Error, Result};
use crate::rng::{keyed_range, SplitMix64};
use crate::sparse::SparseMatrix;

use super::data::InteractionData;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Standard,
    ColdStart,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::Standard => write!(f, "standard"),
            Scenario::ColdStart => write!(f, "cold_start"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Holdout {
    /// (test user, held item) in the shared user/item index space.
    Standard(Vec<(usize, usize)>),
    /// (cold item in the full data item space, probe user in the train
    /// user space).
    ColdStart(Vec<(usize, usize)>),
}

#[derive(Clone, Debug)]
pub struct SplitPlan {
    pub fold_index: usize,
    pub folds: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub train: InteractionData,
    pub holdout: Holdout,
    /// Original data index of each train user (identity for standard).
    pub data_user_of_train: Vec<usize>,
    /// Original data index of each train item (identity for standard).
    pub data_item_of_train: Vec<usize>,
    /// Test users skipped because withholding would empty their row.
    pub skipped_users: Vec<usize>,
}

impl SplitPlan {
    pub fn holdout_len(&self) -> usize {
        match &self.holdout {
            Holdout::Standard(h) => h.len(),
            Holdout::ColdStart(h) => h.len(),
        }
    }
}

/// Deterministic partition of `0..n` into `folds` blocks.
fn blocks(n: usize, folds: usize, seed: u64, tag: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed ^ tag);
    rng.shuffle(&mut order);
    (0..folds)
        .map(|f| {
            let lo = f * n / folds;
            let hi = (f + 1) * n / folds;
            let mut block = order[lo..hi].to_vec();
            block.sort_unstable();
            block
        })
        .collect()
}

pub fn split(
    data: &InteractionData,
    scenario: Scenario,
    fold: usize,
    seed: u64,
) -> Result<SplitPlan> {
    split_with_folds(data, scenario, fold, seed, DEFAULT_FOLDS)
}

pub fn split_with_folds(
    data: &InteractionData,
    scenario: Scenario,
    fold: usize,
    seed: u64,
    folds: usize,
) -> Result<SplitPlan> {
    if fold >= folds {
        return Err(Error::FoldOutOfRange { fold, folds });
    }
    match scenario {
        Scenario::Standard => standard_split(data, fold, seed, folds),
        Scenario::ColdStart => cold_split(data, fold, seed, folds),
    }
}

fn standard_split(
    data: &InteractionData,
    fold: usize,
    seed: u64,
    folds: usize,
) -> Result<SplitPlan> {
    let test_users = &blocks(data.n_users(), folds, seed, 0x5eed_u64)[fold];
    let mut holdout = Vec::new();
    let mut skipped = Vec::new();
    let mut held = std::collections::BTreeSet::new();
    for &user in test_users {
        let items = data.user_items(user);
        if items.len() < 2 {
            skipped.push(user);
            continue;
        }
        let pick = keyed_range(&[seed, fold as u64, user as u64], items.len());
        let item = items[pick];
        holdout.push((user, item));
        held.insert((user, item));
    }

    let triplets: Vec<(usize, usize, f64)> = data
        .matrix
        .to_triplets()
        .into_iter()
        .filter(|&(u, i, _)| !held.contains(&(u, i)))
        .collect();
    let matrix = SparseMatrix::from_triplets(&triplets, data.n_users(), data.n_items())?;
    let train = InteractionData {
        user_ids: data.user_ids.clone(),
        item_ids: data.item_ids.clone(),
        matrix,
        provenance: data.provenance.clone(),
    };
    Ok(SplitPlan {
        fold_index: fold,
        folds,
        seed,
        scenario: Scenario::Standard,
        train,
        holdout: Holdout::Standard(holdout),
        data_user_of_train: (0..data.n_users()).collect(),
        data_item_of_train: (0..data.n_items()).collect(),
        skipped_users: skipped,
    })
}

fn cold_split(data: &InteractionData, fold: usize, seed: u64, folds: usize) -> Result<SplitPlan> {
    let cold_items = &blocks(data.n_items(), folds, seed, 0xc01d_u64)[fold];
    let is_cold: Vec<bool> = {
        let mut mask = vec![false; data.n_items()];
        for &i in cold_items {
            mask[i] = true;
        }
        mask
    };

    let data_item_of_train: Vec<usize> =
        (0..data.n_items()).filter(|&i| !is_cold[i]).collect();
    let mut train_item_of_data = vec![usize::MAX; data.n_items()];
    for (t, &i) in data_item_of_train.iter().enumerate() {
        train_item_of_data[i] = t;
    }

    // users keeping at least one warm item
    let data_user_of_train: Vec<usize> = (0..data.n_users())
        .filter(|&u| data.user_items(u).iter().any(|&i| !is_cold[i]))
        .collect();
    let mut train_user_of_data = vec![usize::MAX; data.n_users()];
    for (t, &u) in data_user_of_train.iter().enumerate() {
        train_user_of_data[u] = t;
    }

    let mut triplets = Vec::new();
    for (t, &u) in data_user_of_train.iter().enumerate() {
        for &i in data.user_items(u) {
            if !is_cold[i] {
                triplets.push((t, train_item_of_data[i], 1.0));
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(
        &triplets,
        data_user_of_train.len(),
        data_item_of_train.len(),
    )?;
    let train = InteractionData {
        user_ids: data_user_of_train
            .iter()
            .map(|&u| data.user_ids[u].clone())
            .collect(),
        item_ids: data_item_of_train
            .iter()
            .map(|&i| data.item_ids[i].clone())
            .collect(),
        matrix,
        provenance: data.provenance.clone(),
    };

    // probe user per cold item, drawn among its interactors still in train
    let item_users = data.matrix.transpose();
    let mut holdout = Vec::new();
    for &cold in cold_items {
        let (users, _) = item_users.row(cold);
        let eligible: Vec<usize> = users
            .iter()
            .map(|&u| train_user_of_data[u])
            .filter(|&t| t != usize::MAX)
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let pick = keyed_range(&[seed, fold as u64, cold as u64], eligible.len());
        holdout.push((cold, eligible[pick]));
    }

    Ok(SplitPlan {
        fold_index: fold,
        folds,
        seed,
        scenario: Scenario::ColdStart,
        train,
        holdout: Holdout::ColdStart(holdout),
        data_user_of_train,
        data_item_of_train,
        skipped_users: Vec::new(),
    })
}
