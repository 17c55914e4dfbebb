//! Shared helpers for integration tests: seeded generators and
//! construction-independent split audits.

use hybridsvd_core::rng::SplitMix64;
use hybridsvd_core::eval::{Holdout, InteractionData, Scenario, SplitPlan};
use hybridsvd_core::SparseMatrix;

/// Random sparse matrix with entries in [-0.5, 0.5).
pub fn random_sparse(n_rows: usize, n_cols: usize, density: f64, seed: u64) -> SparseMatrix {
    let mut rng = SplitMix64::new(seed);
    let mut triplets = Vec::new();
    for i in 0..n_rows {
        for j in 0..n_cols {
            if rng.next_f64() < density {
                triplets.push((i, j, rng.next_f64() - 0.5));
            }
        }
    }
    SparseMatrix::from_triplets(&triplets, n_rows, n_cols).unwrap()
}

/// Random binary matrix with at least one entry per row.
pub fn random_binary(n_rows: usize, n_cols: usize, density: f64, seed: u64) -> SparseMatrix {
    let mut rng = SplitMix64::new(seed);
    let mut triplets = Vec::new();
    for i in 0..n_rows {
        let mut any = false;
        for j in 0..n_cols {
            if rng.next_f64() < density {
                triplets.push((i, j, 1.0));
                any = true;
            }
        }
        if !any {
            triplets.push((i, rng.next_range(n_cols), 1.0));
        }
    }
    SparseMatrix::from_triplets(&triplets, n_rows, n_cols).unwrap()
}

/// Strictly diagonally dominant blend (1 - alpha) I + alpha Z on a random
/// symmetric pattern; the same seed yields the same pattern and z values
/// for every alpha.
pub fn random_blend(n: usize, alpha: f64, density: f64, seed: u64) -> SparseMatrix {
    let mut rng = SplitMix64::new(seed);
    let mut off = Vec::new();
    let mut row_sums = vec![0.0f64; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.next_f64() < density {
                let z = rng.next_f64();
                off.push((i, j, z));
                row_sums[i] += z;
                row_sums[j] += z;
            }
        }
    }
    let worst = row_sums.iter().cloned().fold(0.0f64, f64::max);
    let scale = if worst > 0.0 { 1.0 / (1.05 * worst) } else { 1.0 };
    let mut triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
    for (i, j, z) in off {
        triplets.push((i, j, alpha * z * scale));
        triplets.push((j, i, alpha * z * scale));
    }
    SparseMatrix::from_triplets(&triplets, n, n).unwrap()
}

/// Audits a set of standard-scenario plans independently of how they were
/// built: disjoint test-user blocks covering every user exactly once, one
/// held item per test user, and held items absent from their train rows.
pub fn audit_standard_plans(data: &InteractionData, plans: &[SplitPlan]) {
    let mut tested = vec![0usize; data.n_users()];
    for plan in plans {
        assert_eq!(plan.scenario, Scenario::Standard);
        let Holdout::Standard(holdout) = &plan.holdout else {
            panic!("standard plan carries the wrong holdout kind");
        };
        let mut seen_users = std::collections::BTreeSet::new();
        for &(user, item) in holdout {
            assert!(seen_users.insert(user), "user {user} held out twice");
            tested[user] += 1;
            assert_eq!(data.matrix.get(user, item), 1.0, "held item not observed");
            assert_eq!(
                plan.train.matrix.get(user, item),
                0.0,
                "held item leaked into train"
            );
            assert_eq!(
                plan.train.user_items(user).len(),
                data.user_items(user).len() - 1,
                "more than the held item removed"
            );
        }
        for &user in &plan.skipped_users {
            tested[user] += 1;
        }
        // non-test users keep their full rows
        let in_fold: std::collections::BTreeSet<usize> = holdout
            .iter()
            .map(|&(u, _)| u)
            .chain(plan.skipped_users.iter().copied())
            .collect();
        for u in 0..data.n_users() {
            if !in_fold.contains(&u) {
                assert_eq!(plan.train.user_items(u), data.user_items(u));
            }
        }
    }
    assert!(
        tested.iter().all(|&c| c == 1),
        "users must be tested exactly once across folds"
    );
}

/// Audits cold-start plans: item blocks partition the catalog, cold items
/// are absent from train, probes actually interacted with their item, and
/// users with only cold items are gone.
pub fn audit_cold_plans(data: &InteractionData, plans: &[SplitPlan]) {
    let mut cold_count = vec![0usize; data.n_items()];
    for plan in plans {
        assert_eq!(plan.scenario, Scenario::ColdStart);
        let Holdout::ColdStart(holdout) = &plan.holdout else {
            panic!("cold plan carries the wrong holdout kind");
        };
        let warm: std::collections::BTreeSet<usize> =
            plan.data_item_of_train.iter().copied().collect();
        for i in 0..data.n_items() {
            if !warm.contains(&i) {
                cold_count[i] += 1;
            }
        }
        for &(cold, probe) in holdout {
            assert!(!warm.contains(&cold), "cold item present in train");
            let data_user = plan.data_user_of_train[probe];
            assert_eq!(
                data.matrix.get(data_user, cold),
                1.0,
                "probe user never interacted with the cold item"
            );
        }
        // every train user kept at least one warm item
        for t in 0..plan.train.n_users() {
            assert!(
                !plan.train.user_items(t).is_empty(),
                "train user {t} has an empty row"
            );
        }
        // users with only cold items are absent from train
        let kept: std::collections::BTreeSet<usize> =
            plan.data_user_of_train.iter().copied().collect();
        for u in 0..data.n_users() {
            let has_warm = data.user_items(u).iter().any(|i| warm.contains(i));
            assert_eq!(kept.contains(&u), has_warm);
        }
    }
    assert!(
        cold_count.iter().all(|&c| c == 1),
        "items must be cold in exactly one fold"
    );
}
