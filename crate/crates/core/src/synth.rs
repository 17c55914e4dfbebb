//! Synthetic datasets with planted structure.
//!
//! Items are grouped into clusters, each cluster carrying one categorical
//! feature. Users prefer a couple of clusters and draw most interactions
//! from them. With very few interactions per user the item-level
//! co-occurrence signal is weak while the cluster feature stays fully
//! informative, which is the regime where side information should pay off.

use crate::error::Result;
use crate::eval::InteractionData;
use crate::rng::SplitMix64;
use crate::similarity::{load_features, FeatureCatalog};

#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub n_users: usize,
    pub n_clusters: usize,
    pub items_per_cluster: usize,
    /// Probability that an interaction is drawn from one of the user's
    /// preferred clusters rather than uniformly.
    pub feature_alignment: f64,
    /// Inclusive range of interactions per user.
    pub items_per_user: (usize, usize),
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_users: 200,
            n_clusters: 20,
            items_per_cluster: 12,
            feature_alignment: 0.95,
            items_per_user: (2, 3),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedData {
    pub interactions: InteractionData,
    /// Feature catalog aligned to the interaction item order.
    pub catalog: FeatureCatalog,
    pub item_cluster: Vec<usize>,
}

pub fn planted_clusters(cfg: &PlantedConfig) -> Result<PlantedData> {
    let n_items = cfg.n_clusters * cfg.items_per_cluster;
    let cluster_of = |item: usize| item / cfg.items_per_cluster;
    let mut rng = SplitMix64::new(cfg.seed ^ 0x5912_7a3e);

    let mut records = Vec::new();
    let (lo, hi) = cfg.items_per_user;
    for u in 0..cfg.n_users {
        let pref_a = rng.next_range(cfg.n_clusters);
        let pref_b = loop {
            let c = rng.next_range(cfg.n_clusters);
            if c != pref_a {
                break c;
            }
        };
        let m_u = lo + rng.next_range(hi - lo + 1);
        let mut chosen = std::collections::BTreeSet::new();
        while chosen.len() < m_u {
            let item = if rng.next_f64() < cfg.feature_alignment {
                let c = if rng.next_range(2) == 0 { pref_a } else { pref_b };
                c * cfg.items_per_cluster + rng.next_range(cfg.items_per_cluster)
            } else {
                rng.next_range(n_items)
            };
            chosen.insert(item);
        }
        for item in chosen {
            records.push((format!("u{u:05}"), format!("i{item:05}"), 1.0));
        }
    }
    let interactions = crate::eval::from_records(records, 1.0, 1, 1, "planted".into())?;

    let feature_records: Vec<(String, String)> = interactions
        .item_ids
        .iter()
        .map(|id| {
            let item: usize = id[1..].parse().expect("generated id");
            (id.clone(), format!("cluster:{:02}", cluster_of(item)))
        })
        .collect();
    let catalog = load_features(&feature_records)?
        .catalog
        .align(&interactions.item_ids)?;
    let item_cluster = interactions
        .item_ids
        .iter()
        .map(|id| cluster_of(id[1..].parse().expect("generated id")))
        .collect();
    Ok(PlantedData {
        interactions,
        catalog,
        item_cluster,
    })
}
