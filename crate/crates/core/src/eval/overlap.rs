//! How closely embedding neighborhoods agree with network neighborhoods.
//!
//! For a seeded sample of entities per type, the top network neighbors act
//! as a pseudo ground truth; each embedding ranks its whole entity
//! vocabulary by distance to the sampled entity and is scored by recall@k
//! against that set.

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EntityCatalog, EntityType};
use crate::embedding::{dot, norm, EmbeddingSet};
use crate::error::Result;
use crate::network::{top_neighbors, CooccurrenceNetwork};
use crate::ranker::sort_ranking;

pub const DEFAULT_PER_TYPE_SAMPLE: usize = 25;
pub const DEFAULT_GT_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapCurve {
    pub method: String,
    /// `mean_recall[i]` is the mean recall at rank `i + 1`.
    pub mean_recall: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverlapStudy {
    pub sampled_entities: Vec<String>,
    pub curves: Vec<OverlapCurve>,
    pub warnings: Vec<String>,
}

/// Recall of `ranking` against `ground_truth` at ranks `1..=k_max`.
pub fn recall_curve<S: AsRef<str>>(
    ranking: &[S],
    ground_truth: &[String],
    k_max: usize,
) -> Vec<f64> {
    if ground_truth.is_empty() {
        return vec![0.0; k_max];
    }
    let gt: HashSet<&str> = ground_truth.iter().map(String::as_str).collect();
    let denom = gt.len() as f64;
    let mut hits = 0usize;
    (0..k_max)
        .map(|i| {
            if ranking.get(i).is_some_and(|id| gt.contains(id.as_ref())) {
                hits += 1;
            }
            hits as f64 / denom
        })
        .collect()
}

/// The `n` candidates nearest to `entity` by cosine distance, ties by ID.
/// Candidates without a vector are skipped; empty when `entity` has none.
pub fn embedding_neighbors<'a>(
    embeddings: &EmbeddingSet,
    candidates: impl IntoIterator<Item = &'a str>,
    entity: &str,
    n: usize,
) -> Vec<(String, f64)> {
    let Some(anchor) = embeddings.vector(entity) else {
        return Vec::new();
    };
    let anchor_norm = norm(anchor);
    let mut ranking: Vec<(String, f64)> = candidates
        .into_iter()
        .filter(|id| *id != entity)
        .filter_map(|id| embeddings.vector(id).map(|v| (id, v)))
        .map(|(id, v)| {
            let cos = dot(anchor, v) / (anchor_norm * norm(v));
            (id.to_string(), (1.0 - cos).clamp(0.0, 2.0))
        })
        .collect();
    sort_ranking(&mut ranking);
    ranking.truncate(n);
    ranking
}

pub fn overlap_study(
    network: &CooccurrenceNetwork,
    embeddings: &[(&str, &EmbeddingSet)],
    catalog: &EntityCatalog,
    per_type_sample: usize,
    gt_size: usize,
    seed: u64,
) -> Result<OverlapStudy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut study = OverlapStudy::default();
    for t in EntityType::ALL {
        let pool: Vec<&str> = catalog
            .ids(Some(t))
            .filter(|id| network.contains(id))
            .collect();
        if pool.len() < per_type_sample {
            study.warnings.push(format!(
                "only {} {t} entities in the network, fewer than the requested {per_type_sample}; using all",
                pool.len()
            ));
            study
                .sampled_entities
                .extend(pool.iter().map(|s| s.to_string()));
        } else {
            let mut picked = index::sample(&mut rng, pool.len(), per_type_sample).into_vec();
            picked.sort_unstable();
            study
                .sampled_entities
                .extend(picked.into_iter().map(|i| pool[i].to_string()));
        }
    }
    if study.sampled_entities.is_empty() {
        return Ok(study);
    }
    let ground_truths: Vec<Vec<String>> = study
        .sampled_entities
        .iter()
        .map(|e| {
            top_neighbors(network, e, gt_size)
                .map(|nl| nl.neighbors.into_iter().map(|(id, _)| id).collect())
        })
        .collect::<Result<_>>()?;
    let m = study.sampled_entities.len() as f64;
    for (method, set) in embeddings {
        let mut mean = vec![0.0; gt_size];
        for (e, gt) in study.sampled_entities.iter().zip(&ground_truths) {
            let ranked: Vec<String> = embedding_neighbors(set, catalog.ids(None), e, gt_size)
                .into_iter()
                .map(|(id, _)| id)
                .collect();
            for (acc, r) in mean.iter_mut().zip(recall_curve(&ranked, gt, gt_size)) {
                *acc += r / m;
            }
        }
        study.curves.push(OverlapCurve {
            method: method.to_string(),
            mean_recall: mean,
        });
    }
    Ok(study)
}
