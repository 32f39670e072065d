//! Browser bindings for the static demo page in `www/`.
//!
//! Every exported function takes plain numbers or a JSON string and returns
//! a JSON string, so the page needs no generated glue beyond wasm-bindgen's.

use multiassoc::eval::{
    evaluate, generate_synthetic, EmbeddingRanker, NetworkRanker, QueryRanker, SynthParams,
};
use multiassoc::{
    build_network, combine_score, entity_view, filter_queries, generate_queries, rank_embedding,
    BuildParams, CandidateScope, CombinationMode, EmbeddingSet, EntityCatalog, EntityType, Error,
    Query, Vocabulary,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, PartialEq)]
pub struct ModeCurve {
    pub mode: String,
    /// `None` where the combination is degenerate for that candidate.
    pub scores: Vec<Option<f64>>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct AngleProfile {
    pub angles: Vec<f64>,
    pub curves: Vec<ModeCurve>,
}

/// Scores of a unit candidate swept around the circle against the 2-D query
/// vectors `q1` and `q2`, for every mode.
pub fn angle_profile(q1: [f64; 2], q2: [f64; 2], steps: usize) -> Result<AngleProfile, String> {
    if q1 == [0.0, 0.0] || q2 == [0.0, 0.0] {
        return Err("query vectors must be nonzero".into());
    }
    let steps = steps.clamp(4, 2048);
    let angles: Vec<f64> = (0..steps)
        .map(|i| i as f64 * std::f64::consts::TAU / steps as f64)
        .collect();
    let queries: [&[f64]; 2] = [&q1, &q2];
    let curves = CombinationMode::ALL
        .into_iter()
        .map(|mode| ModeCurve {
            mode: mode.as_str().to_string(),
            scores: angles
                .iter()
                .map(|a| combine_score(mode, &queries, &[a.cos(), a.sin()]).ok())
                .collect(),
        })
        .collect();
    Ok(AngleProfile { angles, curves })
}

#[derive(Debug, Deserialize)]
pub struct RankRequest {
    pub mode: String,
    pub query: Vec<Vec<f64>>,
    pub candidates: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct RankResponse {
    pub ranking: Vec<(String, f64)>,
    pub failure: Option<String>,
}

pub fn rank_request(req: &RankRequest) -> Result<RankResponse, String> {
    let mode: CombinationMode = req.mode.parse()?;
    let dim = req
        .query
        .first()
        .map(Vec::len)
        .ok_or("the query needs at least one vector")?;
    let query_ids: Vec<String> = (0..req.query.len()).map(|i| format!("query#{i}")).collect();
    if let Some((id, _)) = req.candidates.iter().find(|(id, _)| query_ids.contains(id)) {
        return Err(format!("candidate name {id:?} is reserved"));
    }
    let rows = query_ids
        .iter()
        .cloned()
        .zip(req.query.iter().cloned())
        .chain(req.candidates.iter().cloned());
    let set = EmbeddingSet::from_rows(dim, rows).map_err(|e| e.to_string())?;
    let mut catalog = EntityCatalog::new();
    for id in set.tokens() {
        catalog
            .insert(id.clone(), EntityType::Person, id.clone())
            .map_err(|e| e.to_string())?;
    }
    let view = entity_view(&set, &catalog, None).map_err(|e| e.to_string())?;
    // The target only matters for evaluation; any candidate will do.
    let target = req
        .candidates
        .first()
        .map(|(id, _)| id.clone())
        .unwrap_or_default();
    let query = Query::new("demo", query_ids, target, EntityType::Person);
    let ranked = rank_embedding(&query, mode, &view).map_err(|e| e.to_string())?;
    Ok(RankResponse {
        ranking: ranked.ranking,
        failure: ranked.failure.map(|f| f.to_string()),
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct PlantedSummary {
    pub queries: usize,
    pub planted_angle: f64,
    /// `(label, precision@1)`, modes in table order, then the network.
    pub precision_at_1: Vec<(String, f64)>,
}

pub fn planted_summary(seed: u64, noise_rate: f64) -> Result<PlantedSummary, Error> {
    let ds = generate_synthetic(&SynthParams {
        seed,
        noise_rate,
        ..SynthParams::default()
    })?;
    let network = build_network(&ds.corpus, &ds.catalog, BuildParams::default());
    let models: [(&str, &dyn Vocabulary); 2] = [("network", &network), ("planted", &ds.embeddings)];
    let queries = filter_queries(&generate_queries(&ds.events, &ds.catalog), &models)?.retained;
    let embedding_rankers: Vec<EmbeddingRanker<'_>> = CombinationMode::ALL
        .into_iter()
        .map(|m| {
            EmbeddingRanker::new(
                "planted",
                &ds.embeddings,
                &ds.catalog,
                m,
                CandidateScope::TargetType,
            )
        })
        .collect();
    let network_ranker =
        NetworkRanker::new("network", &network, &ds.catalog, CandidateScope::TargetType);
    let mut rankers: Vec<&dyn QueryRanker> = embedding_rankers
        .iter()
        .map(|r| r as &dyn QueryRanker)
        .collect();
    rankers.push(&network_ranker);
    let report = evaluate(&queries, &rankers, 1)?;
    Ok(PlantedSummary {
        queries: queries.len(),
        planted_angle: ds.planted_angle,
        precision_at_1: report
            .cells
            .iter()
            .map(|c| {
                (
                    c.mode.map_or("NETWORK".to_string(), |m| m.to_string()),
                    c.precision_at_1,
                )
            })
            .collect(),
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsValue> {
    value
        .and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = angleProfile)]
pub fn angle_profile_js(
    q1x: f64,
    q1y: f64,
    q2x: f64,
    q2y: f64,
    steps: usize,
) -> Result<String, JsValue> {
    to_json(angle_profile([q1x, q1y], [q2x, q2y], steps))
}

/// `request` is `{"mode": "SUM", "query": [[..], ..], "candidates": [["id", [..]], ..]}`.
#[wasm_bindgen(js_name = rankCandidates)]
pub fn rank_candidates_js(request: &str) -> Result<String, JsValue> {
    let req: RankRequest =
        serde_json::from_str(request).map_err(|e| JsValue::from_str(&e.to_string()))?;
    to_json(rank_request(&req))
}

#[wasm_bindgen(js_name = plantedRun)]
pub fn planted_run_js(seed: u32, noise_rate: f64) -> Result<String, JsValue> {
    to_json(planted_summary(u64::from(seed), noise_rate).map_err(|e| e.to_string()))
}
