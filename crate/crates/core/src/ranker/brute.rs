//! Literal evaluation of the ranking formulas, used as a test oracle for
//! [`rank_embedding`](super::rank_embedding). Shares no arithmetic with the
//! fast path: every candidate score is recomputed from raw vectors.

use super::{CombinationMode, RankFailure, RankedResult};
use crate::corpus::Query;
use crate::embedding::EntityVectorView;
use crate::error::{Error, Result};

fn literal_cosdist(u: &[f64], v: &[f64]) -> Option<f64> {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for i in 0..u.len() {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    let denom = uu.sqrt() * vv.sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let d = 1.0 - uv / denom;
    Some(d.clamp(0.0, 2.0))
}

fn literal_combination(mode: CombinationMode, qs: &[Vec<f64>]) -> Vec<f64> {
    let dim = qs[0].len();
    let mut out = vec![0.0; dim];
    for (i, slot) in out.iter_mut().enumerate() {
        let column = qs.iter().map(|q| q[i]);
        *slot = match mode {
            CombinationMode::Avg => column.sum::<f64>() / qs.len() as f64,
            CombinationMode::CwMin => column.fold(f64::INFINITY, f64::min),
            CombinationMode::CwMax => column.fold(f64::NEG_INFINITY, f64::max),
            CombinationMode::CwMult => column.product(),
            CombinationMode::Sum | CombinationMode::MinMax => unreachable!("per-query modes"),
        };
    }
    out
}

fn literal_score(mode: CombinationMode, qs: &[Vec<f64>], candidate: &[f64]) -> Option<f64> {
    match mode {
        CombinationMode::Sum => {
            let mut total = 0.0;
            for q in qs {
                total += literal_cosdist(q, candidate)?;
            }
            Some(total)
        }
        CombinationMode::MinMax => {
            let mut worst = f64::NEG_INFINITY;
            for q in qs {
                worst = worst.max(literal_cosdist(q, candidate)?);
            }
            Some(worst)
        }
        _ => literal_cosdist(&literal_combination(mode, qs), candidate),
    }
}

pub fn brute_force_rank(
    query: &Query,
    mode: CombinationMode,
    view: &EntityVectorView<'_>,
) -> Result<RankedResult> {
    if view.is_empty() {
        return Err(Error::NoCandidates);
    }
    let set = view.embeddings();
    let mut qs = Vec::new();
    let mut dropped = Vec::new();
    for e in &query.query_entities {
        match set.vector(e) {
            Some(v) => qs.push(v.to_vec()),
            None => dropped.push(e.clone()),
        }
    }
    let fail = |failure| RankedResult {
        query: query.clone(),
        ranking: Vec::new(),
        failure: Some(failure),
        dropped_query_entities: dropped.clone(),
    };
    if qs.is_empty() {
        return Ok(fail(RankFailure::QueryOutOfVocabulary));
    }
    if !matches!(mode, CombinationMode::Sum | CombinationMode::MinMax) {
        let combined = literal_combination(mode, &qs);
        let sq: f64 = combined.iter().map(|x| x * x).sum();
        if sq.sqrt() == 0.0 || !sq.is_finite() {
            return Ok(fail(RankFailure::DegenerateCombination));
        }
    }
    let mut ranking = Vec::new();
    for (id, v) in view.iter() {
        if query.query_entities.iter().any(|q| q == id) {
            continue;
        }
        let score = literal_score(mode, &qs, v).ok_or(Error::ZeroNorm)?;
        ranking.push((id.to_string(), score));
    }
    if ranking.is_empty() {
        return Ok(fail(RankFailure::NoCandidates));
    }
    // insertion sort on (score, id), independent of the fast path's sort
    for i in 1..ranking.len() {
        let mut j = i;
        while j > 0 && {
            let (a, b) = (&ranking[j - 1], &ranking[j]);
            a.1 > b.1 || (a.1 == b.1 && a.0 > b.0)
        } {
            ranking.swap(j - 1, j);
            j -= 1;
        }
    }
    Ok(RankedResult {
        query: query.clone(),
        ranking,
        failure: None,
        dropped_query_entities: dropped,
    })
}
