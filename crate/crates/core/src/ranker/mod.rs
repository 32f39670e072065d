//! Multi-entity query ranking.
//!
//! Six combination modes turn a set of query vectors into a distance-like
//! score for each candidate (lower is better):
//!
//! | mode   | score                                         |
//! |--------|-----------------------------------------------|
//! | SUM    | Σ_q cosdist(q, c)                             |
//! | MINMAX | max_q cosdist(q, c)                           |
//! | AVG    | cosdist(mean of q, c)                         |
//! | CWMIN  | cosdist(component-wise min of q, c)           |
//! | CWMAX  | cosdist(component-wise max of q, c)           |
//! | CWMULT | cosdist(component-wise product of q, c)       |
//!
//! The network adapter ranks by summed edge weight to the query entities.
//! Rankings are sorted by ascending score, ties by entity ID.

mod brute;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus::{EntityCatalog, EntityType, Query};
use crate::embedding::{distance_from_cosine, dot, norm, EntityVectorView};
use crate::error::{Error, Result};
use crate::network::CooccurrenceNetwork;

pub use brute::brute_force_rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CombinationMode {
    Sum,
    Avg,
    MinMax,
    CwMin,
    CwMax,
    CwMult,
}

impl CombinationMode {
    /// In the order the report table lists them.
    pub const ALL: [CombinationMode; 6] = [
        CombinationMode::Sum,
        CombinationMode::Avg,
        CombinationMode::MinMax,
        CombinationMode::CwMax,
        CombinationMode::CwMin,
        CombinationMode::CwMult,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CombinationMode::Sum => "SUM",
            CombinationMode::Avg => "AVG",
            CombinationMode::MinMax => "MINMAX",
            CombinationMode::CwMin => "CWMIN",
            CombinationMode::CwMax => "CWMAX",
            CombinationMode::CwMult => "CWMULT",
        }
    }
}

impl fmt::Display for CombinationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombinationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CombinationMode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown combination mode {s:?}"))
    }
}

/// Why a query produced no ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RankFailure {
    QueryOutOfVocabulary,
    QueryNotInNetwork,
    DegenerateCombination,
    NoCandidates,
}

impl RankFailure {
    pub fn as_str(self) -> &'static str {
        match self {
            RankFailure::QueryOutOfVocabulary => "query out of vocabulary",
            RankFailure::QueryNotInNetwork => "query not in network",
            RankFailure::DegenerateCombination => "degenerate combination",
            RankFailure::NoCandidates => "no candidates",
        }
    }
}

impl fmt::Display for RankFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub query: Query,
    /// `(entity_id, score)`, ascending by score then ID.
    pub ranking: Vec<(String, f64)>,
    /// Set exactly when `ranking` is empty.
    pub failure: Option<RankFailure>,
    /// Query entities that had no representation and were left out.
    pub dropped_query_entities: Vec<String>,
}

impl RankedResult {
    fn failed(query: &Query, failure: RankFailure, dropped: Vec<String>) -> Self {
        Self {
            query: query.clone(),
            ranking: Vec::new(),
            failure: Some(failure),
            dropped_query_entities: dropped,
        }
    }

    pub fn top(&self) -> Option<&str> {
        self.ranking.first().map(|(id, _)| id.as_str())
    }
}

pub(crate) fn sort_ranking(ranking: &mut [(String, f64)]) {
    ranking.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
}

/// Query vectors reduced to what scoring a candidate needs.
enum Prepared {
    /// Unit-length query vectors; SUM and MINMAX.
    PerQuery {
        mode: CombinationMode,
        units: Vec<Vec<f64>>,
    },
    /// One unit-length combined vector; AVG and the component-wise modes.
    Combined(Vec<f64>),
}

impl Prepared {
    fn new(mode: CombinationMode, query_vectors: &[&[f64]]) -> Result<Self> {
        let Some(first) = query_vectors.first() else {
            return Err(Error::EmptyQuery);
        };
        let dim = first.len();
        if let Some(bad) = query_vectors.iter().find(|q| q.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let unit = |v: Vec<f64>, err: Error| -> Result<Vec<f64>> {
            let n = norm(&v);
            if n == 0.0 || !n.is_finite() {
                return Err(err);
            }
            Ok(v.into_iter().map(|x| x / n).collect())
        };
        let fold = |f: fn(f64, f64) -> f64| -> Vec<f64> {
            let mut acc = first.to_vec();
            for q in &query_vectors[1..] {
                acc.iter_mut()
                    .zip(q.iter())
                    .for_each(|(a, &b)| *a = f(*a, b));
            }
            acc
        };
        Ok(match mode {
            CombinationMode::Sum | CombinationMode::MinMax => Prepared::PerQuery {
                mode,
                units: query_vectors
                    .iter()
                    .map(|q| unit(q.to_vec(), Error::ZeroNorm))
                    .collect::<Result<_>>()?,
            },
            CombinationMode::Avg => {
                let k = query_vectors.len() as f64;
                let mean = fold(|a, b| a + b).into_iter().map(|x| x / k).collect();
                Prepared::Combined(unit(mean, Error::DegenerateCombination)?)
            }
            CombinationMode::CwMin => {
                Prepared::Combined(unit(fold(f64::min), Error::DegenerateCombination)?)
            }
            CombinationMode::CwMax => {
                Prepared::Combined(unit(fold(f64::max), Error::DegenerateCombination)?)
            }
            CombinationMode::CwMult => {
                Prepared::Combined(unit(fold(|a, b| a * b), Error::DegenerateCombination)?)
            }
        })
    }

    fn dim(&self) -> usize {
        match self {
            Prepared::PerQuery { units, .. } => units[0].len(),
            Prepared::Combined(v) => v.len(),
        }
    }

    /// `candidate_norm` must be the candidate's nonzero Euclidean norm.
    fn score(&self, candidate: &[f64], candidate_norm: f64) -> f64 {
        let dist = |u: &[f64]| distance_from_cosine(dot(u, candidate) / candidate_norm);
        match self {
            Prepared::PerQuery {
                mode: CombinationMode::MinMax,
                units,
            } => units
                .iter()
                .map(|u| dist(u))
                .fold(f64::NEG_INFINITY, f64::max),
            Prepared::PerQuery { units, .. } => units.iter().map(|u| dist(u)).sum(),
            Prepared::Combined(u) => dist(u),
        }
    }
}

/// Score of one candidate against a set of query vectors under `mode`.
pub fn combine_score(
    mode: CombinationMode,
    query_vectors: &[&[f64]],
    candidate: &[f64],
) -> Result<f64> {
    let prepared = Prepared::new(mode, query_vectors)?;
    if candidate.len() != prepared.dim() {
        return Err(Error::DimensionMismatch {
            expected: prepared.dim(),
            found: candidate.len(),
        });
    }
    let n = norm(candidate);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(prepared.score(candidate, n))
}

/// Ranks every candidate in `view` (minus the query entities) against the
/// query. Query entities without a vector are dropped and recorded.
pub fn rank_embedding(
    query: &Query,
    mode: CombinationMode,
    view: &EntityVectorView<'_>,
) -> Result<RankedResult> {
    if view.is_empty() {
        return Err(Error::NoCandidates);
    }
    let set = view.embeddings();
    let mut vectors = Vec::with_capacity(query.query_entities.len());
    let mut dropped = Vec::new();
    for e in &query.query_entities {
        match set.vector(e) {
            Some(v) => vectors.push(v),
            None => dropped.push(e.clone()),
        }
    }
    if vectors.is_empty() {
        return Ok(RankedResult::failed(
            query,
            RankFailure::QueryOutOfVocabulary,
            dropped,
        ));
    }
    let prepared = match Prepared::new(mode, &vectors) {
        Ok(p) => p,
        Err(Error::DegenerateCombination) => {
            return Ok(RankedResult::failed(
                query,
                RankFailure::DegenerateCombination,
                dropped,
            ))
        }
        Err(e) => return Err(e),
    };
    let mut ranking: Vec<(String, f64)> = view
        .iter()
        .filter(|(id, _)| !query.query_entities.iter().any(|q| q == id))
        .map(|(id, v)| (id.to_string(), prepared.score(v, norm(v))))
        .collect();
    if ranking.is_empty() {
        return Ok(RankedResult::failed(
            query,
            RankFailure::NoCandidates,
            dropped,
        ));
    }
    sort_ranking(&mut ranking);
    Ok(RankedResult {
        query: query.clone(),
        ranking,
        failure: None,
        dropped_query_entities: dropped,
    })
}

/// Which catalog entities a ranker may return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateScope {
    /// Only entities of the query's target type.
    #[default]
    TargetType,
    All,
}

impl CandidateScope {
    pub fn filter_for(self, query: &Query) -> Option<EntityType> {
        match self {
            CandidateScope::TargetType => Some(query.target_type),
            CandidateScope::All => None,
        }
    }
}

/// Ranks network nodes by the sum of their edge weights to the query
/// entities, heaviest first. Scores are stored negated so the ranking is
/// ascending like the embedding rankers; unconnected candidates score 0 and
/// come last in ID order.
pub fn rank_network(
    query: &Query,
    network: &CooccurrenceNetwork,
    catalog: &EntityCatalog,
    scope: CandidateScope,
) -> Result<RankedResult> {
    let candidates: Vec<&str> = catalog
        .ids(scope.filter_for(query))
        .filter(|id| network.contains(id))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let (present, dropped): (Vec<&String>, Vec<&String>) = query
        .query_entities
        .iter()
        .partition(|e| network.contains(e));
    let dropped: Vec<String> = dropped.into_iter().cloned().collect();
    if present.is_empty() {
        return Ok(RankedResult::failed(
            query,
            RankFailure::QueryNotInNetwork,
            dropped,
        ));
    }
    let mut totals: HashMap<&str, f64> = HashMap::new();
    for q in &present {
        for (nb, w) in network.neighbors(q) {
            *totals.entry(nb).or_insert(0.0) += w;
        }
    }
    let mut ranking: Vec<(String, f64)> = candidates
        .into_iter()
        .filter(|id| !query.query_entities.iter().any(|q| q == id))
        .map(|id| {
            let total = totals.get(id).copied().unwrap_or(0.0);
            (id.to_string(), if total > 0.0 { -total } else { 0.0 })
        })
        .collect();
    if ranking.is_empty() {
        return Ok(RankedResult::failed(
            query,
            RankFailure::NoCandidates,
            dropped,
        ));
    }
    sort_ranking(&mut ranking);
    Ok(RankedResult {
        query: query.clone(),
        ranking,
        failure: None,
        dropped_query_entities: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, EntityType};
    use crate::embedding::{entity_view, EmbeddingSet};
    use crate::network::{build_network, BuildParams};

    fn worked_instance() -> (EmbeddingSet, EntityCatalog) {
        let set = EmbeddingSet::from_rows(
            2,
            [
                ("a", vec![1.0, 0.0]),
                ("b", vec![0.0, 1.0]),
                ("c", vec![0.6, 0.8]),
                ("d", vec![-1.0, 0.0]),
                ("e", vec![0.8, 0.6]),
            ],
        )
        .unwrap();
        let mut cat = EntityCatalog::new();
        for id in ["a", "b", "c", "d", "e"] {
            cat.insert(id, EntityType::Person, id).unwrap();
        }
        (set, cat)
    }

    #[test]
    fn mode_names_round_trip() {
        for m in CombinationMode::ALL {
            assert_eq!(m.as_str().parse::<CombinationMode>().unwrap(), m);
        }
        assert_eq!(
            "cwmult".parse::<CombinationMode>().unwrap(),
            CombinationMode::CwMult
        );
        assert!("median".parse::<CombinationMode>().is_err());
    }

    #[test]
    fn worked_scores() {
        let (a, b, c) = ([1.0, 0.0], [0.0, 1.0], [0.6, 0.8]);
        let sum = combine_score(CombinationMode::Sum, &[&a, &b], &c).unwrap();
        assert!((sum - 0.6).abs() < 1e-12);
        let minmax = combine_score(CombinationMode::MinMax, &[&a, &b], &c).unwrap();
        assert!((minmax - 0.4).abs() < 1e-12);
        let cwmult = combine_score(CombinationMode::CwMult, &[&a, &b], &c);
        assert!(matches!(cwmult, Err(Error::DegenerateCombination)));
        assert_eq!(
            cwmult.unwrap_err().to_string(),
            "degenerate combination: combined query vector has zero norm"
        );
        assert!(matches!(
            combine_score(CombinationMode::Sum, &[], &c),
            Err(Error::EmptyQuery)
        ));
    }

    #[test]
    fn component_wise_modes() {
        let (q1, q2) = ([1.0, -2.0, 3.0], [2.0, 1.0, -1.0]);
        let c = [0.5, 0.25, 2.0];
        let expect = |combined: [f64; 3]| crate::embedding::cosine_distance(&combined, &c).unwrap();
        let cases = [
            (CombinationMode::Avg, expect([1.5, -0.5, 1.0])),
            (CombinationMode::CwMin, expect([1.0, -2.0, -1.0])),
            (CombinationMode::CwMax, expect([2.0, 1.0, 3.0])),
            (CombinationMode::CwMult, expect([2.0, -2.0, -3.0])),
        ];
        for (mode, want) in cases {
            let got = combine_score(mode, &[&q1, &q2], &c).unwrap();
            assert!((got - want).abs() < 1e-12, "{mode}: {got} vs {want}");
        }
    }

    #[test]
    fn single_query_collapses_to_cosine_distance() {
        let q = [0.3, -1.2, 0.7];
        let c = [1.0, 0.4, -0.2];
        let want = crate::embedding::cosine_distance(&q, &c).unwrap();
        for mode in CombinationMode::ALL {
            assert!((combine_score(mode, &[&q], &c).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn worked_ranking_uses_id_tie_break() {
        let (set, cat) = worked_instance();
        let view = entity_view(&set, &cat, Some(EntityType::Person)).unwrap();
        let q = Query::new("ev", ["b", "a"], "c", EntityType::Person);
        for mode in [CombinationMode::Sum, CombinationMode::Avg] {
            let r = rank_embedding(&q, mode, &view).unwrap();
            let ids: Vec<&str> = r.ranking.iter().map(|(id, _)| id.as_str()).collect();
            assert_eq!(ids, vec!["c", "e", "d"], "{mode}");
        }
        let r = rank_embedding(&q, CombinationMode::Sum, &view).unwrap();
        assert!((r.ranking[0].1 - 0.6).abs() < 1e-12);
        assert!((r.ranking[1].1 - 0.6).abs() < 1e-12);
        assert!((r.ranking[2].1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_out_of_vocabulary_queries_fail() {
        let (set, cat) = worked_instance();
        let view = entity_view(&set, &cat, None).unwrap();
        let q = Query::new("ev", ["a", "b"], "c", EntityType::Person);
        let r = rank_embedding(&q, CombinationMode::CwMult, &view).unwrap();
        assert_eq!(r.failure, Some(RankFailure::DegenerateCombination));
        assert!(r.ranking.is_empty());
        let oov = Query::new("ev", ["zz"], "c", EntityType::Person);
        let r = rank_embedding(&oov, CombinationMode::Sum, &view).unwrap();
        assert_eq!(r.failure, Some(RankFailure::QueryOutOfVocabulary));
        assert_eq!(r.dropped_query_entities, vec!["zz".to_string()]);
        let partial = Query::new("ev", ["a", "zz"], "c", EntityType::Person);
        let r = rank_embedding(&partial, CombinationMode::Sum, &view).unwrap();
        assert!(r.failure.is_none());
        assert_eq!(r.dropped_query_entities, vec!["zz".to_string()]);
        assert!(r.ranking.iter().all(|(id, _)| id != "a"));
    }

    fn doc(id: &str, sentences: &[&[&str]]) -> Document {
        Document {
            doc_id: id.into(),
            sentences: sentences
                .iter()
                .map(|s| s.iter().map(|t| t.to_string()).collect())
                .collect(),
        }
    }

    #[test]
    fn network_ranking_sums_edge_weights() {
        let mut cat = EntityCatalog::new();
        for id in ["q1", "q2", "x", "y", "z"] {
            cat.insert(id, EntityType::Location, id).unwrap();
        }
        let corpus = [
            doc("1", &[&["q1", "x"]]),
            doc("2", &[&["q1", "x"]]),
            doc("3", &[&["q2", "x"]]),
            doc("4", &[&["q1"], &["y"]]),
            doc("5", &[&["z", "w"]]),
        ];
        cat.insert("w", EntityType::Person, "w").unwrap();
        let net = build_network(&corpus, &cat, BuildParams::default());
        let q = Query::new("ev", ["q1", "q2"], "x", EntityType::Location);
        let r = rank_network(&q, &net, &cat, CandidateScope::TargetType).unwrap();
        assert_eq!(
            r.ranking,
            vec![
                ("x".to_string(), -3.0),
                ("y".to_string(), -0.5),
                ("z".to_string(), 0.0)
            ]
        );
        let untyped = rank_network(&q, &net, &cat, CandidateScope::All).unwrap();
        assert_eq!(untyped.ranking.last().unwrap().0, "z");
        assert_eq!(untyped.ranking.len(), 4);

        let single = Query::new("ev", ["q1"], "x", EntityType::Location);
        let r = rank_network(&single, &net, &cat, CandidateScope::TargetType).unwrap();
        let ids: Vec<&str> = r.ranking.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["x", "y", "q2", "z"]);

        let lost = Query::new("ev", ["nowhere"], "x", EntityType::Location);
        let r = rank_network(&lost, &net, &cat, CandidateScope::TargetType).unwrap();
        assert_eq!(r.failure, Some(RankFailure::QueryNotInNetwork));
    }

    #[test]
    fn unsorted_query_entities_are_still_excluded() {
        let (set, cat) = worked_instance();
        let view = entity_view(&set, &cat, None).unwrap();
        let mut q = Query::new("ev", ["a", "b"], "c", EntityType::Person);
        q.query_entities.reverse();
        for mode in CombinationMode::ALL {
            let r = rank_embedding(&q, mode, &view).unwrap();
            assert!(
                r.ranking.iter().all(|(id, _)| id != "a" && id != "b"),
                "{mode}"
            );
        }
    }
}
