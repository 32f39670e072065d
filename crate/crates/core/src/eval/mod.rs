//! Event-completion evaluation: runs rankers over hold-one-out queries and
//! aggregates precision@1 and recall@k, plus the frequency and
//! neighbor-overlap analyses and a synthetic planted dataset.

pub mod frequency;
pub mod overlap;
pub mod report;
pub mod synth;

use std::collections::BTreeMap;

use crate::corpus::{EntityCatalog, EntityType, Query};
use crate::embedding::{entity_view, EmbeddingSet, EntityVectorView};
use crate::error::{Error, Result};
use crate::network::CooccurrenceNetwork;
use crate::ranker::{
    rank_embedding, rank_network, CandidateScope, CombinationMode, RankFailure, RankedResult,
};

pub use frequency::{frequency_analysis, FrequencyAnalysis, FrequencyPoint, RankStats};
pub use overlap::{overlap_study, recall_curve, OverlapCurve, OverlapStudy};
pub use synth::{generate_synthetic, SynthParams, SyntheticDataset};

pub const DEFAULT_K: usize = 10;

/// A configured (method, mode) ranking procedure.
pub trait QueryRanker: Sync {
    fn method(&self) -> &str;
    /// `None` for rankers without a combination mode (the network).
    fn mode(&self) -> Option<CombinationMode>;
    fn rank(&self, query: &Query) -> Result<RankedResult>;
}

pub struct EmbeddingRanker<'a> {
    method: String,
    mode: CombinationMode,
    scope: CandidateScope,
    views: BTreeMap<Option<EntityType>, EntityVectorView<'a>>,
}

impl<'a> EmbeddingRanker<'a> {
    pub fn new(
        method: impl Into<String>,
        embeddings: &'a EmbeddingSet,
        catalog: &'a EntityCatalog,
        mode: CombinationMode,
        scope: CandidateScope,
    ) -> Self {
        let filters: Vec<Option<EntityType>> = match scope {
            CandidateScope::TargetType => EntityType::ALL.into_iter().map(Some).collect(),
            CandidateScope::All => vec![None],
        };
        let views = filters
            .into_iter()
            .filter_map(|f| entity_view(embeddings, catalog, f).ok().map(|v| (f, v)))
            .collect();
        Self {
            method: method.into(),
            mode,
            scope,
            views,
        }
    }
}

impl QueryRanker for EmbeddingRanker<'_> {
    fn method(&self) -> &str {
        &self.method
    }

    fn mode(&self) -> Option<CombinationMode> {
        Some(self.mode)
    }

    fn rank(&self, query: &Query) -> Result<RankedResult> {
        match self.views.get(&self.scope.filter_for(query)) {
            Some(view) => rank_embedding(query, self.mode, view),
            None => Ok(RankedResult {
                query: query.clone(),
                ranking: Vec::new(),
                failure: Some(RankFailure::NoCandidates),
                dropped_query_entities: Vec::new(),
            }),
        }
    }
}

pub struct NetworkRanker<'a> {
    method: String,
    network: &'a CooccurrenceNetwork,
    catalog: &'a EntityCatalog,
    scope: CandidateScope,
}

impl<'a> NetworkRanker<'a> {
    pub fn new(
        method: impl Into<String>,
        network: &'a CooccurrenceNetwork,
        catalog: &'a EntityCatalog,
        scope: CandidateScope,
    ) -> Self {
        Self {
            method: method.into(),
            network,
            catalog,
            scope,
        }
    }
}

impl QueryRanker for NetworkRanker<'_> {
    fn method(&self) -> &str {
        &self.method
    }

    fn mode(&self) -> Option<CombinationMode> {
        None
    }

    fn rank(&self, query: &Query) -> Result<RankedResult> {
        match rank_network(query, self.network, self.catalog, self.scope) {
            Err(Error::NoCandidates) => Ok(RankedResult {
                query: query.clone(),
                ranking: Vec::new(),
                failure: Some(RankFailure::NoCandidates),
                dropped_query_entities: Vec::new(),
            }),
            other => other,
        }
    }
}

/// 1-based position of the query's target; `None` for a miss.
pub fn rank_of_target(result: &RankedResult) -> Option<usize> {
    if result.failure.is_some() {
        return None;
    }
    result
        .ranking
        .iter()
        .position(|(id, _)| *id == result.query.target)
        .map(|p| p + 1)
}

/// Aggregates for one (method, mode) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub method: String,
    pub mode: Option<CombinationMode>,
    pub precision_at_1: f64,
    /// `recall_at_k[i]` is recall at rank `i + 1`.
    pub recall_at_k: Vec<f64>,
    pub n_queries: usize,
    pub n_failed: usize,
    /// Target rank per query, aligned with the evaluated query list.
    pub ranks: Vec<Option<usize>>,
}

impl EvalCell {
    pub fn from_ranks(
        method: impl Into<String>,
        mode: Option<CombinationMode>,
        ranks: Vec<Option<usize>>,
        n_failed: usize,
        k: usize,
    ) -> Self {
        let n = ranks.len();
        let mut hits_at = vec![0usize; k + 1];
        for r in ranks.iter().flatten() {
            if *r <= k {
                hits_at[*r] += 1;
            }
        }
        let mut recall_at_k = Vec::with_capacity(k);
        let mut cumulative = 0;
        for hits in &hits_at[1..] {
            cumulative += hits;
            recall_at_k.push(if n == 0 {
                0.0
            } else {
                cumulative as f64 / n as f64
            });
        }
        let precision_at_1 = recall_at_k.first().copied().unwrap_or(0.0);
        Self {
            method: method.into(),
            mode,
            precision_at_1,
            recall_at_k,
            n_queries: n,
            n_failed,
            ranks,
        }
    }

    /// `method` or `method:MODE`.
    pub fn label(&self) -> String {
        match self.mode {
            Some(m) => format!("{}:{m}", self.method),
            None => self.method.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub cells: Vec<EvalCell>,
}

impl EvalReport {
    pub fn cell(&self, method: &str, mode: Option<CombinationMode>) -> Option<&EvalCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.mode == mode)
    }

    /// Adds one averaged cell per (group, mode) for methods evaluated over
    /// several embedding files. `groups` maps a group label to the member
    /// method labels. Averaged cells carry no per-query ranks.
    pub fn add_group_means(&mut self, groups: &[(String, Vec<String>)]) {
        let mut extra = Vec::new();
        for (group, members) in groups {
            let mut modes: Vec<Option<CombinationMode>> = self
                .cells
                .iter()
                .filter(|c| members.contains(&c.method))
                .map(|c| c.mode)
                .collect();
            modes.sort();
            modes.dedup();
            for mode in modes {
                let cells: Vec<&EvalCell> = self
                    .cells
                    .iter()
                    .filter(|c| c.mode == mode && members.contains(&c.method))
                    .collect();
                let m = cells.len() as f64;
                let mut recall = vec![0.0; self.k];
                for c in &cells {
                    recall
                        .iter_mut()
                        .zip(&c.recall_at_k)
                        .for_each(|(a, b)| *a += b / m);
                }
                extra.push(EvalCell {
                    method: group.clone(),
                    mode,
                    precision_at_1: cells.iter().map(|c| c.precision_at_1).sum::<f64>() / m,
                    recall_at_k: recall,
                    n_queries: cells[0].n_queries,
                    n_failed: cells.iter().map(|c| c.n_failed).sum(),
                    ranks: Vec::new(),
                });
            }
        }
        self.cells.extend(extra);
    }
}

fn rank_all(ranker: &dyn QueryRanker, queries: &[Query]) -> Result<Vec<RankedResult>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        queries.par_iter().map(|q| ranker.rank(q)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        queries.iter().map(|q| ranker.rank(q)).collect()
    }
}

/// Runs every ranker over every query. Failed queries and targets missing
/// from a ranking count as misses at every k.
pub fn evaluate(queries: &[Query], rankers: &[&dyn QueryRanker], k: usize) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::NoQueries);
    }
    let mut cells = Vec::with_capacity(rankers.len());
    for ranker in rankers {
        let results = rank_all(*ranker, queries)?;
        let n_failed = results.iter().filter(|r| r.failure.is_some()).count();
        let ranks = results.iter().map(rank_of_target).collect();
        cells.push(EvalCell::from_ranks(
            ranker.method(),
            ranker.mode(),
            ranks,
            n_failed,
            k,
        ));
    }
    Ok(EvalReport { k, cells })
}
