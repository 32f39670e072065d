//! Retrieval of multi-entity associations.
//!
//! Given an event's participating entities with one held out, rank
//! candidate entities either by combining pre-trained word vectors of the
//! remaining entities (six combination modes) or by summed edge weight in
//! a sentence-distance cooccurrence network, and evaluate the rankings
//! with precision@1 and recall@k.
//!
//! Modules, bottom up:
//!
//! - [`corpus`]: annotated documents, entity catalog, events, hold-one-out
//!   queries and query filtering.
//! - [`embedding`]: vector files, cosine distance, per-type entity views.
//! - [`network`]: the cooccurrence network and its edge-list format.
//! - [`ranker`]: combination modes, the network adapter and a brute-force
//!   oracle.
//! - [`eval`]: metrics, frequency and overlap analyses, synthetic data,
//!   report rendering.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod network;
pub mod ranker;

pub use corpus::{
    entity_frequencies, filter_queries, generate_queries, parse_catalog, parse_corpus,
    parse_events, Document, EntityCatalog, EntityType, EventRecord, Query, Vocabulary,
};
pub use embedding::{
    cosine_distance, entity_view, load_embeddings, EmbeddingSet, EntityVectorView,
};
pub use error::{Error, Result};
pub use network::{
    build_network, load_network, top_neighbors, BuildParams, CooccurrenceNetwork, NeighborList,
};
pub use ranker::{
    brute_force_rank, combine_score, rank_embedding, rank_network, CandidateScope, CombinationMode,
    RankFailure, RankedResult,
};
