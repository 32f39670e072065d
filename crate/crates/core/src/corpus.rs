//! Entity-annotated corpus, entity catalog, ground-truth events and
//! hold-one-out queries.
//!
//! Entity mentions appear inline as catalog IDs (e.g. `Q567`); every other
//! token is a plain term. Everything here is ordered by entity ID so that
//! downstream rankings and reports are reproducible.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{parse_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    #[serde(rename = "PER")]
    Person,
    #[serde(rename = "LOC")]
    Location,
    #[serde(rename = "ORG")]
    Organization,
}

impl EntityType {
    pub const ALL: [EntityType; 3] = [
        EntityType::Person,
        EntityType::Location,
        EntityType::Organization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Person => "PER",
            EntityType::Location => "LOC",
            EntityType::Organization => "ORG",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(EntityType::Person),
            "LOC" => Ok(EntityType::Location),
            "ORG" => Ok(EntityType::Organization),
            other => Err(Error::UnknownEntityType(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub entity_type: EntityType,
    pub display_name: String,
}

/// Entity ID → type and display name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl EntityCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        id: impl Into<String>,
        entity_type: EntityType,
        display_name: impl Into<String>,
    ) -> Result<()> {
        let id = id.into();
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateEntity(id));
        }
        self.entries.insert(
            id,
            CatalogEntry {
                entity_type,
                display_name: display_name.into(),
            },
        );
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.get(id)
    }

    pub fn entity_type(&self, id: &str) -> Option<EntityType> {
        self.entries.get(id).map(|e| e.entity_type)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending ID order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &CatalogEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// IDs of one type (or all IDs when `filter` is `None`), ascending.
    pub fn ids(&self, filter: Option<EntityType>) -> impl Iterator<Item = &str> {
        self.iter()
            .filter(move |(_, e)| filter.is_none_or(|t| e.entity_type == t))
            .map(|(id, _)| id)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (id, e) in self.iter() {
            writeln!(out, "{id}\t{}\t{}", e.entity_type, e.display_name)?;
        }
        Ok(())
    }
}

/// Parses the tab-separated catalog: `entity_id<TAB>type<TAB>display_name`.
///
/// Runs of whitespace are accepted as separators as long as the display
/// name itself contains none, so hand-written files also load.
pub fn parse_catalog<R: BufRead>(reader: R) -> Result<EntityCatalog> {
    let mut catalog = EntityCatalog::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(parse_err(line_no, "empty entity id"));
        }
        let entity_type: EntityType = fields[1].trim().parse()?;
        catalog.insert(id, entity_type, fields[2].trim())?;
    }
    Ok(catalog)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
}

/// Parses one JSON document record per line: `{"id": ..., "sentences": [[...], ...]}`.
/// Blank lines are skipped.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        if doc.doc_id.is_empty() {
            return Err(parse_err(line_no, "empty document id"));
        }
        if doc.sentences.is_empty() {
            return Err(parse_err(line_no, "document has no sentences"));
        }
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateDocument(doc.doc_id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus<W: Write>(docs: &[Document], mut out: W) -> Result<()> {
    for doc in docs {
        let line = serde_json::to_string(doc).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Mention counts per catalog entity; unmentioned entities map to 0.
pub fn entity_frequencies(corpus: &[Document], catalog: &EntityCatalog) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> =
        catalog.ids(None).map(|id| (id.to_string(), 0)).collect();
    for token in corpus.iter().flat_map(|d| d.sentences.iter().flatten()) {
        if let Some(c) = counts.get_mut(token.as_str()) {
            *c += 1;
        }
    }
    counts
}

/// A ground-truth event: its participating entities, sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub event_id: String,
    pub entities: Vec<String>,
}

impl EventRecord {
    /// Fails when fewer than two distinct entities remain or an entity is
    /// not in the catalog.
    pub fn new<I, S>(
        event_id: impl Into<String>,
        entities: I,
        catalog: &EntityCatalog,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let event_id = event_id.into();
        let set: BTreeSet<String> = entities.into_iter().map(Into::into).collect();
        if let Some(unknown) = set.iter().find(|id| !catalog.contains(id)) {
            return Err(Error::UnknownEntity(unknown.clone()));
        }
        if set.len() < 2 {
            return Err(Error::Infeasible(format!(
                "event {event_id:?} has fewer than two distinct entities"
            )));
        }
        Ok(Self {
            event_id,
            entities: set.into_iter().collect(),
        })
    }
}

#[derive(Debug, Deserialize)]
struct EventLine {
    id: String,
    entities: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct EventLoad {
    pub events: Vec<EventRecord>,
    /// Events removed for having fewer than two distinct entities.
    pub skipped: Vec<String>,
}

/// Parses one JSON event per line: `{"id": ..., "entities": [...]}`.
///
/// Events with fewer than two distinct entities are skipped and listed in
/// [`EventLoad::skipped`]; an entity missing from the catalog is an error.
pub fn parse_events<R: BufRead>(reader: R, catalog: &EntityCatalog) -> Result<EventLoad> {
    let mut load = EventLoad::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: EventLine =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        if raw.id.is_empty() {
            return Err(parse_err(line_no, "empty event id"));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(parse_err(
                line_no,
                format!("duplicate event id {:?}", raw.id),
            ));
        }
        if let Some(unknown) = raw.entities.iter().find(|id| !catalog.contains(id)) {
            return Err(parse_err(line_no, format!("unknown entity {unknown:?}")));
        }
        let distinct: BTreeSet<&String> = raw.entities.iter().collect();
        if distinct.len() < 2 {
            load.skipped.push(raw.id);
            continue;
        }
        load.events
            .push(EventRecord::new(raw.id, raw.entities, catalog)?);
    }
    Ok(load)
}

pub fn write_events<W: Write>(events: &[EventRecord], mut out: W) -> Result<()> {
    for ev in events {
        let line = serde_json::json!({ "id": ev.event_id, "entities": ev.entities });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// A hold-one-out query. `query_entities` is kept sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub event_id: String,
    pub query_entities: Vec<String>,
    pub target: String,
    pub target_type: EntityType,
}

impl Query {
    pub fn new<I, S>(
        event_id: impl Into<String>,
        query_entities: I,
        target: impl Into<String>,
        target_type: EntityType,
    ) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let target = target.into();
        let set: BTreeSet<String> = query_entities
            .into_iter()
            .map(Into::into)
            .filter(|e| *e != target)
            .collect();
        Self {
            event_id: event_id.into(),
            query_entities: set.into_iter().collect(),
            target,
            target_type,
        }
    }
}

/// One query per event member, holding that member out as the target.
/// Order: event order, then target ID order.
pub fn generate_queries(events: &[EventRecord], catalog: &EntityCatalog) -> Vec<Query> {
    let mut queries = Vec::with_capacity(events.iter().map(|e| e.entities.len()).sum());
    for ev in events {
        for target in &ev.entities {
            let Some(target_type) = catalog.entity_type(target) else {
                continue;
            };
            let rest = ev.entities.iter().filter(|e| *e != target).cloned();
            queries.push(Query::new(
                ev.event_id.clone(),
                rest,
                target.clone(),
                target_type,
            ));
        }
    }
    queries
}

/// Membership test over a model's vocabulary.
pub trait Vocabulary {
    fn contains_token(&self, token: &str) -> bool;
}

impl Vocabulary for HashSet<String> {
    fn contains_token(&self, token: &str) -> bool {
        self.contains(token)
    }
}

impl Vocabulary for BTreeSet<String> {
    fn contains_token(&self, token: &str) -> bool {
        self.contains(token)
    }
}

impl<V: Vocabulary + ?Sized> Vocabulary for &V {
    fn contains_token(&self, token: &str) -> bool {
        (**self).contains_token(token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    TargetMissing,
    NoQueryEntityInVocabulary,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::TargetMissing => "target_missing",
            DropReason::NoQueryEntityInVocabulary => "no_query_entity_in_vocabulary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedQuery {
    pub model: String,
    pub event_id: String,
    pub target: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub retained: Vec<Query>,
    /// Every (model, query) pair that caused a drop; a query failing in
    /// several models appears once per model.
    pub dropped: Vec<DroppedQuery>,
}

/// Keeps the queries whose target is in every vocabulary and that retain
/// at least one in-vocabulary query entity per vocabulary.
pub fn filter_queries<V: Vocabulary>(
    queries: &[Query],
    models: &[(&str, V)],
) -> Result<FilterOutcome> {
    if models.is_empty() {
        return Err(Error::NoVocabularies);
    }
    let mut out = FilterOutcome::default();
    for q in queries {
        let mut keep = true;
        for (name, vocab) in models {
            let reason = if !vocab.contains_token(&q.target) {
                Some(DropReason::TargetMissing)
            } else if !q.query_entities.iter().any(|e| vocab.contains_token(e)) {
                Some(DropReason::NoQueryEntityInVocabulary)
            } else {
                None
            };
            if let Some(reason) = reason {
                keep = false;
                out.dropped.push(DroppedQuery {
                    model: name.to_string(),
                    event_id: q.event_id.clone(),
                    target: q.target.clone(),
                    reason,
                });
            }
        }
        if keep {
            out.retained.push(q.clone());
        }
    }
    Ok(out)
}

pub fn write_drop_report<W: Write>(dropped: &[DroppedQuery], mut out: W) -> Result<()> {
    writeln!(out, "model,event_id,target,reason")?;
    for d in dropped {
        writeln!(
            out,
            "{},{},{},{}",
            d.model,
            d.event_id,
            d.target,
            d.reason.as_str()
        )?;
    }
    Ok(())
}
