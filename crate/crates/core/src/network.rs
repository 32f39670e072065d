//! Entity cooccurrence network weighted by sentence distance.
//!
//! Every unordered pair of distinct entity mentions in the same document
//! whose sentence gap `Δ` is within the cutoff contributes `1 / (1 + Δ)` to
//! the edge weight. Contributions are tallied as integer counts per gap and
//! only turned into a float at the end, summed in ascending gap order, so
//! the result does not depend on document order or parallel scheduling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use crate::corpus::{Document, EntityCatalog, Vocabulary};
use crate::error::{parse_err, Error, Result};

const HEADER_PREFIX: &str = "# multiassoc-network v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildParams {
    /// `None` means unlimited within a document.
    pub max_sentence_distance: Option<usize>,
    /// Count an entity at most once per sentence.
    pub dedupe_per_sentence: bool,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            max_sentence_distance: None,
            dedupe_per_sentence: true,
        }
    }
}

impl fmt::Display for BuildParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max_sentence_distance {
            Some(d) => write!(f, "maxdist={d}")?,
            None => write!(f, "maxdist=inf")?,
        }
        write!(f, " dedupe={}", u8::from(self.dedupe_per_sentence))
    }
}

/// Undirected weighted entity graph. Nodes are the entities with at least
/// one edge; adjacency is stored in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceNetwork {
    params: BuildParams,
    adjacency: BTreeMap<String, BTreeMap<String, f64>>,
}

impl CooccurrenceNetwork {
    pub fn empty(params: BuildParams) -> Self {
        Self {
            params,
            adjacency: BTreeMap::new(),
        }
    }

    pub fn params(&self) -> BuildParams {
        self.params
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.adjacency.keys().map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.adjacency.contains_key(id)
    }

    /// 0 when there is no edge.
    pub fn weight(&self, u: &str, v: &str) -> f64 {
        self.adjacency
            .get(u)
            .and_then(|n| n.get(v))
            .copied()
            .unwrap_or(0.0)
    }

    /// Neighbors of `id` in ID order.
    pub fn neighbors(&self, id: &str) -> impl Iterator<Item = (&str, f64)> {
        self.adjacency
            .get(id)
            .into_iter()
            .flat_map(|n| n.iter().map(|(k, &w)| (k.as_str(), w)))
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, in order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.adjacency.iter().flat_map(|(u, n)| {
            n.range::<str, _>((
                std::ops::Bound::Excluded(u.as_str()),
                std::ops::Bound::Unbounded,
            ))
            .map(move |(v, &w)| (u.as_str(), v.as_str(), w))
        })
    }

    fn insert_edge(&mut self, u: &str, v: &str, w: f64) {
        self.adjacency
            .entry(u.to_string())
            .or_default()
            .insert(v.to_string(), w);
        self.adjacency
            .entry(v.to_string())
            .or_default()
            .insert(u.to_string(), w);
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{HEADER_PREFIX} {}", self.params)?;
        for (u, v, w) in self.edges() {
            writeln!(out, "{u}\t{v}\t{w}")?;
        }
        Ok(())
    }
}

impl Vocabulary for CooccurrenceNetwork {
    fn contains_token(&self, token: &str) -> bool {
        self.contains(token)
    }
}

type GapCounts = BTreeMap<usize, u64>;
type PairCounts<'a> = HashMap<(&'a str, &'a str), GapCounts>;

fn document_pairs<'a>(
    doc: &'a Document,
    catalog: &EntityCatalog,
    params: BuildParams,
) -> PairCounts<'a> {
    let mut mentions: Vec<(usize, &'a str)> = Vec::new();
    for (s, sentence) in doc.sentences.iter().enumerate() {
        let ents = sentence
            .iter()
            .map(String::as_str)
            .filter(|t| catalog.contains(t));
        if params.dedupe_per_sentence {
            let unique: BTreeSet<&str> = ents.collect();
            mentions.extend(unique.into_iter().map(|e| (s, e)));
        } else {
            mentions.extend(ents.map(|e| (s, e)));
        }
    }
    let mut counts = PairCounts::new();
    for (i, &(si, u)) in mentions.iter().enumerate() {
        for &(sj, v) in &mentions[i + 1..] {
            let gap = sj - si;
            if params.max_sentence_distance.is_some_and(|max| gap > max) {
                break;
            }
            if u == v {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            *counts.entry(key).or_default().entry(gap).or_insert(0) += 1;
        }
    }
    counts
}

fn merge<'a>(mut a: PairCounts<'a>, b: PairCounts<'a>) -> PairCounts<'a> {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (key, gaps) in b {
        let slot = a.entry(key).or_default();
        for (gap, n) in gaps {
            *slot.entry(gap).or_insert(0) += n;
        }
    }
    a
}

pub fn build_network(
    corpus: &[Document],
    catalog: &EntityCatalog,
    params: BuildParams,
) -> CooccurrenceNetwork {
    #[cfg(feature = "parallel")]
    let counts = {
        use rayon::prelude::*;
        corpus
            .par_iter()
            .map(|d| document_pairs(d, catalog, params))
            .reduce(PairCounts::new, merge)
    };
    #[cfg(not(feature = "parallel"))]
    let counts = corpus
        .iter()
        .map(|d| document_pairs(d, catalog, params))
        .fold(PairCounts::new(), merge);

    let mut network = CooccurrenceNetwork::empty(params);
    for ((u, v), gaps) in counts {
        let w: f64 = gaps
            .iter()
            .map(|(&gap, &n)| n as f64 / (1.0 + gap as f64))
            .sum();
        network.insert_edge(u, v, w);
    }
    network
}

/// Neighbors of one entity, heaviest first, ties by ID.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub entity_id: String,
    pub neighbors: Vec<(String, f64)>,
}

pub fn top_neighbors(
    network: &CooccurrenceNetwork,
    entity_id: &str,
    n: usize,
) -> Result<NeighborList> {
    if !network.contains(entity_id) {
        return Err(Error::UnknownEntity(entity_id.to_string()));
    }
    let mut all: Vec<(&str, f64)> = network.neighbors(entity_id).collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    all.truncate(n);
    Ok(NeighborList {
        entity_id: entity_id.to_string(),
        neighbors: all.into_iter().map(|(id, w)| (id.to_string(), w)).collect(),
    })
}

fn parse_header(line: &str) -> Option<BuildParams> {
    let rest = line.strip_prefix(HEADER_PREFIX)?;
    let mut params = BuildParams::default();
    let (mut saw_dist, mut saw_dedupe) = (false, false);
    for field in rest.split_whitespace() {
        let (key, value) = field.split_once('=')?;
        match key {
            "maxdist" => {
                params.max_sentence_distance = match value {
                    "inf" => None,
                    v => Some(v.parse().ok()?),
                };
                saw_dist = true;
            }
            "dedupe" => {
                params.dedupe_per_sentence = match value {
                    "0" => false,
                    "1" => true,
                    _ => return None,
                };
                saw_dedupe = true;
            }
            _ => return None,
        }
    }
    (saw_dist && saw_dedupe).then_some(params)
}

pub fn load_network<R: BufRead>(reader: R) -> Result<CooccurrenceNetwork> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let params = parse_header(header.trim_end()).ok_or_else(|| {
        parse_err(
            1,
            format!("expected header \"{HEADER_PREFIX} maxdist=<int|inf> dedupe=<0|1>\""),
        )
    })?;
    let mut network = CooccurrenceNetwork::empty(params);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [u, v, w] = fields[..] else {
            return Err(parse_err(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid weight {w:?}")))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(parse_err(line_no, "weight must be positive and finite"));
        }
        if u.is_empty() || v.is_empty() || u == v {
            return Err(parse_err(line_no, "edge needs two distinct endpoints"));
        }
        if network.weight(u, v) != 0.0 {
            return Err(parse_err(line_no, format!("duplicate edge {u} - {v}")));
        }
        network.insert_edge(u, v, w);
    }
    Ok(network)
}
