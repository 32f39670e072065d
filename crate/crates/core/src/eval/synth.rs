//! Seeded synthetic dataset with planted event structure.
//!
//! Every event owns a disjoint set of entities. Each event gets at least
//! three documents in which all its members are mentioned within a
//! two-sentence span; other sentences carry filler terms and, at
//! `noise_rate` per sentence, a mention of a uniformly random entity.
//!
//! The planted embedding puts each event's members at angle `ε` around a
//! shared random direction; unassigned entities and filler terms get
//! independent random directions, and every vector is shifted by a common
//! offset of length `noise_rate`. `ε` starts at [`INITIAL_ANGLE`] and is
//! halved until SUM ranks every held-out member first among candidates of
//! its type.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{generate_queries, Document, EntityCatalog, EntityType, EventRecord};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::eval::{EmbeddingRanker, QueryRanker};
use crate::ranker::{CandidateScope, CombinationMode};

pub const INITIAL_ANGLE: f64 = 0.25;
const MAX_HALVINGS: usize = 10;
const FILLER_VOCAB: usize = 200;
const EMBEDDED_FILLER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_entities: usize,
    pub n_events: usize,
    pub entities_per_event: usize,
    pub n_docs: usize,
    pub noise_rate: f64,
    pub dim: usize,
    pub sentences_per_doc: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 7,
            n_entities: 40,
            n_events: 8,
            entities_per_event: 3,
            n_docs: 60,
            noise_rate: 0.0,
            dim: 32,
            sentences_per_doc: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub corpus: Vec<Document>,
    pub catalog: EntityCatalog,
    pub events: Vec<EventRecord>,
    pub embeddings: EmbeddingSet,
    /// Angle (radians) between each planted member and its event direction.
    pub planted_angle: f64,
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Infeasible(m));
        if self.n_entities == 0 || self.n_events == 0 || self.n_docs == 0 {
            return fail("entity, event and document counts must be positive".into());
        }
        if self.entities_per_event < 2 {
            return fail("entities_per_event must be at least 2".into());
        }
        if self.n_events * self.entities_per_event > self.n_entities {
            return fail(format!(
                "{} events of {} entities need at least {} entities, have {}",
                self.n_events,
                self.entities_per_event,
                self.n_events * self.entities_per_event,
                self.n_entities
            ));
        }
        if self.n_docs < 3 * self.n_events {
            return fail(format!(
                "each event needs 3 documents: at least {} documents required, have {}",
                3 * self.n_events,
                self.n_docs
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return fail("noise_rate must lie in [0, 1]".into());
        }
        if self.dim < 2 {
            return fail("dim must be at least 2".into());
        }
        if self.sentences_per_doc < 2 {
            return fail("sentences_per_doc must be at least 2".into());
        }
        Ok(())
    }
}

pub fn entity_id(i: usize) -> String {
    format!("Q{}", 100 + i)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// A unit vector orthogonal to the unit vector `axis`.
fn random_orthogonal(rng: &mut ChaCha8Rng, axis: &[f64]) -> Vec<f64> {
    loop {
        let mut v = random_unit(rng, axis.len());
        let proj: f64 = v.iter().zip(axis).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(axis).for_each(|(x, a)| *x -= proj * a);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn build_corpus(p: &SynthParams, rng: &mut ChaCha8Rng, events: &[Vec<String>]) -> Vec<Document> {
    let mut corpus = Vec::with_capacity(p.n_docs);
    for d in 0..p.n_docs {
        let members = &events[d % events.len()];
        let mut sentences: Vec<Vec<String>> = (0..p.sentences_per_doc)
            .map(|_| {
                let len = rng.gen_range(3..=8);
                (0..len)
                    .map(|_| format!("w{:03}", rng.gen_range(0..FILLER_VOCAB)))
                    .collect()
            })
            .collect();
        let start = rng.gen_range(0..p.sentences_per_doc - 1);
        for m in members {
            let s = &mut sentences[start + rng.gen_range(0..2)];
            let at = rng.gen_range(0..=s.len());
            s.insert(at, m.clone());
        }
        for s in sentences.iter_mut() {
            if rng.gen_bool(p.noise_rate) {
                let at = rng.gen_range(0..=s.len());
                s.insert(at, entity_id(rng.gen_range(0..p.n_entities)));
            }
        }
        corpus.push(Document {
            doc_id: format!("doc{d:04}"),
            sentences,
        });
    }
    corpus
}

fn planted_embedding(
    p: &SynthParams,
    angle: f64,
    slot_of_entity: &[Option<usize>],
    directions: &[Vec<f64>],
    offsets: &[Vec<f64>],
    background: &[Vec<f64>],
    shift: &[f64],
) -> Result<EmbeddingSet> {
    let mut rows = Vec::with_capacity(p.n_entities + EMBEDDED_FILLER);
    for (i, slot) in slot_of_entity.iter().enumerate() {
        let base: Vec<f64> = match slot {
            Some(s) => directions[s / p.entities_per_event]
                .iter()
                .zip(&offsets[*s])
                .map(|(d, o)| angle.cos() * d + angle.sin() * o)
                .collect(),
            None => background[i].clone(),
        };
        rows.push((entity_id(i), base));
    }
    for j in 0..EMBEDDED_FILLER {
        rows.push((format!("w{j:03}"), background[p.n_entities + j].clone()));
    }
    for (_, v) in rows.iter_mut() {
        v.iter_mut()
            .zip(shift)
            .for_each(|(x, s)| *x += p.noise_rate * s);
    }
    EmbeddingSet::from_rows(p.dim, rows)
}

fn sum_solves_all(
    set: &EmbeddingSet,
    catalog: &EntityCatalog,
    events: &[EventRecord],
) -> Result<bool> {
    let ranker = EmbeddingRanker::new(
        "planted",
        set,
        catalog,
        CombinationMode::Sum,
        CandidateScope::TargetType,
    );
    for q in generate_queries(events, catalog) {
        if ranker.rank(&q)?.top() != Some(q.target.as_str()) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn generate_synthetic(p: &SynthParams) -> Result<SyntheticDataset> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let mut catalog = EntityCatalog::new();
    for i in 0..p.n_entities {
        catalog.insert(entity_id(i), EntityType::ALL[i % 3], format!("Entity_{i}"))?;
    }

    let mut order: Vec<usize> = (0..p.n_entities).collect();
    order.shuffle(&mut rng);
    let mut member_ids: Vec<Vec<String>> = Vec::with_capacity(p.n_events);
    for e in 0..p.n_events {
        let mut ids: Vec<usize> =
            order[e * p.entities_per_event..(e + 1) * p.entities_per_event].to_vec();
        ids.sort_unstable();
        member_ids.push(ids.into_iter().map(entity_id).collect());
    }
    let events: Vec<EventRecord> = member_ids
        .iter()
        .enumerate()
        .map(|(e, ids)| EventRecord::new(format!("ev{e:03}"), ids.iter().cloned(), &catalog))
        .collect::<Result<_>>()?;

    let corpus = build_corpus(p, &mut rng, &member_ids);

    // Slot s = e * entities_per_event + k is the k-th member of event e.
    let members = p.n_events * p.entities_per_event;
    let mut slot_of_entity = vec![None; p.n_entities];
    for (slot, &entity) in order[..members].iter().enumerate() {
        slot_of_entity[entity] = Some(slot);
    }
    let directions: Vec<Vec<f64>> = (0..p.n_events)
        .map(|_| random_unit(&mut rng, p.dim))
        .collect();
    let offsets: Vec<Vec<f64>> = (0..members)
        .map(|s| random_orthogonal(&mut rng, &directions[s / p.entities_per_event]))
        .collect();
    let background: Vec<Vec<f64>> = (0..p.n_entities + EMBEDDED_FILLER)
        .map(|_| random_unit(&mut rng, p.dim))
        .collect();
    let shift = random_unit(&mut rng, p.dim);

    let mut angle = INITIAL_ANGLE;
    for _ in 0..=MAX_HALVINGS {
        let embeddings = planted_embedding(
            p,
            angle,
            &slot_of_entity,
            &directions,
            &offsets,
            &background,
            &shift,
        )?;
        if sum_solves_all(&embeddings, &catalog, &events)? {
            return Ok(SyntheticDataset {
                corpus,
                catalog,
                events,
                embeddings,
                planted_angle: angle,
            });
        }
        angle /= 2.0;
    }
    Err(Error::Infeasible(
        "could not plant an embedding in which SUM solves every query".into(),
    ))
}
