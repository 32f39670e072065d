use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use multiassoc::corpus::{write_corpus, write_drop_report, write_events, EventLoad};
use multiassoc::eval::overlap::embedding_neighbors;
use multiassoc::eval::report::{
    render_frequency, render_overlap, render_precision_table, render_recall_curves,
};
use multiassoc::eval::{
    evaluate, frequency_analysis, generate_synthetic, overlap_study, EmbeddingRanker, EvalReport,
    FrequencyAnalysis, NetworkRanker, OverlapStudy, QueryRanker, SynthParams,
};
use multiassoc::{
    build_network, entity_frequencies, filter_queries, generate_queries, load_embeddings,
    load_network, parse_catalog, parse_corpus, parse_events, top_neighbors, CandidateScope,
    CooccurrenceNetwork, Document, EmbeddingSet, EntityCatalog, Query, Vocabulary,
};

use crate::config::RunConfig;
use crate::Failure;

pub const NETWORK_METHOD: &str = "network";

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Usage(anyhow!(e).context(format!("cannot open {}", path.display()))))
}

fn input_err(path: &Path) -> impl FnOnce(multiassoc::Error) -> Failure + '_ {
    move |e| Failure::Usage(anyhow!(e).context(format!("{}", path.display())))
}

fn load_catalog(path: &Path) -> Result<EntityCatalog, Failure> {
    parse_catalog(open(path)?).map_err(input_err(path))
}

fn load_corpus(path: &Path) -> Result<Vec<Document>, Failure> {
    parse_corpus(open(path)?).map_err(input_err(path))
}

fn load_event_file(path: &Path, catalog: &EntityCatalog) -> Result<EventLoad, Failure> {
    parse_events(open(path)?, catalog).map_err(input_err(path))
}

fn load_vectors(path: &Path, normalize: bool) -> Result<EmbeddingSet, Failure> {
    let set = load_embeddings(open(path)?).map_err(input_err(path))?;
    Ok(if normalize { set.normalize() } else { set })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Usage(anyhow!(e).context(format!("cannot write {}", path.display()))))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(anyhow!(e).context(format!("cannot create {}", dir.display()))))
}

/// Loads the configured network, or builds it from corpus and catalog.
fn obtain_network(
    cfg: &RunConfig,
    corpus: Option<&[Document]>,
    catalog: &EntityCatalog,
) -> Result<CooccurrenceNetwork, Failure> {
    if let Some(path) = &cfg.network {
        let path = cfg.require(&Some(path.clone()), "network")?.to_path_buf();
        return load_network(open(&path)?).map_err(input_err(&path));
    }
    let owned;
    let corpus = match corpus {
        Some(c) => c,
        None => {
            owned = load_corpus(cfg.require(&cfg.corpus, "corpus")?)?;
            &owned
        }
    };
    Ok(build_network(corpus, catalog, cfg.build))
}

type LabelledSets = Vec<(String, EmbeddingSet)>;
type Groups = Vec<(String, Vec<String>)>;

/// Labelled embedding sets. A name given once keeps its label; a name given
/// n > 1 times yields labels `NAME#1..NAME#n` plus a group to average.
fn load_embedding_sets(cfg: &RunConfig) -> Result<(LabelledSets, Groups), Failure> {
    cfg.check_embeddings_exist()?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &cfg.embeddings {
        *counts.entry(&e.name).or_insert(0) += 1;
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut sets = Vec::new();
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for e in &cfg.embeddings {
        let label = if counts[e.name.as_str()] > 1 {
            let i = seen.entry(&e.name).or_insert(0);
            *i += 1;
            let label = format!("{}#{i}", e.name);
            match groups.iter_mut().find(|(g, _)| *g == e.name) {
                Some((_, members)) => members.push(label.clone()),
                None => groups.push((e.name.clone(), vec![label.clone()])),
            }
            label
        } else {
            e.name.clone()
        };
        sets.push((label, load_vectors(&e.path, cfg.normalize_embeddings)?));
    }
    Ok((sets, groups))
}

pub fn cmd_build_network(
    cfg: &RunConfig,
    out_path: &Path,
    log: &mut dyn Write,
) -> Result<CooccurrenceNetwork, Failure> {
    let corpus = load_corpus(cfg.require(&cfg.corpus, "corpus")?)?;
    let catalog = load_catalog(cfg.require(&cfg.catalog, "catalog")?)?;
    let network = build_network(&corpus, &catalog, cfg.build);
    let mut buf = Vec::new();
    network.write_to(&mut buf)?;
    write_file(out_path, &buf)?;
    writeln!(
        log,
        "nodes: {}\nedges: {}\nwrote {}",
        network.node_count(),
        network.edge_count(),
        out_path.display()
    )?;
    Ok(network)
}

#[derive(Debug)]
pub struct EvalOutcome {
    pub queries: Vec<Query>,
    pub report: EvalReport,
    pub frequency: FrequencyAnalysis,
    pub written: Vec<PathBuf>,
}

pub const TABLE_FILE: &str = "precision_table.csv";
pub const RECALL_FILE: &str = "recall_curves.csv";
pub const FREQUENCY_FILE: &str = "frequency_ranks.csv";
pub const DROP_FILE: &str = "drop_report.csv";
pub const OVERLAP_FILE: &str = "overlap_curves.csv";

pub fn cmd_eval(cfg: &RunConfig, log: &mut dyn Write) -> Result<EvalOutcome, Failure> {
    let catalog = load_catalog(cfg.require(&cfg.catalog, "catalog")?)?;
    let corpus = load_corpus(cfg.require(&cfg.corpus, "corpus")?)?;
    let events = load_event_file(cfg.require(&cfg.events, "events")?, &catalog)?;
    let network = obtain_network(cfg, Some(&corpus), &catalog)?;
    let (sets, groups) = load_embedding_sets(cfg)?;
    if !events.skipped.is_empty() {
        writeln!(
            log,
            "skipped {} events with fewer than two entities",
            events.skipped.len()
        )?;
    }

    let all_queries = generate_queries(&events.events, &catalog);
    let mut vocabularies: Vec<(&str, &dyn Vocabulary)> = vec![(NETWORK_METHOD, &network)];
    vocabularies.extend(
        sets.iter()
            .map(|(name, set)| (name.as_str(), set as &dyn Vocabulary)),
    );
    let filtered = filter_queries(&all_queries, &vocabularies)?;

    create_dir(&cfg.out_dir)?;
    let mut written = Vec::new();
    let mut drops = Vec::new();
    write_drop_report(&filtered.dropped, &mut drops)?;
    let drop_path = cfg.out_dir.join(DROP_FILE);
    write_file(&drop_path, &drops)?;
    written.push(drop_path);

    let queries = filtered.retained;
    writeln!(
        log,
        "queries: {} generated, {} retained",
        all_queries.len(),
        queries.len()
    )?;
    if queries.is_empty() {
        return Err(Failure::Evaluation(anyhow!(
            "no queries left after filtering: every target or query set is missing from some model (see {})",
            cfg.out_dir.join(DROP_FILE).display()
        )));
    }

    let scope = if cfg.untyped_candidates {
        CandidateScope::All
    } else {
        CandidateScope::TargetType
    };
    let network_ranker = NetworkRanker::new(NETWORK_METHOD, &network, &catalog, scope);
    let embedding_rankers: Vec<EmbeddingRanker<'_>> = sets
        .iter()
        .flat_map(|(name, set)| {
            cfg.modes
                .iter()
                .map(|&mode| EmbeddingRanker::new(name.clone(), set, &catalog, mode, scope))
        })
        .collect();
    let mut rankers: Vec<&dyn QueryRanker> = embedding_rankers
        .iter()
        .map(|r| r as &dyn QueryRanker)
        .collect();
    rankers.push(&network_ranker);

    let mut report = evaluate(&queries, &rankers, cfg.k)?;
    report.add_group_means(&groups);
    let frequencies = entity_frequencies(&corpus, &catalog);
    let frequency = frequency_analysis(&queries, &report, &frequencies, cfg.seed);

    let table = render_precision_table(&report);
    for (name, contents) in [
        (TABLE_FILE, table.clone()),
        (RECALL_FILE, render_recall_curves(&report)),
        (FREQUENCY_FILE, render_frequency(&frequency)),
    ] {
        let path = cfg.out_dir.join(name);
        write_file(&path, contents.as_bytes())?;
        written.push(path);
    }
    for c in &report.cells {
        if c.n_failed > 0 {
            writeln!(
                log,
                "{}: {} of {} queries failed",
                c.label(),
                c.n_failed,
                c.n_queries
            )?;
        }
    }
    writeln!(log, "network scores sum edge weights over query entities")?;
    write!(log, "{table}")?;
    Ok(EvalOutcome {
        queries,
        report,
        frequency,
        written,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NeighborSource {
    Network,
    Embedding,
}

/// Prints the `n` nearest neighbors of `entity`, one `id<TAB>score` per line.
/// Network scores are edge weights; embedding scores are cosine distances.
pub fn cmd_neighbors(
    cfg: &RunConfig,
    source: NeighborSource,
    entity: &str,
    n: usize,
    out: &mut dyn Write,
) -> Result<Vec<(String, f64)>, Failure> {
    let listing = match source {
        NeighborSource::Network => {
            let catalog = load_catalog(cfg.require(&cfg.catalog, "catalog")?)?;
            let network = obtain_network(cfg, None, &catalog)?;
            top_neighbors(&network, entity, n)
                .map_err(|_| Failure::usage(format!("unknown entity {entity:?} in network")))?
                .neighbors
        }
        NeighborSource::Embedding => {
            let spec = cfg.embeddings.first().ok_or_else(|| {
                Failure::usage("--embedding NAME=PATH is required for embedding neighbors")
            })?;
            cfg.check_embeddings_exist()?;
            let set = load_vectors(&spec.path, cfg.normalize_embeddings)?;
            if set.vector(entity).is_none() {
                return Err(Failure::usage(format!(
                    "unknown entity {entity:?} in embedding {}",
                    spec.name
                )));
            }
            match &cfg.catalog {
                Some(_) => {
                    let catalog = load_catalog(cfg.require(&cfg.catalog, "catalog")?)?;
                    embedding_neighbors(&set, catalog.ids(None), entity, n)
                }
                None => {
                    embedding_neighbors(&set, set.tokens().iter().map(String::as_str), entity, n)
                }
            }
        }
    };
    for (id, score) in &listing {
        writeln!(out, "{id}\t{score}")?;
    }
    Ok(listing)
}

pub fn cmd_overlap(
    cfg: &RunConfig,
    per_type_sample: usize,
    gt_size: usize,
    log: &mut dyn Write,
) -> Result<OverlapStudy, Failure> {
    let catalog = load_catalog(cfg.require(&cfg.catalog, "catalog")?)?;
    let network = obtain_network(cfg, None, &catalog)?;
    let (sets, _) = load_embedding_sets(cfg)?;
    if sets.is_empty() {
        return Err(Failure::usage(
            "at least one --embedding NAME=PATH is required",
        ));
    }
    let refs: Vec<(&str, &EmbeddingSet)> = sets.iter().map(|(n, s)| (n.as_str(), s)).collect();
    let study = overlap_study(
        &network,
        &refs,
        &catalog,
        per_type_sample,
        gt_size,
        cfg.seed,
    )?;
    for w in &study.warnings {
        writeln!(log, "warning: {w}")?;
    }
    create_dir(&cfg.out_dir)?;
    write_file(
        &cfg.out_dir.join(OVERLAP_FILE),
        render_overlap(&study).as_bytes(),
    )?;
    let mut sampled = study.sampled_entities.join("\n");
    if !sampled.is_empty() {
        sampled.push('\n');
    }
    write_file(&cfg.out_dir.join("overlap_sample.txt"), sampled.as_bytes())?;
    writeln!(
        log,
        "sampled {} entities; wrote {}",
        study.sampled_entities.len(),
        cfg.out_dir.join(OVERLAP_FILE).display()
    )?;
    Ok(study)
}

pub const SYNTH_CORPUS: &str = "corpus.jsonl";
pub const SYNTH_CATALOG: &str = "catalog.tsv";
pub const SYNTH_EVENTS: &str = "events.jsonl";
pub const SYNTH_VECTORS: &str = "planted.vec";

pub fn cmd_synth(params: &SynthParams, out_dir: &Path, log: &mut dyn Write) -> Result<(), Failure> {
    let ds = generate_synthetic(params)?;
    create_dir(out_dir)?;
    let write_with = |name: &str,
                      f: &dyn Fn(&mut BufWriter<File>) -> multiassoc::Result<()>|
     -> Result<(), Failure> {
        let path = out_dir.join(name);
        let file = File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))
            .map_err(Failure::Usage)?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };
    write_with(SYNTH_CORPUS, &|w| write_corpus(&ds.corpus, w))?;
    write_with(SYNTH_CATALOG, &|w| ds.catalog.write_to(w))?;
    write_with(SYNTH_EVENTS, &|w| write_events(&ds.events, w))?;
    write_with(SYNTH_VECTORS, &|w| ds.embeddings.write_to(w))?;
    writeln!(
        log,
        "{} documents, {} entities, {} events; planted angle {} rad; wrote {}",
        ds.corpus.len(),
        ds.catalog.len(),
        ds.events.len(),
        ds.planted_angle,
        out_dir.display()
    )?;
    Ok(())
}
