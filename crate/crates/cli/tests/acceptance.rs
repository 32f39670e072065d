//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use multiassoc::corpus::{filter_queries, Vocabulary};
use multiassoc::eval::{
    evaluate, generate_synthetic, EmbeddingRanker, EvalReport, NetworkRanker, QueryRanker,
    SynthParams,
};
use multiassoc::{
    brute_force_rank, build_network, entity_view, generate_queries, load_network, rank_embedding,
    BuildParams, CandidateScope, CombinationMode, Document, EmbeddingSet, EntityCatalog,
    EntityType, Query, RankFailure, RankedResult,
};
use multiassoc_cli::{cmd_eval, cmd_synth, CommonArgs, RunConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Instance {
    set: EmbeddingSet,
    catalog: EntityCatalog,
    query: Query,
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().any(|x| x.abs() > 1e-3) {
            return v;
        }
    }
}

fn random_instance(rng: &mut ChaCha8Rng, q_max: usize) -> Instance {
    let n = rng.gen_range(q_max + 2..=100);
    let dim = rng.gen_range(1..=16);
    let q = rng.gen_range(1..=q_max);
    let mut catalog = EntityCatalog::new();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("E{i:03}");
        catalog
            .insert(id.clone(), EntityType::ALL[i % 3], id.clone())
            .unwrap();
        rows.push((id, random_vector(rng, dim)));
    }
    let mut order: Vec<String> = rows.iter().map(|(id, _)| id.clone()).collect();
    order.shuffle(rng);
    let set = EmbeddingSet::from_rows(dim, rows).unwrap();
    let target = order[q].clone();
    let target_type = catalog.entity_type(&target).unwrap();
    let query = Query::new("ev", order[..q].iter().cloned(), target, target_type);
    Instance {
        set,
        catalog,
        query,
    }
}

fn order(r: &RankedResult) -> Vec<&str> {
    r.ranking.iter().map(|(id, _)| id.as_str()).collect()
}

fn rebuild(set: &EmbeddingSet, f: impl Fn(&str, &[f64]) -> Vec<f64>) -> EmbeddingSet {
    let rows = set
        .tokens()
        .iter()
        .map(|t| (t.clone(), f(t, set.vector(t).unwrap())));
    EmbeddingSet::from_rows(set.dim(), rows).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1E);
    let instances = 1000;
    let mut comparisons = 0;
    for i in 0..instances {
        let inst = random_instance(&mut rng, 5);
        let view = entity_view(&inst.set, &inst.catalog, Some(inst.query.target_type)).unwrap();
        for mode in CombinationMode::ALL {
            let fast = rank_embedding(&inst.query, mode, &view).map_err(|e| e.to_string())?;
            let slow = brute_force_rank(&inst.query, mode, &view).map_err(|e| e.to_string())?;
            ensure(fast.failure == slow.failure, || {
                format!("instance {i} {mode}: failure differs")
            })?;
            ensure(order(&fast) == order(&slow), || {
                format!("instance {i} {mode}: ordering differs")
            })?;
            for (a, b) in fast.ranking.iter().zip(&slow.ranking) {
                ensure((a.1 - b.1).abs() <= 1e-9, || {
                    format!(
                        "instance {i} {mode}: score of {} differs by {:e}",
                        a.0,
                        (a.1 - b.1).abs()
                    )
                })?;
            }
            comparisons += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{instances} instances, {comparisons} mode comparisons, {elapsed:.2?}"
    ))
}

fn algebraic_invariants() -> Outcome {
    const N: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1A7);

    for i in 0..N {
        let inst = random_instance(&mut rng, 1);
        let view = entity_view(&inst.set, &inst.catalog, None).unwrap();
        let reference = rank_embedding(&inst.query, CombinationMode::Sum, &view).unwrap();
        for mode in CombinationMode::ALL {
            let r = rank_embedding(&inst.query, mode, &view).unwrap();
            ensure(order(&r) == order(&reference), || {
                format!("single-query collapse, instance {i}, {mode}")
            })?;
        }
    }

    for i in 0..N {
        let inst = random_instance(&mut rng, 5);
        let view = entity_view(&inst.set, &inst.catalog, None).unwrap();
        let mut permuted = inst.query.clone();
        permuted.query_entities.shuffle(&mut rng);
        permuted.query_entities.reverse();
        for mode in CombinationMode::ALL {
            let a = rank_embedding(&inst.query, mode, &view).unwrap();
            let b = rank_embedding(&permuted, mode, &view).unwrap();
            ensure(order(&a) == order(&b), || {
                format!("query permutation, instance {i}, {mode}")
            })?;
        }
    }

    for i in 0..N {
        let inst = random_instance(&mut rng, 5);
        let factors: Vec<f64> = (0..inst.set.len())
            .map(|_| rng.gen_range(0.01..100.0))
            .collect();
        let scaled = rebuild(&inst.set, |t, v| {
            if inst.query.query_entities.iter().any(|q| q == t) {
                v.to_vec()
            } else {
                let f = factors[inst.set.row_index(t).unwrap()];
                v.iter().map(|x| x * f).collect()
            }
        });
        let view = entity_view(&inst.set, &inst.catalog, None).unwrap();
        let scaled_view = entity_view(&scaled, &inst.catalog, None).unwrap();
        for mode in CombinationMode::ALL {
            let a = rank_embedding(&inst.query, mode, &view).unwrap();
            let b = rank_embedding(&inst.query, mode, &scaled_view).unwrap();
            ensure(order(&a) == order(&b), || {
                format!("candidate scaling, instance {i}, {mode}")
            })?;
        }
    }

    for i in 0..N {
        let inst = random_instance(&mut rng, 5);
        let factors: Vec<f64> = (0..inst.set.len())
            .map(|_| rng.gen_range(0.01..100.0))
            .collect();
        let scaled = rebuild(&inst.set, |t, v| {
            if inst.query.query_entities.iter().any(|q| q == t) {
                let f = factors[inst.set.row_index(t).unwrap()];
                v.iter().map(|x| x * f).collect()
            } else {
                v.to_vec()
            }
        });
        let view = entity_view(&inst.set, &inst.catalog, None).unwrap();
        let scaled_view = entity_view(&scaled, &inst.catalog, None).unwrap();
        for mode in [CombinationMode::Sum, CombinationMode::MinMax] {
            let a = rank_embedding(&inst.query, mode, &view).unwrap();
            let b = rank_embedding(&inst.query, mode, &scaled_view).unwrap();
            ensure(order(&a) == order(&b), || {
                format!("query scaling, instance {i}, {mode}")
            })?;
        }
    }

    // A query whose vectors cancel has no average direction; those draws are
    // counted and replaced so that N comparable instances are checked.
    let (mut checked, mut cancelled) = (0, 0);
    while checked < N {
        let inst = random_instance(&mut rng, 5);
        let unit = inst.set.normalize();
        let view = entity_view(&unit, &inst.catalog, None).unwrap();
        let sum = rank_embedding(&inst.query, CombinationMode::Sum, &view).unwrap();
        let avg = rank_embedding(&inst.query, CombinationMode::Avg, &view).unwrap();
        if avg.failure == Some(RankFailure::DegenerateCombination) {
            cancelled += 1;
            continue;
        }
        ensure(order(&sum) == order(&avg), || {
            format!("SUM vs AVG under unit norm, instance {checked}")
        })?;
        checked += 1;
    }
    Ok(format!(
        "5 properties x {N} instances, 0 violations ({cancelled} cancelling queries redrawn)"
    ))
}

fn degenerate_handling() -> Outcome {
    let set = EmbeddingSet::from_rows(
        2,
        [
            ("a", vec![1.0, 0.0]),
            ("b", vec![0.0, 1.0]),
            ("c", vec![0.6, 0.8]),
        ],
    )
    .unwrap();
    let mut catalog = EntityCatalog::new();
    for id in ["a", "b", "c"] {
        catalog.insert(id, EntityType::Person, id).unwrap();
    }
    let query = Query::new("ev", ["a", "b"], "c", EntityType::Person);
    let cwmult = EmbeddingRanker::new(
        "toy",
        &set,
        &catalog,
        CombinationMode::CwMult,
        CandidateScope::TargetType,
    );
    let sum = EmbeddingRanker::new(
        "toy",
        &set,
        &catalog,
        CombinationMode::Sum,
        CandidateScope::TargetType,
    );
    let single = cwmult.rank(&query).map_err(|e| e.to_string())?;
    ensure(single.failure.is_some(), || {
        "CWMULT produced a ranking".into()
    })?;
    let report =
        evaluate(std::slice::from_ref(&query), &[&cwmult, &sum], 10).map_err(|e| e.to_string())?;
    let cell = report
        .cell("toy", Some(CombinationMode::CwMult))
        .ok_or("missing CWMULT cell")?;
    ensure(
        cell.n_failed == 1 && cell.ranks == vec![None] && cell.precision_at_1 == 0.0,
        || format!("CWMULT cell: {cell:?}"),
    )?;
    let ok = report
        .cell("toy", Some(CombinationMode::Sum))
        .ok_or("missing SUM cell")?;
    ensure(ok.precision_at_1 == 1.0, || {
        "SUM cell should still score".into()
    })?;
    Ok(format!(
        "failure \"{}\" recorded, counted as a miss",
        single.failure.unwrap()
    ))
}

fn worked_instance() -> Outcome {
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
    let mut catalog = EntityCatalog::new();
    for id in ["a", "b", "c", "d", "e"] {
        catalog.insert(id, EntityType::Person, id).unwrap();
    }
    let view = entity_view(&set, &catalog, Some(EntityType::Person)).unwrap();
    let query = Query::new("ev", ["a", "b"], "c", EntityType::Person);
    let r = rank_embedding(&query, CombinationMode::Sum, &view).map_err(|e| e.to_string())?;
    ensure(order(&r) == ["c", "e", "d"], || {
        format!("ranking {:?}", order(&r))
    })?;
    for ((id, got), want) in r.ranking.iter().zip([0.6, 0.6, 3.0]) {
        ensure((got - want).abs() <= 1e-12, || {
            format!("{id}: {got} != {want}")
        })?;
    }
    ensure(r.ranking[0].1 == r.ranking[1].1, || {
        "c and e should tie exactly".into()
    })?;
    let shown: Vec<String> = r
        .ranking
        .iter()
        .map(|(id, s)| format!("{id}:{s}"))
        .collect();
    Ok(shown.join(" "))
}

fn random_corpus(rng: &mut ChaCha8Rng, docs: usize) -> Vec<Document> {
    (0..docs)
        .map(|d| Document {
            doc_id: format!("doc{d}"),
            sentences: (0..rng.gen_range(1..6))
                .map(|_| {
                    (0..rng.gen_range(0..4))
                        .map(|_| format!("N{}", rng.gen_range(0..12)))
                        .collect()
                })
                .collect(),
        })
        .collect()
}

fn network_builder() -> Outcome {
    let mut catalog = EntityCatalog::new();
    for i in 0..12 {
        catalog
            .insert(format!("N{i}"), EntityType::ALL[i % 3], "n")
            .unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xED6E);
    let trials = 200;
    for t in 0..trials {
        let params = BuildParams {
            max_sentence_distance: if rng.gen_bool(0.5) {
                None
            } else {
                Some(rng.gen_range(0..4))
            },
            dedupe_per_sentence: rng.gen_bool(0.5),
        };
        let docs = rng.gen_range(1..10);
        let corpus = random_corpus(&mut rng, docs);
        let net = build_network(&corpus, &catalog, params);
        for (u, v, w) in net.edges() {
            ensure(net.weight(v, u) == w && w > 0.0, || {
                format!("trial {t}: asymmetric edge {u}-{v}")
            })?;
        }
        let mut shuffled = corpus.clone();
        shuffled.shuffle(&mut rng);
        ensure(build_network(&shuffled, &catalog, params) == net, || {
            format!("trial {t}: order dependence")
        })?;

        let split = rng.gen_range(0..=corpus.len());
        let (left, right) = corpus.split_at(split);
        let (a, b) = (
            build_network(left, &catalog, params),
            build_network(right, &catalog, params),
        );
        for u in catalog.ids(None) {
            for v in catalog.ids(None) {
                let diff = (net.weight(u, v) - a.weight(u, v) - b.weight(u, v)).abs();
                ensure(diff <= 1e-12, || {
                    format!("trial {t}: additivity off by {diff:e} at {u}-{v}")
                })?;
            }
        }

        let mut bytes = Vec::new();
        net.write_to(&mut bytes).map_err(|e| e.to_string())?;
        let loaded = load_network(bytes.as_slice()).map_err(|e| e.to_string())?;
        ensure(loaded == net, || format!("trial {t}: save/load mismatch"))?;
    }

    let mut hand_catalog = EntityCatalog::new();
    hand_catalog.insert("A", EntityType::Person, "A").unwrap();
    hand_catalog.insert("B", EntityType::Location, "B").unwrap();
    let doc = Document {
        doc_id: "hand".into(),
        sentences: vec![vec!["A".into(), "B".into()], vec![], vec!["B".into()]],
    };
    let w = build_network(&[doc], &hand_catalog, BuildParams::default()).weight("A", "B");
    ensure((w - 4.0 / 3.0).abs() <= 1e-12, || format!("w(A,B) = {w}"))?;
    Ok(format!("{trials} random corpora; w(A,B) = {w}"))
}

fn planted_report(noise_rate: f64, k: usize) -> Result<(EvalReport, usize), String> {
    let params = SynthParams {
        noise_rate,
        ..SynthParams::default()
    };
    let ds = generate_synthetic(&params).map_err(|e| e.to_string())?;
    let network = build_network(&ds.corpus, &ds.catalog, BuildParams::default());
    let queries = generate_queries(&ds.events, &ds.catalog);
    let filtered = filter_queries(
        &queries,
        &[
            ("network", &network as &dyn Vocabulary),
            ("planted", &ds.embeddings),
        ],
    )
    .map_err(|e| e.to_string())?;
    let net = NetworkRanker::new("network", &network, &ds.catalog, CandidateScope::TargetType);
    let modes: Vec<EmbeddingRanker<'_>> = CombinationMode::ALL
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
    let mut rankers: Vec<&dyn QueryRanker> = modes.iter().map(|r| r as &dyn QueryRanker).collect();
    rankers.push(&net);
    let report = evaluate(&filtered.retained, &rankers, k).map_err(|e| e.to_string())?;
    Ok((report, filtered.retained.len()))
}

fn prc(report: &EvalReport, method: &str, mode: Option<CombinationMode>) -> Result<f64, String> {
    report
        .cell(method, mode)
        .map(|c| c.precision_at_1)
        .ok_or_else(|| format!("missing cell {method}"))
}

fn metric_identities() -> Outcome {
    let mut cells = 0;
    for noise in [0.0, 0.3, 0.6] {
        let (report, _) = planted_report(noise, 10)?;
        for c in &report.cells {
            ensure(c.recall_at_k[0] == c.precision_at_1, || {
                format!("{} noise {noise}: recall@1 != prc@1", c.label())
            })?;
            ensure(c.recall_at_k.windows(2).all(|w| w[0] <= w[1]), || {
                format!("{} noise {noise}: recall@k not monotone", c.label())
            })?;
            cells += 1;
        }
    }
    // With K at least the candidate pool size, every unfailed query is recalled.
    let (solvable, n) = planted_report(0.0, 40)?;
    let net = solvable
        .cell("network", None)
        .ok_or("missing network cell")?;
    ensure(
        net.n_failed == 0 && *net.recall_at_k.last().unwrap() == 1.0,
        || {
            format!(
                "recall@K on solvable instance = {}",
                net.recall_at_k.last().unwrap()
            )
        },
    )?;
    let sum = solvable
        .cell("planted", Some(CombinationMode::Sum))
        .ok_or("missing SUM cell")?;
    ensure(*sum.recall_at_k.last().unwrap() == 1.0, || {
        "SUM recall@K < 1".into()
    })?;
    Ok(format!(
        "{cells} cells checked; recall@K = 1 over {n} solvable queries"
    ))
}

fn planted_end_to_end() -> Outcome {
    let start = Instant::now();
    let (report, n) = planted_report(0.0, 10)?;
    let net = prc(&report, "network", None)?;
    let sum = prc(&report, "planted", Some(CombinationMode::Sum))?;
    let elapsed = start.elapsed();
    let detail =
        format!("{n} queries, network prc@1 = {net:.3}, SUM prc@1 = {sum:.3}, {elapsed:.2?}");
    ensure(
        net == 1.0 && sum >= 0.9 && elapsed < Duration::from_secs(120),
        || detail.clone(),
    )?;
    Ok(detail)
}

fn noisy_trend() -> Outcome {
    let (report, n) = planted_report(0.3, 10)?;
    let row: Vec<String> = CombinationMode::ALL
        .into_iter()
        .map(|m| prc(&report, "planted", Some(m)).map(|p| format!("{m}={p:.3}")))
        .collect::<Result<_, _>>()?;
    let sum = prc(&report, "planted", Some(CombinationMode::Sum))?;
    let cwmult = prc(&report, "planted", Some(CombinationMode::CwMult))?;
    let detail = format!("{n} queries: {}", row.join(" "));
    ensure(sum >= cwmult, || detail.clone())?;
    Ok(detail)
}

fn run_eval(data: &Path, out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let args = CommonArgs {
        corpus: Some(data.join(multiassoc_cli::commands::SYNTH_CORPUS)),
        catalog: Some(data.join(multiassoc_cli::commands::SYNTH_CATALOG)),
        events: Some(data.join(multiassoc_cli::commands::SYNTH_EVENTS)),
        embeddings: vec![format!(
            "planted={}",
            data.join(multiassoc_cli::commands::SYNTH_VECTORS).display()
        )],
        seed: Some(11),
        out_dir: Some(out.to_path_buf()),
        ..Default::default()
    };
    let cfg = RunConfig::resolve(&args).map_err(|e| e.to_string())?;
    let outcome = cmd_eval(&cfg, &mut std::io::sink()).map_err(|e| e.to_string())?;
    outcome
        .written
        .iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            std::fs::read(p)
                .map(|b| (name, b))
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let params = SynthParams {
        noise_rate: 0.3,
        ..SynthParams::default()
    };
    cmd_synth(&params, &data, &mut std::io::sink()).map_err(|e| e.to_string())?;
    let first = run_eval(&data, &dir.path().join("run1"))?;
    let second = run_eval(&data, &dir.path().join("run2"))?;
    ensure(first.len() == second.len() && !first.is_empty(), || {
        "different file sets".into()
    })?;
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        ensure(a == b, || format!("{name} differs between runs"))?;
    }
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("byte-identical: {}", names.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("mode-formula oracle", oracle_equivalence),
        ("algebraic invariants", algebraic_invariants),
        ("degenerate handling", degenerate_handling),
        ("hand-computed vectors", worked_instance),
        ("network builder", network_builder),
        ("metric identities", metric_identities),
        ("planted end-to-end run", planted_end_to_end),
        ("noisy trend SUM >= CWMULT", noisy_trend),
        ("eval determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
