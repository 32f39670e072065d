//! Run configuration: an optional TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use multiassoc::network::BuildParams;
use multiassoc::CombinationMode;
use serde::Deserialize;

use crate::Failure;

/// Flags shared by every subcommand. Any flag left unset falls back to the
/// config file, then to the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with the same keys as the long flags (snake_case).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    #[arg(long, global = true)]
    pub events: Option<PathBuf>,
    /// Prebuilt network edge list; built from the corpus when absent.
    #[arg(long, global = true)]
    pub network: Option<PathBuf>,
    /// Labelled vector file, NAME=PATH. Repeat a NAME to average several files.
    #[arg(long = "embedding", value_name = "NAME=PATH", global = true)]
    pub embeddings: Vec<String>,
    /// Comma-separated combination modes.
    #[arg(long, value_delimiter = ',', global = true)]
    pub modes: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Integer or "inf".
    #[arg(long, global = true)]
    pub max_sentence_distance: Option<String>,
    #[arg(long, global = true)]
    pub dedupe: Option<bool>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub untyped_candidates: bool,
    #[arg(long, global = true)]
    pub normalize_embeddings: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    corpus: Option<PathBuf>,
    catalog: Option<PathBuf>,
    events: Option<PathBuf>,
    network: Option<PathBuf>,
    #[serde(default)]
    embedding: Vec<String>,
    modes: Option<Vec<String>>,
    k: Option<usize>,
    seed: Option<u64>,
    max_sentence_distance: Option<toml::Value>,
    dedupe: Option<bool>,
    out_dir: Option<PathBuf>,
    untyped_candidates: Option<bool>,
    normalize_embeddings: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingSpec {
    pub name: String,
    pub path: PathBuf,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub network: Option<PathBuf>,
    pub embeddings: Vec<EmbeddingSpec>,
    pub modes: Vec<CombinationMode>,
    pub k: usize,
    pub seed: u64,
    pub build: BuildParams,
    pub out_dir: PathBuf,
    pub untyped_candidates: bool,
    pub normalize_embeddings: bool,
}

fn parse_max_distance(s: &str) -> anyhow::Result<Option<usize>> {
    match s.trim() {
        "inf" | "unlimited" => Ok(None),
        v => Ok(Some(v.parse().with_context(|| {
            format!("invalid max sentence distance {v:?}")
        })?)),
    }
}

fn parse_embedding(spec: &str) -> anyhow::Result<EmbeddingSpec> {
    let Some((name, path)) = spec.split_once('=') else {
        bail!("embedding must be NAME=PATH, got {spec:?}");
    };
    let name = name.trim();
    if name.is_empty() || name.contains([',', '#', ':']) || name.chars().any(char::is_whitespace) {
        bail!("invalid embedding name {name:?}: no commas, '#', ':' or whitespace");
    }
    if name == "network" {
        bail!("embedding name \"network\" is reserved");
    }
    Ok(EmbeddingSpec {
        name: name.to_string(),
        path: PathBuf::from(path.trim()),
    })
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, Failure> {
        Self::resolve_inner(args).map_err(Failure::Usage)
    }

    fn resolve_inner(args: &CommonArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config file {}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("invalid config file {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let embedding_specs = if args.embeddings.is_empty() {
            &file.embedding
        } else {
            &args.embeddings
        };
        let embeddings = embedding_specs
            .iter()
            .map(|s| parse_embedding(s))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let modes = match args.modes.as_ref().or(file.modes.as_ref()) {
            Some(list) => list
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<CombinationMode>().map_err(anyhow::Error::msg))
                .collect::<anyhow::Result<Vec<_>>>()?,
            None => CombinationMode::ALL.to_vec(),
        };
        let max_sentence_distance = match (&args.max_sentence_distance, &file.max_sentence_distance)
        {
            (Some(s), _) => parse_max_distance(s)?,
            (None, Some(toml::Value::Integer(i))) if *i >= 0 => Some(*i as usize),
            (None, Some(toml::Value::String(s))) => parse_max_distance(s)?,
            (None, Some(other)) => bail!("invalid max_sentence_distance {other}"),
            (None, None) => None,
        };
        let k = args.k.or(file.k).unwrap_or(multiassoc::eval::DEFAULT_K);
        if k == 0 {
            bail!("k must be positive");
        }
        Ok(Self {
            corpus: args.corpus.clone().or(file.corpus),
            catalog: args.catalog.clone().or(file.catalog),
            events: args.events.clone().or(file.events),
            network: args.network.clone().or(file.network),
            embeddings,
            modes,
            k,
            seed: args.seed.or(file.seed).unwrap_or(0),
            build: BuildParams {
                max_sentence_distance,
                dedupe_per_sentence: args.dedupe.or(file.dedupe).unwrap_or(true),
            },
            out_dir: args
                .out_dir
                .clone()
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            untyped_candidates: args.untyped_candidates || file.untyped_candidates.unwrap_or(false),
            normalize_embeddings: args.normalize_embeddings
                || file.normalize_embeddings.unwrap_or(false),
        })
    }

    /// The path for `what`, which must be configured and exist.
    pub fn require<'a>(&self, path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, Failure> {
        let Some(p) = path else {
            return Err(Failure::usage(format!("--{what} is required")));
        };
        if !p.exists() {
            return Err(Failure::usage(format!(
                "{what} file not found: {}",
                p.display()
            )));
        }
        Ok(p)
    }

    pub fn check_embeddings_exist(&self) -> Result<(), Failure> {
        for e in &self.embeddings {
            if !e.path.exists() {
                return Err(Failure::usage(format!(
                    "embedding file not found: {} ({})",
                    e.path.display(),
                    e.name
                )));
            }
        }
        Ok(())
    }
}
