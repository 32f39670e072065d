use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multiassoc::eval::overlap::{DEFAULT_GT_SIZE, DEFAULT_PER_TYPE_SAMPLE};
use multiassoc::eval::SynthParams;
use multiassoc_cli::{
    cmd_build_network, cmd_eval, cmd_neighbors, cmd_overlap, cmd_synth, CommonArgs, Failure,
    NeighborSource, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "multiassoc",
    version,
    about = "Multi-entity association retrieval and evaluation"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the cooccurrence network from --corpus and --catalog.
    BuildNetwork {
        #[arg(long)]
        out: PathBuf,
    },
    /// Event-completion evaluation; writes tables and curves to --out-dir.
    Eval,
    /// Nearest neighbors of one entity.
    Neighbors {
        #[arg(long, value_enum)]
        source: NeighborSource,
        #[arg(long)]
        entity: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Agreement of embedding neighborhoods with network neighborhoods.
    Overlap {
        #[arg(long, default_value_t = DEFAULT_PER_TYPE_SAMPLE)]
        per_type: usize,
        #[arg(long, default_value_t = DEFAULT_GT_SIZE)]
        gt_size: usize,
    },
    /// Write a planted synthetic dataset to --out-dir.
    Synth {
        #[arg(long, default_value_t = 40)]
        n_entities: usize,
        #[arg(long, default_value_t = 8)]
        n_events: usize,
        #[arg(long, default_value_t = 3)]
        per_event: usize,
        #[arg(long, default_value_t = 60)]
        n_docs: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_rate: f64,
        #[arg(long, default_value_t = 32)]
        dim: usize,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("MULTIASSOC_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Failure::usage(format!(
            "MULTIASSOC_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let cfg = RunConfig::resolve(&cli.common)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::BuildNetwork { out: path } => cmd_build_network(&cfg, &path, &mut out).map(drop),
        Command::Eval => cmd_eval(&cfg, &mut out).map(drop),
        Command::Neighbors { source, entity, n } => {
            cmd_neighbors(&cfg, source, &entity, n, &mut out).map(drop)
        }
        Command::Overlap { per_type, gt_size } => {
            cmd_overlap(&cfg, per_type, gt_size, &mut out).map(drop)
        }
        Command::Synth {
            n_entities,
            n_events,
            per_event,
            n_docs,
            noise_rate,
            dim,
        } => {
            let params = SynthParams {
                seed: cfg.seed,
                n_entities,
                n_events,
                entities_per_event: per_event,
                n_docs,
                noise_rate,
                dim,
                ..SynthParams::default()
            };
            cmd_synth(&params, &cfg.out_dir, &mut out)
        }
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
