//! Batch commands behind the `multiassoc` binary.
//!
//! Exit status: 0 on success, 1 when an evaluation cannot produce results
//! (for example every query was filtered out), 2 for usage and input errors.

pub mod commands;
pub mod config;

use std::fmt;

pub use commands::{
    cmd_build_network, cmd_eval, cmd_neighbors, cmd_overlap, cmd_synth, EvalOutcome, NeighborSource,
};
pub use config::{CommonArgs, RunConfig};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, missing or malformed input files.
    Usage(anyhow::Error),
    /// The inputs were valid but the evaluation has nothing to report.
    Evaluation(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Evaluation(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Evaluation(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<multiassoc::Error> for Failure {
    fn from(e: multiassoc::Error) -> Self {
        Failure::Usage(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.into())
    }
}
