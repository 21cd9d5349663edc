//! Population management: round-robin evaluation of each new challenger
//! into a persistent Nash buffer, the antisymmetric payoff matrix built from
//! it, opponent sampling from the top of the max-entropy Nash distribution
//! and rotation of the weakest member out of the population.

mod buffer;
mod manifest;
mod matrix_game;
mod population;

use thiserror::Error;

pub use buffer::{evaluate_challenger, evaluate_challenger_parallel, fill_payoff, BufferEntry, NashBuffer};
pub use manifest::{PopulationManifest, MANIFEST_VERSION};
pub use matrix_game::{best_response, latest_opponent_run, populationer_run, spinning_top, MatrixEngine, MatrixRun};
pub use population::{
    select_opponent_and_rotate, top_n_indices, Agent, OpponentChoice, Population, Populationer, PopulationerConfig,
    Rotation,
};

use crate::nash::NashError;

pub const DEFAULT_TOP_N: usize = 5;
pub const DEFAULT_CAPACITY: usize = 21;

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("label {0:?} is not in the population")]
    UnknownLabel(String),
    #[error("label {0:?} is already in the population")]
    DuplicateLabel(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("manifest version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
