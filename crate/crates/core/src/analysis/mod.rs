//! Meta-game measurements: Elo, payoff matrices built from rated game
//! records, Nash clustering, 3-cycle counts, relative population Elo and
//! performance, exploitability and the Schur gamescape.

mod binned;
mod clustering;
mod cycles;
mod elo;
mod gamescape;
mod profile;
mod rating;
mod records;
mod rpp;
mod synthetic;

use thiserror::Error;

pub use binned::{
    bins_for_records, build_payoff_from_records, payoff_from_tally, tally, uniform_bins, validate_bins, BinMode,
    BinnedGames, EloBin,
};
pub use clustering::{nash_clustering, NashClustering};
pub use cycles::{adjacency, rps_cycles, RpsCycles};
pub use elo::{
    elo_expected, elo_expected_q, elo_score, elo_win_probability, EloState, DEFAULT_K, INITIAL_RATING,
};
pub use gamescape::{
    gamescape_embedding, inliers, line_residual, pairwise_distances, quadratic_fit, Gamescape, QuadraticFit,
    DEFAULT_Z_CUTOFF,
};
pub use profile::{spinning_top_profile, write_profile_csv, ProfileRow};
pub use rating::{cross_payoff, rp_elo, MatchEngine, RpElo};
pub use records::{read_jsonl, write_jsonl, GameRecord};
pub use synthetic::elo_logistic_records;
pub use rpp::{exploitability, rpp, rpp_detailed, symmetric_exploitability, Exploitability};

use crate::nash::NashError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown player {0:?}")]
    UnknownPlayer(String),
    #[error("score {0} is not 0, 0.5 or 1")]
    InvalidScore(f64),
    #[error("invalid bins: {0}")]
    InvalidBins(String),
    #[error("record {index} has no rating for one of its players")]
    MissingElo { index: usize },
    #[error("record on line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("shape: {0}")]
    Shape(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("game engine: {0}")]
    Engine(String),
    #[error("clustering stopped after {} clusters: {source}", partial.clusters.len())]
    Clustering {
        partial: NashClustering,
        source: NashError,
    },
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
