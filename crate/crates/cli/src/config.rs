//! Run configuration, loaded from TOML with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xqlab::analysis::{BinMode, DEFAULT_K, DEFAULT_Z_CUTOFF};
use xqlab::evaluator::{Arch, TrainConfig};
use xqlab::mcts::SearchConfig;
use xqlab::nash::NashSolver;
use xqlab::populationer::PopulationerConfig;

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "XQLAB_DATA_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("config file {file}: {source}")]
    Parse { file: String, source: toml::de::Error },
    #[error("config file {file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("unknown preset {0:?} (known: tiny, full)")]
    Preset(String),
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub bin_width: f64,
    pub bin_mode: BinMode,
    pub elo_k: f64,
    pub z_cutoff: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bin_width: 100.0,
            bin_mode: BinMode::Midpoint,
            elo_k: DEFAULT_K,
            z_cutoff: DEFAULT_Z_CUTOFF,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentResample {
    /// A fresh opponent is drawn for every self-play game.
    PerGame,
    /// One opponent is drawn per rotation and kept until the next.
    PerRotation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Self-play games between population rotations.
    pub rotation_every_games: u64,
    /// Optimizer steps between rolling checkpoints.
    pub checkpoint_every_steps: u64,
    pub replay_capacity: usize,
    /// Optimizer steps after each finished self-play game.
    pub steps_per_game: u64,
    /// Samples required in the replay buffer before training starts. One
    /// buffer flush epoch ("block") in the original description.
    pub min_replay: usize,
    pub opponent_resample: OpponentResample,
    /// Simulations per move in population evaluation games.
    pub eval_simulations: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            rotation_every_games: 200,
            checkpoint_every_steps: 400,
            replay_capacity: 100_000,
            steps_per_game: 8,
            min_replay: 256,
            opponent_resample: OpponentResample::PerGame,
            eval_simulations: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Self-play games run concurrently. Each game has its own seeded
    /// random source and results are merged in game order, so a run is
    /// reproducible for a fixed worker count.
    pub workers: usize,
    pub data_dir: PathBuf,
    pub arch: Arch,
    pub search: SearchConfig,
    pub train: TrainConfig,
    pub training: TrainingConfig,
    pub populationer: PopulationerConfig,
    pub nash: NashSolver,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::tiny()
    }
}

impl RunConfig {
    /// Desk-scale preset: 160 simulations, two 32-filter layers and a
    /// population of five.
    pub fn tiny() -> RunConfig {
        RunConfig {
            seed: 0,
            workers: 1,
            data_dir: std::env::var_os(DATA_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("xqlab-data")),
            arch: Arch::tiny(),
            search: SearchConfig::with_simulations(160),
            train: TrainConfig::default(),
            training: TrainingConfig::default(),
            populationer: PopulationerConfig {
                capacity: 5,
                ..PopulationerConfig::default()
            },
            nash: NashSolver::default(),
            analysis: AnalysisConfig::default(),
        }
    }

    /// The full-size network and population.
    pub fn full() -> RunConfig {
        RunConfig {
            arch: Arch::full(),
            search: SearchConfig::with_simulations(800),
            populationer: PopulationerConfig::default(),
            ..RunConfig::tiny()
        }
    }

    pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
        match name {
            "tiny" => Ok(RunConfig::tiny()),
            "full" => Ok(RunConfig::full()),
            other => Err(ConfigError::Preset(other.to_string())),
        }
    }

    pub fn from_toml(text: &str, file: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            file: file.to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            file: file.clone(),
            source,
        })?;
        RunConfig::from_toml(&text, &file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.arch.filters == 0 || self.arch.layers == 0 {
            return Err(invalid("arch", "filters and layers must be positive"));
        }
        if self.arch.policy_channels == 0 || self.arch.value_hidden == 0 {
            return Err(invalid("arch", "policy_channels and value_hidden must be positive"));
        }
        self.search
            .validate()
            .map_err(|e| invalid("search", e.to_string()))?;
        if self.train.batch_size == 0 {
            return Err(invalid("train.batch_size", "must be at least 1"));
        }
        if self.train.learning_rates.is_empty() || self.train.learning_rates.iter().any(|&r| !(r > 0.0)) {
            return Err(invalid("train.learning_rates", "must be a non-empty list of positive rates"));
        }
        if !(0.0..1.0).contains(&self.train.momentum) {
            return Err(invalid("train.momentum", "must be in [0, 1)"));
        }
        if self.training.rotation_every_games == 0 {
            return Err(invalid("training.rotation_every_games", "must be at least 1"));
        }
        if self.training.checkpoint_every_steps == 0 {
            return Err(invalid("training.checkpoint_every_steps", "must be at least 1"));
        }
        if self.training.replay_capacity < self.train.batch_size {
            return Err(invalid("training.replay_capacity", "must hold at least one batch"));
        }
        if self.training.eval_simulations == 0 {
            return Err(invalid("training.eval_simulations", "must be at least 1"));
        }
        if self.populationer.capacity == 0 {
            return Err(invalid("populationer.capacity", "must be at least 1"));
        }
        if self.populationer.top_n == 0 {
            return Err(invalid("populationer.top_n", "must be at least 1"));
        }
        if self.populationer.games_per_pair < 2 {
            return Err(invalid("populationer.games_per_pair", "must be at least 2"));
        }
        if !(self.nash.tol > 0.0) || self.nash.max_iterations == 0 {
            return Err(invalid("nash", "tol and max_iterations must be positive"));
        }
        if !(self.analysis.bin_width > 0.0) {
            return Err(invalid("analysis.bin_width", "must be positive"));
        }
        if !(self.analysis.elo_k > 0.0) {
            return Err(invalid("analysis.elo_k", "must be positive"));
        }
        if !(self.analysis.z_cutoff > 0.0) {
            return Err(invalid("analysis.z_cutoff", "must be positive"));
        }
        Ok(())
    }
}
