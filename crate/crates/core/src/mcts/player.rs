use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};
use thiserror::Error;

use super::{search, select_move, visit_policy, SearchConfig, SearchError, SelectMode};
use crate::evaluator::{encode_state, oriented_indices, Evaluator, MoveTable, Trajectory, Turn};
use crate::xiangqi::{Color, GameResult, GameRules, Move, Position};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlayerError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("player asked to move in a finished game")]
    NoMoves,
    #[error("{0}")]
    Other(String),
}

/// Something that picks a move in a live position.
pub trait Player: Send + Sync {
    fn choose(&self, position: &Position, rng: &mut dyn RngCore) -> Result<Move, PlayerError>;
}

/// Uniformly random legal moves.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPlayer;

impl Player for RandomPlayer {
    fn choose(&self, position: &Position, rng: &mut dyn RngCore) -> Result<Move, PlayerError> {
        position
            .legal_moves()
            .choose(rng)
            .copied()
            .ok_or(PlayerError::NoMoves)
    }
}

/// Tree search with a fixed evaluator.
#[derive(Clone, Debug)]
pub struct MctsPlayer<E> {
    pub eval: E,
    pub config: SearchConfig,
    pub mode: SelectMode,
    /// Mix Dirichlet noise into the root priors.
    pub noise: bool,
}

impl<E: Evaluator> MctsPlayer<E> {
    /// Greedy, noise-free play.
    pub fn evaluation(eval: E, config: SearchConfig) -> Self {
        MctsPlayer {
            eval,
            config,
            mode: SelectMode::Evaluation,
            noise: false,
        }
    }
}

impl<E: Evaluator> Player for MctsPlayer<E> {
    fn choose(&self, position: &Position, rng: &mut dyn RngCore) -> Result<Move, PlayerError> {
        let out = if self.noise {
            search(position, &self.eval, &self.config, Some(&mut *rng))?
        } else {
            search::<E, dyn RngCore>(position, &self.eval, &self.config, None)?
        };
        Ok(select_move(&out, self.mode, rng))
    }
}

/// Plays one game and returns the result and the moves played.
pub fn play_game(
    red: &dyn Player,
    black: &dyn Player,
    start: &Position,
    rules: &GameRules,
    rng: &mut dyn RngCore,
) -> Result<(GameResult, Vec<Move>), PlayerError> {
    let mut p = start.clone();
    let mut moves = Vec::new();
    loop {
        if let Some(r) = p.terminal_result(rules) {
            return Ok((r, moves));
        }
        let player = match p.side_to_move() {
            Color::Red => red,
            Color::Black => black,
        };
        let mv = player.choose(&p, rng)?;
        p = p
            .apply_move(mv)
            .map_err(|e| PlayerError::Other(format!("player returned {mv}: {e}")))?;
        moves.push(mv);
    }
}

/// A finished search-driven game with its training record.
#[derive(Clone, Debug)]
pub struct SelfPlayGame {
    pub result: GameResult,
    pub moves: Vec<Move>,
    pub trajectory: Trajectory,
}

/// Plays a game in which both sides search, Red with `red` and Black with
/// `black` (pass the same evaluator twice for pure self-play). Every turn
/// is recorded with the visit distribution at temperature 1 as its policy
/// target; the move itself follows the temperature schedule of `cfg`.
pub fn self_play_game<E1, E2, R>(
    red: &E1,
    black: &E2,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<SelfPlayGame, PlayerError>
where
    E1: Evaluator + ?Sized,
    E2: Evaluator + ?Sized,
    R: Rng + ?Sized,
{
    let table = MoveTable::global();
    let mut p = Position::initial();
    let mut moves = Vec::new();
    let mut trajectory = Trajectory::default();
    loop {
        if let Some(result) = p.terminal_result(&cfg.rules) {
            return Ok(SelfPlayGame {
                result,
                moves,
                trajectory,
            });
        }
        let out = match p.side_to_move() {
            Color::Red => search(&p, red, cfg, Some(&mut *rng))?,
            Color::Black => search(&p, black, cfg, Some(&mut *rng))?,
        };
        let legal = oriented_indices(table, p.side_to_move(), &out.moves)
            .map_err(|e| PlayerError::Other(e.to_string()))?;
        trajectory.push(Turn {
            state: encode_state(&p),
            mover: p.side_to_move(),
            legal,
            pi: visit_policy(&out.visits, 1.0),
            v: out.root_value,
            p: out.priors.clone(),
        });
        let mv = select_move(&out, SelectMode::Training, rng);
        p = p.apply_unchecked(p.find_legal(mv).ok_or(PlayerError::NoMoves)?);
        moves.push(mv);
    }
}
