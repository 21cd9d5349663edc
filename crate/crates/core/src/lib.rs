//! Population-based training and meta-game analysis for Xiangqi.
//!
//! The crate bundles a complete rules engine, a PUCT tree search driven by a
//! pluggable evaluator, a small trainable policy/value network, a
//! maximum-entropy Nash solver for antisymmetric meta-games, the measurement
//! toolkit for non-transitivity (Elo, Nash clustering, 3-cycles, relative
//! population performance, exploitability, Schur embeddings) and the
//! population manager that ties them together.

pub mod analysis;
pub mod evaluator;
pub mod mcts;
pub mod nash;
pub mod populationer;
pub mod xiangqi;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use xiangqi::{Color, GameResult, GameRules, Move, Piece, PieceKind, Position, Square};
