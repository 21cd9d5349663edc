//! Exhaustive shallow search used to label tactical test positions.

use super::movegen::reference_legal_moves;
use crate::xiangqi::{Move, Position};

/// Moves after which the opponent has no legal reply (2-ply minimax using
/// the reference generator).
pub fn mating_moves(position: &Position) -> Vec<Move> {
    reference_legal_moves(position)
        .into_iter()
        .filter(|&m| reference_legal_moves(&position.apply_unchecked(m)).is_empty())
        .collect()
}
