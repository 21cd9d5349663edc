use std::collections::HashMap;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::xiangqi::{Color, Move, Square, FILES, RANKS, SQUARES};

/// Every (from, to) pair some piece of either colour could make on an empty
/// board, sorted by (from, to). The position of a pair in this list is its
/// action index.
#[derive(Debug, Clone)]
pub struct MoveTable {
    moves: Vec<(Square, Square)>,
    index: HashMap<(u8, u8), u16>,
    checksum: [u8; 32],
}

fn shift(sq: Square, df: i32, dr: i32) -> Option<Square> {
    let f = sq.file() as i32 + df;
    let r = sq.rank() as i32 + dr;
    if (0..FILES as i32).contains(&f) && (0..RANKS as i32).contains(&r) {
        Square::new(f as usize, r as usize)
    } else {
        None
    }
}

fn advisor_point(sq: Square, color: Color) -> bool {
    let rel = match color {
        Color::Red => sq.rank(),
        Color::Black => RANKS - 1 - sq.rank(),
    };
    sq.in_palace(color) && (sq.file() + rel) % 2 == 1
}

fn bishop_point(sq: Square, color: Color) -> bool {
    let rel = match color {
        Color::Red => sq.rank(),
        Color::Black => RANKS - 1 - sq.rank(),
    };
    rel <= 4 && rel % 2 == 0 && sq.file() % 2 == 0 && (sq.file() / 2 + rel / 2) % 2 == 1
}

impl MoveTable {
    pub fn new() -> MoveTable {
        let mut pairs = Vec::new();
        for from in (0..SQUARES).map(|i| Square::from_index(i).unwrap()) {
            // Rook lines cover king, pawn, cannon and rook steps.
            for to in (0..SQUARES).map(|i| Square::from_index(i).unwrap()) {
                if to != from && (to.file() == from.file() || to.rank() == from.rank()) {
                    pairs.push((from, to));
                }
            }
            for (df, dr) in [(1, 2), (-1, 2), (1, -2), (-1, -2), (2, 1), (2, -1), (-2, 1), (-2, -1)] {
                if let Some(to) = shift(from, df, dr) {
                    pairs.push((from, to));
                }
            }
            for color in [Color::Red, Color::Black] {
                if advisor_point(from, color) {
                    for (df, dr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        if let Some(to) = shift(from, df, dr).filter(|&t| advisor_point(t, color)) {
                            pairs.push((from, to));
                        }
                    }
                }
                if bishop_point(from, color) {
                    for (df, dr) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
                        if let Some(to) = shift(from, df, dr).filter(|&t| bishop_point(t, color)) {
                            pairs.push((from, to));
                        }
                    }
                }
            }
        }
        pairs.sort();
        pairs.dedup();

        let mut hasher = Sha256::new();
        for (f, t) in &pairs {
            hasher.update([f.index() as u8, t.index() as u8]);
        }
        let checksum: [u8; 32] = hasher.finalize().into();
        let index = pairs
            .iter()
            .enumerate()
            .map(|(i, (f, t))| ((f.index() as u8, t.index() as u8), i as u16))
            .collect();
        MoveTable {
            moves: pairs,
            index,
            checksum,
        }
    }

    /// Shared instance; the table never changes.
    pub fn global() -> &'static MoveTable {
        static TABLE: OnceLock<MoveTable> = OnceLock::new();
        TABLE.get_or_init(MoveTable::new)
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn index_of(&self, mv: Move) -> Option<usize> {
        self.index
            .get(&(mv.from.index() as u8, mv.to.index() as u8))
            .map(|&i| i as usize)
    }

    pub fn move_of(&self, index: usize) -> Option<Move> {
        self.moves.get(index).map(|&(f, t)| Move::new(f, t))
    }

    /// SHA-256 over the ordered (from, to) byte pairs.
    pub fn checksum(&self) -> [u8; 32] {
        self.checksum
    }

    /// Action index of `mv` as seen by the network, which always looks at
    /// the board from the side to move.
    pub fn oriented_index(&self, mv: Move, side: Color) -> Option<usize> {
        match side {
            Color::Red => self.index_of(mv),
            Color::Black => self.index_of(mv.rotated()),
        }
    }
}

impl Default for MoveTable {
    fn default() -> Self {
        MoveTable::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_index() {
        let t = MoveTable::new();
        for i in 0..t.len() {
            assert_eq!(t.index_of(t.move_of(i).unwrap()), Some(i));
        }
        assert!(t.move_of(t.len()).is_none());
    }

    #[test]
    fn is_closed_under_rotation() {
        let t = MoveTable::new();
        for i in 0..t.len() {
            assert!(t.index_of(t.move_of(i).unwrap().rotated()).is_some());
        }
    }
}
