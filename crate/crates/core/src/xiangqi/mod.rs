//! Xiangqi rules: board representation, move generation, legality,
//! termination and the text encodings (placement strings and 4-character
//! move text).
//!
//! Squares are numbered `rank * 9 + file`, with files `a..i` running left to
//! right from Red's side and ranks `0..9` counted from Red's back rank.

mod fen;
mod movegen;
mod notation;
mod position;
mod zobrist;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fen::{INITIAL_FEN, INITIAL_PLACEMENT};
pub use movegen::perft;
pub use notation::chinese_name;
pub use position::{GameRules, Position};

pub const FILES: usize = 9;
pub const RANKS: usize = 10;
pub const SQUARES: usize = FILES * RANKS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Black,
}

impl Color {
    #[inline]
    pub fn opponent(self) -> Color {
        match self {
            Color::Red => Color::Black,
            Color::Black => Color::Red,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// +1 for Red, -1 for Black.
    #[inline]
    pub fn sign(self) -> i32 {
        match self {
            Color::Red => 1,
            Color::Black => -1,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Red => "red",
            Color::Black => "black",
        })
    }
}

/// Piece kinds in plane order: K, A, B, N, R, C, P.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceKind {
    King,
    Advisor,
    Bishop,
    Knight,
    Rook,
    Cannon,
    Pawn,
}

impl PieceKind {
    pub const ALL: [PieceKind; 7] = [
        PieceKind::King,
        PieceKind::Advisor,
        PieceKind::Bishop,
        PieceKind::Knight,
        PieceKind::Rook,
        PieceKind::Cannon,
        PieceKind::Pawn,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of pieces of this kind each side starts with.
    pub fn initial_count(self) -> usize {
        match self {
            PieceKind::King => 1,
            PieceKind::Pawn => 5,
            _ => 2,
        }
    }

    /// Upper-case letter used in placement strings.
    pub fn letter(self) -> char {
        match self {
            PieceKind::King => 'K',
            PieceKind::Advisor => 'A',
            PieceKind::Bishop => 'B',
            PieceKind::Knight => 'N',
            PieceKind::Rook => 'R',
            PieceKind::Cannon => 'C',
            PieceKind::Pawn => 'P',
        }
    }

    pub fn from_letter(c: char) -> Option<PieceKind> {
        Some(match c.to_ascii_uppercase() {
            'K' => PieceKind::King,
            'A' => PieceKind::Advisor,
            'B' => PieceKind::Bishop,
            'N' => PieceKind::Knight,
            'R' => PieceKind::Rook,
            'C' => PieceKind::Cannon,
            'P' => PieceKind::Pawn,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    pub color: Color,
    pub kind: PieceKind,
}

impl Piece {
    pub const fn new(color: Color, kind: PieceKind) -> Self {
        Piece { color, kind }
    }

    /// Letter as written in a placement string (upper case for Red).
    pub fn fen_char(self) -> char {
        match self.color {
            Color::Red => self.kind.letter(),
            Color::Black => self.kind.letter().to_ascii_lowercase(),
        }
    }

    pub fn from_fen_char(c: char) -> Option<Piece> {
        let kind = PieceKind::from_letter(c)?;
        let color = if c.is_ascii_uppercase() {
            Color::Red
        } else {
            Color::Black
        };
        Some(Piece { color, kind })
    }

    /// Compact code in `1..=14`; 0 is reserved for an empty square.
    #[inline]
    pub(crate) fn code(self) -> u8 {
        (self.color.index() * 7 + self.kind.index()) as u8 + 1
    }

    #[inline]
    pub(crate) fn from_code(code: u8) -> Option<Piece> {
        if code == 0 {
            return None;
        }
        let c = (code - 1) as usize;
        let color = if c < 7 { Color::Red } else { Color::Black };
        Some(Piece {
            color,
            kind: PieceKind::ALL[c % 7],
        })
    }
}

/// A board point, `rank * 9 + file`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square(u8);

impl Square {
    pub fn new(file: usize, rank: usize) -> Option<Square> {
        (file < FILES && rank < RANKS).then(|| Square((rank * FILES + file) as u8))
    }

    pub fn from_index(index: usize) -> Option<Square> {
        (index < SQUARES).then(|| Square(index as u8))
    }

    #[inline]
    pub(crate) const fn from_index_unchecked(index: usize) -> Square {
        Square(index as u8)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn file(self) -> usize {
        self.index() % FILES
    }

    #[inline]
    pub fn rank(self) -> usize {
        self.index() / FILES
    }

    /// The point reached by rotating the board by 180 degrees.
    #[inline]
    pub fn rotated(self) -> Square {
        Square((SQUARES - 1 - self.index()) as u8)
    }

    /// True if the square lies on `color`'s own half of the board.
    #[inline]
    pub fn on_own_side(self, color: Color) -> bool {
        match color {
            Color::Red => self.rank() <= 4,
            Color::Black => self.rank() >= 5,
        }
    }

    /// True if the square lies inside `color`'s palace.
    #[inline]
    pub fn in_palace(self, color: Color) -> bool {
        let (f, r) = (self.file(), self.rank());
        let rank_ok = match color {
            Color::Red => r <= 2,
            Color::Black => r >= 7,
        };
        (3..=5).contains(&f) && rank_ok
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", (b'a' + self.file() as u8) as char, self.rank())
    }
}

impl FromStr for Square {
    type Err = MoveParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = s.as_bytes();
        if b.len() != 2 {
            return Err(MoveParseError(s.to_string()));
        }
        let file = b[0].wrapping_sub(b'a') as usize;
        let rank = b[1].wrapping_sub(b'0') as usize;
        Square::new(file, rank).ok_or_else(|| MoveParseError(s.to_string()))
    }
}

/// A move between two points. `captured` is filled in by the generator and
/// ignored when comparing moves parsed from text.
#[derive(Clone, Copy, Debug, Eq, Hash)]
pub struct Move {
    pub from: Square,
    pub to: Square,
    pub captured: Option<PieceKind>,
}

impl PartialEq for Move {
    fn eq(&self, other: &Self) -> bool {
        self.from == other.from && self.to == other.to
    }
}

impl Move {
    pub fn new(from: Square, to: Square) -> Self {
        Move {
            from,
            to,
            captured: None,
        }
    }

    /// The same move seen from the other side of the board.
    pub fn rotated(self) -> Move {
        Move {
            from: self.from.rotated(),
            to: self.to.rotated(),
            captured: self.captured,
        }
    }

    pub fn is_capture(&self) -> bool {
        self.captured.is_some()
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.from, self.to)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed move text {0:?}")]
pub struct MoveParseError(pub String);

impl FromStr for Move {
    type Err = MoveParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.len() != 4 || !s.is_ascii() {
            return Err(MoveParseError(s.to_string()));
        }
        let from: Square = s[0..2].parse().map_err(|_| MoveParseError(s.to_string()))?;
        let to: Square = s[2..4].parse().map_err(|_| MoveParseError(s.to_string()))?;
        if from == to {
            return Err(MoveParseError(s.to_string()));
        }
        Ok(Move::new(from, to))
    }
}

/// Final score of a game from Red's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameResult {
    pub score_red: i8,
}

impl GameResult {
    pub const RED_WIN: GameResult = GameResult { score_red: 1 };
    pub const DRAW: GameResult = GameResult { score_red: 0 };
    pub const BLACK_WIN: GameResult = GameResult { score_red: -1 };

    pub fn win_for(color: Color) -> GameResult {
        GameResult {
            score_red: color.sign() as i8,
        }
    }

    pub fn score_black(self) -> i8 {
        -self.score_red
    }

    /// Score in `{-1, 0, 1}` from `color`'s point of view.
    pub fn score_for(self, color: Color) -> i8 {
        self.score_red * color.sign() as i8
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FenError {
    #[error("expected 10 ranks separated by '/', found {0}")]
    RankCount(usize),
    #[error("rank {rank}: {reason}")]
    Rank { rank: usize, reason: String },
    #[error("unknown side-to-move token {0:?}")]
    SideToken(String),
    #[error("invalid position: {0}")]
    Invariant(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error(transparent)]
    Parse(#[from] MoveParseError),
    #[error("illegal move {0}")]
    Illegal(String),
}
