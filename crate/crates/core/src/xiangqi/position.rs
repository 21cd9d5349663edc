use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::movegen;
use super::zobrist;
use super::{
    Color, FenError, GameResult, Move, MoveError, Piece, PieceKind, Square, SQUARES,
};

/// Draw rules applied by [`Position::terminal_result`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameRules {
    pub max_game_plies: u32,
    pub no_capture_draw_plies: u32,
    pub repetition_draw_count: u32,
}

impl Default for GameRules {
    fn default() -> Self {
        GameRules {
            max_game_plies: 400,
            no_capture_draw_plies: 120,
            repetition_draw_count: 3,
        }
    }
}

/// Hashes of every position reached so far, newest first. Shared between
/// positions derived from one another.
#[derive(Debug)]
struct HistoryNode {
    hash: u64,
    prev: Option<Arc<HistoryNode>>,
}

/// A full game state. Immutable once built; [`Position::apply_move`] returns a
/// new value.
#[derive(Clone)]
pub struct Position {
    cells: [u8; SQUARES],
    side: Color,
    halfmove_clock: u32,
    ply: u32,
    kings: [Square; 2],
    hash: u64,
    history: Arc<HistoryNode>,
}

impl Position {
    /// Builds a position from explicit placement, validating every board
    /// invariant.
    pub fn from_parts(
        board: [Option<Piece>; SQUARES],
        side: Color,
        halfmove_clock: u32,
        ply: u32,
    ) -> Result<Position, FenError> {
        let mut cells = [0u8; SQUARES];
        for (c, p) in cells.iter_mut().zip(board.iter()) {
            *c = p.map_or(0, Piece::code);
        }
        validate(&cells, side)?;
        let kings = [
            Square::from_index_unchecked(movegen::find_king(&cells, Color::Red).unwrap()),
            Square::from_index_unchecked(movegen::find_king(&cells, Color::Black).unwrap()),
        ];
        let hash = compute_hash(&cells, side);
        Ok(Position {
            cells,
            side,
            halfmove_clock,
            ply,
            kings,
            hash,
            history: Arc::new(HistoryNode { hash, prev: None }),
        })
    }

    pub fn initial() -> Position {
        Position::parse_fen(super::INITIAL_FEN).expect("initial placement is valid")
    }

    pub(crate) fn cells(&self) -> &[u8; SQUARES] {
        &self.cells
    }

    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        Piece::from_code(self.cells[sq.index()])
    }

    /// All 90 points, index `rank * 9 + file`.
    pub fn board(&self) -> [Option<Piece>; SQUARES] {
        let mut out = [None; SQUARES];
        for (o, &c) in out.iter_mut().zip(self.cells.iter()) {
            *o = Piece::from_code(c);
        }
        out
    }

    pub fn pieces(&self) -> impl Iterator<Item = (Square, Piece)> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, &c)| {
            Piece::from_code(c).map(|p| (Square::from_index_unchecked(i), p))
        })
    }

    pub fn side_to_move(&self) -> Color {
        self.side
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    pub fn ply(&self) -> u32 {
        self.ply
    }

    pub fn king_square(&self, color: Color) -> Square {
        self.kings[color.index()]
    }

    /// Zobrist hash of placement and side to move.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// Hashes of the positions reached so far, oldest first, ending with this
    /// one.
    pub fn repetition_history(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut node = Some(&self.history);
        while let Some(n) = node {
            out.push(n.hash);
            node = n.prev.as_ref();
        }
        out.reverse();
        out
    }

    /// How many times the current position has occurred since the last
    /// capture, including now.
    pub fn repetition_count(&self) -> u32 {
        let mut count = 0;
        let mut node = Some(&self.history);
        let mut remaining = self.halfmove_clock as usize + 1;
        while let Some(n) = node {
            if remaining == 0 {
                break;
            }
            if n.hash == self.hash {
                count += 1;
            }
            remaining -= 1;
            node = n.prev.as_ref();
        }
        count
    }

    pub fn in_check(&self) -> bool {
        movegen::attacked(
            &self.cells,
            self.kings[self.side.index()].index(),
            self.side.opponent(),
        )
    }

    pub fn legal_moves(&self) -> Vec<Move> {
        let mut out = Vec::with_capacity(64);
        movegen::legal_from_cells(
            &self.cells,
            self.side,
            self.kings[self.side.index()].index(),
            &mut out,
        );
        out
    }

    /// Looks `mv` up among the legal moves, returning it with the capture
    /// filled in.
    pub fn find_legal(&self, mv: Move) -> Option<Move> {
        self.legal_moves().into_iter().find(|m| *m == mv)
    }

    /// Plays a legal move.
    pub fn apply_move(&self, mv: Move) -> Result<Position, MoveError> {
        let legal = self
            .find_legal(mv)
            .ok_or_else(|| MoveError::Illegal(mv.to_string()))?;
        Ok(self.apply_unchecked(legal))
    }

    /// Parses 4-character move text and plays it.
    pub fn apply_text(&self, text: &str) -> Result<Position, MoveError> {
        let mv: Move = text.parse()?;
        self.apply_move(mv)
    }

    /// Plays a move already known to be legal (for example one returned by
    /// [`Position::legal_moves`]).
    pub fn apply_unchecked(&self, mv: Move) -> Position {
        let (from, to) = (mv.from.index(), mv.to.index());
        let moving = self.cells[from];
        let taken = self.cells[to];
        debug_assert!(moving != 0, "no piece on {}", mv.from);
        let mut cells = self.cells;
        cells[to] = moving;
        cells[from] = 0;
        let mut hash = self.hash
            ^ zobrist::piece_key(moving, from)
            ^ zobrist::piece_key(moving, to)
            ^ zobrist::BLACK_TO_MOVE;
        if taken != 0 {
            hash ^= zobrist::piece_key(taken, to);
        }
        let mut kings = self.kings;
        if from == kings[self.side.index()].index() {
            kings[self.side.index()] = mv.to;
        }
        Position {
            cells,
            side: self.side.opponent(),
            halfmove_clock: if taken != 0 { 0 } else { self.halfmove_clock + 1 },
            ply: self.ply + 1,
            kings,
            hash,
            history: Arc::new(HistoryNode {
                hash,
                prev: Some(Arc::clone(&self.history)),
            }),
        }
    }

    /// Final result if the game is over under `rules`.
    ///
    /// A side with no legal move loses (checkmate and stalemate alike).
    pub fn terminal_result(&self, rules: &GameRules) -> Option<GameResult> {
        if self.legal_moves().is_empty() {
            return Some(GameResult::win_for(self.side.opponent()));
        }
        self.draw_result(rules)
    }

    /// The draw part of [`Position::terminal_result`], for callers that have
    /// already generated the legal moves.
    pub fn draw_result(&self, rules: &GameRules) -> Option<GameResult> {
        let draw = self.repetition_count() >= rules.repetition_draw_count
            || self.halfmove_clock >= rules.no_capture_draw_plies
            || self.ply >= rules.max_game_plies;
        draw.then_some(GameResult::DRAW)
    }

    /// Mirror image with colours swapped: every piece rotated by 180 degrees
    /// and given to the other side, and the other side to move.
    pub fn color_flipped(&self) -> Position {
        let mut board = [None; SQUARES];
        for (sq, p) in self.pieces() {
            board[sq.rotated().index()] = Some(Piece::new(p.color.opponent(), p.kind));
        }
        Position::from_parts(board, self.side.opponent(), self.halfmove_clock, self.ply)
            .expect("rotation preserves validity")
    }

    pub fn piece_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }
}

impl PartialEq for Position {
    /// Placement, side to move and counters; the history is not compared.
    fn eq(&self, other: &Self) -> bool {
        self.cells == other.cells
            && self.side == other.side
            && self.halfmove_clock == other.halfmove_clock
            && self.ply == other.ply
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Position({})", self.to_fen())
    }
}

fn relative_rank(sq: Square, color: Color) -> usize {
    match color {
        Color::Red => sq.rank(),
        Color::Black => 9 - sq.rank(),
    }
}

fn compute_hash(cells: &[u8; SQUARES], side: Color) -> u64 {
    let mut h = 0;
    for (sq, &c) in cells.iter().enumerate() {
        if c != 0 {
            h ^= zobrist::piece_key(c, sq);
        }
    }
    if side == Color::Black {
        h ^= zobrist::BLACK_TO_MOVE;
    }
    h
}

fn validate(cells: &[u8; SQUARES], side: Color) -> Result<(), FenError> {
    let mut counts = [[0usize; 7]; 2];
    for (i, &c) in cells.iter().enumerate() {
        let Some(p) = Piece::from_code(c) else { continue };
        counts[p.color.index()][p.kind.index()] += 1;
        let sq = Square::from_index_unchecked(i);
        match p.kind {
            PieceKind::King if !sq.in_palace(p.color) => {
                return Err(FenError::Invariant(format!("{} king outside palace at {sq}", p.color)));
            }
            PieceKind::Advisor
                if !(sq.in_palace(p.color) && (sq.file() + relative_rank(sq, p.color)) % 2 == 1) =>
            {
                return Err(FenError::Invariant(format!(
                    "{} advisor off the palace diagonals at {sq}",
                    p.color
                )));
            }
            PieceKind::Bishop if !sq.on_own_side(p.color) => {
                return Err(FenError::Invariant(format!(
                    "{} bishop across the river at {sq}",
                    p.color
                )));
            }
            _ => {}
        }
    }
    for color in [Color::Red, Color::Black] {
        for kind in PieceKind::ALL {
            let n = counts[color.index()][kind.index()];
            if kind == PieceKind::King && n != 1 {
                return Err(FenError::Invariant(format!("{color} has {n} kings, expected 1")));
            }
            if n > kind.initial_count() {
                return Err(FenError::Invariant(format!(
                    "{color} has {n} pieces of kind {}, at most {} allowed",
                    kind.letter(),
                    kind.initial_count()
                )));
            }
        }
    }
    let red_king = movegen::find_king(cells, Color::Red).unwrap();
    let black_king = movegen::find_king(cells, Color::Black).unwrap();
    if red_king % 9 == black_king % 9 {
        let file = red_king % 9;
        let open = (red_king / 9 + 1..black_king / 9).all(|r| cells[r * 9 + file] == 0);
        if open {
            return Err(FenError::Invariant("kings face each other on an open file".into()));
        }
    }
    let waiting = side.opponent();
    let waiting_king = if waiting == Color::Red { red_king } else { black_king };
    if movegen::attacked(cells, waiting_king, side) {
        return Err(FenError::Invariant(format!(
            "{waiting} is in check while {side} is to move"
        )));
    }
    Ok(())
}
