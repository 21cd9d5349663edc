//! Placement strings: ten '/'-separated ranks from rank 9 down to rank 0,
//! digits for runs of empty points, upper case for Red, optionally followed by
//! a side-to-move token (`w`/`r` for Red, `b` for Black).

use super::{Color, FenError, Piece, Position, FILES, RANKS, SQUARES};

pub const INITIAL_PLACEMENT: &str = "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR";
pub const INITIAL_FEN: &str = INITIAL_PLACEMENT;

impl Position {
    pub fn parse_fen(text: &str) -> Result<Position, FenError> {
        let mut parts = text.split_whitespace();
        let placement = parts.next().unwrap_or("");
        let side = match parts.next() {
            None | Some("w") | Some("r") => Color::Red,
            Some("b") => Color::Black,
            Some(other) => return Err(FenError::SideToken(other.to_string())),
        };
        if let Some(extra) = parts.next() {
            return Err(FenError::SideToken(extra.to_string()));
        }

        let rows: Vec<&str> = placement.split('/').collect();
        if rows.len() != RANKS {
            return Err(FenError::RankCount(rows.len()));
        }
        let mut board = [None; SQUARES];
        for (i, row) in rows.iter().enumerate() {
            let rank = RANKS - 1 - i;
            let mut file = 0usize;
            for ch in row.chars() {
                if let Some(d) = ch.to_digit(10) {
                    if d == 0 {
                        return Err(FenError::Rank {
                            rank,
                            reason: "zero-length empty run".into(),
                        });
                    }
                    file += d as usize;
                } else {
                    let piece = Piece::from_fen_char(ch).ok_or_else(|| FenError::Rank {
                        rank,
                        reason: format!("unknown piece letter {ch:?}"),
                    })?;
                    if file < FILES {
                        board[rank * FILES + file] = Some(piece);
                    }
                    file += 1;
                }
                if file > FILES {
                    return Err(FenError::Rank {
                        rank,
                        reason: format!("more than {FILES} points"),
                    });
                }
            }
            if file != FILES {
                return Err(FenError::Rank {
                    rank,
                    reason: format!("describes {file} points, expected {FILES}"),
                });
            }
        }
        Position::from_parts(board, side, 0, 0)
    }

    /// Placement string, with a trailing `" b"` when Black is to move.
    pub fn to_fen(&self) -> String {
        let mut out = self.placement();
        if self.side_to_move() == Color::Black {
            out.push_str(" b");
        }
        out
    }

    pub fn placement(&self) -> String {
        let mut out = String::with_capacity(64);
        for rank in (0..RANKS).rev() {
            let mut empty = 0;
            for file in 0..FILES {
                match Piece::from_code(self.cells()[rank * FILES + file]) {
                    None => empty += 1,
                    Some(p) => {
                        if empty > 0 {
                            out.push(char::from_digit(empty, 10).unwrap());
                            empty = 0;
                        }
                        out.push(p.fen_char());
                    }
                }
            }
            if empty > 0 {
                out.push(char::from_digit(empty, 10).unwrap());
            }
            if rank > 0 {
                out.push('/');
            }
        }
        out
    }
}
