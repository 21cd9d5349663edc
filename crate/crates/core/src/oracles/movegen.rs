//! Slow reference move generator: coordinate arithmetic per piece, then a
//! full legality filter that replays every opponent reply.

use crate::xiangqi::{Color, Move, Piece, PieceKind, Position, Square};

type Grid = [[Option<Piece>; 10]; 9];

fn grid(position: &Position) -> Grid {
    let mut g: Grid = [[None; 10]; 9];
    for (sq, p) in position.pieces() {
        g[sq.file()][sq.rank()] = Some(p);
    }
    g
}

fn inside(f: i32, r: i32) -> bool {
    (0..9).contains(&f) && (0..10).contains(&r)
}

fn in_palace(color: Color, f: i32, r: i32) -> bool {
    let ranks = match color {
        Color::Red => 0..=2,
        Color::Black => 7..=9,
    };
    (3..=5).contains(&f) && ranks.contains(&r)
}

fn own_half(color: Color, r: i32) -> bool {
    match color {
        Color::Red => r <= 4,
        Color::Black => r >= 5,
    }
}

fn at(g: &Grid, f: i32, r: i32) -> Option<Piece> {
    g[f as usize][r as usize]
}

/// (from, to) pairs obeying geometry, ignoring whether the own king is left
/// attacked.
fn pseudo(g: &Grid, side: Color) -> Vec<((i32, i32), (i32, i32))> {
    let mut out = Vec::new();
    for f in 0..9i32 {
        for r in 0..10i32 {
            let Some(p) = at(g, f, r) else { continue };
            if p.color != side {
                continue;
            }
            let mut targets: Vec<(i32, i32)> = Vec::new();
            match p.kind {
                PieceKind::King => {
                    for (df, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                        if in_palace(side, f + df, r + dr) {
                            targets.push((f + df, r + dr));
                        }
                    }
                }
                PieceKind::Advisor => {
                    for (df, dr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        if in_palace(side, f + df, r + dr) {
                            targets.push((f + df, r + dr));
                        }
                    }
                }
                PieceKind::Bishop => {
                    for (df, dr) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
                        let (tf, tr) = (f + df, r + dr);
                        if inside(tf, tr)
                            && own_half(side, tr)
                            && at(g, f + df / 2, r + dr / 2).is_none()
                        {
                            targets.push((tf, tr));
                        }
                    }
                }
                PieceKind::Knight => {
                    for (df, dr) in [(1, 2), (-1, 2), (1, -2), (-1, -2), (2, 1), (2, -1), (-2, 1), (-2, -1)] {
                        let (tf, tr) = (f + df, r + dr);
                        if !inside(tf, tr) {
                            continue;
                        }
                        let (lf, lr) = if dr.abs() == 2 { (f, r + dr / 2) } else { (f + df / 2, r) };
                        if at(g, lf, lr).is_none() {
                            targets.push((tf, tr));
                        }
                    }
                }
                PieceKind::Rook | PieceKind::Cannon => {
                    for (df, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                        let mut jumped = false;
                        let (mut tf, mut tr) = (f + df, r + dr);
                        while inside(tf, tr) {
                            let occupant = at(g, tf, tr);
                            if p.kind == PieceKind::Rook {
                                targets.push((tf, tr));
                                if occupant.is_some() {
                                    break;
                                }
                            } else if !jumped {
                                if occupant.is_some() {
                                    jumped = true;
                                } else {
                                    targets.push((tf, tr));
                                }
                            } else if occupant.is_some() {
                                targets.push((tf, tr));
                                break;
                            }
                            tf += df;
                            tr += dr;
                        }
                    }
                }
                PieceKind::Pawn => {
                    let fwd = if side == Color::Red { 1 } else { -1 };
                    if inside(f, r + fwd) {
                        targets.push((f, r + fwd));
                    }
                    if !own_half(side, r) {
                        for df in [-1, 1] {
                            if inside(f + df, r) {
                                targets.push((f + df, r));
                            }
                        }
                    }
                }
            }
            for (tf, tr) in targets {
                if at(g, tf, tr).map_or(true, |q| q.color != side) {
                    out.push(((f, r), (tf, tr)));
                }
            }
        }
    }
    out
}

fn king_of(g: &Grid, color: Color) -> Option<(i32, i32)> {
    for f in 0..9 {
        for r in 0..10 {
            if at(g, f, r) == Some(Piece::new(color, PieceKind::King)) {
                return Some((f, r));
            }
        }
    }
    None
}

fn kings_face(g: &Grid) -> bool {
    let (Some(a), Some(b)) = (king_of(g, Color::Red), king_of(g, Color::Black)) else {
        return false;
    };
    if a.0 != b.0 {
        return false;
    }
    let (lo, hi) = (a.1.min(b.1), a.1.max(b.1));
    (lo + 1..hi).all(|r| at(g, a.0, r).is_none())
}

/// Legal moves by brute force, sorted by (from, to) index.
pub fn reference_legal_moves(position: &Position) -> Vec<Move> {
    let g = grid(position);
    let side = position.side_to_move();
    let mut out = Vec::new();
    for ((f, r), (tf, tr)) in pseudo(&g, side) {
        let mut next = g;
        let captured = next[tf as usize][tr as usize].map(|p| p.kind);
        next[tf as usize][tr as usize] = next[f as usize][r as usize];
        next[f as usize][r as usize] = None;
        let Some(king) = king_of(&next, side) else { continue };
        if kings_face(&next) {
            continue;
        }
        let exposed = pseudo(&next, side.opponent())
            .into_iter()
            .any(|(_, to)| to == king);
        if exposed {
            continue;
        }
        out.push(Move {
            from: Square::new(f as usize, r as usize).unwrap(),
            to: Square::new(tf as usize, tr as usize).unwrap(),
            captured,
        });
    }
    out.sort_by_key(|m| (m.from.index(), m.to.index()));
    out
}

/// Leaf count using [`reference_legal_moves`].
pub fn reference_perft(position: &Position, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = reference_legal_moves(position);
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .into_iter()
        .map(|m| reference_perft(&position.apply_unchecked(m), depth - 1))
        .sum()
}
