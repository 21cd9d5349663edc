//! Table-driven move generation on the raw cell array.

use std::sync::OnceLock;

use super::{Color, Move, Piece, PieceKind, Position, Square, FILES, RANKS, SQUARES};

const EMPTY: u8 = 0;

struct Tables {
    king: Vec<Vec<u8>>,
    advisor: Vec<Vec<u8>>,
    /// (to, eye)
    bishop: Vec<Vec<(u8, u8)>>,
    /// (to, leg)
    knight: Vec<Vec<(u8, u8)>>,
    /// (knight origin, leg) for every knight that could land on the square.
    knight_attackers: Vec<Vec<(u8, u8)>>,
    /// Rays in the order up, down, left, right. Up and down are file rays.
    rays: Vec<[Vec<u8>; 4]>,
}

fn offset(sq: usize, df: i32, dr: i32) -> Option<usize> {
    let f = (sq % FILES) as i32 + df;
    let r = (sq / FILES) as i32 + dr;
    if (0..FILES as i32).contains(&f) && (0..RANKS as i32).contains(&r) {
        Some(r as usize * FILES + f as usize)
    } else {
        None
    }
}

fn palace_owner(sq: usize) -> Option<Color> {
    let s = Square::from_index_unchecked(sq);
    if s.in_palace(Color::Red) {
        Some(Color::Red)
    } else if s.in_palace(Color::Black) {
        Some(Color::Black)
    } else {
        None
    }
}

fn side_of(sq: usize) -> Color {
    if sq / FILES <= 4 {
        Color::Red
    } else {
        Color::Black
    }
}

fn build_tables() -> Tables {
    let mut king = vec![Vec::new(); SQUARES];
    let mut advisor = vec![Vec::new(); SQUARES];
    let mut bishop = vec![Vec::new(); SQUARES];
    let mut knight = vec![Vec::new(); SQUARES];
    let mut knight_attackers = vec![Vec::new(); SQUARES];
    let mut rays: Vec<[Vec<u8>; 4]> = Vec::with_capacity(SQUARES);

    for sq in 0..SQUARES {
        if let Some(owner) = palace_owner(sq) {
            for (df, dr) in [(0, 1), (0, -1), (-1, 0), (1, 0)] {
                if let Some(t) = offset(sq, df, dr) {
                    if palace_owner(t) == Some(owner) {
                        king[sq].push(t as u8);
                    }
                }
            }
            for (df, dr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                if let Some(t) = offset(sq, df, dr) {
                    if palace_owner(t) == Some(owner) {
                        advisor[sq].push(t as u8);
                    }
                }
            }
        }
        for (df, dr) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
            if let Some(t) = offset(sq, df, dr) {
                if side_of(t) == side_of(sq) {
                    let eye = offset(sq, df / 2, dr / 2).expect("eye lies between");
                    bishop[sq].push((t as u8, eye as u8));
                }
            }
        }
        for (df, dr) in [
            (1, 2),
            (-1, 2),
            (1, -2),
            (-1, -2),
            (2, 1),
            (2, -1),
            (-2, 1),
            (-2, -1),
        ] {
            if let Some(t) = offset(sq, df, dr) {
                let leg = if dr.abs() == 2 {
                    offset(sq, 0, dr / 2)
                } else {
                    offset(sq, df / 2, 0)
                }
                .expect("leg lies between");
                knight[sq].push((t as u8, leg as u8));
                knight_attackers[t].push((sq as u8, leg as u8));
            }
        }
        let mut r: [Vec<u8>; 4] = Default::default();
        for (i, (df, dr)) in [(0, 1), (0, -1), (-1, 0), (1, 0)].into_iter().enumerate() {
            let mut cur = sq;
            while let Some(t) = offset(cur, df, dr) {
                r[i].push(t as u8);
                cur = t;
            }
        }
        rays.push(r);
    }

    Tables {
        king,
        advisor,
        bishop,
        knight,
        knight_attackers,
        rays,
    }
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

#[inline]
fn color_of(code: u8) -> Color {
    if code <= 7 {
        Color::Red
    } else {
        Color::Black
    }
}

#[inline]
fn kind_of(code: u8) -> PieceKind {
    PieceKind::ALL[((code - 1) % 7) as usize]
}

#[inline]
fn code(color: Color, kind: PieceKind) -> u8 {
    Piece::new(color, kind).code()
}

#[inline]
fn push(out: &mut Vec<Move>, from: usize, to: usize, target: u8) {
    out.push(Move {
        from: Square::from_index_unchecked(from),
        to: Square::from_index_unchecked(to),
        captured: (target != EMPTY).then(|| kind_of(target)),
    });
}

/// Moves obeying piece geometry and blocking, without the king-safety filter.
pub(crate) fn pseudo_legal(cells: &[u8; SQUARES], side: Color, out: &mut Vec<Move>) {
    let t = tables();
    let own = |c: u8| c != EMPTY && color_of(c) == side;
    for from in 0..SQUARES {
        let c = cells[from];
        if !own(c) {
            continue;
        }
        match kind_of(c) {
            PieceKind::King => {
                for &to in &t.king[from] {
                    let to = to as usize;
                    if !own(cells[to]) {
                        push(out, from, to, cells[to]);
                    }
                }
            }
            PieceKind::Advisor => {
                for &to in &t.advisor[from] {
                    let to = to as usize;
                    if !own(cells[to]) {
                        push(out, from, to, cells[to]);
                    }
                }
            }
            PieceKind::Bishop => {
                for &(to, eye) in &t.bishop[from] {
                    let to = to as usize;
                    if cells[eye as usize] == EMPTY && !own(cells[to]) {
                        push(out, from, to, cells[to]);
                    }
                }
            }
            PieceKind::Knight => {
                for &(to, leg) in &t.knight[from] {
                    let to = to as usize;
                    if cells[leg as usize] == EMPTY && !own(cells[to]) {
                        push(out, from, to, cells[to]);
                    }
                }
            }
            PieceKind::Rook => {
                for ray in &t.rays[from] {
                    for &to in ray {
                        let to = to as usize;
                        let target = cells[to];
                        if target == EMPTY {
                            push(out, from, to, target);
                        } else {
                            if !own(target) {
                                push(out, from, to, target);
                            }
                            break;
                        }
                    }
                }
            }
            PieceKind::Cannon => {
                for ray in &t.rays[from] {
                    let mut screened = false;
                    for &to in ray {
                        let to = to as usize;
                        let target = cells[to];
                        if !screened {
                            if target == EMPTY {
                                push(out, from, to, target);
                            } else {
                                screened = true;
                            }
                        } else if target != EMPTY {
                            if !own(target) {
                                push(out, from, to, target);
                            }
                            break;
                        }
                    }
                }
            }
            PieceKind::Pawn => {
                let dr = if side == Color::Red { 1 } else { -1 };
                if let Some(to) = offset(from, 0, dr) {
                    if !own(cells[to]) {
                        push(out, from, to, cells[to]);
                    }
                }
                if side_of(from) != side {
                    for df in [-1, 1] {
                        if let Some(to) = offset(from, df, 0) {
                            if !own(cells[to]) {
                                push(out, from, to, cells[to]);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// True if `sq` is attacked by any piece of `by`. Includes the facing-kings
/// rule: an enemy king on the same open file counts as an attacker.
pub(crate) fn attacked(cells: &[u8; SQUARES], sq: usize, by: Color) -> bool {
    let t = tables();
    let rook = code(by, PieceKind::Rook);
    let cannon = code(by, PieceKind::Cannon);
    let king = code(by, PieceKind::King);
    for (dir, ray) in t.rays[sq].iter().enumerate() {
        let mut iter = ray.iter();
        let mut first = EMPTY;
        for &s in iter.by_ref() {
            if cells[s as usize] != EMPTY {
                first = cells[s as usize];
                break;
            }
        }
        if first == EMPTY {
            continue;
        }
        if first == rook || (first == king && dir < 2) {
            return true;
        }
        for &s in iter {
            let c = cells[s as usize];
            if c != EMPTY {
                if c == cannon {
                    return true;
                }
                break;
            }
        }
    }
    let knight = code(by, PieceKind::Knight);
    for &(from, leg) in &t.knight_attackers[sq] {
        if cells[from as usize] == knight && cells[leg as usize] == EMPTY {
            return true;
        }
    }
    let pawn = code(by, PieceKind::Pawn);
    // A pawn of `by` moving forward onto `sq` stands one rank behind it.
    let back = if by == Color::Red { -1 } else { 1 };
    if let Some(s) = offset(sq, 0, back) {
        if cells[s] == pawn {
            return true;
        }
    }
    for df in [-1, 1] {
        if let Some(s) = offset(sq, df, 0) {
            if cells[s] == pawn && side_of(s) != by {
                return true;
            }
        }
    }
    false
}

pub(crate) fn find_king(cells: &[u8; SQUARES], color: Color) -> Option<usize> {
    let k = code(color, PieceKind::King);
    cells.iter().position(|&c| c == k)
}

/// Pseudo-legal moves of `side` that do not leave its own king attacked.
pub(crate) fn legal_from_cells(
    cells: &[u8; SQUARES],
    side: Color,
    king_sq: usize,
    out: &mut Vec<Move>,
) {
    let mut pseudo = Vec::with_capacity(64);
    pseudo_legal(cells, side, &mut pseudo);
    let mut scratch = *cells;
    for mv in pseudo {
        let (from, to) = (mv.from.index(), mv.to.index());
        let moving = scratch[from];
        let taken = scratch[to];
        scratch[to] = moving;
        scratch[from] = EMPTY;
        let k = if from == king_sq { to } else { king_sq };
        if !attacked(&scratch, k, side.opponent()) {
            out.push(mv);
        }
        scratch[from] = moving;
        scratch[to] = taken;
    }
}

fn perft_cells(cells: &mut [u8; SQUARES], kings: [usize; 2], side: Color, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let mut moves = Vec::with_capacity(64);
    legal_from_cells(cells, side, kings[side.index()], &mut moves);
    if depth == 1 {
        return moves.len() as u64;
    }
    let mut total = 0;
    for mv in moves {
        let (from, to) = (mv.from.index(), mv.to.index());
        let moving = cells[from];
        let taken = cells[to];
        cells[to] = moving;
        cells[from] = EMPTY;
        let mut k = kings;
        if from == kings[side.index()] {
            k[side.index()] = to;
        }
        total += perft_cells(cells, k, side.opponent(), depth - 1);
        cells[from] = moving;
        cells[to] = taken;
    }
    total
}

/// Number of leaves of the legal-move tree at exactly `depth` plies.
/// Game-termination rules other than "no legal moves" are not applied.
pub fn perft(position: &Position, depth: u32) -> u64 {
    let mut cells = *position.cells();
    let kings = [
        position.king_square(Color::Red).index(),
        position.king_square(Color::Black).index(),
    ];
    perft_cells(&mut cells, kings, position.side_to_move(), depth)
}
