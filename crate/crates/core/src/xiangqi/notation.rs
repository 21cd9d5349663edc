//! Traditional Chinese move names (for example 炮二平五), best effort.

use super::{Color, Move, PieceKind, Position};

const RED_DIGITS: [char; 10] = ['零', '一', '二', '三', '四', '五', '六', '七', '八', '九'];
const BLACK_DIGITS: [char; 10] = ['0', '1', '2', '3', '4', '5', '6', '7', '8', '9'];

fn piece_char(color: Color, kind: PieceKind) -> char {
    match (color, kind) {
        (Color::Red, PieceKind::King) => '帅',
        (Color::Red, PieceKind::Advisor) => '仕',
        (Color::Red, PieceKind::Bishop) => '相',
        (Color::Red, PieceKind::Pawn) => '兵',
        (Color::Black, PieceKind::King) => '将',
        (Color::Black, PieceKind::Advisor) => '士',
        (Color::Black, PieceKind::Bishop) => '象',
        (Color::Black, PieceKind::Pawn) => '卒',
        (_, PieceKind::Knight) => '马',
        (_, PieceKind::Rook) => '车',
        (_, PieceKind::Cannon) => '炮',
    }
}

/// Files are counted from each player's right hand.
fn file_number(color: Color, file: usize) -> usize {
    match color {
        Color::Red => 9 - file,
        Color::Black => file + 1,
    }
}

fn digit(color: Color, n: usize) -> char {
    match color {
        Color::Red => RED_DIGITS[n.min(9)],
        Color::Black => BLACK_DIGITS[n.min(9)],
    }
}

/// Name of `mv` in `position`, or `None` if no piece stands on its origin.
pub fn chinese_name(position: &Position, mv: Move) -> Option<String> {
    let piece = position.piece_at(mv.from)?;
    let color = piece.color;
    // Ranks counted forward from the mover's side.
    let forward = |r: usize| match color {
        Color::Red => r as i32,
        Color::Black => 9 - r as i32,
    };
    let (ff, tf) = (mv.from.file(), mv.to.file());
    let dr = forward(mv.to.rank()) - forward(mv.from.rank());

    // Same-kind pieces sharing the origin file, front-most first.
    let mut same_file: Vec<i32> = position
        .pieces()
        .filter(|(sq, p)| *p == piece && sq.file() == ff)
        .map(|(sq, _)| forward(sq.rank()))
        .collect();
    same_file.sort_unstable_by(|a, b| b.cmp(a));

    let mut name = String::new();
    if same_file.len() >= 2 {
        let pos = same_file
            .iter()
            .position(|&r| r == forward(mv.from.rank()))
            .unwrap_or(0);
        let tag = match (same_file.len(), pos) {
            (_, 0) => '前',
            (n, p) if p + 1 == n => '后',
            _ => '中',
        };
        name.push(tag);
        name.push(piece_char(color, piece.kind));
    } else {
        name.push(piece_char(color, piece.kind));
        name.push(digit(color, file_number(color, ff)));
    }

    let diagonal = matches!(
        piece.kind,
        PieceKind::Advisor | PieceKind::Bishop | PieceKind::Knight
    );
    if dr == 0 {
        name.push('平');
        name.push(digit(color, file_number(color, tf)));
    } else {
        name.push(if dr > 0 { '进' } else { '退' });
        if diagonal {
            name.push(digit(color, file_number(color, tf)));
        } else {
            name.push(digit(color, dr.unsigned_abs() as usize));
        }
    }
    Some(name)
}
