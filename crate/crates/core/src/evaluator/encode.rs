use crate::xiangqi::{Color, PieceKind, Position, SQUARES};

pub const PLANES: usize = 14;
pub const INPUT_LEN: usize = PLANES * SQUARES;

/// 14 binary planes of 90 points each, index `plane * 90 + square`.
/// Planes 0..7 hold one player's K, A, B, N, R, C, P and planes 7..14 the
/// other's.
#[derive(Clone, PartialEq, Eq)]
pub struct StateTensor {
    planes: Box<[u8; INPUT_LEN]>,
}

impl StateTensor {
    fn empty() -> Self {
        StateTensor {
            planes: Box::new([0; INPUT_LEN]),
        }
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.planes[..]
    }

    pub fn get(&self, plane: usize, square: usize) -> u8 {
        self.planes[plane * SQUARES + square]
    }

    pub fn plane(&self, plane: usize) -> &[u8] {
        &self.planes[plane * SQUARES..(plane + 1) * SQUARES]
    }

    pub fn popcount(&self) -> usize {
        self.planes.iter().map(|&b| b as usize).sum()
    }

    /// The two 7-plane halves exchanged.
    pub fn plane_swapped(&self) -> StateTensor {
        let mut out = StateTensor::empty();
        let half = 7 * SQUARES;
        out.planes[..half].copy_from_slice(&self.planes[half..]);
        out.planes[half..].copy_from_slice(&self.planes[..half]);
        out
    }

    /// Every plane rotated by 180 degrees.
    pub fn rotated(&self) -> StateTensor {
        let mut out = StateTensor::empty();
        for p in 0..PLANES {
            for sq in 0..SQUARES {
                out.planes[p * SQUARES + SQUARES - 1 - sq] = self.planes[p * SQUARES + sq];
            }
        }
        out
    }

    pub fn to_f32(&self, out: &mut [f32]) {
        for (o, &b) in out.iter_mut().zip(self.planes.iter()) {
            *o = b as f32;
        }
    }
}

impl std::fmt::Debug for StateTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StateTensor(popcount {})", self.popcount())
    }
}

fn encode_with(position: &Position, first: Color, rotate: bool) -> StateTensor {
    let mut t = StateTensor::empty();
    for (sq, piece) in position.pieces() {
        let half = if piece.color == first { 0 } else { 7 };
        let plane = half + piece.kind.index();
        let idx = if rotate { sq.rotated().index() } else { sq.index() };
        t.planes[plane * SQUARES + idx] = 1;
    }
    t
}

/// Network input: the side to move fills the first seven planes and the
/// board is rotated for Black so the mover always advances up the ranks.
pub fn encode_state(position: &Position) -> StateTensor {
    let side = position.side_to_move();
    encode_with(position, side, side == Color::Black)
}

/// Fixed orientation: Red in planes 0..7, Black in 7..14, no rotation.
pub fn encode_absolute(position: &Position) -> StateTensor {
    encode_with(position, Color::Red, false)
}

pub fn plane_index(own: bool, kind: PieceKind) -> usize {
    if own {
        kind.index()
    } else {
        7 + kind.index()
    }
}
