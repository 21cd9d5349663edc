//! Benchmark fixtures shared by the criterion benches.

use xqlab::Position;

/// A quiet middlegame reached from the opening by a fixed move list.
pub fn middlegame() -> Position {
    let mut p = Position::initial();
    for mv in ["h2e2", "h9g7", "h0g2", "i9h9", "i0h0", "b9c7", "c3c4", "c6c5", "b0c2", "b7b3"] {
        p = p.apply_text(mv).expect("fixture moves are legal");
    }
    p
}
