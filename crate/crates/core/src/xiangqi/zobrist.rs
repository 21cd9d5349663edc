use super::SQUARES;

const fn splitmix64(state: u64) -> (u64, u64) {
    let next = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = next;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (next, z ^ (z >> 31))
}

const fn build_keys() -> [[u64; SQUARES]; 15] {
    let mut keys = [[0u64; SQUARES]; 15];
    let mut state = 0x5851_F42D_4C95_7F2D_u64;
    // Code 0 (empty) keeps zero keys.
    let mut code = 1;
    while code < 15 {
        let mut sq = 0;
        while sq < SQUARES {
            let (s, v) = splitmix64(state);
            state = s;
            keys[code][sq] = v;
            sq += 1;
        }
        code += 1;
    }
    keys
}

pub(crate) static PIECE_KEYS: [[u64; SQUARES]; 15] = build_keys();
pub(crate) const BLACK_TO_MOVE: u64 = 0x1F83_D9AB_FB41_BD6B;

#[inline]
pub(crate) fn piece_key(code: u8, sq: usize) -> u64 {
    PIECE_KEYS[code as usize][sq]
}
