use rand::Rng;

use super::binned::EloBin;
use super::elo::elo_win_probability;
use super::records::GameRecord;

/// `games_per_bin * bins.len()` games between players drawn uniformly from
/// random bins, with outcomes sampled from the logistic Elo model. A
/// fraction `draw_rate` of games are drawn regardless of ratings.
pub fn elo_logistic_records<R: Rng + ?Sized>(
    bins: &[EloBin],
    games_per_bin: usize,
    draw_rate: f64,
    rng: &mut R,
) -> Vec<GameRecord> {
    let n = games_per_bin * bins.len();
    (0..n)
        .map(|g| {
            let bi = &bins[rng.random_range(0..bins.len())];
            let bj = &bins[rng.random_range(0..bins.len())];
            let red = rng.random_range(bi.low..bi.high);
            let black = rng.random_range(bj.low..bj.high);
            let score = if rng.random::<f64>() < draw_rate {
                0
            } else if rng.random::<f64>() < elo_win_probability(red, black) {
                1
            } else {
                -1
            };
            GameRecord::new(&format!("p{}", 2 * g), &format!("p{}", 2 * g + 1), score).with_elo(red, black)
        })
        .collect()
}
