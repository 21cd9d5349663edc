use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::elo::elo_win_probability;
use super::{AnalysisError, GameRecord};
use crate::nash::PayoffMatrix;

/// Rating interval `[low, high)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EloBin {
    pub low: f64,
    pub high: f64,
}

impl EloBin {
    pub fn new(low: f64, high: f64) -> EloBin {
        EloBin { low, high }
    }

    pub fn contains(&self, rating: f64) -> bool {
        self.low <= rating && rating < self.high
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.high - self.low)
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.low, self.high)
    }
}

/// Bins of `width` covering `[low, high)`, the last one possibly clipped.
pub fn uniform_bins(low: f64, high: f64, width: f64) -> Vec<EloBin> {
    assert!(width > 0.0 && high > low);
    let mut out = Vec::new();
    let mut at = low;
    while at < high {
        out.push(EloBin::new(at, (at + width).min(high)));
        at += width;
    }
    out
}

/// Width-aligned bins spanning every rating that appears in `records`.
pub fn bins_for_records(records: &[GameRecord], width: f64) -> Vec<EloBin> {
    let ratings = records
        .iter()
        .flat_map(|r| [r.red_elo, r.black_elo])
        .flatten()
        .filter(|x| x.is_finite());
    let (lo, hi) = ratings.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return Vec::new();
    }
    let start = (lo / width).floor() * width;
    let end = ((hi / width).floor() + 1.0) * width;
    uniform_bins(start, end, width)
}

/// Which rating stands for a bin when no games between two bins exist.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinMode {
    /// `(high - low) / 2`, as the algorithm is written. Equal-width bins
    /// then always predict an even game.
    Literal,
    /// `(high + low) / 2`.
    #[default]
    Midpoint,
}

impl BinMode {
    pub fn representative(self, bin: &EloBin) -> f64 {
        match self {
            BinMode::Literal => bin.half_width(),
            BinMode::Midpoint => bin.midpoint(),
        }
    }
}

pub fn validate_bins(bins: &[EloBin]) -> Result<(), AnalysisError> {
    for (i, b) in bins.iter().enumerate() {
        if !(b.low.is_finite() && b.high.is_finite() && b.low < b.high) {
            return Err(AnalysisError::InvalidBins(format!("bin {i} is [{}, {})", b.low, b.high)));
        }
        if i > 0 && bins[i - 1].high > b.low {
            return Err(AnalysisError::InvalidBins(format!("bins {} and {i} overlap or are out of order", i - 1)));
        }
    }
    Ok(())
}

fn bin_of(bins: &[EloBin], rating: f64) -> Option<usize> {
    bins.iter().position(|b| b.contains(rating))
}

/// Expected score of bin `i` over bin `j` as a
/// `[-1, 1]` value, from the logistic Elo model.
fn predicted(bins: &[EloBin], i: usize, j: usize, mode: BinMode) -> f64 {
    2.0 * elo_win_probability(mode.representative(&bins[i]), mode.representative(&bins[j])) - 1.0
}

/// Per-pair game statistics gathered from records.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedGames {
    /// `sums[(i, j)]`: total red score with red in bin `i`, black in bin `j`.
    pub sums: DMatrix<f64>,
    pub counts: DMatrix<u64>,
    /// Games per bin, counting each player.
    pub occupancy: Vec<u64>,
}

pub fn tally(records: &[GameRecord], bins: &[EloBin]) -> Result<BinnedGames, AnalysisError> {
    validate_bins(bins)?;
    let m = bins.len();
    let mut sums = DMatrix::zeros(m, m);
    let mut counts = DMatrix::zeros(m, m);
    let mut occupancy = vec![0; m];
    for (n, r) in records.iter().enumerate() {
        let (Some(re), Some(be)) = (r.red_elo, r.black_elo) else {
            return Err(AnalysisError::MissingElo { index: n });
        };
        let (Some(i), Some(j)) = (bin_of(bins, re), bin_of(bins, be)) else {
            continue;
        };
        sums[(i, j)] += r.score_red as f64;
        counts[(i, j)] += 1;
        occupancy[i] += 1;
        occupancy[j] += 1;
    }
    Ok(BinnedGames {
        sums,
        counts,
        occupancy,
    })
}

/// Builds the antisymmetric bin-vs-bin payoff matrix.
///
/// For bins `i < j`, `E_ij` is the mean score of the bin-`i` player when
/// it has Red against bin `j`, and `E_ji` the mean score of the same
/// bin-`i` player when the colours are exchanged. A colour assignment with
/// no games falls back to the Elo prediction between bin representatives.
/// `M_ij = (E_ij + E_ji) / 2` and `M_ji = -M_ij`.
pub fn build_payoff_from_records(
    records: &[GameRecord],
    bins: &[EloBin],
    mode: BinMode,
) -> Result<PayoffMatrix, AnalysisError> {
    let games = tally(records, bins)?;
    Ok(payoff_from_tally(&games, bins, mode))
}

pub fn payoff_from_tally(games: &BinnedGames, bins: &[EloBin], mode: BinMode) -> PayoffMatrix {
    let m = bins.len();
    let mut values = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let as_red = match games.counts[(i, j)] {
                0 => predicted(bins, i, j, mode),
                n => games.sums[(i, j)] / n as f64,
            };
            let as_black = match games.counts[(j, i)] {
                0 => predicted(bins, i, j, mode),
                n => -games.sums[(j, i)] / n as f64,
            };
            let v = 0.5 * (as_red + as_black);
            values[(i, j)] = v;
            values[(j, i)] = -v;
        }
    }
    PayoffMatrix::new(bins.iter().map(EloBin::label).collect(), values).expect("labels match bins")
}
