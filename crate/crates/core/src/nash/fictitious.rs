use nalgebra::DMatrix;

/// Empirical strategies after a run of fictitious play on the zero-sum game
/// `a` (row player maximises), with the value bracket they certify.
#[derive(Clone, Debug, PartialEq)]
pub struct FictitiousPlay {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `min_j (xᵀA)_j`, a lower bound on the game value.
    pub lower: f64,
    /// `max_i (Ay)_i`, an upper bound on the game value.
    pub upper: f64,
    pub rounds: usize,
}

/// Simultaneous fictitious play: each round both players best-respond to
/// the other's empirical mixture so far. Ties go to the lowest index.
pub fn fictitious_play(a: &DMatrix<f64>, rounds: usize) -> FictitiousPlay {
    let (m, n) = a.shape();
    assert!(m > 0 && n > 0, "empty game");
    let mut row_counts = vec![0u64; m];
    let mut col_counts = vec![0u64; n];
    // Payoff of each row against the column history, and of each column
    // against the row history.
    let mut row_payoff = vec![0.0; m];
    let mut col_payoff = vec![0.0; n];
    let (mut i, mut j) = (0usize, 0usize);
    for _ in 0..rounds.max(1) {
        row_counts[i] += 1;
        col_counts[j] += 1;
        for r in 0..m {
            row_payoff[r] += a[(r, j)];
        }
        for c in 0..n {
            col_payoff[c] += a[(i, c)];
        }
        i = argmax(&row_payoff);
        j = argmin(&col_payoff);
    }
    let total = rounds.max(1) as f64;
    let x: Vec<f64> = row_counts.iter().map(|&c| c as f64 / total).collect();
    let y: Vec<f64> = col_counts.iter().map(|&c| c as f64 / total).collect();
    let lower = (0..n)
        .map(|c| (0..m).map(|r| x[r] * a[(r, c)]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let upper = (0..m)
        .map(|r| (0..n).map(|c| a[(r, c)] * y[c]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    FictitiousPlay {
        x,
        y,
        lower,
        upper,
        rounds: rounds.max(1),
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies_brackets_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]);
        let fp = fictitious_play(&a, 20_000);
        assert!(fp.lower <= 0.0 && fp.upper >= 0.0);
        assert!(fp.upper - fp.lower < 0.01);
    }
}
