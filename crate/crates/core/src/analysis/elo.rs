use std::collections::HashMap;

use super::AnalysisError;

const LN10_OVER_400: f64 = std::f64::consts::LN_10 / 400.0;

/// Expected scores `(E_w, E_b)` for ratings `rw` and `rb`.
pub fn elo_expected(rw: f64, rb: f64) -> (f64, f64) {
    let ew = 1.0 / (1.0 + 10f64.powf((rb - rw) / 400.0));
    let eb = 1.0 / (1.0 + 10f64.powf((rw - rb) / 400.0));
    (ew, eb)
}

/// The same expectation through `Q = 10^(R/400)`.
pub fn elo_expected_q(rw: f64, rb: f64) -> (f64, f64) {
    // Shift both ratings so the larger exponent is 0 and nothing overflows.
    let top = rw.max(rb);
    let qw = 10f64.powf((rw - top) / 400.0);
    let qb = 10f64.powf((rb - top) / 400.0);
    (qw / (qw + qb), qb / (qw + qb))
}

/// Logistic win probability `1 / (1 + exp(-(ln 10 / 400)(rw - rb)))`.
pub fn elo_win_probability(rw: f64, rb: f64) -> f64 {
    1.0 / (1.0 + (-LN10_OVER_400 * (rw - rb)).exp())
}

pub const DEFAULT_K: f64 = 32.0;
pub const INITIAL_RATING: f64 = 1500.0;

/// Ratings of a set of named players under sequential Elo updates.
#[derive(Clone, Debug, PartialEq)]
pub struct EloState {
    pub k: f64,
    names: Vec<String>,
    ratings: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EloState {
    pub fn new(k: f64) -> EloState {
        assert!(k > 0.0 && k.is_finite(), "K-factor must be positive");
        EloState {
            k,
            names: Vec::new(),
            ratings: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Adds `name` at `rating`, or resets it if already present.
    pub fn insert(&mut self, name: &str, rating: f64) {
        match self.index.get(name) {
            Some(&i) => self.ratings[i] = rating,
            None => {
                self.index.insert(name.to_owned(), self.names.len());
                self.names.push(name.to_owned());
                self.ratings.push(rating);
            }
        }
    }

    pub fn rating(&self, name: &str) -> Option<f64> {
        self.index.get(name).map(|&i| self.ratings[i])
    }

    /// `(name, rating)` in insertion order.
    pub fn ratings(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names.iter().map(String::as_str).zip(self.ratings.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Applies one game in which `w` scored `sw` (1, 0.5 or 0) against `b`.
    pub fn update(&mut self, w: &str, b: &str, sw: f64) -> Result<(), AnalysisError> {
        if ![0.0, 0.5, 1.0].contains(&sw) {
            return Err(AnalysisError::InvalidScore(sw));
        }
        let iw = *self
            .index
            .get(w)
            .ok_or_else(|| AnalysisError::UnknownPlayer(w.to_owned()))?;
        let ib = *self
            .index
            .get(b)
            .ok_or_else(|| AnalysisError::UnknownPlayer(b.to_owned()))?;
        let (ew, eb) = elo_expected(self.ratings[iw], self.ratings[ib]);
        let dw = self.k * (sw - ew);
        let db = self.k * ((1.0 - sw) - eb);
        self.ratings[iw] += dw;
        self.ratings[ib] += db;
        Ok(())
    }
}

/// Score in `{1, 0.5, 0}` for the player whose game result is `score`
/// in `{1, 0, -1}`.
pub fn elo_score(score: i8) -> f64 {
    (score as f64 + 1.0) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(elo_expected(1500.0, 1500.0), (0.5, 0.5));
        let (ew, eb) = elo_expected(1500.0, 1100.0);
        assert!((ew - 10.0 / 11.0).abs() < 1e-12);
        assert!((ew + eb - 1.0).abs() < 1e-12);
        assert!((elo_win_probability(1900.0, 1500.0) - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn update_moves_by_half_k() {
        let mut s = EloState::new(DEFAULT_K);
        s.insert("r", 1500.0);
        s.insert("b", 1500.0);
        s.update("r", "b", 1.0).unwrap();
        assert_eq!(s.rating("r"), Some(1516.0));
        assert_eq!(s.rating("b"), Some(1484.0));
        assert!(s.update("r", "x", 1.0).is_err());
        assert!(s.update("r", "b", 0.3).is_err());
    }
}
