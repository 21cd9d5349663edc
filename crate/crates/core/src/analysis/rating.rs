use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::elo::{elo_score, EloState, INITIAL_RATING};
use super::AnalysisError;

/// Plays games between named agents.
pub trait MatchEngine {
    /// Plays one game and returns the score from Red's side (1, 0 or -1).
    fn play(&mut self, red: &str, black: &str) -> Result<i8, String>;
}

impl<F: FnMut(&str, &str) -> Result<i8, String>> MatchEngine for F {
    fn play(&mut self, red: &str, black: &str) -> Result<i8, String> {
        self(red, black)
    }
}

fn checked(engine: &mut dyn MatchEngine, red: &str, black: &str) -> Result<i8, String> {
    let s = engine.play(red, black)?;
    if (-1..=1).contains(&s) {
        Ok(s)
    } else {
        Err(format!("engine returned score {s}"))
    }
}

/// Ratings after a relative-population Elo run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpElo {
    /// `(name, rating)`, population first and the challenger last.
    pub ratings: Vec<(String, f64)>,
    pub games: usize,
    /// Pairings cut short by an engine failure, with the message.
    pub incomplete: Vec<(String, String)>,
}

impl RpElo {
    pub fn rating(&self, name: &str) -> Option<f64> {
        self.ratings.iter().find(|(n, _)| n == name).map(|&(_, r)| r)
    }
}

/// Everyone starts at 1500. The challenger then plays `games_per_pair`
/// games against each member in order, Red in even-numbered games, and
/// ratings are updated after every game.
pub fn rp_elo(
    population: &[String],
    challenger: &str,
    games_per_pair: usize,
    k: f64,
    engine: &mut dyn MatchEngine,
) -> Result<RpElo, AnalysisError> {
    if population.is_empty() {
        return Err(AnalysisError::Shape("empty population".into()));
    }
    let mut state = EloState::new(k);
    for p in population {
        state.insert(p, INITIAL_RATING);
    }
    state.insert(challenger, INITIAL_RATING);
    let mut games = 0;
    let mut incomplete = Vec::new();
    for member in population {
        for g in 0..games_per_pair {
            let (red, black) = if g % 2 == 0 {
                (challenger, member.as_str())
            } else {
                (member.as_str(), challenger)
            };
            match checked(engine, red, black) {
                Ok(s) => {
                    state.update(red, black, elo_score(s))?;
                    games += 1;
                }
                Err(e) => {
                    incomplete.push((member.clone(), e));
                    break;
                }
            }
        }
    }
    Ok(RpElo {
        ratings: state.ratings().map(|(n, r)| (n.to_owned(), r)).collect(),
        games,
        incomplete,
    })
}

/// Mean score of each `a` agent against each `b` agent over `games` games
/// with alternating colours (the `a` agent has Red in even games).
pub fn cross_payoff(
    a: &[String],
    b: &[String],
    games: usize,
    engine: &mut dyn MatchEngine,
) -> Result<DMatrix<f64>, AnalysisError> {
    if games == 0 {
        return Err(AnalysisError::Shape("zero games per pair".into()));
    }
    let mut m = DMatrix::zeros(a.len(), b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let mut total = 0.0;
            for g in 0..games {
                let s = if g % 2 == 0 {
                    checked(engine, x, y)
                } else {
                    checked(engine, y, x).map(|s| -s)
                }
                .map_err(AnalysisError::Engine)?;
                total += s as f64;
            }
            m[(i, j)] = total / games as f64;
        }
    }
    Ok(m)
}
