use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::population::Population;
use super::PopulationError;
use crate::analysis::MatchEngine;
use crate::nash::PayoffMatrix;

/// One game: `n0` is Red's score (1 win, 0 draw, -1 loss), `n1` and `n2`
/// the Red and Black labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferEntry {
    pub n0: i8,
    pub n1: String,
    pub n2: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NashBuffer {
    pub entries: Vec<BufferEntry>,
    /// `(member, message)` for pairings an engine failure cut short.
    #[serde(default)]
    pub incomplete: Vec<(String, String)>,
}

impl NashBuffer {
    pub fn new() -> NashBuffer {
        NashBuffer::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, n0: i8, red: &str, black: &str) {
        self.entries.push(BufferEntry {
            n0,
            n1: red.to_string(),
            n2: black.to_string(),
        });
    }

    pub fn extend(&mut self, other: NashBuffer) {
        self.entries.extend(other.entries);
        self.incomplete.extend(other.incomplete);
    }

    /// Drops every game involving a label outside `labels`.
    pub fn retain_labels(&mut self, labels: &[String]) {
        self.entries
            .retain(|e| labels.contains(&e.n1) && labels.contains(&e.n2));
        self.incomplete.retain(|(m, _)| labels.contains(m));
    }
}

fn play_pairing(
    challenger: &str,
    member: &str,
    k_games: usize,
    engine: &mut dyn FnMut(&str, &str) -> Result<i8, String>,
) -> NashBuffer {
    let mut out = NashBuffer::new();
    for i in 0..k_games {
        let (red, black) = if i % 2 == 0 { (challenger, member) } else { (member, challenger) };
        match engine(red, black) {
            Ok(s) if (-1..=1).contains(&s) => out.push(s, red, black),
            Ok(s) => {
                out.incomplete.push((member.to_string(), format!("engine returned score {s}")));
                break;
            }
            Err(e) => {
                out.incomplete.push((member.to_string(), e));
                break;
            }
        }
    }
    out
}

fn check_games(k_games: usize) -> Result<(), PopulationError> {
    if k_games < 2 {
        return Err(PopulationError::Invalid(format!("k_games = {k_games}, need at least 2")));
    }
    Ok(())
}

/// Plays `k_games` between the challenger and every member. The challenger
/// is Red in even-numbered games. An engine failure ends that pairing,
/// keeps the games already played and records the member as incomplete.
pub fn evaluate_challenger(
    challenger: &str,
    pop: &Population,
    k_games: usize,
    engine: &mut dyn MatchEngine,
) -> Result<NashBuffer, PopulationError> {
    check_games(k_games)?;
    let mut out = NashBuffer::new();
    for member in pop.labels() {
        out.extend(play_pairing(challenger, &member, k_games, &mut |r, b| engine.play(r, b)));
    }
    Ok(out)
}

/// As [`evaluate_challenger`] with pairings spread over `threads` scoped
/// threads. Results are appended in population order, so the buffer is the
/// same as the sequential one for a deterministic engine.
pub fn evaluate_challenger_parallel<E>(
    challenger: &str,
    pop: &Population,
    k_games: usize,
    threads: usize,
    engine: &E,
) -> Result<NashBuffer, PopulationError>
where
    E: Fn(&str, &str) -> Result<i8, String> + Sync,
{
    check_games(k_games)?;
    let labels = pop.labels();
    let threads = threads.clamp(1, labels.len().max(1));
    let chunk = labels.len().div_ceil(threads).max(1);
    let parts: Vec<Vec<NashBuffer>> = std::thread::scope(|s| {
        let handles: Vec<_> = labels
            .chunks(chunk)
            .map(|members| {
                s.spawn(move || {
                    members
                        .iter()
                        .map(|m| play_pairing(challenger, m, k_games, &mut |r, b| engine(r, b)))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect()
    });
    let mut out = NashBuffer::new();
    for b in parts.into_iter().flatten() {
        out.extend(b);
    }
    Ok(out)
}

/// `M[n1][n2] += n0` and `M[n2][n1] -= n0` for every game, summed in
/// integers so the result is exactly antisymmetric. With `normalize`, each
/// pair's entries are divided by the number of games that pair played.
pub fn fill_payoff(buffer: &NashBuffer, labels: &[String], normalize: bool) -> Result<PayoffMatrix, PopulationError> {
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    if index.len() != labels.len() {
        return Err(PopulationError::Invalid("duplicate labels".into()));
    }
    let k = labels.len();
    let mut sums = vec![0i64; k * k];
    let mut games = vec![0u64; k * k];
    for e in &buffer.entries {
        let lookup = |l: &String| index.get(l.as_str()).copied().ok_or_else(|| PopulationError::UnknownLabel(l.clone()));
        let (r, b) = (lookup(&e.n1)?, lookup(&e.n2)?);
        sums[r * k + b] += e.n0 as i64;
        sums[b * k + r] -= e.n0 as i64;
        games[r * k + b] += 1;
        games[b * k + r] += 1;
    }
    let values = DMatrix::from_fn(k, k, |i, j| {
        let s = sums[i * k + j] as f64;
        match games[i * k + j] {
            n if normalize && n > 0 => s / n as f64,
            _ => s,
        }
    });
    Ok(PayoffMatrix::new(labels.to_vec(), values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_tuple() {
        let mut b = NashBuffer::new();
        b.push(1, "a", "b");
        let m = fill_payoff(&b, &labels(&["a", "b"]), false).unwrap();
        assert_eq!((m.get(0, 1), m.get(1, 0)), (1.0, -1.0));
    }

    #[test]
    fn two_games_normalize_to_one() {
        let mut b = NashBuffer::new();
        b.push(1, "a", "b");
        b.push(-1, "b", "a");
        let l = labels(&["a", "b"]);
        assert_eq!(fill_payoff(&b, &l, false).unwrap().get(0, 1), 2.0);
        assert_eq!(fill_payoff(&b, &l, true).unwrap().get(0, 1), 1.0);
    }

    #[test]
    fn empty_buffer_and_unknown_labels() {
        let l = labels(&["a", "b", "c"]);
        let m = fill_payoff(&NashBuffer::new(), &l, true).unwrap();
        assert!(m.values().iter().all(|&x| x == 0.0));
        let mut b = NashBuffer::new();
        b.push(0, "a", "z");
        assert!(matches!(fill_payoff(&b, &l, true), Err(PopulationError::UnknownLabel(z)) if z == "z"));
    }
}
