//! The population loop on a known symmetric matrix game, where a
//! strategy is a row and training is replaced by an exact best response.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::population::{Agent, Populationer, PopulationerConfig};
use super::PopulationError;
use crate::analysis::{symmetric_exploitability, MatchEngine};
use crate::nash::NashSolver;

/// A `k`-strategy spinning-top game: a transitive strength gradient plus a
/// cyclic component that is strongest in the lower middle and vanishes
/// towards the top. Entries are clipped to [-1, 1].
pub fn spinning_top(k: usize) -> DMatrix<f64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let s = |i: usize| if k > 1 { i as f64 / (k - 1) as f64 } else { 0.0 };
    let c = |i: usize| (-((s(i) - 0.35) / 0.25).powi(2)).exp();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let cyclic = 5.0 * c(i) * c(j) * (golden * (i as f64 - j as f64)).sin();
            let x = (0.6 * (s(i) - s(j)) + cyclic).clamp(-1.0, 1.0);
            m[(i, j)] = x;
            m[(j, i)] = -x;
        }
    }
    m
}

/// The row with the highest expected payoff against `mix`, given as
/// `(strategy, probability)` pairs. Ties go to the lower row.
pub fn best_response(m: &DMatrix<f64>, mix: &[(usize, f64)]) -> usize {
    let score = |i: usize| mix.iter().map(|&(j, q)| q * m[(i, j)]).sum::<f64>();
    let mut best = 0;
    let mut best_score = score(0);
    for i in 1..m.nrows() {
        let v = score(i);
        if v > best_score + 1e-12 {
            best = i;
            best_score = v;
        }
    }
    best
}

fn label(strategy: usize, iteration: usize) -> String {
    format!("s{strategy}@{iteration}")
}

fn strategy_of(label: &str) -> Result<usize, String> {
    label
        .strip_prefix('s')
        .and_then(|r| r.split('@').next())
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| format!("bad agent label {label:?}"))
}

/// Plays the matrix game: the row player wins with probability
/// `max(M[r][b], 0)`, loses with probability `max(-M[r][b], 0)` and draws
/// otherwise, so the expected score is exactly `M[r][b]`.
pub struct MatrixEngine<'a> {
    pub m: &'a DMatrix<f64>,
    pub rng: ChaCha8Rng,
}

impl MatchEngine for MatrixEngine<'_> {
    fn play(&mut self, red: &str, black: &str) -> Result<i8, String> {
        let x = self.m[(strategy_of(red)?, strategy_of(black)?)];
        Ok(if self.rng.random::<f64>() < x.abs() { x.signum() as i8 } else { 0 })
    }
}

#[derive(Clone, Debug)]
pub struct MatrixRun {
    /// Strategy added at each iteration.
    pub strategies: Vec<usize>,
    /// Exploitability in the full game after each iteration.
    pub exploitability: Vec<f64>,
    /// Final mixture over strategies.
    pub mixture: Vec<f64>,
}

impl MatrixRun {
    pub fn final_exploitability(&self) -> f64 {
        *self.exploitability.last().unwrap_or(&f64::INFINITY)
    }
}

fn full_exploitability(m: &DMatrix<f64>, mixture: &[f64]) -> f64 {
    symmetric_exploitability(m, mixture).map(|e| e.value).unwrap_or(f64::INFINITY)
}

/// Runs the population loop for `iterations` rotations from strategy 0.
/// Each challenger is the best response to the opponent distribution the
/// previous rotation chose; its games are sampled by [`MatrixEngine`]. The
/// reported mixture is the population's last Nash distribution.
pub fn populationer_run(
    m: &DMatrix<f64>,
    iterations: usize,
    config: PopulationerConfig,
    solver: NashSolver,
    seed: u64,
) -> Result<MatrixRun, PopulationError> {
    let mut pop = Populationer::new(config, solver);
    let mut engine = MatrixEngine {
        m,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut next = 0;
    let mut run = MatrixRun {
        strategies: Vec::new(),
        exploitability: Vec::new(),
        mixture: Vec::new(),
    };
    for t in 0..iterations {
        run.strategies.push(next);
        let choice = pop.step(Agent::new(label(next, t)), &mut engine, &mut rng)?;
        let mut mixture = vec![0.0; m.nrows()];
        for (l, q) in pop.last_nash() {
            mixture[strategy_of(&l).map_err(PopulationError::Invalid)?] += q;
        }
        run.exploitability.push(full_exploitability(m, &mixture));
        run.mixture = mixture;
        let opponents: Vec<(usize, f64)> = choice
            .distribution
            .iter()
            .map(|(l, q)| strategy_of(l).map(|s| (s, *q)))
            .collect::<Result<_, _>>()
            .map_err(PopulationError::Invalid)?;
        next = best_response(m, &opponents);
    }
    Ok(run)
}

/// Self-play against the latest strategy only: each iteration plays the
/// best response to the previous one.
pub fn latest_opponent_run(m: &DMatrix<f64>, iterations: usize) -> MatrixRun {
    let mut run = MatrixRun {
        strategies: Vec::new(),
        exploitability: Vec::new(),
        mixture: Vec::new(),
    };
    let mut s = 0;
    for _ in 0..iterations {
        run.strategies.push(s);
        let mut mixture = vec![0.0; m.nrows()];
        mixture[s] = 1.0;
        run.exploitability.push(full_exploitability(m, &mixture));
        run.mixture = mixture;
        s = best_response(m, &[(s, 1.0)]);
    }
    run
}
