//! PUCT tree search over a pluggable [`Evaluator`].

mod player;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{EvalError, Evaluator, MoveTable};
use crate::xiangqi::{GameRules, Move, Position};

pub use player::{play_game, self_play_game, MctsPlayer, Player, PlayerError, RandomPlayer, SelfPlayGame};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Simulations per search.
    pub simulations: u32,
    pub c_puct: f32,
    pub dirichlet_alpha: f32,
    /// Share of the root priors replaced by Dirichlet noise. Only applied
    /// when the caller passes a random source to [`search`].
    pub noise_fraction: f32,
    /// Plies played with `temperature`; later plies use temperature 0.
    pub temperature_plies: u32,
    pub temperature: f32,
    pub rules: GameRules,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            simulations: 160,
            c_puct: 1.5,
            dirichlet_alpha: 0.2,
            noise_fraction: 0.25,
            temperature_plies: 20,
            temperature: 1.0,
            rules: GameRules::default(),
        }
    }
}

impl SearchConfig {
    pub fn with_simulations(simulations: u32) -> SearchConfig {
        SearchConfig {
            simulations,
            ..SearchConfig::default()
        }
    }

    /// Temperature in effect at game ply `ply`.
    pub fn temperature_at(&self, ply: u32) -> f32 {
        if ply < self.temperature_plies {
            self.temperature
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.simulations == 0 {
            return Err(SearchError::Config("simulations must be at least 1".into()));
        }
        if !(self.c_puct > 0.0) {
            return Err(SearchError::Config("c_puct must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(SearchError::Config("temperature must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) || !(self.dirichlet_alpha > 0.0) {
            return Err(SearchError::Config("invalid root noise parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("cannot search a finished game")]
    TerminalRoot,
    #[error("evaluator failed at {fen}: {source}")]
    Evaluator { fen: String, source: EvalError },
    #[error("invalid search configuration: {0}")]
    Config(String),
}

/// Root statistics of one search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutput {
    /// Legal root moves in action-index order.
    pub moves: Vec<Move>,
    pub visits: Vec<u32>,
    /// Mean action values from the root mover's side.
    pub q: Vec<f32>,
    /// Root priors actually used (after noise, if any).
    pub priors: Vec<f32>,
    /// Search policy at `temperature`.
    pub pi: Vec<f32>,
    pub temperature: f32,
    /// Mean backed-up value over all simulations, root mover's side.
    pub value: f32,
    /// Evaluator value of the root position.
    pub root_value: f32,
}

/// One row of [`SearchOutput::top_k`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub mv: Move,
    pub visits: u32,
    pub q: f32,
    pub prior: f32,
}

impl SearchOutput {
    pub fn total_visits(&self) -> u32 {
        self.visits.iter().sum()
    }

    /// Policy recomputed at another temperature.
    pub fn policy(&self, temperature: f32) -> Vec<f32> {
        visit_policy(&self.visits, temperature)
    }

    /// The `k` most visited moves; ties keep action-index order.
    pub fn top_k(&self, k: usize) -> Vec<Candidate> {
        let mut order: Vec<usize> = (0..self.moves.len()).collect();
        order.sort_by(|&a, &b| self.visits[b].cmp(&self.visits[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .take(k)
            .map(|i| Candidate {
                mv: self.moves[i],
                visits: self.visits[i],
                q: self.q[i],
                prior: self.priors[i],
            })
            .collect()
    }

    pub fn mass_on(&self, mv: Move) -> f32 {
        self.moves
            .iter()
            .position(|&m| m == mv)
            .map_or(0.0, |i| self.pi[i])
    }
}

/// `pi_a ∝ N_a^(1/τ)`; for `τ = 0` one-hot on the most visited move (lowest
/// index on ties).
pub fn visit_policy(visits: &[u32], temperature: f32) -> Vec<f32> {
    let mut pi = vec![0.0; visits.len()];
    if visits.is_empty() {
        return pi;
    }
    if temperature <= 0.0 {
        let mut best = 0;
        for (i, &n) in visits.iter().enumerate() {
            if n > visits[best] {
                best = i;
            }
        }
        pi[best] = 1.0;
        return pi;
    }
    let max = *visits.iter().max().unwrap() as f64;
    if max == 0.0 {
        return vec![1.0 / visits.len() as f32; visits.len()];
    }
    let inv = 1.0 / temperature as f64;
    let weights: Vec<f64> = visits.iter().map(|&n| (n as f64 / max).powf(inv)).collect();
    let sum: f64 = weights.iter().sum();
    for (p, w) in pi.iter_mut().zip(weights) {
        *p = (w / sum) as f32;
    }
    pi
}

struct Node {
    position: Position,
    moves: Vec<Move>,
    priors: Vec<f32>,
    children: Vec<u32>,
    n: Vec<u32>,
    w: Vec<f32>,
    /// Exact value for the side to move when the game is over here.
    terminal: Option<f32>,
}

const UNEXPANDED: u32 = u32::MAX;

impl Node {
    fn visits(&self) -> u32 {
        self.n.iter().sum()
    }

    fn select(&self, c_puct: f32) -> usize {
        let sqrt_n = (self.visits().max(1) as f32).sqrt();
        let mut best = 0;
        let mut best_score = f32::NEG_INFINITY;
        for a in 0..self.moves.len() {
            let q = self.w[a] / self.n[a].max(1) as f32;
            let u = c_puct * self.priors[a] * sqrt_n / (1.0 + self.n[a] as f32);
            let score = q + u;
            if score > best_score {
                best_score = score;
                best = a;
            }
        }
        best
    }
}

/// Sorts legal moves by action index so that "lowest index" tie-breaking
/// follows the table order.
fn ordered_moves(position: &Position) -> Vec<Move> {
    let table = MoveTable::global();
    let mut moves = position.legal_moves();
    moves.sort_by_key(|&m| table.index_of(m).unwrap_or(usize::MAX));
    moves
}

struct Tree<'a, E: ?Sized> {
    nodes: Vec<Node>,
    eval: &'a E,
    rules: GameRules,
}

impl<E: Evaluator + ?Sized> Tree<'_, E> {
    /// Adds a node for `position` and returns it with the leaf value from
    /// its mover's side.
    fn expand(&mut self, position: Position) -> Result<(u32, f32), SearchError> {
        let moves = ordered_moves(&position);
        let (priors, value, terminal) = if moves.is_empty() {
            (Vec::new(), -1.0, Some(-1.0))
        } else if position.draw_result(&self.rules).is_some() {
            (vec![0.0; moves.len()], 0.0, Some(0.0))
        } else {
            let e = self
                .eval
                .evaluate(&position, &moves)
                .map_err(|source| SearchError::Evaluator {
                    fen: position.to_fen(),
                    source,
                })?;
            if e.priors.len() != moves.len() {
                return Err(SearchError::Evaluator {
                    fen: position.to_fen(),
                    source: EvalError::Shape(format!(
                        "{} priors for {} moves",
                        e.priors.len(),
                        moves.len()
                    )),
                });
            }
            (e.priors, e.value.clamp(-1.0, 1.0), None)
        };
        let k = moves.len();
        self.nodes.push(Node {
            position,
            moves,
            priors,
            children: vec![UNEXPANDED; k],
            n: vec![0; k],
            w: vec![0.0; k],
            terminal,
        });
        Ok(((self.nodes.len() - 1) as u32, value))
    }

    fn simulate(&mut self, c_puct: f32) -> Result<(), SearchError> {
        let mut path: Vec<(u32, usize)> = Vec::new();
        let mut node = 0u32;
        let mut value = loop {
            let current = &self.nodes[node as usize];
            if let Some(v) = current.terminal {
                break v;
            }
            let a = current.select(c_puct);
            path.push((node, a));
            let child = current.children[a];
            if child == UNEXPANDED {
                let next = current.position.apply_unchecked(current.moves[a]);
                let (id, v) = self.expand(next)?;
                self.nodes[node as usize].children[a] = id;
                break v;
            }
            node = child;
        };
        for &(id, a) in path.iter().rev() {
            value = -value;
            let n = &mut self.nodes[id as usize];
            n.n[a] += 1;
            n.w[a] += value;
        }
        Ok(())
    }
}

/// Runs `cfg.simulations` simulations from `position`.
///
/// Every simulation adds exactly one visit to a root edge, so the root
/// visit total equals `cfg.simulations`. Root noise is mixed in only when
/// `noise` is given and `cfg.noise_fraction > 0`.
pub fn search<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    position: &Position,
    eval: &E,
    cfg: &SearchConfig,
    noise: Option<&mut R>,
) -> Result<SearchOutput, SearchError> {
    cfg.validate()?;
    if position.terminal_result(&cfg.rules).is_some() {
        return Err(SearchError::TerminalRoot);
    }
    let mut tree = Tree {
        nodes: Vec::with_capacity(cfg.simulations as usize + 1),
        eval,
        rules: cfg.rules,
    };
    let (_, root_value) = tree.expand(position.clone())?;
    if let Some(rng) = noise {
        if cfg.noise_fraction > 0.0 {
            let gamma = Gamma::new(cfg.dirichlet_alpha as f64, 1.0).expect("alpha is positive");
            let root = &mut tree.nodes[0];
            let draws: Vec<f64> = root.priors.iter().map(|_| gamma.sample(rng)).collect();
            let sum: f64 = draws.iter().sum();
            if sum > 0.0 {
                let eps = cfg.noise_fraction;
                for (p, d) in root.priors.iter_mut().zip(draws) {
                    *p = (1.0 - eps) * *p + eps * (d / sum) as f32;
                }
            }
        }
    }
    for _ in 0..cfg.simulations {
        tree.simulate(cfg.c_puct)?;
    }
    let root = &tree.nodes[0];
    let temperature = cfg.temperature_at(position.ply());
    let q: Vec<f32> = root
        .w
        .iter()
        .zip(&root.n)
        .map(|(&w, &n)| w / n.max(1) as f32)
        .collect();
    let total: f32 = root.w.iter().sum();
    Ok(SearchOutput {
        moves: root.moves.clone(),
        visits: root.n.clone(),
        q,
        priors: root.priors.clone(),
        pi: visit_policy(&root.n, temperature),
        temperature,
        value: total / cfg.simulations as f32,
        root_value,
    })
}

/// Noise-free search; a deterministic function of position, evaluator and
/// configuration.
pub fn search_deterministic<E: Evaluator + ?Sized>(
    position: &Position,
    eval: &E,
    cfg: &SearchConfig,
) -> Result<SearchOutput, SearchError> {
    search::<E, rand_chacha::ChaCha8Rng>(position, eval, cfg, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    /// Sample from `pi`.
    Training,
    /// Highest `pi`, lowest index on ties. The random source is unused.
    Evaluation,
}

pub fn select_move<R: Rng + ?Sized>(out: &SearchOutput, mode: SelectMode, rng: &mut R) -> Move {
    match mode {
        SelectMode::Evaluation => {
            let mut best = 0;
            for (i, &p) in out.pi.iter().enumerate() {
                if p > out.pi[best] {
                    best = i;
                }
            }
            out.moves[best]
        }
        SelectMode::Training => {
            let x: f32 = rng.random();
            let mut acc = 0.0;
            for (i, &p) in out.pi.iter().enumerate() {
                acc += p;
                if x < acc {
                    return out.moves[i];
                }
            }
            // Rounding left a sliver above the last bucket.
            let last = out.pi.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            out.moves[last]
        }
    }
}

/// Cost bounds of one move decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complexity {
    /// `b^d * n * C`, the worst-case approximation of a search whose
    /// simulations each reach depth `d` in a tree of branching factor `b`.
    pub worst_case: f64,
    /// `n * C`, what one move costs when each simulation triggers one
    /// evaluation.
    pub per_move: f64,
}

pub fn complexity_estimate(simulations: u32, branching: f64, depth: u32, eval_cost: f64) -> Complexity {
    let n = simulations as f64;
    Complexity {
        worst_case: branching.powi(depth as i32) * n * eval_cost,
        per_move: n * eval_cost,
    }
}
