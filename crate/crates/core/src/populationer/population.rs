use std::path::PathBuf;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{evaluate_challenger, fill_payoff, NashBuffer};
use super::{PopulationError, DEFAULT_CAPACITY, DEFAULT_TOP_N};
use crate::analysis::MatchEngine;
use crate::nash::{NashSolver, PayoffMatrix};

/// Probabilities closer than this count as tied.
const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub label: String,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
}

impl Agent {
    pub fn new(label: impl Into<String>) -> Agent {
        Agent {
            label: label.into(),
            checkpoint: None,
        }
    }

    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>) -> Agent {
        self.checkpoint = Some(path.into());
        self
    }
}

/// Agents ordered oldest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    capacity: usize,
    agents: Vec<Agent>,
}

impl Population {
    pub fn new(capacity: usize) -> Population {
        assert!(capacity > 0, "population capacity must be positive");
        Population {
            capacity,
            agents: Vec::new(),
        }
    }

    pub fn from_agents(capacity: usize, agents: Vec<Agent>) -> Result<Population, PopulationError> {
        let mut p = Population::new(capacity);
        if agents.len() > capacity {
            return Err(PopulationError::Invalid(format!(
                "{} agents exceed capacity {capacity}",
                agents.len()
            )));
        }
        for a in agents {
            p.push(a)?;
        }
        Ok(p)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.agents.len() >= self.capacity
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn labels(&self) -> Vec<String> {
        self.agents.iter().map(|a| a.label.clone()).collect()
    }

    pub fn get(&self, label: &str) -> Option<&Agent> {
        self.agents.iter().find(|a| a.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.get(label).is_some()
    }

    fn push(&mut self, agent: Agent) -> Result<(), PopulationError> {
        if self.contains(&agent.label) {
            return Err(PopulationError::DuplicateLabel(agent.label));
        }
        self.agents.push(agent);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpponentChoice {
    pub label: String,
    /// The top-n agents and their renormalized sampling probabilities.
    pub distribution: Vec<(String, f64)>,
    pub top_n: usize,
    /// True when the Nash solve failed and sampling fell back to uniform.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub inserted: String,
    pub removed: Option<String>,
    pub opponent: String,
    /// Nash distribution over the population plus the challenger.
    pub nash: Vec<(String, f64)>,
    pub fallback: bool,
}

/// The `n` largest entries of `p` restricted to `allowed`, in decreasing
/// order. Ties go to the lower index.
pub fn top_n_indices(p: &[f64], allowed: &[bool], n: usize) -> Vec<usize> {
    let mut taken = vec![false; p.len()];
    let mut out = Vec::new();
    while out.len() < n {
        let free = (0..p.len()).filter(|&i| allowed[i] && !taken[i]);
        let Some(best) = free.clone().map(|i| p[i]).reduce(f64::max) else {
            break;
        };
        let i = free.into_iter().find(|&i| p[i] >= best - TIE_EPS).unwrap();
        taken[i] = true;
        out.push(i);
    }
    out
}

/// Solves for the max-entropy Nash distribution over `m`, whose labels
/// must be the population's plus the challenger's. The opponent is sampled
/// from the `top_n` agents of the new population with probability
/// proportional to their Nash mass. The challenger joins the population.
/// Once it is full, the member with the least mass leaves, the oldest on
/// ties. The challenger itself is never removed.
///
/// If the solver fails or does not converge, the opponent is drawn
/// uniformly from the first `top_n` agents and the oldest member leaves.
pub fn select_opponent_and_rotate<R: Rng + ?Sized>(
    m: &PayoffMatrix,
    pop: &Population,
    challenger: Agent,
    top_n: usize,
    solver: &NashSolver,
    rng: &mut R,
) -> Result<(OpponentChoice, Population, Rotation), PopulationError> {
    if top_n == 0 {
        return Err(PopulationError::Invalid("top_n must be at least 1".into()));
    }
    if pop.contains(&challenger.label) {
        return Err(PopulationError::DuplicateLabel(challenger.label));
    }
    let mut members = pop.labels();
    members.push(challenger.label.clone());
    let order: Vec<usize> = members
        .iter()
        .map(|l| m.index_of(l).ok_or_else(|| PopulationError::UnknownLabel(l.clone())))
        .collect::<Result<_, _>>()?;
    if m.len() != members.len() {
        return Err(PopulationError::Invalid(format!(
            "payoff has {} labels, population plus challenger has {}",
            m.len(),
            members.len()
        )));
    }
    let values = m.restrict(&order);

    let k = members.len();
    let (p, fallback) = match solver.solve(values.values()) {
        Ok(r) if r.converged => (r.p, false),
        Ok(r) => {
            log::warn!(
                "Nash solve did not converge (violation {:.3e}); sampling uniformly",
                r.max_violation
            );
            (vec![1.0 / k as f64; k], true)
        }
        Err(e) => {
            log::warn!("Nash solve failed ({e}); sampling uniformly");
            (vec![1.0 / k as f64; k], true)
        }
    };

    let challenger_index = k - 1;
    let removed = if pop.is_full() {
        let worst = (0..challenger_index).map(|i| p[i]).fold(f64::INFINITY, f64::min);
        (0..challenger_index).find(|&i| p[i] <= worst + TIE_EPS)
    } else {
        None
    };

    let allowed: Vec<bool> = (0..k).map(|i| Some(i) != removed).collect();
    let top = top_n_indices(&p, &allowed, top_n);
    let weights: Vec<f64> = if fallback { vec![1.0; top.len()] } else { top.iter().map(|&i| p[i]).collect() };
    let total: f64 = weights.iter().sum();
    let pick = match WeightedIndex::new(&weights) {
        Ok(d) => top[d.sample(rng)],
        Err(_) => top[0],
    };
    let distribution: Vec<(String, f64)> = top
        .iter()
        .zip(&weights)
        .map(|(&i, &w)| (members[i].clone(), if total > 0.0 { w / total } else { 1.0 / top.len() as f64 }))
        .collect();

    let mut next = pop.clone();
    if let Some(r) = removed {
        next.agents.remove(r);
    }
    let inserted = challenger.label.clone();
    next.push(challenger)?;

    let choice = OpponentChoice {
        label: members[pick].clone(),
        distribution,
        top_n,
        fallback,
    };
    let rotation = Rotation {
        inserted,
        removed: removed.map(|r| members[r].clone()),
        opponent: choice.label.clone(),
        nash: members.iter().cloned().zip(p).collect(),
        fallback,
    };
    Ok((choice, next, rotation))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationerConfig {
    pub capacity: usize,
    pub top_n: usize,
    pub games_per_pair: usize,
    /// Divide payoff entries by the number of games each pair played.
    pub normalize: bool,
}

impl Default for PopulationerConfig {
    fn default() -> Self {
        PopulationerConfig {
            capacity: DEFAULT_CAPACITY,
            top_n: DEFAULT_TOP_N,
            games_per_pair: 10,
            normalize: true,
        }
    }
}

/// A population together with its persistent Nash buffer.
#[derive(Clone, Debug)]
pub struct Populationer {
    pub config: PopulationerConfig,
    pub solver: NashSolver,
    pub population: Population,
    pub buffer: NashBuffer,
    pub history: Vec<Rotation>,
}

impl Populationer {
    pub fn new(config: PopulationerConfig, solver: NashSolver) -> Populationer {
        Populationer {
            population: Population::new(config.capacity),
            config,
            solver,
            buffer: NashBuffer::new(),
            history: Vec::new(),
        }
    }

    /// The payoff matrix over the population plus `challenger`.
    pub fn payoff_with(&self, challenger: &str) -> Result<PayoffMatrix, PopulationError> {
        let mut labels = self.population.labels();
        labels.push(challenger.to_string());
        fill_payoff(&self.buffer, &labels, self.config.normalize)
    }

    /// The payoff matrix over the current population.
    pub fn payoff(&self) -> Result<PayoffMatrix, PopulationError> {
        fill_payoff(&self.buffer, &self.population.labels(), self.config.normalize)
    }

    /// Evaluates the challenger against every member, then absorbs it.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        challenger: Agent,
        engine: &mut dyn MatchEngine,
        rng: &mut R,
    ) -> Result<OpponentChoice, PopulationError> {
        if self.population.contains(&challenger.label) {
            return Err(PopulationError::DuplicateLabel(challenger.label));
        }
        let games = evaluate_challenger(&challenger.label, &self.population, self.config.games_per_pair, engine)?;
        self.absorb(challenger, games, rng)
    }

    /// Adds already-played games to the buffer, solves, samples the next
    /// opponent and rotates. Games with removed agents leave the buffer.
    pub fn absorb<R: Rng + ?Sized>(
        &mut self,
        challenger: Agent,
        games: NashBuffer,
        rng: &mut R,
    ) -> Result<OpponentChoice, PopulationError> {
        let mut buffer = self.buffer.clone();
        buffer.extend(games);
        let mut labels = self.population.labels();
        labels.push(challenger.label.clone());
        let m = fill_payoff(&buffer, &labels, self.config.normalize)?;
        let (choice, next, rotation) =
            select_opponent_and_rotate(&m, &self.population, challenger, self.config.top_n, &self.solver, rng)?;
        buffer.retain_labels(&next.labels());
        self.buffer = buffer;
        self.population = next;
        self.history.push(rotation);
        Ok(choice)
    }

    /// Nash distribution of the last rotation restricted to the current
    /// population, renormalized.
    pub fn last_nash(&self) -> Vec<(String, f64)> {
        let Some(r) = self.history.last() else {
            return Vec::new();
        };
        let kept: Vec<(String, f64)> =
            r.nash.iter().filter(|(l, _)| self.population.contains(l)).cloned().collect();
        let total: f64 = kept.iter().map(|(_, p)| p).sum();
        kept.into_iter()
            .map(|(l, p)| (l, if total > 0.0 { p / total } else { 0.0 }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pop(labels: &[&str], capacity: usize) -> Population {
        Population::from_agents(capacity, labels.iter().map(|l| Agent::new(*l)).collect()).unwrap()
    }

    fn labelled(m: DMatrix<f64>, labels: &[&str]) -> PayoffMatrix {
        PayoffMatrix::new(labels.iter().map(|s| s.to_string()).collect(), m).unwrap()
    }

    #[test]
    fn dominant_agent_is_always_chosen() {
        // a beats everyone, so the Nash distribution is one-hot on a.
        let m = DMatrix::from_fn(4, 4, |i, j| (j as f64 - i as f64).clamp(-1.0, 1.0));
        let m = labelled(m, &["a", "b", "c", "j"]);
        let p = pop(&["a", "b", "c"], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let (c, next, r) =
                select_opponent_and_rotate(&m, &p, Agent::new("j"), 3, &NashSolver::default(), &mut rng).unwrap();
            assert_eq!(c.label, "a");
            assert_eq!(r.removed.as_deref(), Some("b"));
            assert_eq!(next.labels(), vec!["a", "c", "j"]);
        }
    }

    #[test]
    fn uniform_ties_go_to_low_indices_and_the_oldest_leaves() {
        let m = labelled(DMatrix::zeros(5, 5), &["a", "b", "c", "d", "j"]);
        let p = pop(&["a", "b", "c", "d"], 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [0usize; 2];
        for _ in 0..400 {
            let (c, next, r) =
                select_opponent_and_rotate(&m, &p, Agent::new("j"), 2, &NashSolver::default(), &mut rng).unwrap();
            assert_eq!(r.removed.as_deref(), Some("a"));
            assert_eq!(next.len(), 4);
            let names: Vec<&str> = c.distribution.iter().map(|(l, _)| l.as_str()).collect();
            assert_eq!(names, ["b", "c"]);
            assert!(c.distribution.iter().all(|(_, q)| (q - 0.5).abs() < 1e-9));
            seen[if c.label == "b" { 0 } else { 1 }] += 1;
        }
        assert!(seen[0] > 150 && seen[1] > 150, "{seen:?}");
    }

    #[test]
    fn warm_up_inserts_without_removal() {
        let m = labelled(DMatrix::zeros(2, 2), &["a", "j"]);
        let (_, next, r) = select_opponent_and_rotate(
            &m,
            &pop(&["a"], 3),
            Agent::new("j"),
            5,
            &NashSolver::default(),
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert_eq!(r.removed, None);
        assert_eq!(next.labels(), vec!["a", "j"]);
    }

    #[test]
    fn challenger_is_never_removed() {
        // The challenger loses to everyone and still stays.
        let m = DMatrix::from_fn(3, 3, |i, j| (j as f64 - i as f64).clamp(-1.0, 1.0));
        let m = labelled(m, &["a", "b", "j"]);
        let (_, next, r) = select_opponent_and_rotate(
            &m,
            &pop(&["a", "b"], 2),
            Agent::new("j"),
            1,
            &NashSolver::default(),
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(r.removed.as_deref(), Some("b"));
        assert!(next.contains("j"));
    }

    #[test]
    fn solver_failure_falls_back_to_uniform() {
        let m = DMatrix::from_fn(4, 4, |i, j| (j as f64 - i as f64).clamp(-1.0, 1.0));
        let m = labelled(m, &["a", "b", "c", "j"]);
        let starved = NashSolver {
            tol: 1e-6,
            max_iterations: 1,
        };
        let (c, next, r) = select_opponent_and_rotate(
            &m,
            &pop(&["a", "b", "c"], 3),
            Agent::new("j"),
            2,
            &starved,
            &mut ChaCha8Rng::seed_from_u64(4),
        )
        .unwrap();
        assert!(c.fallback && r.fallback);
        assert_eq!(r.removed.as_deref(), Some("a"));
        assert_eq!(next.len(), 3);
    }

    #[test]
    fn top_n_ranking() {
        let p = [0.1, 0.4, 0.1, 0.4];
        assert_eq!(top_n_indices(&p, &[true; 4], 3), vec![1, 3, 0]);
        assert_eq!(top_n_indices(&p, &[true, false, true, true], 9), vec![3, 0, 2]);
    }
}
