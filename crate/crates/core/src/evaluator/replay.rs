use std::collections::VecDeque;

use rand::Rng;

use super::encode::StateTensor;
use super::train::Sample;
use super::EvalError;
use crate::xiangqi::{Color, GameResult};

/// One turn of a game as recorded during self-play.
#[derive(Clone, Debug)]
pub struct Turn {
    pub state: StateTensor,
    pub mover: Color,
    pub legal: Vec<u16>,
    /// Search policy over `legal`.
    pub pi: Vec<f32>,
    /// Network value at the root.
    pub v: f32,
    /// Network priors over `legal`.
    pub p: Vec<f32>,
}

/// Every turn of one game; the outcome is attached when the game ends.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub turns: Vec<Turn>,
}

impl Trajectory {
    pub fn push(&mut self, turn: Turn) {
        self.turns.push(turn);
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Training samples with `z` set to the result from each mover's side.
    pub fn into_samples(self, result: GameResult) -> Vec<Sample> {
        self.turns
            .into_iter()
            .map(|t| Sample {
                z: result.score_for(t.mover) as f32,
                state: t.state,
                legal: t.legal,
                pi: t.pi,
            })
            .collect()
    }
}

/// Bounded FIFO of training samples with uniform sampling.
///
/// The buffer itself is not synchronised: one writer appends whole games
/// while readers sample, so callers share it behind a lock and hold the lock
/// for the duration of each push or sample.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Sample>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, sample: Sample) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(sample);
    }

    pub fn push_all(&mut self, samples: impl IntoIterator<Item = Sample>) {
        for s in samples {
            self.push(s);
        }
    }

    /// `batch_size` samples drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<Sample>, EvalError> {
        if self.items.is_empty() {
            return Err(EvalError::EmptyReplay);
        }
        Ok((0..batch_size)
            .map(|_| self.items[rng.random_range(0..self.items.len())].clone())
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.items.iter()
    }
}
