//! Position evaluation: the action table, the state encoding, the trainable
//! policy/value network with its loss and optimizers, the replay buffer,
//! checkpoints, and two hand-written baselines.

mod checkpoint;
mod encode;
mod linalg;
mod move_table;
mod network;
mod replay;
mod train;

use std::sync::Arc;

use thiserror::Error;

use crate::xiangqi::{Color, Move, PieceKind, Position};

pub use checkpoint::{write_atomic, Checkpoint, CheckpointError, FORMAT_VERSION, MAGIC};
pub use encode::{encode_absolute, encode_state, plane_index, StateTensor, INPUT_LEN, PLANES};
pub use linalg::{matmul, Scalar};
pub use move_table::MoveTable;
pub use network::{softmax, Arch, Forward, Network};
pub use replay::{ReplayBuffer, Trajectory, Turn};
pub use train::{combined_loss, LossParts, Optimizer, OptimizerKind, Sample, TrainConfig, Trainer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("cannot sample from an empty replay buffer")]
    EmptyReplay,
    #[error("non-finite loss at step {step} (value {value}, policy {policy}, l2 {l2})")]
    NonFinite {
        step: u64,
        value: f64,
        policy: f64,
        l2: f64,
    },
    #[error("move {0} has no action index")]
    UnknownMove(String),
}

/// Priors over the legal moves (same order as given) and a value in
/// `[-1, 1]` from the side to move's point of view.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub priors: Vec<f32>,
    pub value: f32,
}

/// Anything that can score a position for the tree search. Implementations
/// are read-only and shared between search threads.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, position: &Position, legal: &[Move]) -> Result<Evaluation, EvalError>;
}

impl<E: Evaluator + ?Sized> Evaluator for Arc<E> {
    fn evaluate(&self, position: &Position, legal: &[Move]) -> Result<Evaluation, EvalError> {
        (**self).evaluate(position, legal)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, position: &Position, legal: &[Move]) -> Result<Evaluation, EvalError> {
        (**self).evaluate(position, legal)
    }
}

fn uniform(n: usize) -> Vec<f32> {
    vec![1.0 / n.max(1) as f32; n]
}

/// Uniform priors and value 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformEvaluator;

impl Evaluator for UniformEvaluator {
    fn evaluate(&self, _: &Position, legal: &[Move]) -> Result<Evaluation, EvalError> {
        Ok(Evaluation {
            priors: uniform(legal.len()),
            value: 0.0,
        })
    }
}

/// Uniform priors; value from the material balance squashed through `tanh`.
#[derive(Clone, Copy, Debug)]
pub struct MaterialEvaluator {
    /// Material difference that maps to `tanh(1)`.
    pub scale: f32,
}

impl Default for MaterialEvaluator {
    fn default() -> Self {
        MaterialEvaluator { scale: 10.0 }
    }
}

impl MaterialEvaluator {
    pub fn weight(kind: PieceKind) -> f32 {
        match kind {
            PieceKind::King => 0.0,
            PieceKind::Advisor => 2.0,
            PieceKind::Bishop => 2.0,
            PieceKind::Knight => 4.0,
            PieceKind::Rook => 9.0,
            PieceKind::Cannon => 4.5,
            PieceKind::Pawn => 1.0,
        }
    }

    /// Own material minus the opponent's, for the side to move.
    pub fn balance(position: &Position) -> f32 {
        let side = position.side_to_move();
        position
            .pieces()
            .map(|(_, p)| {
                let w = Self::weight(p.kind);
                if p.color == side {
                    w
                } else {
                    -w
                }
            })
            .sum()
    }
}

impl Evaluator for MaterialEvaluator {
    fn evaluate(&self, position: &Position, legal: &[Move]) -> Result<Evaluation, EvalError> {
        Ok(Evaluation {
            priors: uniform(legal.len()),
            value: (Self::balance(position) / self.scale).tanh(),
        })
    }
}

/// The trained network behind the [`Evaluator`] interface.
#[derive(Clone, Debug)]
pub struct NetEvaluator {
    net: Arc<Network<f32>>,
    table: &'static MoveTable,
}

impl NetEvaluator {
    pub fn new(net: Network<f32>) -> NetEvaluator {
        NetEvaluator::from_shared(Arc::new(net))
    }

    pub fn from_shared(net: Arc<Network<f32>>) -> NetEvaluator {
        NetEvaluator {
            net,
            table: MoveTable::global(),
        }
    }

    pub fn network(&self) -> &Network<f32> {
        &self.net
    }
}

/// Action indices of `legal` in the network's side-to-move frame.
pub fn oriented_indices(table: &MoveTable, side: Color, legal: &[Move]) -> Result<Vec<u16>, EvalError> {
    legal
        .iter()
        .map(|&m| {
            table
                .oriented_index(m, side)
                .map(|i| i as u16)
                .ok_or_else(|| EvalError::UnknownMove(m.to_string()))
        })
        .collect()
}

impl Evaluator for NetEvaluator {
    fn evaluate(&self, position: &Position, legal: &[Move]) -> Result<Evaluation, EvalError> {
        let idx = oriented_indices(self.table, position.side_to_move(), legal)?;
        let mut input = vec![0.0f32; INPUT_LEN];
        encode_state(position).to_f32(&mut input);
        let (priors, value) = self.net.evaluate(&input, &idx)?;
        Ok(Evaluation { priors, value })
    }
}
