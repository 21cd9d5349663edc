use serde::{Deserialize, Serialize};

use super::encode::{StateTensor, INPUT_LEN};
use super::linalg::Scalar;
use super::network::{softmax, Network};
use super::EvalError;

/// One training target: the encoded state, the legal action indices with the
/// search policy over them, and the final score from the mover's side.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: StateTensor,
    pub legal: Vec<u16>,
    pub pi: Vec<f32>,
    pub z: f32,
}

/// The three terms of the training loss and their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    /// Mean of `(z - v)^2`.
    pub value: f64,
    /// Mean of `-pi . log p`, before the `alpha` weight.
    pub policy: f64,
    /// `||theta||^2`, before the `beta` weight.
    pub l2: f64,
    pub total: f64,
}

/// `(z - v)^2 - alpha * pi . log p + beta * sq_norm` for a single target.
/// Terms with `pi_i = 0` contribute nothing, whatever `p_i` is.
pub fn combined_loss(z: f64, v: f64, pi: &[f64], p: &[f64], alpha: f64, beta: f64, sq_norm: f64) -> f64 {
    let cross: f64 = pi
        .iter()
        .zip(p)
        .filter(|(&t, _)| t != 0.0)
        .map(|(&t, &q)| t * q.ln())
        .sum();
    (z - v).powi(2) - alpha * cross + beta * sq_norm
}

fn batch_inputs<S: Scalar>(batch: &[Sample]) -> Vec<S> {
    let mut inputs = vec![S::zero(); batch.len() * INPUT_LEN];
    for (chunk, s) in inputs.chunks_mut(INPUT_LEN).zip(batch) {
        for (o, &b) in chunk.iter_mut().zip(s.state.as_slice()) {
            *o = if b != 0 { S::one() } else { S::zero() };
        }
    }
    inputs
}

impl<S: Scalar> Network<S> {
    /// Mean loss over `batch` and its gradient with respect to every
    /// parameter.
    pub fn loss_and_gradient(&self, batch: &[Sample], alpha: f64, beta: f64) -> (LossParts, Vec<S>) {
        let (parts, fw, dlogits, du) = self.loss_inner(batch, alpha, beta);
        let mut g = self.backward(&fw, &dlogits, &du);
        let two_beta = S::from_f64(2.0 * beta);
        for (gi, &p) in g.iter_mut().zip(self.params()) {
            *gi = *gi + two_beta * p;
        }
        (parts, g)
    }

    pub fn loss(&self, batch: &[Sample], alpha: f64, beta: f64) -> LossParts {
        self.loss_inner(batch, alpha, beta).0
    }

    #[allow(clippy::type_complexity)]
    fn loss_inner(
        &self,
        batch: &[Sample],
        alpha: f64,
        beta: f64,
    ) -> (LossParts, super::network::Forward<S>, Vec<S>, Vec<S>) {
        let bsz = batch.len();
        let inputs = batch_inputs::<S>(batch);
        let fw = self.forward(&inputs, bsz);
        let a = self.actions();
        let mut dlogits = vec![S::zero(); bsz * a];
        let mut du = vec![S::zero(); bsz];
        let inv = 1.0 / bsz as f64;
        let (mut value, mut policy) = (0.0, 0.0);
        for (b, s) in batch.iter().enumerate() {
            let v = fw.values[b].as_f64();
            let z = s.z as f64;
            value += (z - v).powi(2);
            du[b] = S::from_f64(-2.0 * (z - v) * (1.0 - v * v) * inv);

            let logits = self.logits_for(&fw, b, &s.legal);
            let p = softmax(&logits);
            let pi_sum: f64 = s.pi.iter().map(|&x| x as f64).sum();
            for ((&idx, &pj), &tj) in s.legal.iter().zip(&p).zip(&s.pi) {
                let (pj, tj) = (pj.as_f64(), tj as f64);
                if tj != 0.0 {
                    policy -= tj * pj.max(f64::MIN_POSITIVE).ln();
                }
                let d = alpha * (pj * pi_sum - tj) * inv;
                dlogits[b * a + idx as usize] = S::from_f64(d);
            }
        }
        value *= inv;
        policy *= inv;
        let l2 = self.squared_norm().as_f64();
        let parts = LossParts {
            value,
            policy,
            l2,
            total: value + alpha * policy + beta * l2,
        };
        (parts, fw, dlogits, du)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// SGD with classical momentum.
    Momentum,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    /// Learning rates for equal-length phases of `total_steps`.
    pub learning_rates: Vec<f64>,
    pub total_steps: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1.0,
            beta: 1e-4,
            optimizer: OptimizerKind::Momentum,
            momentum: 0.9,
            learning_rates: vec![0.03, 0.01, 0.003, 0.001, 0.0003, 0.0001, 0.0003, 0.001, 0.003, 0.01],
            total_steps: 10_000,
            batch_size: 64,
        }
    }
}

impl TrainConfig {
    /// Learning rate in effect at optimizer step `step` (0-based). Steps past
    /// `total_steps` keep the last phase's rate.
    pub fn learning_rate(&self, step: u64) -> f64 {
        let phases = self.learning_rates.len().max(1) as u64;
        let total = self.total_steps.max(1);
        let phase = (step.min(total - 1) * phases / total) as usize;
        self.learning_rates.get(phase).copied().unwrap_or(1e-3)
    }
}

/// Optimizer state: first and (for Adam) second moment per parameter.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, len: usize) -> Optimizer {
        Optimizer {
            kind,
            m: vec![0.0; len],
            v: if kind == OptimizerKind::Adam { vec![0.0; len] } else { Vec::new() },
            t: 0,
        }
    }

    pub fn step<S: Scalar>(&mut self, params: &mut [S], grad: &[S], lr: f64, momentum: f64) {
        self.t += 1;
        match self.kind {
            OptimizerKind::Momentum => {
                for ((p, &g), m) in params.iter_mut().zip(grad).zip(&mut self.m) {
                    *m = momentum * *m + g.as_f64();
                    *p = S::from_f64(p.as_f64() - lr * *m);
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
                let c1 = 1.0 - b1.powi(self.t as i32);
                let c2 = 1.0 - b2.powi(self.t as i32);
                for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    let g = g.as_f64();
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let step = lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    *p = S::from_f64(p.as_f64() - step);
                }
            }
        }
    }
}

/// Owns the parameters being trained together with the optimizer state.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub net: Network<f32>,
    pub config: TrainConfig,
    optimizer: Optimizer,
    step: u64,
}

impl Trainer {
    pub fn new(net: Network<f32>, config: TrainConfig) -> Trainer {
        let optimizer = Optimizer::new(config.optimizer, net.params().len());
        Trainer {
            net,
            config,
            optimizer,
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One optimizer step on `batch`. Returns the loss measured before the
    /// update.
    pub fn train_step(&mut self, batch: &[Sample]) -> Result<LossParts, EvalError> {
        if batch.is_empty() {
            return Err(EvalError::EmptyBatch);
        }
        let (parts, grad) = self
            .net
            .loss_and_gradient(batch, self.config.alpha, self.config.beta);
        if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(EvalError::NonFinite {
                step: self.step,
                value: parts.value,
                policy: parts.policy,
                l2: parts.l2,
            });
        }
        let lr = self.config.learning_rate(self.step);
        self.optimizer
            .step(self.net.params_mut(), &grad, lr, self.config.momentum);
        self.step += 1;
        Ok(parts)
    }
}
