//! Maximum-entropy Nash equilibria of symmetric zero-sum meta-games.
//!
//! For an antisymmetric payoff matrix `M` the symmetric equilibria are the
//! points of the polytope `{p in simplex : Mp <= 0}`. Among them the solver
//! returns the unique one of largest Shannon entropy.
//!
//! The entropy program is solved through its dual. Stationarity of the
//! Lagrangian gives `p_j ∝ exp((Mλ)_j)` for multipliers `λ >= 0` on the
//! rows of `Mp <= 0`, and the multipliers minimise the log-partition
//! function `g(λ) = log Σ_j exp((Mλ)_j)`. That function is smooth and
//! convex with gradient `-Mp` and Hessian `Mᵀ(diag p - ppᵀ)M`, so a
//! projected Newton method with a backtracking line search converges in a
//! few dozen steps. Strategies outside the equilibrium support are driven
//! towards zero geometrically as their multipliers grow.

mod fictitious;
mod payoff;
mod zero_sum;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fictitious::{fictitious_play, FictitiousPlay};
pub use payoff::PayoffMatrix;
pub use zero_sum::{solve_zero_sum, ZeroSumSolution};

#[derive(Debug, Error)]
pub enum NashError {
    #[error("matrix shape: {0}")]
    Shape(String),
    #[error("solver did not converge after {iterations} iterations (max violation {max_violation:e})")]
    NotConverged { iterations: usize, max_violation: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad matrix file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Output of the max-entropy solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashResult {
    pub p: Vec<f64>,
    pub entropy: f64,
    /// `max_i (Mp)_i`, the best pure-strategy payoff against `p`.
    pub max_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Duality gap `g(λ) - H(p)` at termination.
    pub gap: f64,
}

impl NashResult {
    pub fn ensure_converged(self) -> Result<NashResult, NashError> {
        if self.converged {
            Ok(self)
        } else {
            Err(NashError::NotConverged {
                iterations: self.iterations,
                max_violation: self.max_violation,
            })
        }
    }

    /// Indices with probability above `eps`.
    pub fn support(&self, eps: f64) -> Vec<usize> {
        nash_support(&self.p, eps)
    }
}

/// `{j : p_j > eps}` in increasing order.
pub fn nash_support(p: &[f64], eps: f64) -> Vec<usize> {
    (0..p.len()).filter(|&j| p[j] > eps).collect()
}

pub const DEFAULT_SUPPORT_EPS: f64 = 1e-6;

pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NashSolver {
    /// Required bound on `max_i (Mp)_i` for a converged result.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for NashSolver {
    fn default() -> Self {
        NashSolver {
            tol: 1e-6,
            max_iterations: 500,
        }
    }
}

/// Max-entropy symmetric Nash of `m`, which must be square. Non-antisymmetric
/// input is replaced by `(M - Mᵀ)/2` first.
pub fn solve_max_entropy_nash(m: &DMatrix<f64>, tol: f64) -> Result<NashResult, NashError> {
    NashSolver {
        tol,
        ..NashSolver::default()
    }
    .solve(m)
}

struct State {
    lambda: DVector<f64>,
    p: DVector<f64>,
    mp: DVector<f64>,
    f: f64,
}

impl NashSolver {
    pub fn solve(&self, m: &DMatrix<f64>) -> Result<NashResult, NashError> {
        self.solve_from(m, None)
    }

    /// Runs from `restarts` random starting multipliers in addition to the
    /// origin and returns the result of largest entropy among the
    /// converged ones.
    pub fn solve_with_restarts<R: Rng + ?Sized>(
        &self,
        m: &DMatrix<f64>,
        restarts: usize,
        rng: &mut R,
    ) -> Result<NashResult, NashError> {
        let mut best = self.solve(m)?;
        for _ in 0..restarts {
            let start: Vec<f64> = (0..m.nrows()).map(|_| rng.random::<f64>() * 2.0).collect();
            let r = self.solve_from(m, Some(&start))?;
            if r.converged && (!best.converged || r.entropy > best.entropy) {
                best = r;
            }
        }
        Ok(best)
    }

    /// Solves starting from multipliers `lambda0` (the origin if `None`).
    pub fn solve_from(&self, m: &DMatrix<f64>, lambda0: Option<&[f64]>) -> Result<NashResult, NashError> {
        let k = m.nrows();
        if k == 0 || m.ncols() != k {
            return Err(NashError::Shape(format!("{}x{} is not a non-empty square", k, m.ncols())));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(NashError::Shape("matrix has non-finite entries".into()));
        }
        let (m, adjust) = antisymmetric_part(m);
        if adjust > 1e-6 {
            warn!("payoff matrix symmetrized, largest adjustment {adjust:e}");
        }

        let mut lambda = DVector::zeros(k);
        if let Some(l0) = lambda0 {
            if l0.len() != k {
                return Err(NashError::Shape(format!("{} starting multipliers for {k} rows", l0.len())));
            }
            for (x, &v) in lambda.iter_mut().zip(l0) {
                *x = v.max(0.0);
            }
        }
        let mut st = evaluate(&m, lambda);
        let mut iterations = 0;
        while iterations < self.max_iterations {
            iterations += 1;
            // The gradient of g is -Mp.
            let grad = -&st.mp;
            if stationary(&st, &grad) {
                break;
            }
            match newton_step(&m, &st, &grad).or_else(|| gradient_step(&m, &st, &grad)) {
                Some(next) => st = next,
                None => break,
            }
        }

        let max_violation = st.mp.max();
        let p: Vec<f64> = st.p.iter().copied().collect();
        let h = entropy(&p);
        Ok(NashResult {
            entropy: h,
            max_violation,
            iterations,
            converged: max_violation <= self.tol,
            gap: st.f - h,
            p,
        })
    }
}

/// `(M - Mᵀ)/2` and the largest entry of `|M - that|`.
pub fn antisymmetric_part(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let a = (m - m.transpose()) * 0.5;
    let adjust = (m - &a).amax();
    (a, adjust)
}

fn evaluate(m: &DMatrix<f64>, lambda: DVector<f64>) -> State {
    let u = m * &lambda;
    let top = u.max();
    let mut p = u.map(|x| (x - top).exp());
    let z = p.sum();
    p /= z;
    let mp = m * &p;
    State {
        f: top + z.ln(),
        lambda,
        p,
        mp,
    }
}

/// KKT conditions of the dual to working precision: feasibility of `p`,
/// and complementary slackness `λ_i (Mp)_i ≈ 0`.
fn stationary(st: &State, grad: &DVector<f64>) -> bool {
    let mut worst = 0.0f64;
    for i in 0..grad.len() {
        let pg = if st.lambda[i] > 0.0 { grad[i] } else { grad[i].min(0.0) };
        worst = worst.max(pg.abs());
    }
    let gap: f64 = st.lambda.iter().zip(grad.iter()).map(|(l, g)| l * g).sum();
    worst <= 1e-13 || (st.mp.max() <= 1e-12 && gap.abs() <= 1e-14)
}

/// Newton direction on the variables not pinned at zero, followed by a
/// projected Armijo search.
fn newton_step(m: &DMatrix<f64>, st: &State, grad: &DVector<f64>) -> Option<State> {
    let k = grad.len();
    let eps = 1e-12;
    let free: Vec<usize> = (0..k)
        .filter(|&i| !(st.lambda[i] <= eps && grad[i] > 0.0))
        .collect();
    if free.is_empty() {
        return None;
    }
    // Mᵀ(diag p - ppᵀ)M restricted to the free block.
    let mf = DMatrix::from_fn(k, free.len(), |r, c| m[(r, free[c])]);
    let w = mf.transpose() * &st.p;
    let mut dm = mf.clone();
    for r in 0..k {
        for c in 0..free.len() {
            dm[(r, c)] *= st.p[r];
        }
    }
    let h = mf.transpose() * dm - &w * w.transpose();
    let gf = DVector::from_fn(free.len(), |i, _| grad[free[i]]);
    let scale = h.diagonal().amax().max(1e-300);
    let mut mu = 1e-12 * scale;
    let d = loop {
        let mut hm = h.clone();
        for i in 0..free.len() {
            hm[(i, i)] += mu;
        }
        if let Some(ch) = hm.cholesky() {
            break ch.solve(&(-&gf));
        }
        mu *= 100.0;
        if mu > scale {
            return None;
        }
    };
    let mut dir = DVector::zeros(k);
    for (i, &f) in free.iter().enumerate() {
        dir[f] = d[i];
    }
    line_search(m, st, grad, &dir)
}

fn gradient_step(m: &DMatrix<f64>, st: &State, grad: &DVector<f64>) -> Option<State> {
    // Curvature along a coordinate is at most max|M|^2 / 4.
    let lip = (m.amax().powi(2) * 0.25).max(1e-12);
    line_search(m, st, grad, &(-grad / lip))
}

fn line_search(m: &DMatrix<f64>, st: &State, grad: &DVector<f64>, dir: &DVector<f64>) -> Option<State> {
    let mut alpha = 1.0;
    for _ in 0..60 {
        let cand = (&st.lambda + dir * alpha).map(|x| x.max(0.0));
        let step = &cand - &st.lambda;
        let decrease = grad.dot(&step);
        if decrease >= 0.0 {
            alpha *= 0.5;
            continue;
        }
        let next = evaluate(m, cand);
        if next.f <= st.f + 1e-4 * decrease {
            return Some(next);
        }
        alpha *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rps() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0., 1., -1., -1., 0., 1., 1., -1., 0.])
    }

    #[test]
    fn small_examples() {
        let r = solve_max_entropy_nash(&rps(), 1e-6).unwrap();
        assert!(r.converged);
        for x in &r.p {
            assert!((x - 1.0 / 3.0).abs() < 1e-9);
        }
        let r = solve_max_entropy_nash(&DMatrix::zeros(4, 4), 1e-6).unwrap();
        assert!(r.p.iter().all(|x| (x - 0.25).abs() < 1e-12));
        let r = solve_max_entropy_nash(&DMatrix::from_row_slice(2, 2, &[0., 1., -1., 0.]), 1e-6).unwrap();
        assert!(r.converged);
        assert!((r.p[0] - 1.0).abs() < 1e-9 && r.p[1] < 1e-9);
        assert_eq!(r.support(DEFAULT_SUPPORT_EPS), vec![0]);
    }

    #[test]
    fn support_threshold() {
        assert_eq!(nash_support(&[1.0 / 3.0; 3], 1e-6), vec![0, 1, 2]);
        assert_eq!(nash_support(&[1.0 - 1e-9, 1e-9], 1e-6), vec![0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(solve_max_entropy_nash(&DMatrix::zeros(2, 3), 1e-6).is_err());
        assert!(solve_max_entropy_nash(&DMatrix::zeros(0, 0), 1e-6).is_err());
    }
}
