use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::nash::{solve_zero_sum, NashSolver, ZeroSumSolution};

/// Relative population performance `pᵀ M_AB q` at a Nash equilibrium of
/// the zero-sum game between the populations. Positive means `A` is
/// stronger than `B` net of cycles.
pub fn rpp(m_ab: &DMatrix<f64>, solver: &NashSolver) -> Result<f64, AnalysisError> {
    Ok(rpp_detailed(m_ab, solver)?.value)
}

pub fn rpp_detailed(m_ab: &DMatrix<f64>, solver: &NashSolver) -> Result<ZeroSumSolution, AnalysisError> {
    Ok(solve_zero_sum(m_ab, solver)?)
}

/// Exploitability of a profile in a two-player zero-sum matrix game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exploitability {
    /// Mean best-response payoff over the two players.
    pub value: f64,
    /// Row player's best-response payoff against `y`, then the column
    /// player's against `x`.
    pub best_responses: [f64; 2],
    /// False when the best responses are approximate, in which case
    /// `value` is a lower bound.
    pub exact: bool,
}

impl Exploitability {
    /// Combines best-response payoffs measured elsewhere.
    pub fn from_best_responses(row: f64, col: f64, exact: bool) -> Exploitability {
        Exploitability {
            value: 0.5 * (row + col),
            best_responses: [row, col],
            exact,
        }
    }
}

/// `½ [max_i (Ay)_i + max_j (-xᵀA)_j]` for the profile `(x, y)` of the game
/// `a`, in which the row player receives `A` and the column player `-A`.
pub fn exploitability(a: &DMatrix<f64>, x: &[f64], y: &[f64]) -> Result<Exploitability, AnalysisError> {
    let (m, n) = a.shape();
    if x.len() != m || y.len() != n {
        return Err(AnalysisError::Shape(format!(
            "profile of sizes {}/{} for a {m}x{n} game",
            x.len(),
            y.len()
        )));
    }
    let row = (0..m)
        .map(|i| (0..n).map(|j| a[(i, j)] * y[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let col = (0..n)
        .map(|j| -(0..m).map(|i| x[i] * a[(i, j)]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Exploitability::from_best_responses(row, col, true))
}

/// Exploitability when both players use `p` in the symmetric game `m`.
pub fn symmetric_exploitability(m: &DMatrix<f64>, p: &[f64]) -> Result<Exploitability, AnalysisError> {
    exploitability(m, p, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rps() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0., 1., -1., -1., 0., 1., 1., -1., 0.])
    }

    #[test]
    fn rps_profiles() {
        let u = symmetric_exploitability(&rps(), &[1.0 / 3.0; 3]).unwrap();
        assert!(u.value.abs() < 1e-15);
        let rock = symmetric_exploitability(&rps(), &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(rock.value, 1.0);
        assert_eq!(rock.best_responses, [1.0, 1.0]);
    }

    #[test]
    fn dominant_population() {
        let v = rpp(&DMatrix::from_element(3, 2, 1.0), &NashSolver::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }
}
