use nalgebra::DMatrix;

use super::{NashError, NashSolver};

/// Optimal mixed strategies of a two-player zero-sum game and its value.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumSolution {
    /// Row player's strategy (the maximiser).
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
    /// `max_i (Ay)_i - min_j (xᵀA)_j`; zero at an exact equilibrium.
    pub duality_gap: f64,
}

/// Solves the `m×n` zero-sum game `a` by embedding it in a symmetric game.
///
/// With `A' = A + c > 0` the antisymmetric matrix
///
/// ```text
///     [  0    A'  -1 ]
///     [ -A'ᵀ  0    1 ]
///     [  1ᵀ  -1ᵀ   0 ]
/// ```
///
/// has symmetric equilibria `(x, y, t)` with `t > 0`, `A'y <= t`,
/// `A'ᵀx >= t` and `Σx = Σy`, so the normalised blocks are optimal for `A`.
pub fn solve_zero_sum(a: &DMatrix<f64>, solver: &NashSolver) -> Result<ZeroSumSolution, NashError> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(NashError::Shape("empty game".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(NashError::Shape("game has non-finite entries".into()));
    }
    let shift = 1.0 - a.min();
    let k = m + n + 1;
    let mut b = DMatrix::zeros(k, k);
    for i in 0..m {
        for j in 0..n {
            b[(i, m + j)] = a[(i, j)] + shift;
            b[(m + j, i)] = -(a[(i, j)] + shift);
        }
        b[(i, k - 1)] = -1.0;
        b[(k - 1, i)] = 1.0;
    }
    for j in 0..n {
        b[(m + j, k - 1)] = 1.0;
        b[(k - 1, m + j)] = -1.0;
    }
    let tight = NashSolver {
        tol: solver.tol.min(1e-9),
        ..*solver
    };
    let r = tight.solve(&b)?.ensure_converged()?;
    let sx: f64 = r.p[..m].iter().sum();
    let sy: f64 = r.p[m..m + n].iter().sum();
    if sx <= 0.0 || sy <= 0.0 {
        return Err(NashError::NotConverged {
            iterations: r.iterations,
            max_violation: r.max_violation,
        });
    }
    let x: Vec<f64> = r.p[..m].iter().map(|v| v / sx).collect();
    let y: Vec<f64> = r.p[m..m + n].iter().map(|v| v / sy).collect();
    let mut value = 0.0;
    for i in 0..m {
        for j in 0..n {
            value += x[i] * a[(i, j)] * y[j];
        }
    }
    let lower = (0..n)
        .map(|j| (0..m).map(|i| x[i] * a[(i, j)]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let upper = (0..m)
        .map(|i| (0..n).map(|j| a[(i, j)] * y[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ZeroSumSolution {
        x,
        y,
        value,
        duality_gap: upper - lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_dominated_games() {
        let s = solve_zero_sum(&DMatrix::from_element(2, 3, 1.0), &NashSolver::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        // Row 0 dominates; column 1 is the better reply to it.
        let a = DMatrix::from_row_slice(2, 2, &[3., 1., 2., 0.]);
        let s = solve_zero_sum(&a, &NashSolver::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-7, "{s:?}");
        assert!(s.x[0] > 1.0 - 1e-7 && s.y[1] > 1.0 - 1e-7);
    }
}
