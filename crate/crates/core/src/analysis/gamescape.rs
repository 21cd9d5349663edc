use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const DEFAULT_Z_CUTOFF: f64 = 2.5;

/// `y = c[0] + c[1] x + c[2] x²` fitted to the embedded points that
/// survive the z-score filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub coefficients: [f64; 3],
    /// Indices of the points used in the fit.
    pub kept: Vec<usize>,
}

impl QuadraticFit {
    pub fn eval(&self, x: f64) -> f64 {
        let c = self.coefficients;
        c[0] + c[1] * x + c[2] * x * x
    }
}

/// Two-dimensional embedding of an antisymmetric payoff matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gamescape {
    pub points: Vec<[f64; 2]>,
    /// Rotation magnitude of the selected Schur block.
    pub rotation: f64,
    pub fit: Option<QuadraticFit>,
}

/// Real Schur form `M = Q T Qᵀ`; the two columns of `Q` spanning the 2×2
/// block of `T` with the largest rotation, each scaled by the square root
/// of that rotation, give one point per strategy.
pub fn gamescape_embedding(m: &DMatrix<f64>, z_cutoff: f64) -> Result<Gamescape, AnalysisError> {
    let k = m.nrows();
    if m.ncols() != k {
        return Err(AnalysisError::Shape(format!("{}x{} payoff matrix", k, m.ncols())));
    }
    if k < 3 {
        return Err(AnalysisError::Shape(format!("embedding needs at least 3 strategies, got {k}")));
    }
    let a = (m - m.transpose()) * 0.5;
    let scale = a.amax();
    if scale == 0.0 {
        return Ok(finish(vec![[0.0, 0.0]; k], 0.0, z_cutoff));
    }
    let schur = Schur::try_new(a, f64::EPSILON, 10_000)
        .ok_or_else(|| AnalysisError::Numerical("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut best: Option<(usize, f64)> = None;
    let mut i = 0;
    while i + 1 < k {
        if t[(i + 1, i)].abs() > 1e-12 * scale {
            let half_diff = 0.5 * (t[(i, i)] - t[(i + 1, i + 1)]);
            let omega = (-t[(i, i + 1)] * t[(i + 1, i)] - half_diff * half_diff).max(0.0).sqrt();
            if best.is_none_or(|(_, w)| omega > w) {
                best = Some((i, omega));
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    let Some((col, omega)) = best else {
        return Ok(finish(vec![[0.0, 0.0]; k], 0.0, z_cutoff));
    };
    let s = omega.sqrt();
    let points = (0..k).map(|r| [q[(r, col)] * s, q[(r, col + 1)] * s]).collect();
    Ok(finish(points, omega, z_cutoff))
}

fn finish(points: Vec<[f64; 2]>, rotation: f64, z_cutoff: f64) -> Gamescape {
    let kept = inliers(&points, z_cutoff);
    let fit = quadratic_fit(&points, &kept);
    Gamescape { points, rotation, fit }
}

/// Points whose coordinates all lie within `cutoff` standard deviations of
/// the mean.
pub fn inliers(points: &[[f64; 2]], cutoff: f64) -> Vec<usize> {
    let n = points.len() as f64;
    let mut keep = vec![true; points.len()];
    for d in 0..2 {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let sd = (points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            for (i, p) in points.iter().enumerate() {
                if ((p[d] - mean) / sd).abs() > cutoff {
                    keep[i] = false;
                }
            }
        }
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

/// Least-squares quadratic through the selected points; `None` with fewer
/// than three of them.
pub fn quadratic_fit(points: &[[f64; 2]], kept: &[usize]) -> Option<QuadraticFit> {
    if kept.len() < 3 {
        return None;
    }
    let x = DMatrix::from_fn(kept.len(), 3, |r, c| points[kept[r]][0].powi(c as i32));
    let y = DVector::from_fn(kept.len(), |r, _| points[kept[r]][1]);
    let c = x.svd(true, true).solve(&y, 1e-12).ok()?;
    Some(QuadraticFit {
        coefficients: [c[0], c[1], c[2]],
        kept: kept.to_vec(),
    })
}

/// Largest distance of any point from the best-fitting line through all
/// of them.
pub fn line_residual(points: &[[f64; 2]]) -> f64 {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Principal direction of the scatter matrix.
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (ux, uy) = (theta.cos(), theta.sin());
    points
        .iter()
        .map(|p| ((p[0] - cx) * uy - (p[1] - cy) * ux).abs())
        .fold(0.0, f64::max)
}

pub fn pairwise_distances(points: &[[f64; 2]]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt());
        }
    }
    out
}
