//! References for the meta-game measurements.

use nalgebra::{DMatrix, SymmetricEigen};

/// Counts directed 3-cycles in the relation `beats[i][j]` by checking every
/// unordered triple. Returns per-strategy membership counts and the total.
pub fn brute_force_cycles(beats: &[Vec<bool>]) -> (Vec<u64>, u64) {
    let n = beats.len();
    let mut per = vec![0u64; n];
    let mut total = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let forward = beats[i][j] && beats[j][k] && beats[k][i];
                let backward = beats[i][k] && beats[k][j] && beats[j][i];
                let c = u64::from(forward) + u64::from(backward);
                total += c;
                per[i] += c;
                per[j] += c;
                per[k] += c;
            }
        }
    }
    (per, total)
}

/// Pairwise distances of the principal-rotation embedding computed from
/// the top eigenpair of the symmetric matrix `MᵀM` instead of a Schur form.
/// For antisymmetric `M` its top eigenvalue is `ω²` with a two-dimensional
/// eigenspace equal to the invariant plane of the rotation `ω`.
pub fn eigen_embedding_distances(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let eig = SymmetricEigen::new(m.transpose() * m);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let omega = eig.eigenvalues[order[0]].max(0.0).sqrt();
    let s = omega.sqrt();
    let pts: Vec<[f64; 2]> = (0..k)
        .map(|r| {
            [
                eig.eigenvectors[(r, order[0])] * s,
                eig.eigenvectors[(r, order[1])] * s,
            ]
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            out.push(((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt());
        }
    }
    out
}
