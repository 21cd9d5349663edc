//! Brute-force equilibrium references.

/// Vertices of `{p : p >= 0, Σp = 1, Mp <= 0}` for a square row-major `m`
/// of order `k`, by enumerating every choice of `k - 1` tight inequalities.
pub fn nash_polytope_vertices(m: &[f64], k: usize) -> Vec<Vec<f64>> {
    // Inequalities as rows a·p <= 0: first -p_j <= 0, then (Mp)_i <= 0.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * k);
    for j in 0..k {
        let mut r = vec![0.0; k];
        r[j] = -1.0;
        rows.push(r);
    }
    for i in 0..k {
        rows.push(m[i * k..(i + 1) * k].to_vec());
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut pick = Vec::new();
    choose(&rows, k, 0, &mut pick, &mut out);
    out
}

fn choose(rows: &[Vec<f64>], k: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
    if pick.len() == k - 1 {
        let mut a: Vec<Vec<f64>> = pick.iter().map(|&r| rows[r].clone()).collect();
        a.push(vec![1.0; k]);
        let mut b = vec![0.0; k];
        b[k - 1] = 1.0;
        if let Some(p) = gauss_solve(a, b) {
            let feasible = p.iter().all(|&x| x >= -1e-9)
                && rows[k..].iter().all(|r| dot(r, &p) <= 1e-9);
            if feasible && !out.iter().any(|v| max_diff(v, &p) < 1e-9) {
                out.push(p.iter().map(|x| x.max(0.0)).collect());
            }
        }
        return;
    }
    for r in start..rows.len() {
        pick.push(r);
        choose(rows, k, r + 1, pick, out);
        pick.pop();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Maximum-entropy point of the convex hull of `vertices`, by pairwise
/// coordinate ascent on the vertex weights with exact bisection line
/// searches.
pub fn max_entropy_over_hull(vertices: &[Vec<f64>]) -> Vec<f64> {
    let nv = vertices.len();
    let k = vertices[0].len();
    let mut w = vec![1.0 / nv as f64; nv];
    let point = |w: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; k];
        for (wi, v) in w.iter().zip(vertices) {
            for j in 0..k {
                p[j] += wi * v[j];
            }
        }
        p
    };
    let mut p = point(&w);
    for _ in 0..200_000 {
        // dH/dw_i = -Σ_j v_ij (ln p_j + 1).
        let logs: Vec<f64> = p.iter().map(|&x| if x > 0.0 { x.ln() } else { 0.0 }).collect();
        let grads: Vec<f64> = vertices
            .iter()
            .map(|v| -(0..k).filter(|&j| v[j] > 0.0).map(|j| v[j] * (logs[j] + 1.0)).sum::<f64>())
            .collect();
        let up = (0..nv).max_by(|&a, &b| grads[a].total_cmp(&grads[b])).unwrap();
        let down = (0..nv)
            .filter(|&i| w[i] > 0.0)
            .min_by(|&a, &b| grads[a].total_cmp(&grads[b]))
            .unwrap();
        if up == down || grads[up] - grads[down] < 1e-13 {
            break;
        }
        // Move t of weight from `down` to `up`.
        let d: Vec<f64> = (0..k).map(|j| vertices[up][j] - vertices[down][j]).collect();
        let slope = |t: f64| -> f64 {
            (0..k)
                .filter(|&j| d[j] != 0.0)
                .map(|j| {
                    let x = p[j] + t * d[j];
                    if x <= 0.0 {
                        if d[j] > 0.0 {
                            f64::INFINITY
                        } else {
                            f64::NEG_INFINITY
                        }
                    } else {
                        -d[j] * x.ln()
                    }
                })
                .sum()
        };
        let (mut lo, mut hi) = (0.0, w[down]);
        if slope(hi) >= 0.0 {
            lo = hi;
        } else {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let t = lo;
        if t <= 0.0 {
            break;
        }
        w[down] -= t;
        w[up] += t;
        if w[down] < 1e-300 {
            w[down] = 0.0;
        }
        p = point(&w);
    }
    p
}

/// Max-entropy symmetric equilibrium of the antisymmetric row-major `m`.
pub fn reference_max_entropy_nash(m: &[f64], k: usize) -> Vec<f64> {
    max_entropy_over_hull(&nash_polytope_vertices(m, k))
}

/// Value of a zero-sum game (row player maximises) with 2 to 4 rows,
/// approximated by scanning the row player's simplex at the given grid
/// resolution. The true value lies within `max|A| * step * rows` above.
pub fn grid_maximin(a: &[Vec<f64>], step: f64) -> f64 {
    let m = a.len();
    let n = a[0].len();
    let steps = (1.0 / step).round() as usize;
    let mut best = f64::NEG_INFINITY;
    let mut x = vec![0usize; m];
    grid(&mut x, 0, steps, &mut |x: &[usize]| {
        let worst = (0..n)
            .map(|j| (0..m).map(|i| x[i] as f64 / steps as f64 * a[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    });
    best
}

/// Value from the column player's side: `min_y max_i (Ay)_i` on a grid.
pub fn grid_minimax(a: &[Vec<f64>], step: f64) -> f64 {
    let t: Vec<Vec<f64>> = (0..a[0].len())
        .map(|j| a.iter().map(|row| -row[j]).collect())
        .collect();
    -grid_maximin(&t, step)
}

fn grid(x: &mut Vec<usize>, i: usize, left: usize, f: &mut dyn FnMut(&[usize])) {
    if i == x.len() - 1 {
        x[i] = left;
        f(x);
        return;
    }
    for v in 0..=left {
        x[i] = v;
        grid(x, i + 1, left - v, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rps_vertex_is_uniform() {
        let m = [0., 1., -1., -1., 0., 1., 1., -1., 0.];
        let v = nash_polytope_vertices(&m, 3);
        assert_eq!(v.len(), 1);
        assert!(v[0].iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn zero_game_hull_gives_uniform() {
        let p = reference_max_entropy_nash(&[0.0; 9], 3);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-9), "{p:?}");
    }

    #[test]
    fn matching_pennies_grid() {
        let a = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        assert!(grid_maximin(&a, 0.01).abs() < 1e-12);
        assert!(grid_minimax(&a, 0.01).abs() < 1e-12);
    }
}
