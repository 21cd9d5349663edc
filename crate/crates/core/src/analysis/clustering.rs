use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::nash::{nash_support, NashSolver, DEFAULT_SUPPORT_EPS};

/// Ordered partition of the strategies into Nash layers, strongest first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NashClustering {
    pub clusters: Vec<Vec<usize>>,
}

impl NashClustering {
    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    /// Cluster number of each of the `k` strategies.
    pub fn assignment(&self, k: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; k];
        for (c, members) in self.clusters.iter().enumerate() {
            for &s in members {
                out[s] = Some(c);
            }
        }
        out
    }

    pub fn is_partition_of(&self, k: usize) -> bool {
        let mut seen = vec![false; k];
        for members in &self.clusters {
            if members.is_empty() {
                return false;
            }
            for &s in members {
                if s >= k || seen[s] {
                    return false;
                }
                seen[s] = true;
            }
        }
        seen.into_iter().all(|x| x)
    }
}

/// Repeatedly takes the support of the max-entropy Nash of the strategies
/// not yet clustered.
pub fn nash_clustering(m: &DMatrix<f64>, solver: &NashSolver) -> Result<NashClustering, AnalysisError> {
    let k = m.nrows();
    if m.ncols() != k {
        return Err(AnalysisError::Shape(format!("{}x{} payoff matrix", k, m.ncols())));
    }
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut out = NashClustering::default();
    while !remaining.is_empty() {
        let sub = DMatrix::from_fn(remaining.len(), remaining.len(), |r, c| m[(remaining[r], remaining[c])]);
        let result = solver
            .solve(&sub)
            .and_then(|r| r.ensure_converged())
            .map_err(|source| AnalysisError::Clustering {
                partial: out.clone(),
                source,
            })?;
        let support = nash_support(&result.p, DEFAULT_SUPPORT_EPS);
        let cluster: Vec<usize> = support.iter().map(|&i| remaining[i]).collect();
        remaining = remaining
            .iter()
            .enumerate()
            .filter(|(i, _)| !support.contains(i))
            .map(|(_, &s)| s)
            .collect();
        out.clusters.push(cluster);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rps_is_one_cluster() {
        let rps = DMatrix::from_row_slice(3, 3, &[0., 1., -1., -1., 0., 1., 1., -1., 0.]);
        let c = nash_clustering(&rps, &NashSolver::default()).unwrap();
        assert_eq!(c.clusters, vec![vec![0, 1, 2]]);
        let z = nash_clustering(&DMatrix::zeros(4, 4), &NashSolver::default()).unwrap();
        assert_eq!(z.sizes(), vec![4]);
    }
}
