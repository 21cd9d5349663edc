use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// 3-cycles of the beats relation `A_ij = [M_ij > 0]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpsCycles {
    /// Diagonal of `A³`: the number of 3-cycles through each strategy.
    pub diag: Vec<u64>,
    /// `Σ diag / 3`.
    pub total: u64,
}

pub fn adjacency(m: &DMatrix<f64>) -> DMatrix<u64> {
    m.map(|x| u64::from(x > 0.0))
}

pub fn rps_cycles(m: &DMatrix<f64>) -> RpsCycles {
    let k = m.nrows();
    let a = adjacency(m);
    let mut a2 = DMatrix::<u64>::zeros(k, k);
    for i in 0..k {
        for l in 0..k {
            if a[(i, l)] == 0 {
                continue;
            }
            for j in 0..k {
                a2[(i, j)] += a[(l, j)];
            }
        }
    }
    let diag: Vec<u64> = (0..k).map(|i| (0..k).map(|l| a2[(i, l)] * a[(l, i)]).sum()).collect();
    let total = diag.iter().sum::<u64>() / 3;
    RpsCycles { diag, total }
}
