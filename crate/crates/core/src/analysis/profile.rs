use std::io::Write;

use serde::{Deserialize, Serialize};

use super::binned::EloBin;
use super::clustering::NashClustering;
use super::cycles::RpsCycles;
use super::AnalysisError;

/// One rating band of the spinning-top profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub elo_bin_midpoint: f64,
    /// Strategies whose rating falls in the band.
    pub strategies: usize,
    /// Largest size among the Nash clusters of those strategies, 0 when
    /// the band is empty.
    pub nash_cluster_size: usize,
    /// Sum of the per-strategy 3-cycle counts over the band.
    pub rps_cycles_in_band: u64,
}

/// Groups strategies by `ratings` into `bins` and reports the
/// non-transitivity measures of each band. Strategies outside every bin are
/// left out.
pub fn spinning_top_profile(
    ratings: &[f64],
    bins: &[EloBin],
    clustering: &NashClustering,
    cycles: &RpsCycles,
) -> Result<Vec<ProfileRow>, AnalysisError> {
    let k = ratings.len();
    if cycles.diag.len() != k || !clustering.is_partition_of(k) {
        return Err(AnalysisError::Shape(format!(
            "{k} ratings, {} cycle counts, clustering over a different set",
            cycles.diag.len()
        )));
    }
    super::binned::validate_bins(bins)?;
    let sizes = clustering.sizes();
    let which = clustering.assignment(k);
    Ok(bins
        .iter()
        .map(|b| {
            let members: Vec<usize> = (0..k).filter(|&i| b.contains(ratings[i])).collect();
            ProfileRow {
                elo_bin_midpoint: b.midpoint(),
                strategies: members.len(),
                nash_cluster_size: members
                    .iter()
                    .filter_map(|&i| which[i].map(|c| sizes[c]))
                    .max()
                    .unwrap_or(0),
                rps_cycles_in_band: members.iter().map(|&i| cycles.diag[i]).sum(),
            }
        })
        .collect())
}

pub fn write_profile_csv<W: Write>(writer: W, rows: &[ProfileRow]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
