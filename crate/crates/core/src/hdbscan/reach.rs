use rayon::prelude::*;

use crate::metric::DistanceMatrix;

use super::HdbscanError;

/// Distance from each point to its `min_samples`-th nearest other point.
pub fn core_distances(d: &DistanceMatrix, min_samples: usize) -> Result<Vec<f64>, HdbscanError> {
    let n = d.n();
    if n < 2 {
        return Err(HdbscanError::TooFewPoints(n));
    }
    if min_samples == 0 || min_samples > n - 1 {
        return Err(HdbscanError::Config(format!(
            "min_samples must lie in 1..={}, got {min_samples}",
            n - 1
        )));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
            let (_, kth, _) = others.select_nth_unstable_by(min_samples - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

/// `max(core(a), core(b), d(a, b))` off the diagonal.
pub fn mutual_reachability(d: &DistanceMatrix, core: &[f64]) -> Result<DistanceMatrix, HdbscanError> {
    let n = d.n();
    if core.len() != n {
        return Err(HdbscanError::Config(format!(
            "{} core distances for {n} points",
            core.len()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| d.get(i, j).max(core[i]).max(core[j]))
                .collect()
        })
        .collect();
    Ok(DistanceMatrix::from_upper(n, d.metric(), rows.concat())?)
}
