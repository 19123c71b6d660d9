//! Density-Based Clustering Validation (DBCV).
//!
//! Each cluster gets a validity in `[-1, 1]` from its density sparseness
//! (the largest edge between internal nodes of its minimum spanning tree
//! under all-points mutual reachability) and its density separation from
//! the nearest other cluster. The overall index weights each cluster by
//! `|c| / N`, where `N` counts noise points too.
//!
//! The all-points core distance raises inverse distances to the feature
//! dimensionality, which overflows for density features with hundreds of
//! columns, so it is accumulated in log space. Pairs at distance zero are
//! skipped in that sum and counted in the report.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::FeatureMatrix;
use crate::metric::{pairwise_matrix, DistanceMatrix, Metric, MetricError};

#[derive(Debug, Error)]
pub enum ValidityError {
    #[error("separation undefined: need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("cluster {cluster} has {size} member(s); DBCV needs at least 2")]
    SmallCluster { cluster: usize, size: usize },
    #[error("{labels} labels for {samples} samples")]
    LabelCount { labels: usize, samples: usize },
    #[error("dimension must be positive")]
    Dimension,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterValidity {
    pub cluster: usize,
    pub size: usize,
    pub validity: f64,
    pub sparseness: f64,
    pub separation: f64,
    pub internal_nodes: usize,
    /// Member pairs at distance zero, left out of the core distance sums.
    pub duplicate_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbcvReport {
    pub overall: f64,
    pub per_cluster: Vec<ClusterValidity>,
    pub metric: Metric,
    pub dimension: usize,
    pub n_samples: usize,
    pub n_noise: usize,
}

impl DbcvReport {
    pub fn cluster_values(&self) -> Vec<f64> {
        self.per_cluster.iter().map(|c| c.validity).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("DBCV for clustering: {:.4}\n", self.overall);
        for c in &self.per_cluster {
            writeln!(out, "\tDBCV for cluster #{}: {:.4}", c.cluster, c.validity).unwrap();
        }
        out
    }
}

/// DBCV of `labels` over `features`, measured with `metric` and `d' = F`.
pub fn dbcv(
    features: &FeatureMatrix,
    labels: &[Option<usize>],
    metric: Metric,
) -> Result<DbcvReport, ValidityError> {
    if labels.len() != features.n_samples() {
        return Err(ValidityError::LabelCount {
            labels: labels.len(),
            samples: features.n_samples(),
        });
    }
    let d = pairwise_matrix(features, metric)?;
    dbcv_from_distances(&d, labels, features.n_features())
}

/// DBCV over a precomputed distance matrix with explicit dimension `d'`.
pub fn dbcv_from_distances(
    d: &DistanceMatrix,
    labels: &[Option<usize>],
    dimension: usize,
) -> Result<DbcvReport, ValidityError> {
    let n = d.n();
    if labels.len() != n {
        return Err(ValidityError::LabelCount {
            labels: labels.len(),
            samples: n,
        });
    }
    if dimension == 0 {
        return Err(ValidityError::Dimension);
    }
    let k = labels.iter().flatten().map(|&c| c + 1).max().unwrap_or(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, label) in labels.iter().enumerate() {
        if let Some(c) = label {
            members[*c].push(i);
        }
    }
    // labels need not be contiguous; only occupied ids count
    let occupied: Vec<usize> = (0..k).filter(|&c| !members[c].is_empty()).collect();
    if occupied.len() < 2 {
        return Err(ValidityError::TooFewClusters(occupied.len()));
    }
    if let Some(&c) = occupied.iter().find(|&&c| members[c].len() < 2) {
        return Err(ValidityError::SmallCluster {
            cluster: c,
            size: members[c].len(),
        });
    }

    let dim = dimension as f64;
    let mut apts = vec![0.0; n];
    let parts: Vec<ClusterPart> = occupied
        .par_iter()
        .map(|&c| cluster_part(d, &members[c], dim))
        .collect();
    for part in &parts {
        for (&p, &a) in part.members.iter().zip(&part.apts) {
            apts[p] = a;
        }
    }
    let mreach = |a: usize, b: usize| d.get(a, b).max(apts[a]).max(apts[b]);

    let separation: Vec<f64> = (0..parts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for (j, other) in parts.iter().enumerate() {
                if i == j {
                    continue;
                }
                for &a in &parts[i].internal {
                    for &b in &other.internal {
                        best = best.min(mreach(a, b));
                    }
                }
            }
            best
        })
        .collect();

    let mut per_cluster = Vec::with_capacity(parts.len());
    let mut overall = 0.0;
    for ((&c, part), &sep) in occupied.iter().zip(&parts).zip(&separation) {
        let spread = part.sparseness;
        let denom = sep.max(spread);
        let validity = if denom > 0.0 { (sep - spread) / denom } else { 0.0 };
        overall += part.members.len() as f64 / n as f64 * validity;
        per_cluster.push(ClusterValidity {
            cluster: c,
            size: part.members.len(),
            validity,
            sparseness: spread,
            separation: sep,
            internal_nodes: part.internal.len(),
            duplicate_pairs: part.duplicate_pairs,
        });
    }
    Ok(DbcvReport {
        overall,
        per_cluster,
        metric: d.metric(),
        dimension,
        n_samples: n,
        n_noise: labels.iter().filter(|l| l.is_none()).count(),
    })
}

struct ClusterPart {
    members: Vec<usize>,
    apts: Vec<f64>,
    internal: Vec<usize>,
    sparseness: f64,
    duplicate_pairs: usize,
}

fn cluster_part(d: &DistanceMatrix, members: &[usize], dim: f64) -> ClusterPart {
    let m = members.len();
    let mut duplicate_pairs = 0;
    let apts: Vec<f64> = members
        .iter()
        .map(|&x| {
            let logs: Vec<f64> = members
                .iter()
                .filter(|&&y| y != x)
                .map(|&y| d.get(x, y))
                .filter(|&dist| dist > 0.0)
                .map(|dist| -dim * dist.ln())
                .collect();
            if logs.is_empty() {
                return 0.0;
            }
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
            let log_mean = top + sum.ln() - (logs.len() as f64).ln();
            (-log_mean / dim).exp()
        })
        .collect();
    for a in 0..m {
        for b in a + 1..m {
            if d.get(members[a], members[b]) == 0.0 {
                duplicate_pairs += 1;
            }
        }
    }

    // Prim over the cluster's mutual reachability graph
    let w = |a: usize, b: usize| d.get(members[a], members[b]).max(apts[a]).max(apts[b]);
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut from = vec![0; m];
    let mut edges = Vec::with_capacity(m - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        let mut next = None;
        for v in 0..m {
            if in_tree[v] {
                continue;
            }
            let wv = w(current, v);
            if wv < best[v] {
                best[v] = wv;
                from[v] = current;
            }
            if next.is_none_or(|u: usize| best[v] < best[u]) {
                next = Some(v);
            }
        }
        let v = next.expect("vertices remain");
        in_tree[v] = true;
        edges.push((from[v], v, best[v]));
        current = v;
    }

    let mut degree = vec![0; m];
    for &(a, b, _) in &edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    let internal_local: Vec<usize> = if m == 2 {
        vec![0, 1]
    } else {
        (0..m).filter(|&v| degree[v] >= 2).collect()
    };
    let is_internal = |v: usize| internal_local.contains(&v);
    let inner: Vec<f64> = edges
        .iter()
        .filter(|&&(a, b, _)| is_internal(a) && is_internal(b))
        .map(|e| e.2)
        .collect();
    let sparseness = if inner.is_empty() {
        edges.iter().map(|e| e.2).fold(0.0, f64::max)
    } else {
        inner.into_iter().fold(0.0, f64::max)
    };

    ClusterPart {
        members: members.to_vec(),
        internal: internal_local.iter().map(|&v| members[v]).collect(),
        apts,
        sparseness,
        duplicate_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), Metric::Euclidean, |i, j| (points[i] - points[j]).abs())
            .unwrap()
    }

    // Direct evaluation of the definitions on a tiny instance: every point of
    // a 2-point cluster is internal, so the formulas reduce to closed forms.
    #[test]
    fn two_pairs_closed_form() {
        let d = line(&[0.0, 1.0, 10.0, 12.0]);
        let r = dbcv_from_distances(&d, &[Some(0), Some(0), Some(1), Some(1)], 1).unwrap();
        // apts equals the single intra distance: 1 for cluster 0, 2 for cluster 1
        // sparseness: 1 and 2; separation: min over pairs of max(apts, apts, d) = 9
        let v0 = (9.0 - 1.0) / 9.0;
        let v1 = (9.0 - 2.0) / 9.0;
        assert!((r.per_cluster[0].validity - v0).abs() < 1e-12);
        assert!((r.per_cluster[1].validity - v1).abs() < 1e-12);
        assert!((r.overall - (v0 + v1) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn noise_counts_in_weights() {
        let d = line(&[0.0, 1.0, 10.0, 12.0, 50.0, 60.0]);
        let labels = [Some(0), Some(0), Some(1), Some(1), None, None];
        let r = dbcv_from_distances(&d, &labels, 1).unwrap();
        let v: f64 = r.cluster_values().iter().sum();
        assert!((r.overall - v * 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.n_noise, 2);
    }

    #[test]
    fn apts_matches_formula() {
        let d = line(&[0.0, 1.0, 3.0, 100.0, 101.0]);
        let part = cluster_part(&d, &[0, 1, 2], 2.0);
        let direct = ((1.0f64.powi(-2) + 3.0f64.powi(-2)) / 2.0).powf(-0.5);
        assert!((part.apts[0] - direct).abs() < 1e-12);
    }

    #[test]
    fn huge_dimension_stays_finite() {
        let d = line(&[0.0, 0.001, 0.002, 5.0, 5.001, 5.002]);
        let labels = [Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)];
        let r = dbcv_from_distances(&d, &labels, 640).unwrap();
        assert!(r.overall.is_finite() && r.overall > 0.9);
    }

    #[test]
    fn duplicates_are_flagged() {
        let d = line(&[1.0, 1.0, 1.0, 5.0, 6.0]);
        let r = dbcv_from_distances(&d, &[Some(0), Some(0), Some(0), Some(1), Some(1)], 3).unwrap();
        assert_eq!(r.per_cluster[0].duplicate_pairs, 3);
        assert_eq!(r.per_cluster[0].sparseness, 0.0);
        assert_eq!(r.per_cluster[0].validity, 1.0);
    }

    #[test]
    fn error_cases() {
        let d = line(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            dbcv_from_distances(&d, &[Some(0), Some(0), None], 1),
            Err(ValidityError::TooFewClusters(1))
        ));
        assert!(matches!(
            dbcv_from_distances(&d, &[Some(0), Some(0), Some(1)], 1),
            Err(ValidityError::SmallCluster { cluster: 1, size: 1 })
        ));
        assert!(dbcv_from_distances(&d, &[Some(0)], 1).is_err());
    }

    #[test]
    fn text_format() {
        let d = line(&[0.0, 1.0, 10.0, 12.0]);
        let r = dbcv_from_distances(&d, &[Some(0), Some(0), Some(1), Some(1)], 1).unwrap();
        assert_eq!(
            r.to_text(),
            "DBCV for clustering: 0.8333\n\tDBCV for cluster #0: 0.8889\n\tDBCV for cluster #1: 0.7778\n"
        );
    }
}
