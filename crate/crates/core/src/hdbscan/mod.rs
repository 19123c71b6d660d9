//! HDBSCAN* over a precomputed distance matrix.
//!
//! The steps are the usual ones: core distances, mutual reachability, a
//! minimum spanning tree (Prim, dense), the single-linkage dendrogram, the
//! condensed tree at `min_cluster_size`, and cluster extraction by Excess of
//! Mass or by taking the leaves of the condensed tree.
//!
//! Density levels are `lambda = 1 / distance`, with merges at distance zero
//! at `lambda = inf`. Stability and membership ratios replace infinite levels
//! by the largest finite level in the tree, which keeps them finite and
//! invariant under rescaling of the distances.
//!
//! The root is only ever selected when it has no child clusters, so a
//! dataset that never splits forms a single cluster.

mod predict;
mod reach;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::{FeatureMatrix, Provenance};
use crate::metric::{pairwise_matrix, DistanceMatrix, Metric, MetricError};

pub use predict::{approximate_predict, Prediction};
pub use reach::{core_distances, mutual_reachability};
pub use tree::{
    condense, dendrogram, minimum_spanning_tree, single_linkage, CondensedRow, CondensedTree,
    Dendrogram, Merge, MstEdge,
};

#[derive(Debug, Error)]
pub enum HdbscanError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),
    #[error("invalid condensed tree: {0}")]
    Tree(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Excess of Mass.
    Eom,
    /// Leaves of the condensed tree.
    Leaf,
}

impl Selection {
    pub fn as_str(self) -> &'static str {
        match self {
            Selection::Eom => "eom",
            Selection::Leaf => "leaf",
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Selection {
    type Err = HdbscanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eom" => Ok(Selection::Eom),
            "leaf" => Ok(Selection::Leaf),
            other => Err(HdbscanError::Config(format!("unknown selection {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HdbscanConfig {
    pub min_cluster_size: usize,
    /// Neighbours (excluding the point itself) defining the core distance.
    /// Defaults to `min_cluster_size - 1`, which is the same neighbourhood
    /// as a count that includes the point itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples: Option<usize>,
    pub selection: Selection,
}

impl Default for HdbscanConfig {
    fn default() -> Self {
        Self {
            min_cluster_size: 5,
            min_samples: None,
            selection: Selection::Eom,
        }
    }
}

impl HdbscanConfig {
    pub fn new(min_cluster_size: usize, selection: Selection) -> Self {
        Self {
            min_cluster_size,
            min_samples: None,
            selection,
        }
    }

    pub fn effective_min_samples(&self) -> usize {
        self.min_samples
            .unwrap_or_else(|| self.min_cluster_size.saturating_sub(1).max(1))
    }

    pub fn validate(&self) -> Result<(), HdbscanError> {
        if self.min_cluster_size < 2 {
            return Err(HdbscanError::Config(format!(
                "min_cluster_size must be at least 2, got {}",
                self.min_cluster_size
            )));
        }
        if self.min_samples == Some(0) {
            return Err(HdbscanError::Config("min_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-cluster results. `label` is the public cluster id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub label: usize,
    /// Id of the cluster in the condensed tree.
    pub node: usize,
    pub size: usize,
    #[serde(with = "crate::lambda")]
    pub birth_lambda: f64,
    /// Largest member density level, after capping infinite levels.
    pub max_lambda: f64,
    pub stability: f64,
    pub persistence: f64,
}

/// A fitted clustering. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub config: HdbscanConfig,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub n_samples: usize,
    /// Cluster label per sample, `None` for noise.
    #[serde(with = "crate::labels::vec")]
    pub labels: Vec<Option<usize>>,
    pub probabilities: Vec<f64>,
    /// Density level at which each point leaves the condensed tree.
    #[serde(with = "crate::lambda::vec")]
    pub point_lambdas: Vec<f64>,
    pub core_distances: Vec<f64>,
    /// Replacement for infinite density levels in ratios and stabilities.
    pub lambda_cap: f64,
    pub clusters: Vec<ClusterInfo>,
    pub tree: CondensedTree,
}

impl ClusterModel {
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.size).collect()
    }

    /// Labels with noise as -1.
    pub fn labels_i64(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|l| l.map_or(-1, |c| c as i64))
            .collect()
    }

    pub fn persistence_scores(&self) -> Vec<f64> {
        persistence_scores(self)
    }

    pub fn membership_probabilities(&self) -> Vec<f64> {
        membership_probabilities(self)
    }

    /// Builds a model from an already condensed tree.
    pub fn from_tree(
        tree: CondensedTree,
        config: HdbscanConfig,
        metric: Metric,
        core_distances: Vec<f64>,
    ) -> Result<Self, HdbscanError> {
        tree.validate().map_err(HdbscanError::Tree)?;
        Ok(extract(tree, config, metric, core_distances))
    }

    fn all_noise(n: usize, config: HdbscanConfig, metric: Metric, core_distances: Vec<f64>) -> Self {
        Self {
            config,
            metric,
            provenance: None,
            n_samples: n,
            labels: vec![None; n],
            probabilities: vec![0.0; n],
            point_lambdas: vec![0.0; n],
            core_distances,
            lambda_cap: 0.0,
            clusters: Vec::new(),
            tree: CondensedTree {
                n_points: n,
                rows: Vec::new(),
            },
        }
    }
}

/// Clusters the points of a distance matrix.
pub fn fit(d: &DistanceMatrix, config: &HdbscanConfig) -> Result<ClusterModel, HdbscanError> {
    config.validate()?;
    let n = d.n();
    let mut config = *config;
    config.min_samples = Some(config.effective_min_samples());
    if n < config.min_cluster_size {
        return Ok(ClusterModel::all_noise(n, config, d.metric(), vec![0.0; n]));
    }
    let core = core_distances(d, config.effective_min_samples())?;
    let reach = mutual_reachability(d, &core)?;
    let tree = condense(&dendrogram(&reach), config.min_cluster_size);
    Ok(extract(tree, config, d.metric(), core))
}

/// Computes the distance matrix of `features` and clusters it; the model
/// records the features' provenance for later prediction.
pub fn fit_features(
    features: &FeatureMatrix,
    metric: Metric,
    config: &HdbscanConfig,
) -> Result<ClusterModel, HdbscanError> {
    let d = pairwise_matrix(features, metric)?;
    let mut model = fit(&d, config)?;
    model.provenance = Some(features.provenance().clone());
    Ok(model)
}

fn extract(
    tree: CondensedTree,
    config: HdbscanConfig,
    metric: Metric,
    core_distances: Vec<f64>,
) -> ClusterModel {
    let n = tree.n_points;
    let n_clusters = tree.n_clusters();
    if n_clusters == 0 {
        return ClusterModel::all_noise(n, config, metric, core_distances);
    }
    let lambda_cap = tree
        .rows
        .iter()
        .map(|r| r.lambda)
        .filter(|l| l.is_finite())
        .fold(0.0, f64::max);
    let cap = |l: f64| if l.is_finite() { l } else { lambda_cap };

    let mut parent = vec![None; n_clusters];
    let mut birth = vec![0.0; n_clusters];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    let mut stability = vec![0.0; n_clusters];
    let mut point_lambdas = vec![0.0; n];
    let mut exit_cluster = vec![0; n];
    for row in &tree.rows {
        if row.child >= n {
            let c = row.child - n;
            parent[c] = Some(row.parent - n);
            birth[c] = row.lambda;
            children[row.parent - n].push(c);
        } else {
            point_lambdas[row.child] = row.lambda;
            exit_cluster[row.child] = row.parent - n;
        }
    }
    for row in &tree.rows {
        let c = row.parent - n;
        stability[c] += (cap(row.lambda) - cap(birth[c])) * row.child_size as f64;
    }

    let selected = select(&children, &stability, config.selection);

    // selected ancestor-or-self of every cluster; parents precede children
    let mut owner: Vec<Option<usize>> = vec![None; n_clusters];
    for c in 0..n_clusters {
        owner[c] = if selected[c] {
            Some(c)
        } else {
            parent[c].and_then(|p| owner[p])
        };
    }
    let label_of: Vec<Option<usize>> = {
        let mut next = 0;
        selected
            .iter()
            .map(|&s| {
                s.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let labels: Vec<Option<usize>> = (0..n)
        .map(|p| owner[exit_cluster[p]].and_then(|c| label_of[c]))
        .collect();

    let mut clusters: Vec<ClusterInfo> = (0..n_clusters)
        .filter(|&c| selected[c])
        .map(|c| ClusterInfo {
            label: label_of[c].expect("selected"),
            node: c + n,
            size: 0,
            birth_lambda: birth[c],
            max_lambda: 0.0,
            stability: stability[c],
            persistence: 0.0,
        })
        .collect();
    for (p, label) in labels.iter().enumerate() {
        if let Some(l) = *label {
            let info = &mut clusters[l];
            info.size += 1;
            info.max_lambda = info.max_lambda.max(cap(point_lambdas[p]));
        }
    }
    for info in &mut clusters {
        info.persistence = if info.max_lambda > 0.0 {
            (info.stability / (info.size as f64 * info.max_lambda)).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    let probabilities = labels
        .iter()
        .zip(&point_lambdas)
        .map(|(label, &l)| match label {
            None => 0.0,
            Some(c) => ratio(cap(l), clusters[*c].max_lambda),
        })
        .collect();

    ClusterModel {
        config,
        metric,
        provenance: None,
        n_samples: n,
        labels,
        probabilities,
        point_lambdas,
        core_distances,
        lambda_cap,
        clusters,
        tree,
    }
}

fn ratio(lambda: f64, max_lambda: f64) -> f64 {
    if max_lambda > 0.0 {
        (lambda / max_lambda).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

fn select(children: &[Vec<usize>], stability: &[f64], selection: Selection) -> Vec<bool> {
    let k = children.len();
    let mut selected = vec![false; k];
    if children[0].is_empty() {
        // the root is the only cluster
        selected[0] = true;
        return selected;
    }
    match selection {
        Selection::Leaf => {
            for c in 1..k {
                selected[c] = children[c].is_empty();
            }
        }
        Selection::Eom => {
            let mut best = stability.to_vec();
            for c in (1..k).rev() {
                let subtree: f64 = children[c].iter().map(|&ch| best[ch]).sum();
                if subtree > stability[c] {
                    best[c] = subtree;
                } else {
                    selected[c] = true;
                    let mut stack = children[c].clone();
                    while let Some(d) = stack.pop() {
                        selected[d] = false;
                        stack.extend_from_slice(&children[d]);
                    }
                }
            }
        }
    }
    selected
}

/// `S(c) / (|c| * lambda_max(c))` per cluster, in label order.
pub fn persistence_scores(model: &ClusterModel) -> Vec<f64> {
    model.clusters.iter().map(|c| c.persistence).collect()
}

/// `lambda_p / lambda_max(c)` for members, 0 for noise.
pub fn membership_probabilities(model: &ClusterModel) -> Vec<f64> {
    model.probabilities.clone()
}
