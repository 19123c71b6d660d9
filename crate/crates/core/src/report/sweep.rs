use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::featurize::{Featurizer, KdeConfig, Pipeline};
use crate::hdbscan::{fit, HdbscanConfig, Selection};
use crate::ingest::{ActivationSet, MetadataTable};
use crate::metric::{pairwise_matrix, Metric};
use crate::validity::dbcv_from_distances;

use super::ReportError;

pub const SWEEP_HEADER: [&str; 10] = [
    "pipeline",
    "metric",
    "selection",
    "min_cluster_size",
    "n_samples",
    "n_clusters",
    "n_nonclustered",
    "mean_persistence",
    "max_persistence",
    "dbcv",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub pipelines: Vec<Pipeline>,
    /// Metric for every pipeline; each pipeline's usual metric when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    pub selections: Vec<Selection>,
    pub min_cluster_sizes: Vec<usize>,
    /// Dataset sizes; the full set when empty.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples: Option<usize>,
    #[serde(default)]
    pub kde: KdeConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub with_dbcv: bool,
}

impl SweepGrid {
    pub fn new(pipelines: Vec<Pipeline>, selections: Vec<Selection>, min_cluster_sizes: Vec<usize>) -> Self {
        Self {
            pipelines,
            metric: None,
            selections,
            min_cluster_sizes,
            sizes: Vec::new(),
            min_samples: None,
            kde: KdeConfig::default(),
            seed: 0,
            with_dbcv: false,
        }
    }

    pub fn n_cells(&self, n_samples: usize) -> usize {
        self.pipelines.len() * self.selections.len() * self.min_cluster_sizes.len() * self.sizes_for(n_samples).len()
    }

    fn sizes_for(&self, n_samples: usize) -> Vec<usize> {
        if self.sizes.is_empty() {
            vec![n_samples]
        } else {
            self.sizes.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pipeline: Pipeline,
    pub metric: Metric,
    pub selection: Selection,
    pub min_cluster_size: usize,
    pub n_samples: usize,
    pub n_clusters: usize,
    pub n_nonclustered: usize,
    pub mean_persistence: Option<f64>,
    pub max_persistence: Option<f64>,
    pub dbcv: Option<f64>,
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Row sets for each size: prefixes of one seeded permutation, each sorted,
/// so a smaller subset is always contained in a larger one.
pub fn nested_subsets(n_samples: usize, sizes: &[usize], seed: u64) -> Result<Vec<Vec<usize>>, ReportError> {
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > n_samples) {
        return Err(ReportError::Grid(format!(
            "subset size {bad} outside 1..={n_samples}"
        )));
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(sizes
        .iter()
        .map(|&s| {
            let mut rows = order[..s].to_vec();
            rows.sort_unstable();
            rows
        })
        .collect())
}

/// Fits one model per grid cell. Rows are ordered by pipeline, size,
/// selection, then min_cluster_size, whatever the evaluation order.
pub fn sweep(set: &ActivationSet, meta: &MetadataTable, grid: &SweepGrid) -> Result<SweepResult, ReportError> {
    if meta.n_rows() != set.n_samples() {
        return Err(ReportError::Misaligned(format!(
            "metadata has {} rows, activations have {} samples",
            meta.n_rows(),
            set.n_samples()
        )));
    }
    if grid.n_cells(set.n_samples()) == 0 {
        return Err(ReportError::Grid("grid has no cells".into()));
    }
    let sizes = grid.sizes_for(set.n_samples());
    let subsets = nested_subsets(set.n_samples(), &sizes, grid.seed)?;

    let mut rows = Vec::with_capacity(grid.n_cells(set.n_samples()));
    for &pipeline in &grid.pipelines {
        let metric = grid.metric.unwrap_or_else(|| Metric::default_for(pipeline));
        for subset in &subsets {
            let part = set.subset(subset)?;
            let (_, features) = Featurizer::fit(&part, pipeline, &grid.kde)?;
            let d = pairwise_matrix(&features, metric)?;
            let cells: Vec<(Selection, usize)> = grid
                .selections
                .iter()
                .flat_map(|&s| grid.min_cluster_sizes.iter().map(move |&m| (s, m)))
                .collect();
            let fitted: Vec<Result<SweepRow, ReportError>> = cells
                .par_iter()
                .map(|&(selection, min_cluster_size)| {
                    let config = HdbscanConfig {
                        min_cluster_size,
                        min_samples: grid.min_samples,
                        selection,
                    };
                    let model = fit(&d, &config)?;
                    let persistence = model.persistence_scores();
                    let dbcv = if grid.with_dbcv && model.n_clusters() >= 2 {
                        dbcv_from_distances(&d, &model.labels, features.n_features())
                            .ok()
                            .map(|r| r.overall)
                    } else {
                        None
                    };
                    Ok(SweepRow {
                        pipeline,
                        metric,
                        selection,
                        min_cluster_size,
                        n_samples: subset.len(),
                        n_clusters: model.n_clusters(),
                        n_nonclustered: model.n_noise(),
                        mean_persistence: (!persistence.is_empty())
                            .then(|| persistence.iter().sum::<f64>() / persistence.len() as f64),
                        max_persistence: persistence.iter().copied().reduce(f64::max),
                        dbcv,
                        cluster_sizes: model.cluster_sizes(),
                    })
                })
                .collect();
            for row in fitted {
                rows.push(row?);
            }
        }
    }
    Ok(SweepResult { rows })
}

fn optional(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

impl SweepResult {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        w.write_record(SWEEP_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.pipeline.to_string(),
                r.metric.to_string(),
                r.selection.to_string(),
                r.min_cluster_size.to_string(),
                r.n_samples.to_string(),
                r.n_clusters.to_string(),
                r.n_nonclustered.to_string(),
                optional(r.mean_persistence),
                optional(r.max_persistence),
                optional(r.dbcv),
            ])?;
        }
        w.flush().map_err(|source| ReportError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })
    }
}
