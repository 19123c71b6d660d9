//! Cluster summaries, out-of-distribution evaluation, parameter sweeps and
//! labeled feature export. Noise is written as label `-1` everywhere.

mod export;
mod ood;
mod summary;
mod sweep;

use std::path::PathBuf;

use thiserror::Error;

use crate::featurize::FeaturizeError;
use crate::hdbscan::HdbscanError;
use crate::ingest::IngestError;
use crate::metric::MetricError;
use crate::validity::ValidityError;

pub use export::export_labeled_features;
pub use ood::{ood_evaluate, OodReport};
pub use summary::{summarize, ClusterStats, ClusterSummary, ColumnSummary, MeanStd};
pub use sweep::{nested_subsets, sweep, SweepGrid, SweepResult, SweepRow, SWEEP_HEADER};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("misaligned inputs: {0}")]
    Misaligned(String),
    #[error("invalid sweep grid: {0}")]
    Grid(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Hdbscan(#[from] HdbscanError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

pub(crate) fn label_text(label: Option<usize>) -> String {
    label.map_or_else(|| "-1".to_owned(), |l| l.to_string())
}
