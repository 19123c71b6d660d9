//! Activation sets to feature matrices.
//!
//! Three families of pipeline are supported:
//!
//! * baseline: per-channel spatial aggregation (`mean`, `max`, `minmax`,
//!   `meanstd`) followed by max-abs scaling of each feature column;
//! * proposed: per-channel z-scoring over the whole dataset, then a Gaussian
//!   KDE of each sample's spatial values per channel, sampled at R points of
//!   a fixed z grid and concatenated channel-major;
//! * raw: the flattened activations, unscaled.
//!
//! A [`Featurizer`] captures everything fitted on the training set (channel
//! statistics, column divisors, dropped channels) so that test sets can be
//! mapped into exactly the same feature space.

mod baseline;
mod kde;
mod stats;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope;
use crate::ingest::{ActivationSet, IngestError};

pub use baseline::{aggregate, maxabs_normalize, Aggregation};
pub use kde::{
    kde_density, kde_sample, kde_sample_with_bandwidth, scott_bandwidth, z_range, GridRule,
    KdeConfig, DENSITY_FLOOR,
};
pub use stats::{compute_channel_stats, zscore_apply, ChannelStats, ZScored};

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("incompatible input: {0}")]
    Incompatible(String),
    #[error("every channel is constant; no features remain")]
    NoFeatures,
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    BaselineMean,
    BaselineMax,
    BaselineMinmax,
    BaselineMeanstd,
    ProposedKde,
    Raw,
}

impl Pipeline {
    pub const ALL: [Pipeline; 6] = [
        Pipeline::BaselineMean,
        Pipeline::BaselineMax,
        Pipeline::BaselineMinmax,
        Pipeline::BaselineMeanstd,
        Pipeline::ProposedKde,
        Pipeline::Raw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::BaselineMean => "baseline-mean",
            Pipeline::BaselineMax => "baseline-max",
            Pipeline::BaselineMinmax => "baseline-minmax",
            Pipeline::BaselineMeanstd => "baseline-meanstd",
            Pipeline::ProposedKde => "proposed-kde",
            Pipeline::Raw => "raw",
        }
    }

    pub fn aggregation(self) -> Option<Aggregation> {
        match self {
            Pipeline::BaselineMean => Some(Aggregation::Mean),
            Pipeline::BaselineMax => Some(Aggregation::Max),
            Pipeline::BaselineMinmax => Some(Aggregation::Minmax),
            Pipeline::BaselineMeanstd => Some(Aggregation::Meanstd),
            Pipeline::ProposedKde | Pipeline::Raw => None,
        }
    }

    /// Whether every feature this pipeline emits is nonnegative.
    pub fn is_nonnegative(self) -> bool {
        self == Pipeline::ProposedKde
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = FeaturizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| FeaturizeError::Config(format!("unknown pipeline {s:?}")))
    }
}

/// How a feature matrix was produced, including every fitted parameter
/// needed to reproduce the transform on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub pipeline: Pipeline,
    pub n_channels: usize,
    pub spatial_elems: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kde: Option<KdeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub dropped_channels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_stats: Option<ChannelStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_scale: Option<Vec<f64>>,
    #[serde(default)]
    pub zero_columns: Vec<usize>,
}

impl Provenance {
    pub fn new(pipeline: Pipeline, set: &ActivationSet) -> Self {
        Self {
            pipeline,
            n_channels: set.n_channels(),
            spatial_elems: set.spatial_elems(),
            kde: None,
            bandwidth: None,
            dropped_channels: Vec::new(),
            channel_stats: None,
            column_scale: None,
            zero_columns: Vec::new(),
        }
    }

    /// Channels that contribute features, in order.
    pub fn retained_channels(&self) -> Vec<usize> {
        (0..self.n_channels)
            .filter(|u| !self.dropped_channels.contains(u))
            .collect()
    }
}

/// Dense row-major `n_samples x n_features` matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_samples: usize,
    n_features: usize,
    values: Vec<f64>,
    provenance: Provenance,
}

impl FeatureMatrix {
    pub fn new(
        n_samples: usize,
        n_features: usize,
        values: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, FeaturizeError> {
        if values.len() != n_samples * n_features {
            return Err(FeaturizeError::Incompatible(format!(
                "{n_samples}x{n_features} matrix needs {} values, got {}",
                n_samples * n_features,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeaturizeError::Incompatible(format!(
                "non-finite feature at row {}, column {}",
                pos / n_features.max(1),
                pos % n_features.max(1)
            )));
        }
        Ok(Self {
            n_samples,
            n_features,
            values,
            provenance,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.n_samples).map(move |i| self.row(i))
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Rows in the given order, same provenance.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, FeaturizeError> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_samples) {
            return Err(FeaturizeError::Incompatible(format!(
                "row {bad} out of range for {} samples",
                self.n_samples
            )));
        }
        let values = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        Self::new(rows.len(), self.n_features, values, self.provenance.clone())
    }

    /// Every value multiplied by `factor`; provenance is kept.
    pub fn scaled(&self, factor: f64) -> Result<Self, FeaturizeError> {
        Self::new(
            self.n_samples,
            self.n_features,
            self.values.iter().map(|v| v * factor).collect(),
            self.provenance.clone(),
        )
    }

    /// NAPAC-F: the NAPA envelope with a features header and `f64le` payload.
    pub fn to_bytes(&self) -> Result<Vec<u8>, FeaturizeError> {
        let header = FeatureHeader {
            version: 1,
            kind: "features".into(),
            n_samples: self.n_samples,
            n_features: self.n_features,
            pipeline: self.provenance.pipeline,
            dtype: "f64le".into(),
            provenance: self.provenance.clone(),
        };
        Ok(envelope::encode(&header, &envelope::f64_payload(&self.values))?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FeaturizeError> {
        let (header, payload): (FeatureHeader, _) = envelope::decode(bytes)?;
        if header.version != 1 || header.kind != "features" || header.dtype != "f64le" {
            return Err(IngestError::Header(format!(
                "expected a version 1 f64le features header, got version {} kind {:?} dtype {:?}",
                header.version, header.kind, header.dtype
            ))
            .into());
        }
        if header.pipeline != header.provenance.pipeline {
            return Err(IngestError::Header("pipeline disagrees with provenance".into()).into());
        }
        let count = header
            .n_samples
            .checked_mul(header.n_features)
            .ok_or_else(|| IngestError::DimMismatch("dimensions overflow".into()))?;
        envelope::check_payload(payload, count, 8)?;
        Self::new(
            header.n_samples,
            header.n_features,
            envelope::parse_f64(payload),
            header.provenance,
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureHeader {
    version: u32,
    kind: String,
    n_samples: usize,
    n_features: usize,
    pipeline: Pipeline,
    dtype: String,
    provenance: Provenance,
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix, FeaturizeError> {
    FeatureMatrix::from_bytes(&envelope::read_file(path.as_ref())?)
}

pub fn write_features(features: &FeatureMatrix, path: impl AsRef<Path>) -> Result<(), FeaturizeError> {
    Ok(envelope::write_file(path.as_ref(), &features.to_bytes()?)?)
}

/// A featurization pipeline with its training-set parameters fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    provenance: Provenance,
}

impl Featurizer {
    /// Fits the pipeline's dataset-level parameters on `set` and returns the
    /// fitted featurizer together with the training features.
    pub fn fit(
        set: &ActivationSet,
        pipeline: Pipeline,
        kde: &KdeConfig,
    ) -> Result<(Self, FeatureMatrix), FeaturizeError> {
        let mut provenance = Provenance::new(pipeline, set);
        match pipeline.aggregation() {
            Some(mode) => {
                let raw = aggregate(set, mode);
                let features = maxabs_normalize(&raw, &ChannelStats::of_features(&raw))?;
                let featurizer = Self {
                    provenance: features.provenance().clone(),
                };
                Ok((featurizer, features))
            }
            None if pipeline == Pipeline::Raw => {
                let featurizer = Self { provenance };
                let features = featurizer.transform(set)?;
                Ok((featurizer, features))
            }
            None => {
                kde.validate()?;
                let stats = compute_channel_stats(set);
                provenance.dropped_channels = stats.constant_columns();
                if provenance.dropped_channels.len() == set.n_channels() {
                    return Err(FeaturizeError::NoFeatures);
                }
                provenance.bandwidth = Some(scott_bandwidth(set.spatial_elems())?);
                provenance.kde = Some(*kde);
                provenance.channel_stats = Some(stats);
                let featurizer = Self { provenance };
                let features = featurizer.transform(set)?;
                Ok((featurizer, features))
            }
        }
    }

    pub fn from_provenance(provenance: Provenance) -> Self {
        Self { provenance }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Maps `set` into the fitted feature space.
    pub fn transform(&self, set: &ActivationSet) -> Result<FeatureMatrix, FeaturizeError> {
        let p = &self.provenance;
        if set.n_channels() != p.n_channels || set.spatial_elems() != p.spatial_elems {
            return Err(FeaturizeError::Incompatible(format!(
                "featurizer expects {} channels x {} spatial values, set has {} x {}",
                p.n_channels,
                p.spatial_elems,
                set.n_channels(),
                set.spatial_elems()
            )));
        }
        match p.pipeline.aggregation() {
            Some(mode) => baseline::apply_scale(&aggregate(set, mode), p.clone()),
            None if p.pipeline == Pipeline::Raw => Ok(featurize_raw(set)),
            None => self.transform_kde(set),
        }
    }

    fn transform_kde(&self, set: &ActivationSet) -> Result<FeatureMatrix, FeaturizeError> {
        let p = &self.provenance;
        let missing = |what: &str| FeaturizeError::Incompatible(format!("provenance lacks {what}"));
        let stats = p.channel_stats.as_ref().ok_or_else(|| missing("channel statistics"))?;
        let config = p.kde.ok_or_else(|| missing("a KDE configuration"))?;
        let h = p.bandwidth.ok_or_else(|| missing("a bandwidth"))?;
        let grid = config.grid()?;
        let retained = p.retained_channels();
        let width = retained.len() * grid.len();

        let rows: Vec<Vec<f64>> = (0..set.n_samples())
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::with_capacity(width);
                let mut z = Vec::with_capacity(set.spatial_elems());
                for &u in &retained {
                    let (mu, sigma) = (stats.mean[u], stats.std[u]);
                    z.clear();
                    z.extend(set.channel(i, u).iter().map(|&a| (f64::from(a) - mu) / sigma));
                    z.sort_unstable_by(f64::total_cmp);
                    row.extend(grid.iter().map(|&a| kde_density(&z, h, a)));
                }
                row
            })
            .collect();
        FeatureMatrix::new(set.n_samples(), width, rows.concat(), p.clone())
    }
}

/// Proposed pipeline fitted and applied to the same set.
pub fn featurize_proposed(set: &ActivationSet, config: &KdeConfig) -> Result<FeatureMatrix, FeaturizeError> {
    Featurizer::fit(set, Pipeline::ProposedKde, config).map(|(_, f)| f)
}

/// Flattens each sample to its `n_channels * spatial_elems` raw values.
pub fn featurize_raw(set: &ActivationSet) -> FeatureMatrix {
    let values = set.values().iter().map(|&v| f64::from(v)).collect();
    FeatureMatrix::new(
        set.n_samples(),
        set.n_channels() * set.spatial_elems(),
        values,
        Provenance::new(Pipeline::Raw, set),
    )
    .expect("shape follows from the set")
}
