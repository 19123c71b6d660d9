//! Layer-level concept discovery over neural network activations.
//!
//! The crate clusters whole-layer activation distributions into Neural
//! Activation Patterns. Two featurizations are provided: a baseline that
//! aggregates each channel over its spatial positions and applies max-abs
//! scaling, and a density featurization that z-scores each channel, fits a
//! Gaussian KDE per sample and channel, and samples it on a fixed grid. The
//! density features are compared with the Jensen-Shannon distance and
//! clustered with HDBSCAN*. Post-clustering tools cover persistence, DBCV,
//! cluster summaries against sample metadata, out-of-distribution
//! evaluation and parameter sweeps.
//!
//! ```no_run
//! use napforge::featurize::{Featurizer, KdeConfig, Pipeline};
//! use napforge::hdbscan::{fit, HdbscanConfig};
//! use napforge::ingest::read_activations;
//! use napforge::metric::{pairwise_matrix, Metric};
//!
//! let set = read_activations("layer.napac").unwrap();
//! let (_featurizer, features) =
//!     Featurizer::fit(&set, Pipeline::ProposedKde, &KdeConfig::default()).unwrap();
//! let distances = pairwise_matrix(&features, Metric::JensenShannon).unwrap();
//! let model = fit(&distances, &HdbscanConfig::default()).unwrap();
//! println!("{} clusters", model.n_clusters());
//! ```

pub mod featurize;
pub mod hdbscan;
pub mod ingest;
pub mod metric;
pub mod normal;
pub mod report;
pub mod synth;
pub mod validity;

mod envelope;
mod labels;
mod lambda;

pub use featurize::{FeatureMatrix, Featurizer, KdeConfig, Pipeline, Provenance};
pub use hdbscan::{ClusterModel, HdbscanConfig, Selection};
pub use ingest::{ActivationSet, MetadataTable};
pub use metric::{DistanceMatrix, Metric};
