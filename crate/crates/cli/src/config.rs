use std::path::{Path, PathBuf};

use napforge::featurize::{KdeConfig, Pipeline};
use napforge::hdbscan::HdbscanConfig;
use napforge::metric::Metric;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};

/// Everything a `run` needs. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: Pipeline,
    /// The pipeline's usual metric when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    pub hdbscan: HdbscanConfig,
    pub kde: KdeConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activations: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub dbcv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::ProposedKde,
            metric: None,
            hdbscan: HdbscanConfig::default(),
            kde: KdeConfig::default(),
            activations: None,
            metadata: None,
            output: None,
            seed: 0,
            dbcv: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).stage("config")?;
        serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
    }

    /// Fills in the metric and checks the pipeline pairing.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let metric = self.metric.unwrap_or_else(|| Metric::default_for(self.pipeline));
        if self.pipeline == Pipeline::Raw && metric.requires_nonnegative() {
            return Err(CliError::config(
                "config",
                format!("the raw pipeline can produce negative features, which {metric} does not accept"),
            ));
        }
        self.metric = Some(metric);
        self.hdbscan.validate().stage("config")?;
        self.kde.validate().stage("config")?;
        if self.activations.is_none() {
            return Err(CliError::config("config", "no activations file given"));
        }
        Ok(self)
    }

    pub fn metric(&self) -> Metric {
        self.metric.unwrap_or_else(|| Metric::default_for(self.pipeline))
    }

    /// The resolved configuration without its output location, so that a
    /// run can be repeated into another directory.
    pub fn echo(&self) -> Self {
        Self {
            output: None,
            ..self.clone()
        }
    }
}
