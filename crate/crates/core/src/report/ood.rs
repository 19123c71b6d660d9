use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::featurize::FeatureMatrix;
use crate::hdbscan::{approximate_predict, ClusterModel, Prediction};

use super::{label_text, ReportError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodReport {
    pub n_id: usize,
    pub n_ood: usize,
    pub id_clustered: usize,
    pub ood_clustered: usize,
    pub id_clustered_fraction: f64,
    pub ood_clustered_fraction: f64,
    pub id: Vec<Prediction>,
    pub ood: Vec<Prediction>,
}

fn clustered(predictions: &[Prediction]) -> usize {
    predictions.iter().filter(|p| p.label.is_some()).count()
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Predicts both sets against the model; a point counts as clustered when
/// it is not noise.
pub fn ood_evaluate(
    model: &ClusterModel,
    training: &FeatureMatrix,
    id_features: &FeatureMatrix,
    ood_features: &FeatureMatrix,
) -> Result<OodReport, ReportError> {
    let id = approximate_predict(model, training, id_features)?;
    let ood = approximate_predict(model, training, ood_features)?;
    let (id_clustered, ood_clustered) = (clustered(&id), clustered(&ood));
    Ok(OodReport {
        n_id: id.len(),
        n_ood: ood.len(),
        id_clustered,
        ood_clustered,
        id_clustered_fraction: fraction(id_clustered, id.len()),
        ood_clustered_fraction: fraction(ood_clustered, ood.len()),
        id,
        ood,
    })
}

impl OodReport {
    /// Writes `sample_index,label,probability` for one prediction table.
    pub fn write_table(predictions: &[Prediction], path: impl AsRef<Path>) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        w.write_record(["sample_index", "label", "probability"])?;
        for (i, p) in predictions.iter().enumerate() {
            w.write_record([i.to_string(), label_text(p.label), p.probability.to_string()])?;
        }
        w.flush().map_err(|source| ReportError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })
    }
}
