use serde::{Deserialize, Serialize};

use crate::featurize::FeatureMatrix;
use crate::metric::distances_to_rows;

use super::{ClusterModel, HdbscanError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(with = "crate::labels")]
    pub label: Option<usize>,
    pub probability: f64,
}

/// Assigns new points to the clusters of a fitted model.
///
/// Each point `x` is attached to its nearest training point `y` (lowest
/// index on ties) at level `1 / max(d(x, y), core(y))`. It joins `y`'s
/// cluster if that level is at least the lowest level at which any member
/// of the cluster leaves the condensed tree, so a new point is accepted
/// when it is no sparser than the sparsest member. Points whose nearest
/// neighbour is noise are noise.
pub fn approximate_predict(
    model: &ClusterModel,
    training: &FeatureMatrix,
    new_features: &FeatureMatrix,
) -> Result<Vec<Prediction>, HdbscanError> {
    if training.n_samples() != model.n_samples {
        return Err(HdbscanError::ProvenanceMismatch(format!(
            "model was fitted on {} samples, training features have {}",
            model.n_samples,
            training.n_samples()
        )));
    }
    if let Some(p) = &model.provenance {
        if p != training.provenance() {
            return Err(HdbscanError::ProvenanceMismatch(
                "training features were not produced by the model's featurizer".into(),
            ));
        }
    }
    if training.provenance() != new_features.provenance() {
        return Err(HdbscanError::ProvenanceMismatch(format!(
            "new features come from {} with different fitted parameters than the {} training features",
            new_features.provenance().pipeline,
            training.provenance().pipeline
        )));
    }
    if training.n_features() != new_features.n_features() {
        return Err(HdbscanError::ProvenanceMismatch(format!(
            "{} training features vs {} new features",
            training.n_features(),
            new_features.n_features()
        )));
    }
    if model.n_clusters() == 0 || model.n_samples == 0 {
        return Ok(vec![
            Prediction {
                label: None,
                probability: 0.0,
            };
            new_features.n_samples()
        ]);
    }

    let mut floor = vec![f64::INFINITY; model.n_clusters()];
    for (label, &l) in model.labels.iter().zip(&model.point_lambdas) {
        if let Some(c) = label {
            floor[*c] = floor[*c].min(l);
        }
    }
    new_features
        .rows()
        .map(|x| {
            let d = distances_to_rows(x, training, model.metric)?;
            let (y, &dy) = d
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
                .expect("training set is nonempty");
            Ok(predict_one(model, &floor, y, dy))
        })
        .collect()
}

fn predict_one(model: &ClusterModel, floor: &[f64], y: usize, dy: f64) -> Prediction {
    let noise = Prediction {
        label: None,
        probability: 0.0,
    };
    let Some(label) = model.labels[y] else {
        return noise;
    };
    let reach = dy.max(model.core_distances[y]);
    let lambda = if reach == 0.0 { f64::INFINITY } else { 1.0 / reach };
    if lambda < floor[label] {
        return noise;
    }
    let max_lambda = model.clusters[label].max_lambda;
    let probability = if lambda.is_infinite() || max_lambda == 0.0 {
        1.0
    } else {
        (lambda / max_lambda).min(1.0)
    };
    Prediction {
        label: Some(label),
        probability,
    }
}
