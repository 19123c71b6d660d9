use serde::{Deserialize, Serialize};

use crate::ingest::ActivationSet;

use super::{ChannelStats, FeatureMatrix, FeaturizeError, Pipeline, Provenance};

/// Reduction of a channel's spatial values to one or two numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Max,
    Minmax,
    Meanstd,
}

impl Aggregation {
    pub fn width(self) -> usize {
        match self {
            Aggregation::Mean | Aggregation::Max => 1,
            Aggregation::Minmax | Aggregation::Meanstd => 2,
        }
    }

    pub fn pipeline(self) -> Pipeline {
        match self {
            Aggregation::Mean => Pipeline::BaselineMean,
            Aggregation::Max => Pipeline::BaselineMax,
            Aggregation::Minmax => Pipeline::BaselineMinmax,
            Aggregation::Meanstd => Pipeline::BaselineMeanstd,
        }
    }

    fn reduce(self, values: &[f32], out: &mut Vec<f64>) {
        let mut sorted: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        sorted.sort_unstable_by(f64::total_cmp);
        let values = &sorted[..];
        let n = values.len() as f64;
        let mean = || values.iter().sum::<f64>() / n;
        match self {
            Aggregation::Mean => out.push(mean()),
            Aggregation::Max => out.push(values[values.len() - 1]),
            Aggregation::Minmax => {
                out.push(values[0]);
                out.push(values[values.len() - 1]);
            }
            Aggregation::Meanstd => {
                let m = mean();
                let var = values
                    .iter()
                    .map(|&v| (v - m).powi(2))
                    .sum::<f64>()
                    / n;
                out.push(m);
                out.push(var.sqrt());
            }
        }
    }
}

/// Reduces every channel of every sample over its spatial positions.
/// Features are channel-major; two-value modes place their pair adjacently.
pub fn aggregate(set: &ActivationSet, mode: Aggregation) -> FeatureMatrix {
    let width = mode.width() * set.n_channels();
    let mut values = Vec::with_capacity(set.n_samples() * width);
    for i in 0..set.n_samples() {
        for u in 0..set.n_channels() {
            mode.reduce(set.channel(i, u), &mut values);
        }
    }
    let provenance = Provenance::new(mode.pipeline(), set);
    FeatureMatrix::new(set.n_samples(), width, values, provenance)
        .expect("shape follows from the set")
}

/// Divides each column by its maximum absolute value over all samples.
///
/// Columns whose maximum absolute value is zero are left untouched and
/// listed in the provenance's `zero_columns`.
pub fn maxabs_normalize(
    features: &FeatureMatrix,
    stats: &ChannelStats,
) -> Result<FeatureMatrix, FeaturizeError> {
    if stats.len() != features.n_features() {
        return Err(FeaturizeError::Incompatible(format!(
            "statistics cover {} columns, features have {}",
            stats.len(),
            features.n_features()
        )));
    }
    let scale = stats.max_abs.clone();
    let mut provenance = features.provenance().clone();
    provenance.zero_columns = (0..scale.len()).filter(|&c| scale[c] == 0.0).collect();
    provenance.column_scale = Some(scale);
    apply_scale(features, provenance)
}

/// Applies the provenance's recorded column divisors.
pub(super) fn apply_scale(
    features: &FeatureMatrix,
    provenance: Provenance,
) -> Result<FeatureMatrix, FeaturizeError> {
    let scale = provenance
        .column_scale
        .as_deref()
        .ok_or_else(|| FeaturizeError::Incompatible("no column scale recorded".into()))?;
    let f = features.n_features();
    let values = features
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let m = scale[k % f];
            if m == 0.0 {
                v
            } else {
                v / m
            }
        })
        .collect();
    FeatureMatrix::new(features.n_samples(), f, values, provenance)
}
