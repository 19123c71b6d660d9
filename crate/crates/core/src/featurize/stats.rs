use serde::{Deserialize, Serialize};

use crate::ingest::ActivationSet;

use super::FeatureMatrix;

/// Per-column location and scale summaries.
///
/// For an [`ActivationSet`] a column is a channel and the statistics pool
/// every sample and spatial position of it. For a [`FeatureMatrix`] a column
/// is a feature column pooled over samples. Standard deviations are
/// population (divide-by-n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub max_abs: Vec<f64>,
    pub has_negative: Vec<bool>,
}

impl ChannelStats {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Columns whose standard deviation is exactly zero.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.std[c] == 0.0).collect()
    }

    /// Statistics of each feature column.
    pub fn of_features(features: &FeatureMatrix) -> Self {
        let f = features.n_features();
        Self::two_pass(f, |visit| {
            for row in features.rows() {
                for (c, &v) in row.iter().enumerate() {
                    visit(c, v);
                }
            }
        })
    }

    // `scan` must call `visit(column, value)` for every value, identically on
    // each invocation. A constant column gets a standard deviation of exactly 0.
    fn two_pass(columns: usize, scan: impl Fn(&mut dyn FnMut(usize, f64))) -> Self {
        let mut acc = vec![Accumulator::default(); columns];
        scan(&mut |c, v| acc[c].push(v));
        let mean: Vec<f64> = acc.iter().map(Accumulator::mean).collect();
        let mut sq = vec![0.0; columns];
        scan(&mut |c, v| sq[c] += (v - mean[c]) * (v - mean[c]));
        let std = acc
            .iter()
            .zip(&sq)
            .map(|(a, &ss)| {
                if a.count == 0 || a.min == a.max {
                    0.0
                } else {
                    (ss / a.count as f64).sqrt()
                }
            })
            .collect();
        Self {
            mean,
            std,
            max_abs: acc.iter().map(|a| a.max_abs).collect(),
            has_negative: acc.iter().map(|a| a.has_negative).collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Accumulator {
    sum: f64,
    count: usize,
    min: f64,
    max: f64,
    max_abs: f64,
    has_negative: bool,
}

impl Default for Accumulator {
    fn default() -> Self {
        Self {
            sum: 0.0,
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            max_abs: 0.0,
            has_negative: false,
        }
    }
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.max_abs = self.max_abs.max(v.abs());
        self.has_negative |= v < 0.0;
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Per-channel statistics pooled over all samples and spatial positions.
///
/// Each sample's values are visited in sorted order, so the result does not
/// depend on the spatial order within a sample.
pub fn compute_channel_stats(set: &ActivationSet) -> ChannelStats {
    let mut sorted = vec![0.0; set.spatial_elems()];
    let sorted = std::cell::RefCell::new(&mut sorted);
    ChannelStats::two_pass(set.n_channels(), |visit| {
        let mut buf = sorted.borrow_mut();
        for i in 0..set.n_samples() {
            for u in 0..set.n_channels() {
                for (b, &v) in buf.iter_mut().zip(set.channel(i, u)) {
                    *b = f64::from(v);
                }
                buf.sort_unstable_by(f64::total_cmp);
                for &v in buf.iter() {
                    visit(u, v);
                }
            }
        }
    })
}

/// Output of [`zscore_apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZScored {
    /// Same shape as the input; dropped channels are filled with zeros.
    pub set: ActivationSet,
    /// Channels with zero standard deviation.
    pub dropped_channels: Vec<usize>,
}

/// Standardizes each channel with the given statistics.
pub fn zscore_apply(set: &ActivationSet, stats: &ChannelStats) -> Result<ZScored, super::FeaturizeError> {
    if stats.len() != set.n_channels() {
        return Err(super::FeaturizeError::Incompatible(format!(
            "statistics cover {} channels, set has {}",
            stats.len(),
            set.n_channels()
        )));
    }
    let dropped_channels = stats.constant_columns();
    let mut values = Vec::with_capacity(set.values().len());
    for i in 0..set.n_samples() {
        for u in 0..set.n_channels() {
            let (mu, sigma) = (stats.mean[u], stats.std[u]);
            values.extend(set.channel(i, u).iter().map(|&a| {
                if sigma == 0.0 {
                    0.0
                } else {
                    ((f64::from(a) - mu) / sigma) as f32
                }
            }));
        }
    }
    let set = ActivationSet::new(
        set.layer_name(),
        set.n_samples(),
        set.n_channels(),
        set.spatial_elems(),
        values,
    )?;
    Ok(ZScored {
        set,
        dropped_channels,
    })
}
