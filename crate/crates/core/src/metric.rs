//! Distances between feature rows and the dense pairwise matrix.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope;
use crate::featurize::{FeatureMatrix, Pipeline};
use crate::ingest::IngestError;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("negative density {value} at coordinate {index}")]
    NegativeInput { index: usize, value: f64 },
    #[error("jensen-shannon needs nonnegative features, but {pipeline} features contain {value} at row {row}")]
    NegativeFeatures {
        pipeline: Pipeline,
        row: usize,
        value: f64,
    },
    #[error("invalid distance matrix: {0}")]
    Invalid(String),
    #[error("unknown metric {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    /// Jensen-Shannon distance with base-2 logarithms (bounded by 1 on
    /// probability vectors).
    JensenShannon,
    /// Jensen-Shannon distance with natural logarithms.
    JensenShannonNat,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Euclidean, Metric::JensenShannon, Metric::JensenShannonNat];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::JensenShannon => "jensen-shannon",
            Metric::JensenShannonNat => "jensen-shannon-nat",
        }
    }

    /// The metric conventionally paired with a pipeline.
    pub fn default_for(pipeline: Pipeline) -> Metric {
        if pipeline == Pipeline::ProposedKde {
            Metric::JensenShannon
        } else {
            Metric::Euclidean
        }
    }

    pub fn requires_nonnegative(self) -> bool {
        self != Metric::Euclidean
    }

    pub fn distance(self, x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
        match self {
            Metric::Euclidean => euclidean_distance(x, y),
            Metric::JensenShannon => js_distance(x, y),
            Metric::JensenShannonNat => js_distance_nat(x, y),
        }
    }

    // Inputs already validated.
    fn distance_unchecked(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => euclidean_unchecked(x, y),
            Metric::JensenShannon => js_unchecked(x, y, std::f64::consts::LN_2),
            Metric::JensenShannonNat => js_unchecked(x, y, 1.0),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MetricError::Unknown(s.to_owned()))
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

fn check_nonnegative(x: &[f64]) -> Result<(), MetricError> {
    match x.iter().position(|v| v.is_nan() || *v < 0.0) {
        Some(index) => Err(MetricError::NegativeInput {
            index,
            value: x[index],
        }),
        None => Ok(()),
    }
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x, y)?;
    Ok(euclidean_unchecked(x, y))
}

fn euclidean_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Jensen-Shannon distance between two nonnegative vectors, base-2 logs.
///
/// `sqrt(0.5 * sum_k [g_k log(2 g_k / (g_k + h_k)) + h_k log(2 h_k / (g_k + h_k))])`
/// applied to the vectors as given, without renormalizing them. Zero
/// entries contribute nothing.
pub fn js_distance(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x, y)?;
    check_nonnegative(x)?;
    check_nonnegative(y)?;
    Ok(js_unchecked(x, y, std::f64::consts::LN_2))
}

/// [`js_distance`] with natural logarithms.
pub fn js_distance_nat(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x, y)?;
    check_nonnegative(x)?;
    check_nonnegative(y)?;
    Ok(js_unchecked(x, y, 1.0))
}

fn js_unchecked(x: &[f64], y: &[f64], ln_base: f64) -> f64 {
    let mut sum = 0.0;
    for (&p, &q) in x.iter().zip(y) {
        let m = p + q;
        if m == 0.0 {
            continue;
        }
        let term = |v: f64| if v > 0.0 { v * (2.0 * v / m).ln() } else { 0.0 };
        sum += term(p) + term(q);
    }
    (0.5 * (sum / ln_base).max(0.0)).sqrt()
}

/// Symmetric distance matrix with zero diagonal, stored as the row-major
/// upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    metric: Metric,
    upper: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from its row-major strict upper triangle.
    pub fn from_upper(n: usize, metric: Metric, upper: Vec<f64>) -> Result<Self, MetricError> {
        let expected = n * n.saturating_sub(1) / 2;
        if upper.len() != expected {
            return Err(MetricError::Invalid(format!(
                "{n} points need {expected} upper-triangle entries, got {}",
                upper.len()
            )));
        }
        if let Some(bad) = upper.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(MetricError::Invalid(format!("entry {bad} is not a finite nonnegative distance")));
        }
        Ok(Self { n, metric, upper })
    }

    /// Builds a matrix by evaluating `f(i, j)` for every `i < j`.
    pub fn from_fn(
        n: usize,
        metric: Metric,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self, MetricError> {
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                upper.push(f(i, j));
            }
        }
        Self::from_upper(n, metric, upper)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => 0.0,
            Ordering::Less => self.upper[upper_index(self.n, i, j)],
            Ordering::Greater => self.upper[upper_index(self.n, j, i)],
        }
    }

    /// Row `i` including the zero diagonal.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    /// Every entry multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, MetricError> {
        Self::from_upper(
            self.n,
            self.metric,
            self.upper.iter().map(|v| v * factor).collect(),
        )
    }

    /// NAPAC-D: the NAPA envelope with an `f32le` upper-triangle payload.
    pub fn to_bytes(&self) -> Result<Vec<u8>, MetricError> {
        let header = DistanceHeader {
            version: 1,
            kind: "distances".into(),
            n: self.n,
            metric: self.metric,
            dtype: "f32le".into(),
            layout: "upper-triangle-row-major".into(),
        };
        let narrowed: Vec<f32> = self.upper.iter().map(|&v| v as f32).collect();
        Ok(envelope::encode(&header, &envelope::f32_payload(&narrowed))?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MetricError> {
        let (header, payload): (DistanceHeader, _) = envelope::decode(bytes)?;
        if header.version != 1 || header.kind != "distances" || header.dtype != "f32le" {
            return Err(IngestError::Header("expected a version 1 f32le distances header".into()).into());
        }
        let count = header.n * header.n.saturating_sub(1) / 2;
        envelope::check_payload(payload, count, 4)?;
        let upper = envelope::parse_f32(payload).into_iter().map(f64::from).collect();
        Self::from_upper(header.n, header.metric, upper)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DistanceHeader {
    version: u32,
    kind: String,
    n: usize,
    metric: Metric,
    dtype: String,
    layout: String,
}

#[inline]
fn upper_index(n: usize, i: usize, j: usize) -> usize {
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn write_distances(d: &DistanceMatrix, path: impl AsRef<Path>) -> Result<(), MetricError> {
    Ok(envelope::write_file(path.as_ref(), &d.to_bytes()?)?)
}

pub fn read_distances(path: impl AsRef<Path>) -> Result<DistanceMatrix, MetricError> {
    DistanceMatrix::from_bytes(&envelope::read_file(path.as_ref())?)
}

/// Distances between every pair of rows. Rows are processed in parallel;
/// each writes its own slice of the upper triangle, so the result does not
/// depend on scheduling.
pub fn pairwise_matrix(features: &FeatureMatrix, metric: Metric) -> Result<DistanceMatrix, MetricError> {
    if metric.requires_nonnegative() {
        for (row, values) in features.rows().enumerate() {
            if let Some(&value) = values.iter().find(|v| **v < 0.0) {
                return Err(MetricError::NegativeFeatures {
                    pipeline: features.provenance().pipeline,
                    row,
                    value,
                });
            }
        }
    }
    let n = features.n_samples();
    let mut upper = vec![0.0; n * n.saturating_sub(1) / 2];
    let mut slices = Vec::with_capacity(n);
    let mut rest = upper.as_mut_slice();
    for i in 0..n {
        let (head, tail) = rest.split_at_mut(n - 1 - i);
        slices.push((i, head));
        rest = tail;
    }
    slices.into_par_iter().for_each(|(i, out)| {
        let xi = features.row(i);
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = metric.distance_unchecked(xi, features.row(i + 1 + k));
        }
    });
    DistanceMatrix::from_upper(n, metric, upper)
}

/// Distances from `x` to every row of `features`.
pub fn distances_to_rows(
    x: &[f64],
    features: &FeatureMatrix,
    metric: Metric,
) -> Result<Vec<f64>, MetricError> {
    check_lengths(x, features.row(0))?;
    if metric.requires_nonnegative() {
        check_nonnegative(x)?;
    }
    Ok(features.rows().map(|r| metric.distance_unchecked(x, r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::Provenance;
    use crate::ingest::ActivationSet;

    fn matrix(rows: &[&[f64]], pipeline: Pipeline) -> FeatureMatrix {
        let f = rows[0].len();
        let set = ActivationSet::new("l", rows.len(), 1, 1, vec![0.0; rows.len()]).unwrap();
        FeatureMatrix::new(rows.len(), f, rows.concat(), Provenance::new(pipeline, &set)).unwrap()
    }

    // Direct transcription of the formula with base-2 logs, no shortcuts.
    fn js_oracle(x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..x.len() {
            let (a, b) = (x[k], y[k]);
            if a > 0.0 {
                s += a * (2.0 * a / (a + b)).log2();
            }
            if b > 0.0 {
                s += b * (2.0 * b / (a + b)).log2();
            }
        }
        (1.0 / 2f64.sqrt()) * s.sqrt()
    }

    #[test]
    fn js_identical_is_zero() {
        assert_eq!(js_distance(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn js_disjoint_is_one() {
        assert!((js_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn js_half_vs_point_mass() {
        let d = js_distance(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((d - js_oracle(&[0.5, 0.5], &[1.0, 0.0])).abs() < 1e-15);
        assert!((d - 0.5579).abs() < 1e-4);
    }

    #[test]
    fn js_does_not_renormalize() {
        let d = js_distance(&[2.0, 0.0], &[0.0, 2.0]).unwrap();
        assert!((d - js_oracle(&[2.0, 0.0], &[0.0, 2.0])).abs() < 1e-15);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn js_natural_base_bound() {
        let d = js_distance_nat(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - std::f64::consts::LN_2.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn js_rejects_bad_input() {
        assert!(matches!(
            js_distance(&[1.0], &[0.5, 0.5]),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert!(matches!(
            js_distance(&[-0.1, 1.1], &[0.5, 0.5]),
            Err(MetricError::NegativeInput { index: 0, .. })
        ));
    }

    #[test]
    fn euclidean_values() {
        assert_eq!(euclidean_distance(&[0., 0.], &[3., 4.]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.], &[-1.]).unwrap(), 2.0);
        assert_eq!(euclidean_distance(&[1., 2.], &[1., 2.]).unwrap(), 0.0);
        assert!(euclidean_distance(&[1.], &[1., 2.]).is_err());
    }

    #[test]
    fn one_sample_matrix_is_empty() {
        let d = pairwise_matrix(&matrix(&[&[1.0, 2.0]], Pipeline::Raw), Metric::Euclidean).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.get(0, 0), 0.0);
        assert!(d.upper().is_empty());
    }

    #[test]
    fn matrix_agrees_with_scalar_calls() {
        let rows: [&[f64]; 3] = [&[0.1, 0.9, 0.0], &[0.5, 0.25, 0.25], &[0.0, 0.0, 1.0]];
        let f = matrix(&rows, Pipeline::ProposedKde);
        let d = pairwise_matrix(&f, Metric::JensenShannon).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { js_oracle(rows[i], rows[j]) };
                assert!((d.get(i, j) - expected).abs() < 1e-15, "({i},{j})");
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn permuting_rows_permutes_matrix() {
        let rows: [&[f64]; 4] = [&[0.0, 1.0], &[2.0, 0.5], &[-1.0, 3.0], &[4.0, 4.0]];
        let perm = [2, 0, 3, 1];
        let permuted: Vec<&[f64]> = perm.iter().map(|&p| rows[p]).collect();
        let d = pairwise_matrix(&matrix(&rows, Pipeline::Raw), Metric::Euclidean).unwrap();
        let dp = pairwise_matrix(&matrix(&permuted, Pipeline::Raw), Metric::Euclidean).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(dp.get(i, j), d.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn js_on_negative_features_names_the_pipeline() {
        let f = matrix(&[&[0.5, -0.5], &[0.1, 0.1]], Pipeline::BaselineMean);
        let err = pairwise_matrix(&f, Metric::JensenShannon).unwrap_err();
        assert!(err.to_string().contains("baseline-mean"), "{err}");
    }

    #[test]
    fn napac_d_round_trip_at_f32_precision() {
        let f = matrix(&[&[0.0], &[1.0], &[3.5]], Pipeline::Raw);
        let d = pairwise_matrix(&f, Metric::Euclidean).unwrap();
        let back = DistanceMatrix::from_bytes(&d.to_bytes().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        assert_eq!(Metric::default_for(Pipeline::ProposedKde), Metric::JensenShannon);
        assert_eq!(Metric::default_for(Pipeline::Raw), Metric::Euclidean);
    }
}
