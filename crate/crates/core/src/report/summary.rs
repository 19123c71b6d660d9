use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::hdbscan::ClusterModel;
use crate::ingest::{ColumnValues, MetadataTable};

use super::ReportError;

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64> + Clone) -> Self {
        let (mut n, mut sum) = (0usize, 0.0);
        for v in values.clone() {
            n += 1;
            sum += v;
        }
        if n == 0 {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = sum / n as f64;
        let var = values.into_iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Self {
            mean,
            std: var.sqrt(),
        }
    }

    fn render(&self, decimals: usize) -> String {
        format!("{:.*} +- {:.*}", decimals, self.mean, decimals, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnSummary {
    Numeric {
        name: String,
        stats: MeanStd,
        /// Decimal places used in the text report.
        decimals: usize,
    },
    Categorical {
        name: String,
        counts: Vec<(String, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub label: usize,
    pub size: usize,
    pub persistence: f64,
    pub probability: MeanStd,
    pub columns: Vec<ColumnSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub n_samples: usize,
    pub n_noise: usize,
    pub clusters: Vec<ClusterStats>,
}

/// Per-cluster statistics of the model's probabilities and of every
/// metadata column.
pub fn summarize(model: &ClusterModel, meta: &MetadataTable) -> Result<ClusterSummary, ReportError> {
    if meta.n_rows() != model.n_samples {
        return Err(ReportError::Misaligned(format!(
            "metadata has {} rows, model has {} samples",
            meta.n_rows(),
            model.n_samples
        )));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); model.n_clusters()];
    for (i, label) in model.labels.iter().enumerate() {
        if let Some(c) = label {
            members[*c].push(i);
        }
    }
    let clusters = model
        .clusters
        .iter()
        .zip(&members)
        .map(|(info, rows)| ClusterStats {
            label: info.label,
            size: rows.len(),
            persistence: info.persistence,
            probability: MeanStd::of(rows.iter().map(|&r| model.probabilities[r])),
            columns: meta
                .columns()
                .iter()
                .map(|col| match &col.values {
                    ColumnValues::Numeric(v) => ColumnSummary::Numeric {
                        name: col.name.clone(),
                        stats: MeanStd::of(rows.iter().map(|&r| v[r])),
                        decimals: if v.iter().all(|x| x.abs() <= 1.0) { 4 } else { 2 },
                    },
                    ColumnValues::Categorical { labels, codes } => {
                        let mut counts = vec![0; labels.len()];
                        for &r in rows {
                            counts[codes[r]] += 1;
                        }
                        ColumnSummary::Categorical {
                            name: col.name.clone(),
                            counts: labels.iter().cloned().zip(counts).collect(),
                        }
                    }
                })
                .collect(),
        })
        .collect();
    Ok(ClusterSummary {
        n_samples: model.n_samples,
        n_noise: model.n_noise(),
        clusters,
    })
}

fn field(out: &mut String, name: &str, value: &str) {
    let mut col = 8 + name.len() + 1;
    let mut tabs = String::new();
    loop {
        col = (col / 8 + 1) * 8;
        tabs.push('\t');
        if col >= 32 {
            break;
        }
    }
    writeln!(out, "\t{name}:{tabs}{value}").unwrap();
}

impl ClusterSummary {
    /// Text listing, one block per cluster.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.clusters.is_empty() {
            writeln!(out, "No clusters, {} noise samples", self.n_noise).unwrap();
            return out;
        }
        for (k, c) in self.clusters.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            writeln!(out, "Cluster #{}, {} samples", c.label, c.size).unwrap();
            field(&mut out, "Persistence score", &format!("{:.2}", c.persistence));
            field(&mut out, "Data probability", &c.probability.render(2));
            for col in &c.columns {
                match col {
                    ColumnSummary::Numeric { name, stats, decimals } => {
                        field(&mut out, name, &stats.render(*decimals))
                    }
                    ColumnSummary::Categorical { name, counts } => {
                        writeln!(out, "\t{name}:").unwrap();
                        let width = counts.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
                        for (label, n) in counts {
                            let pad = " ".repeat(width - label.chars().count());
                            writeln!(out, "\t\t\t\t{label}:{pad} {n} samples").unwrap();
                        }
                    }
                }
            }
        }
        out
    }
}
