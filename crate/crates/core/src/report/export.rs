use std::path::Path;

use crate::featurize::FeatureMatrix;
use crate::hdbscan::ClusterModel;
use crate::ingest::MetadataTable;

use super::{label_text, ReportError};

/// Writes one CSV row per sample: `sample_index`, the features `f0..`,
/// `label`, `probability`, then every metadata column.
pub fn export_labeled_features(
    model: &ClusterModel,
    features: &FeatureMatrix,
    meta: &MetadataTable,
    path: impl AsRef<Path>,
) -> Result<(), ReportError> {
    let n = model.n_samples;
    if features.n_samples() != n || meta.n_rows() != n {
        return Err(ReportError::Misaligned(format!(
            "model has {n} samples, features {}, metadata {}",
            features.n_samples(),
            meta.n_rows()
        )));
    }
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["sample_index".to_owned()];
    header.extend((0..features.n_features()).map(|j| format!("f{j}")));
    header.push("label".into());
    header.push("probability".into());
    header.extend(meta.columns().iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for (i, row) in features.rows().enumerate() {
        let mut record = Vec::with_capacity(header.len());
        record.push(i.to_string());
        record.extend(row.iter().map(f64::to_string));
        record.push(label_text(model.labels[i]));
        record.push(model.probabilities[i].to_string());
        record.extend(meta.columns().iter().map(|c| c.cell(i)));
        w.write_record(&record)?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}
