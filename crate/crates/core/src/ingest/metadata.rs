use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    /// `codes[i]` indexes into `labels`; the label set may contain labels no
    /// row uses.
    Categorical { labels: Vec<String>, codes: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self.values {
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
            ColumnValues::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    fn len(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical { codes, .. } => codes.len(),
        }
    }

    /// Cell `row` rendered as text.
    pub fn cell(&self, row: usize) -> String {
        match &self.values {
            ColumnValues::Numeric(v) => v[row].to_string(),
            ColumnValues::Categorical { labels, codes } => labels[codes[row]].clone(),
        }
    }
}

/// Per-sample named columns; row `i` describes sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataTable {
    n_rows: usize,
    columns: Vec<Column>,
}

impl MetadataTable {
    pub fn new(n_rows: usize) -> Self {
        Self {
            n_rows,
            columns: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn push_numeric(
        &mut self,
        name: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<(), IngestError> {
        let name = name.into();
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::BadNumeric {
                column: name,
                row,
                value: values[row].to_string(),
            });
        }
        self.push(Column {
            name,
            values: ColumnValues::Numeric(values),
        })
    }

    /// Adds a categorical column with an explicit label set.
    pub fn push_categorical(
        &mut self,
        name: impl Into<String>,
        labels: Vec<String>,
        codes: Vec<usize>,
    ) -> Result<(), IngestError> {
        let name = name.into();
        if let Some(&bad) = codes.iter().find(|&&c| c >= labels.len()) {
            return Err(IngestError::Metadata(format!(
                "column {name:?}: code {bad} outside label set of {}",
                labels.len()
            )));
        }
        self.push(Column {
            name,
            values: ColumnValues::Categorical { labels, codes },
        })
    }

    fn push(&mut self, column: Column) -> Result<(), IngestError> {
        if column.len() != self.n_rows {
            return Err(IngestError::RowCountMismatch {
                expected: self.n_rows,
                found: column.len(),
            });
        }
        if self.column(&column.name).is_some() {
            return Err(IngestError::Metadata(format!(
                "duplicate column {:?}",
                column.name
            )));
        }
        self.columns.push(column);
        Ok(())
    }

    /// Rows in the given order; categorical label sets are kept whole.
    pub fn subset(&self, rows: &[usize]) -> Result<Self, IngestError> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(IngestError::Metadata(format!(
                "row {bad} out of range for {} rows",
                self.n_rows
            )));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: match &c.values {
                    ColumnValues::Numeric(v) => {
                        ColumnValues::Numeric(rows.iter().map(|&r| v[r]).collect())
                    }
                    ColumnValues::Categorical { labels, codes } => ColumnValues::Categorical {
                        labels: labels.clone(),
                        codes: rows.iter().map(|&r| codes[r]).collect(),
                    },
                },
            })
            .collect();
        Ok(Self {
            n_rows: rows.len(),
            columns,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), IngestError> {
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        writer.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.n_rows {
            writer.write_record(self.columns.iter().map(|c| c.cell(row)))?;
        }
        writer.flush().map_err(|source| IngestError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })
    }
}

/// Reads a CSV with a header row. A column whose every cell parses as a
/// finite number is numeric; anything else is categorical with the sorted
/// set of observed values as its labels.
pub fn read_metadata(
    path: impl AsRef<Path>,
    expected_rows: usize,
) -> Result<MetadataTable, IngestError> {
    read_metadata_with_kinds(path, expected_rows, &[])
}

/// Like [`read_metadata`], but columns named in `declared` take the given
/// kind and a declared-numeric column with an unparseable cell is an error.
pub fn read_metadata_with_kinds(
    path: impl AsRef<Path>,
    expected_rows: usize,
    declared: &[(&str, ColumnKind)],
) -> Result<MetadataTable, IngestError> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let names: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record?;
        for (col, cell) in cells.iter_mut().zip(record.iter()) {
            col.push(cell.to_owned());
        }
    }
    let found = cells.first().map_or(0, Vec::len);
    if found != expected_rows {
        return Err(IngestError::RowCountMismatch {
            expected: expected_rows,
            found,
        });
    }

    let mut table = MetadataTable::new(expected_rows);
    for (name, raw) in names.into_iter().zip(cells) {
        let declared_kind = declared
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, k)| k);
        let parsed: Vec<Option<f64>> = raw
            .iter()
            .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        let kind = declared_kind.unwrap_or(if parsed.iter().all(Option::is_some) {
            ColumnKind::Numeric
        } else {
            ColumnKind::Categorical
        });
        match kind {
            ColumnKind::Numeric => {
                if let Some(row) = parsed.iter().position(Option::is_none) {
                    return Err(IngestError::BadNumeric {
                        column: name,
                        row,
                        value: raw[row].clone(),
                    });
                }
                table.push_numeric(name, parsed.into_iter().flatten().collect())?;
            }
            ColumnKind::Categorical => {
                let labels: Vec<String> = raw
                    .iter()
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let codes = raw
                    .iter()
                    .map(|s| labels.binary_search(s).expect("label collected above"))
                    .collect();
                table.push_categorical(name, labels, codes)?;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn csv_file(contents: &str) -> tempfile::NamedTempFile {
        let file = tempfile::NamedTempFile::new().unwrap();
        fs::write(file.path(), contents).unwrap();
        file
    }

    #[test]
    fn numeric_column_is_inferred() {
        let file = csv_file("snr\n-5\n0\n5\n");
        let table = read_metadata(file.path(), 3).unwrap();
        assert_eq!(
            table.column("snr").unwrap().values,
            ColumnValues::Numeric(vec![-5.0, 0.0, 5.0])
        );
    }

    #[test]
    fn row_count_mismatch_is_rejected() {
        let file = csv_file("snr\n-5\n0\n");
        let err = read_metadata(file.path(), 3).unwrap_err();
        assert!(err.to_string().contains("row count mismatch"), "{err}");
    }

    #[test]
    fn channel_models_are_categorical() {
        let file = csv_file("channel_model,snr\nCDL-E,1\nCDL-A,2\nCDL-A,3\n");
        let table = read_metadata(file.path(), 3).unwrap();
        let column = table.column("channel_model").unwrap();
        assert_eq!(column.kind(), ColumnKind::Categorical);
        match &column.values {
            ColumnValues::Categorical { labels, codes } => {
                assert_eq!(labels, &["CDL-A", "CDL-E"]);
                assert_eq!(codes, &[1, 0, 0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn declared_numeric_column_rejects_text() {
        let file = csv_file("ber\n0.1\nn/a\n");
        let err = read_metadata_with_kinds(file.path(), 2, &[("ber", ColumnKind::Numeric)])
            .unwrap_err();
        assert!(matches!(err, IngestError::BadNumeric { row: 1, .. }), "{err}");
    }

    #[test]
    fn non_finite_text_makes_a_column_categorical() {
        let file = csv_file("x\n1\ninf\n");
        let table = read_metadata(file.path(), 2).unwrap();
        assert_eq!(table.columns()[0].kind(), ColumnKind::Categorical);
    }

    #[test]
    fn csv_round_trip_keeps_values() {
        let mut table = MetadataTable::new(2);
        table.push_numeric("latent", vec![-10.0, 0.1]).unwrap();
        table
            .push_categorical("blob_id", vec!["blob_0".into(), "blob_1".into()], vec![1, 0])
            .unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        table.write_csv(file.path()).unwrap();
        assert_eq!(read_metadata(file.path(), 2).unwrap(), table);
    }
}
