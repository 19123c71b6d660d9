//! On-disk activation containers and per-sample metadata.
//!
//! An activation file (NAPAC v1) holds exactly one layer: the 4-byte magic
//! `NAPA`, a little-endian `u32` header length, a UTF-8 JSON header and then
//! `n_samples * n_channels * spatial_elems` little-endian `f32` values in
//! `[sample][channel][spatial]` order. Metadata lives in a separate CSV whose
//! row `i` describes sample `i`.

mod metadata;

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope;

pub use metadata::{
    read_metadata, read_metadata_with_kinds, Column, ColumnKind, ColumnValues, MetadataTable,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("bad magic: expected \"NAPA\", found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("truncated header: expected at least {expected} bytes, found {found}")]
    TruncatedHeader { expected: usize, found: usize },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("dim mismatch: {0}")]
    DimMismatch(String),
    #[error("non-finite value at ({sample},{channel},{index})")]
    NonFinite {
        sample: usize,
        channel: usize,
        index: usize,
    },
    #[error("row count mismatch: expected {expected} rows, found {found}")]
    RowCountMismatch { expected: usize, found: usize },
    #[error("unparseable numeric cell {value:?} in column {column:?} at row {row}")]
    BadNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("metadata: {0}")]
    Metadata(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Activations of one layer for `n_samples` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    layer_name: String,
    n_samples: usize,
    n_channels: usize,
    spatial_elems: usize,
    values: Vec<f32>,
}

impl ActivationSet {
    /// Builds a validated set; `values` is sample-major `[sample][channel][spatial]`.
    pub fn new(
        layer_name: impl Into<String>,
        n_samples: usize,
        n_channels: usize,
        spatial_elems: usize,
        values: Vec<f32>,
    ) -> Result<Self, IngestError> {
        if n_samples == 0 || n_channels == 0 || spatial_elems == 0 {
            return Err(IngestError::DimMismatch(format!(
                "dimensions must be positive, got {n_samples}x{n_channels}x{spatial_elems}"
            )));
        }
        let expected = n_samples
            .checked_mul(n_channels)
            .and_then(|v| v.checked_mul(spatial_elems))
            .ok_or_else(|| IngestError::DimMismatch("dimensions overflow".into()))?;
        if values.len() != expected {
            return Err(IngestError::DimMismatch(format!(
                "{n_samples}x{n_channels}x{spatial_elems} requires {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let per_sample = n_channels * spatial_elems;
            return Err(IngestError::NonFinite {
                sample: pos / per_sample,
                channel: (pos % per_sample) / spatial_elems,
                index: pos % spatial_elems,
            });
        }
        Ok(Self {
            layer_name: layer_name.into(),
            n_samples,
            n_channels,
            spatial_elems,
            values,
        })
    }

    pub fn layer_name(&self) -> &str {
        &self.layer_name
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn spatial_elems(&self) -> usize {
        self.spatial_elems
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// The `spatial_elems` values of channel `channel` for sample `sample`.
    pub fn channel(&self, sample: usize, channel: usize) -> &[f32] {
        let start = (sample * self.n_channels + channel) * self.spatial_elems;
        &self.values[start..start + self.spatial_elems]
    }

    /// All channels of one sample, channel-major.
    pub fn sample(&self, sample: usize) -> &[f32] {
        let len = self.n_channels * self.spatial_elems;
        &self.values[sample * len..(sample + 1) * len]
    }

    /// A new set holding the given samples in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self, IngestError> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_samples) {
            return Err(IngestError::DimMismatch(format!(
                "sample index {bad} out of range for {} samples",
                self.n_samples
            )));
        }
        let values = rows
            .iter()
            .flat_map(|&r| self.sample(r).iter().copied())
            .collect();
        Self::new(
            self.layer_name.clone(),
            rows.len(),
            self.n_channels,
            self.spatial_elems,
            values,
        )
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, IngestError> {
        let header = ActivationHeader {
            version: 1,
            layer: self.layer_name.clone(),
            n_samples: self.n_samples,
            n_channels: self.n_channels,
            spatial_elems: self.spatial_elems,
            dtype: DTYPE_F32.into(),
            layout: LAYOUT.into(),
        };
        envelope::encode(&header, &envelope::f32_payload(&self.values))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IngestError> {
        let (header, payload): (ActivationHeader, _) = envelope::decode(bytes)?;
        if header.version != 1 {
            return Err(IngestError::Header(format!(
                "unsupported version {}",
                header.version
            )));
        }
        if header.dtype != DTYPE_F32 {
            return Err(IngestError::Header(format!(
                "unsupported dtype {:?}",
                header.dtype
            )));
        }
        if header.layout != LAYOUT {
            return Err(IngestError::Header(format!(
                "unsupported layout {:?}",
                header.layout
            )));
        }
        let count = header
            .n_samples
            .checked_mul(header.n_channels)
            .and_then(|v| v.checked_mul(header.spatial_elems))
            .ok_or_else(|| IngestError::DimMismatch("dimensions overflow".into()))?;
        envelope::check_payload(payload, count, 4)?;
        Self::new(
            header.layer,
            header.n_samples,
            header.n_channels,
            header.spatial_elems,
            envelope::parse_f32(payload),
        )
    }
}

const DTYPE_F32: &str = "f32le";
const LAYOUT: &str = "sample-major";

#[derive(Debug, Serialize, Deserialize)]
struct ActivationHeader {
    version: u32,
    layer: String,
    n_samples: usize,
    n_channels: usize,
    spatial_elems: usize,
    dtype: String,
    layout: String,
}

pub fn read_activations(path: impl AsRef<Path>) -> Result<ActivationSet, IngestError> {
    ActivationSet::from_bytes(&envelope::read_file(path.as_ref())?)
}

pub fn write_activations(set: &ActivationSet, path: impl AsRef<Path>) -> Result<(), IngestError> {
    envelope::write_file(path.as_ref(), &set.to_bytes()?)
}
