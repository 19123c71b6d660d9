//! The shared NAPA binary envelope: magic, header length, JSON header,
//! little-endian payload.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::ingest::IngestError;

pub(crate) const MAGIC: &[u8; 4] = b"NAPA";

pub(crate) fn encode<H: Serialize>(header: &H, payload: &[u8]) -> Result<Vec<u8>, IngestError> {
    let header = serde_json::to_vec(header).map_err(|e| IngestError::Header(e.to_string()))?;
    let header_len =
        u32::try_from(header.len()).map_err(|_| IngestError::Header("header too large".into()))?;
    let mut out = Vec::with_capacity(8 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(payload);
    Ok(out)
}

/// Splits an envelope into its parsed header and the raw payload bytes.
pub(crate) fn decode<H: DeserializeOwned>(bytes: &[u8]) -> Result<(H, &[u8]), IngestError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        let found = bytes[..bytes.len().min(4)].to_vec();
        return Err(IngestError::BadMagic { found });
    }
    if bytes.len() < 8 {
        return Err(IngestError::TruncatedHeader {
            expected: 8,
            found: bytes.len(),
        });
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice")) as usize;
    let header_end = 8 + header_len;
    if bytes.len() < header_end {
        return Err(IngestError::TruncatedHeader {
            expected: header_end,
            found: bytes.len(),
        });
    }
    let header = serde_json::from_slice(&bytes[8..header_end])
        .map_err(|e| IngestError::Header(e.to_string()))?;
    Ok((header, &bytes[header_end..]))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let io_err = |source: io::Error| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.flush().map_err(io_err)
}

/// Checks that the payload holds exactly `count` values of `width` bytes.
pub(crate) fn check_payload(payload: &[u8], count: usize, width: usize) -> Result<(), IngestError> {
    let expected = count
        .checked_mul(width)
        .ok_or_else(|| IngestError::DimMismatch("dimensions overflow".into()))?;
    if payload.len() < expected {
        return Err(IngestError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(IngestError::DimMismatch(format!(
            "header dimensions imply {expected} payload bytes but {} are present",
            payload.len()
        )));
    }
    Ok(())
}

pub(crate) fn f32_payload(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub(crate) fn f64_payload(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub(crate) fn parse_f32(payload: &[u8]) -> Vec<f32> {
    payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect()
}

pub(crate) fn parse_f64(payload: &[u8]) -> Vec<f64> {
    payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect()
}
