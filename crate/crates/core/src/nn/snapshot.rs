//! Weight snapshots: raw little-endian `f64` values plus a JSON shape header.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ParamSet;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub order: String,
    pub shapes: Vec<(usize, usize)>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

/// Writes `<stem>.json` and `<stem>.bin`.
pub fn write_snapshot(params: &ParamSet, stem: impl AsRef<Path>) -> Result<()> {
    let (header_path, data_path) = paths(stem.as_ref());
    let header = SnapshotHeader {
        format: "f64-le".into(),
        order: "column-major".into(),
        shapes: params.shapes(),
    };
    std::fs::write(header_path, serde_json::to_vec_pretty(&header)?)?;
    let mut bytes = Vec::with_capacity(params.param_count() * 8);
    for v in params.to_flat().iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(data_path, bytes)?;
    Ok(())
}

pub fn read_snapshot(stem: impl AsRef<Path>) -> Result<ParamSet> {
    let (header_path, data_path) = paths(stem.as_ref());
    let header: SnapshotHeader = serde_json::from_slice(&std::fs::read(header_path)?)?;
    if header.format != "f64-le" || header.order != "column-major" {
        return Err(Error::Parse { offset: 0, message: "unsupported snapshot format".into() });
    }
    let bytes = std::fs::read(data_path)?;
    let expected: usize = header.shapes.iter().map(|(r, c)| r * c).sum::<usize>() * 8;
    if bytes.len() != expected {
        return Err(Error::Parse {
            offset: bytes.len().min(expected) as u64,
            message: format!("snapshot holds {} bytes, header implies {expected}", bytes.len()),
        });
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ParamSet::from_flat(&header.shapes, &nalgebra::DVector::from_vec(flat))
}
