//! The TTSF feature-table container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "TTSF" | u32 version = 1 | u32 rows | u32 dims | u8 mode | u16 id_len | id bytes (UTF-8) | rows*dims f32
//! ```
//!
//! Values are stored row-major as IEEE-754 binary32. Mode 0 is a scalar
//! feature (dims must be 1), mode 1 a vector feature.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

pub const MAGIC: &[u8; 4] = b"TTSF";
pub const VERSION: u32 = 1;

const HEADER_FIXED: usize = 4 + 4 + 4 + 4 + 1 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Scalar,
    Vector,
}

impl FeatureMode {
    fn to_byte(self) -> u8 {
        match self {
            FeatureMode::Scalar => 0,
            FeatureMode::Vector => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(FeatureMode::Scalar),
            1 => Some(FeatureMode::Vector),
            _ => None,
        }
    }
}

/// An `rows x dims` matrix of feature values for one dataset under one
/// feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    feature_id: String,
    mode: FeatureMode,
    rows: usize,
    dims: usize,
    data: Vec<f32>,
}

impl FeatureTable {
    /// Builds a table from row-major `data`; the row count is inferred.
    pub fn new(
        feature_id: impl Into<String>,
        mode: FeatureMode,
        dims: usize,
        data: Vec<f32>,
    ) -> Result<Self, DataError> {
        let feature_id = feature_id.into();
        if dims == 0 {
            return Err(DataError::InvalidTable("dims must be at least 1".into()));
        }
        if mode == FeatureMode::Scalar && dims != 1 {
            return Err(DataError::InvalidTable(format!(
                "scalar feature `{feature_id}` must have dims = 1, got {dims}"
            )));
        }
        if data.is_empty() || data.len() % dims != 0 {
            return Err(DataError::InvalidTable(format!(
                "{} values do not form a non-empty matrix with {dims} columns",
                data.len()
            )));
        }
        if feature_id.len() > u16::MAX as usize {
            return Err(DataError::InvalidTable("feature id longer than 65535 bytes".into()));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonfiniteValue { index });
        }
        let rows = data.len() / dims;
        if u32::try_from(rows).is_err() || u32::try_from(dims).is_err() {
            return Err(DataError::InvalidTable("table too large for the TTSF header".into()));
        }
        Ok(Self { feature_id, mode, rows, dims, data })
    }

    /// A scalar table from f64 values, narrowed to the f32 storage precision.
    pub fn scalar(feature_id: impl Into<String>, values: &[f64]) -> Result<Self, DataError> {
        Self::new(
            feature_id,
            FeatureMode::Scalar,
            1,
            values.iter().map(|&v| v as f32).collect(),
        )
    }

    /// A vector table from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(
        feature_id: impl Into<String>,
        rows: &[R],
    ) -> Result<Self, DataError> {
        let dims = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != dims) {
            return Err(DataError::InvalidTable("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().map(|&v| v as f32))
            .collect();
        Self::new(feature_id, FeatureMode::Vector, dims, data)
    }

    pub fn feature_id(&self) -> &str {
        &self.feature_id
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dims)
    }

    /// Widened copy of every value, row-major.
    pub fn values_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    /// A new table holding the selected rows, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, DataError> {
        let mut data = Vec::with_capacity(indices.len() * self.dims);
        for &i in indices {
            if i >= self.rows {
                return Err(DataError::InvalidTable(format!("row {i} out of range")));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.feature_id.clone(), self.mode, self.dims, data)
    }

    /// Stacks tables with matching id, mode and width.
    pub fn concat<'a, I>(tables: I) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = &'a FeatureTable>,
    {
        let mut iter = tables.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| DataError::InvalidTable("nothing to concatenate".into()))?;
        let mut data = first.data.clone();
        for t in iter {
            if t.feature_id != first.feature_id || t.mode != first.mode || t.dims != first.dims {
                return Err(DataError::InvalidTable(format!(
                    "cannot stack `{}` ({:?}, d={}) onto `{}` ({:?}, d={})",
                    t.feature_id, t.mode, t.dims, first.feature_id, first.mode, first.dims
                )));
            }
            data.extend_from_slice(&t.data);
        }
        Self::new(first.feature_id.clone(), first.mode, first.dims, data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let id = self.feature_id.as_bytes();
        let mut out = Vec::with_capacity(HEADER_FIXED + id.len() + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dims as u32).to_le_bytes());
        out.push(self.mode.to_byte());
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DataError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(DataError::BadMagic);
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(DataError::UnsupportedVersion(version));
        }
        let rows = cur.u32()? as usize;
        let dims = cur.u32()? as usize;
        let mode_byte = cur.take(1)?[0];
        let mode = FeatureMode::from_byte(mode_byte)
            .ok_or_else(|| DataError::InvalidTable(format!("unknown mode byte {mode_byte}")))?;
        let id_len = u16::from_le_bytes(cur.take(2)?.try_into().unwrap()) as usize;
        let feature_id = std::str::from_utf8(cur.take(id_len)?)
            .map_err(|_| DataError::InvalidTable("feature id is not UTF-8".into()))?
            .to_owned();

        let expected = rows as u64 * dims as u64;
        let payload = &bytes[cur.pos..];
        let available = payload.len() as u64 / 4;
        if expected > available {
            return Err(DataError::TruncatedData { expected, found: available });
        }
        if expected < available || payload.len() % 4 != 0 {
            return Err(DataError::InvalidTable(format!(
                "{} trailing bytes after declared payload",
                payload.len() - expected as usize * 4
            )));
        }
        if rows == 0 {
            return Err(DataError::InvalidTable("table has no rows".into()));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(feature_id, mode, dims, data)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| DataError::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DataError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            // A header that stops early is reported the same way as a short payload.
            return Err(DataError::TruncatedData {
                expected: end as u64,
                found: self.bytes.len() as u64,
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, DataError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
