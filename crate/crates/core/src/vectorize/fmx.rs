//! FMX1 matrix files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "FMX1"            4 bytes magic
//! version           u32 (= 1)
//! n_rows, n_cols    u64, u64
//! nnz               u64
//! row_ptr           (n_rows + 1) × u64
//! col_idx           nnz × u32
//! values            nnz × f32
//! ```
//!
//! The feature registry travels in a sidecar `<stem>.registry.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FeatureRegistry, RegistryEntry, SparseMatrix, VectorizeError};

pub const MAGIC: &[u8; 4] = b"FMX1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 * 3;

pub fn encode_fmx(m: &SparseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.row_ptr().len() * 8 + m.nnz() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.n_rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.n_cols() as u64).to_le_bytes());
    out.extend_from_slice(&(m.nnz() as u64).to_le_bytes());
    for &p in m.row_ptr() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    for &c in m.col_idx() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for &v in m.values() {
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], VectorizeError> {
        let end = self.pos.checked_add(n).ok_or(VectorizeError::Truncated)?;
        if end > self.buf.len() {
            return Err(VectorizeError::Truncated);
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, VectorizeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, VectorizeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_fmx(buf: &[u8]) -> Result<SparseMatrix, VectorizeError> {
    if buf.len() < 4 {
        return Err(VectorizeError::Truncated);
    }
    if &buf[..4] != MAGIC {
        return Err(VectorizeError::BadMagic);
    }
    let mut r = Reader { buf, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(VectorizeError::UnsupportedVersion(version));
    }
    let n_rows = r.u64()? as usize;
    let n_cols = r.u64()? as usize;
    let nnz = r.u64()? as usize;
    // Size check before allocating anything proportional to header fields.
    let need = (n_rows as u128 + 1) * 8 + nnz as u128 * 8;
    if need > (buf.len() - r.pos) as u128 {
        return Err(VectorizeError::Truncated);
    }
    let row_ptr = (0..=n_rows).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    let col_idx = (0..nnz).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let values = (0..nnz)
        .map(|_| r.u32().map(f32::from_bits))
        .collect::<Result<Vec<_>, _>>()?;
    if r.pos != buf.len() {
        return Err(VectorizeError::Corrupt(format!(
            "{} trailing bytes",
            buf.len() - r.pos
        )));
    }
    SparseMatrix::from_parts(n_rows, n_cols, row_ptr, col_idx, values)
}

/// `dir/features.fmx` -> `dir/features.registry.json`.
pub fn registry_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.registry.json"))
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    schema_version: u32,
    n_cols: usize,
    entries: Vec<RegistryEntry>,
}

pub fn encode_registry(registry: &FeatureRegistry) -> String {
    let file = RegistryFile {
        schema_version: crate::SCHEMA_VERSION,
        n_cols: registry.len(),
        entries: registry.entries.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("registry serializes");
    s.push('\n');
    s
}

pub fn decode_registry(text: &str) -> Result<FeatureRegistry, VectorizeError> {
    let file: RegistryFile =
        serde_json::from_str(text).map_err(|e| VectorizeError::Registry(e.to_string()))?;
    if file.n_cols != file.entries.len() {
        return Err(VectorizeError::Registry(format!(
            "n_cols {} but {} entries",
            file.n_cols,
            file.entries.len()
        )));
    }
    let reg = FeatureRegistry {
        entries: file.entries,
    };
    reg.validate()?;
    Ok(reg)
}

fn io_err(path: &Path, source: std::io::Error) -> VectorizeError {
    VectorizeError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write the matrix and its registry sidecar.
pub fn save_matrix(
    path: impl AsRef<Path>,
    m: &SparseMatrix,
    registry: &FeatureRegistry,
) -> Result<(), VectorizeError> {
    let path = path.as_ref();
    if registry.len() != m.n_cols() {
        return Err(VectorizeError::Registry(format!(
            "registry has {} entries for {} columns",
            registry.len(),
            m.n_cols()
        )));
    }
    fs::write(path, encode_fmx(m)).map_err(|e| io_err(path, e))?;
    let side = registry_path(path);
    fs::write(&side, encode_registry(registry)).map_err(|e| io_err(&side, e))?;
    Ok(())
}

pub fn read_fmx(path: impl AsRef<Path>) -> Result<SparseMatrix, VectorizeError> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| io_err(path, e))?;
    decode_fmx(&buf)
}

/// Read the matrix and its registry sidecar; widths must agree.
pub fn load_matrix(
    path: impl AsRef<Path>,
) -> Result<(SparseMatrix, FeatureRegistry), VectorizeError> {
    let path = path.as_ref();
    let m = read_fmx(path)?;
    let side = registry_path(path);
    let text = fs::read_to_string(&side).map_err(|e| io_err(&side, e))?;
    let reg = decode_registry(&text)?;
    if reg.len() != m.n_cols() {
        return Err(VectorizeError::Registry(format!(
            "registry has {} entries for {} columns",
            reg.len(),
            m.n_cols()
        )));
    }
    Ok((m, reg))
}
