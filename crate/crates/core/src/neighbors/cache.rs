//! Binary on-disk kNN cache.
//!
//! Layout: magic `KNN1`, little-endian `u32` N and k, then `N * k` `u32`
//! indices and `N * k` `f64` distances, both row-major.

use std::fs;
use std::path::Path;

use super::KnnIndex;
use crate::error::{Result, UmatoError};

const MAGIC: &[u8; 4] = b"KNN1";

pub fn write_knn_cache(knn: &KnnIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (n, k) = (knn.n_points(), knn.k());
    if knn.rows().any(|(row, _)| row.len() != k) {
        return Err(UmatoError::invalid("only full-width indices can be cached"));
    }
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| UmatoError::invalid(format!("{v} does not fit in u32")))
    };
    let mut buf = Vec::with_capacity(12 + n * k * 12);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&to_u32(n)?.to_le_bytes());
    buf.extend_from_slice(&to_u32(k)?.to_le_bytes());
    for (row, _) in knn.rows() {
        for &j in row {
            buf.extend_from_slice(&to_u32(j)?.to_le_bytes());
        }
    }
    for (_, dist) in knn.rows() {
        for &d in dist {
            buf.extend_from_slice(&d.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| UmatoError::io(path, e))
}

pub fn read_knn_cache(path: impl AsRef<Path>) -> Result<KnnIndex> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| UmatoError::io(path, e))?;
    let bad = |msg: &str| UmatoError::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(bad("not a KNN1 cache"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (n, k) = (word(4), word(8));
    if bytes.len() != 12 + n * k * 12 {
        return Err(bad("truncated or oversized cache"));
    }
    let idx_base = 12;
    let dist_base = 12 + n * k * 4;
    let mut indices = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    for i in 0..n {
        indices.push((0..k).map(|c| word(idx_base + (i * k + c) * 4)).collect());
        distances.push(
            (0..k)
                .map(|c| {
                    let at = dist_base + (i * k + c) * 8;
                    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
                })
                .collect(),
        );
    }
    KnnIndex::from_rows(indices, distances, k).map_err(|e| bad(&e.to_string()))
}
