//! Small stable content digests (64-bit FNV-1a) used to tag outputs.

use ndarray::Array2;

pub fn fnv1a64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in bytes {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Digest of a matrix's shape and exact bit patterns, as 16 hex digits.
pub fn matrix_digest(m: &Array2<f64>) -> String {
    let shape = [m.nrows() as u64, m.ncols() as u64];
    let bytes = shape
        .into_iter()
        .flat_map(u64::to_le_bytes)
        .chain(m.iter().flat_map(|v| v.to_bits().to_le_bytes()));
    format!("{:016x}", fnv1a64(bytes))
}
