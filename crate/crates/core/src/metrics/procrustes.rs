//! Procrustes distance between two embeddings of the same points.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Result, UmatoError};

fn normalized(m: &Array2<f64>, cols: usize) -> DMatrix<f64> {
    let (n, d) = m.dim();
    let mut out = DMatrix::zeros(n, cols);
    for j in 0..d {
        let mean = m.column(j).sum() / n as f64;
        for i in 0..n {
            out[(i, j)] = m[[i, j]] - mean;
        }
    }
    let norm = out.norm();
    if norm > 0.0 {
        out /= norm;
    }
    out
}

/// Residual after centering both sets, scaling each to unit Frobenius norm
/// and rotating (or reflecting) one onto the other.
///
/// Rows are matched by index. The result lies in `[0, sqrt(2)]` and is
/// symmetric in its arguments. Narrower inputs are zero-padded.
pub fn procrustes_distance(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(UmatoError::invalid(format!(
            "cannot align {} rows with {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.nrows() == 0 {
        return Err(UmatoError::invalid("procrustes needs at least one row"));
    }
    let cols = a.ncols().max(b.ncols());
    let x = normalized(a, cols);
    let y = normalized(b, cols);
    let svd = (x.transpose() * &y).svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let rotation = u * v_t;
    let residual = x * rotation - y;
    Ok(residual.norm())
}
