//! Exact (no sampling) cross-entropy optimization over the hub layout.

use ndarray::Array2;
use rayon::prelude::*;

use super::curve::{pair_cross_entropy, CurveParams};
use super::GRAD_CLIP;
use crate::dataset::Dataset;
use crate::error::{Result, UmatoError};
use crate::neighbors::{compute_rho_sigma, fuzzy_weights, knn_exact};

/// Dense symmetric membership matrix among `hubs`.
///
/// Memberships are rebuilt from a kNN graph over the hubs alone with
/// `min(k, |hubs| - 1)` neighbors; non-neighbor pairs get weight 0.
pub fn hub_weights(data: &Dataset, hubs: &[usize], k: usize) -> Result<Array2<f64>> {
    let m = hubs.len();
    let mut v = Array2::zeros((m, m));
    if m < 2 {
        return Ok(v);
    }
    let hub_data = data.subset(hubs)?;
    let knn = knn_exact(&hub_data, k.min(m - 1))?;
    let (rho, sigma) = compute_rho_sigma(&knn);
    let graph = fuzzy_weights(&knn, &rho, &sigma)?;
    for e in graph.edges() {
        v[[e.i, e.j]] = e.weight;
        v[[e.j, e.i]] = e.weight;
    }
    Ok(v)
}

/// Cross-entropy summed over ordered pairs `i != j`.
pub fn ce_loss(y: &Array2<f64>, v: &Array2<f64>, curve: CurveParams) -> f64 {
    let m = y.nrows();
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let sq = sq_row_dist(y, i, j);
            total += 2.0 * pair_cross_entropy(v[[i, j]], curve.similarity_sq(sq));
        }
    }
    total
}

#[inline]
fn sq_row_dist(y: &Array2<f64>, i: usize, j: usize) -> f64 {
    y.row(i)
        .iter()
        .zip(y.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Coefficient `c` with `dCE_ij/dy_i = c * (y_i - y_j)` for one pair.
///
/// The attractive part is weighted by `v`, the repulsive part by `1 - v`;
/// `epsilon` regularizes the repulsive denominator (0 gives the exact gradient).
#[inline]
pub fn pair_gradient_coeff(sq_dist: f64, v: f64, curve: CurveParams, epsilon: f64) -> f64 {
    let CurveParams { a, b } = curve;
    let db = sq_dist.powf(b);
    let denom = 1.0 + a * db;
    let attract = 2.0 * a * b * sq_dist.powf(b - 1.0) / denom * v;
    let repulse = 2.0 * b / ((epsilon + sq_dist) * denom) * (1.0 - v);
    attract - repulse
}

/// Gradient of [`ce_loss`] with respect to every coordinate.
pub fn ce_gradient(y: &Array2<f64>, v: &Array2<f64>, curve: CurveParams, epsilon: f64) -> Array2<f64> {
    loss_and_gradient(y, v, curve, epsilon).1
}

/// Fixed number of row blocks; results depend on this, not on thread count.
const GRADIENT_BLOCKS: usize = 32;

/// Splits rows `0..m` into contiguous blocks holding roughly equal numbers
/// of upper-triangle pairs.
fn triangle_blocks(m: usize) -> Vec<(usize, usize)> {
    let total = m * m.saturating_sub(1) / 2;
    let per_block = total.div_ceil(GRADIENT_BLOCKS).max(1);
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut acc = 0;
    for i in 0..m {
        acc += m - 1 - i;
        if acc >= per_block || i + 1 == m {
            blocks.push((start, i + 1));
            start = i + 1;
            acc = 0;
        }
    }
    blocks
}

/// Exact loss and gradient, visiting each unordered pair once. Blocks of
/// rows write into private buffers that are summed in block order, so the
/// result does not depend on the number of threads.
fn loss_and_gradient(y: &Array2<f64>, v: &Array2<f64>, curve: CurveParams, epsilon: f64) -> (f64, Array2<f64>) {
    let (m, d) = y.dim();
    let flat = y.as_standard_layout();
    let coords = flat.as_slice().expect("standard layout");
    let partials: Vec<(f64, Vec<f64>)> = triangle_blocks(m)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut g = vec![0.0; m * d];
            let mut loss = 0.0;
            for i in lo..hi {
                let yi = &coords[i * d..(i + 1) * d];
                for j in (i + 1)..m {
                    let yj = &coords[j * d..(j + 1) * d];
                    let sq: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                    let vij = v[[i, j]];
                    let db = sq.powf(curve.b);
                    let denom = 1.0 + curve.a * db;
                    loss += 2.0 * pair_cross_entropy(vij, 1.0 / denom);
                    if sq <= 0.0 {
                        continue;
                    }
                    let attract = 2.0 * curve.a * curve.b * (db / sq) / denom * vij;
                    let repulse = 2.0 * curve.b / ((epsilon + sq) * denom) * (1.0 - vij);
                    let c = 2.0 * (attract - repulse);
                    for t in 0..d {
                        let gt = c * (yi[t] - yj[t]);
                        g[i * d + t] += gt;
                        g[j * d + t] -= gt;
                    }
                }
            }
            (loss, g)
        })
        .collect();
    let mut grad = vec![0.0; m * d];
    let mut loss = 0.0;
    for (l, g) in partials {
        loss += l;
        for (acc, x) in grad.iter_mut().zip(g) {
            *acc += x;
        }
    }
    (loss, Array2::from_shape_vec((m, d), grad).expect("shape"))
}

#[derive(Debug, Clone, Copy)]
pub struct GlobalParams {
    pub curve: CurveParams,
    pub epochs: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
}

/// Full-gradient descent on the hub layout.
///
/// Every epoch computes the exact gradient over all hub pairs, clips each
/// coordinate to `[-4, 4]`, and steps with a linearly decaying rate.
/// Returns the final layout and the loss recorded before each step.
pub fn global_phase(
    init: &Array2<f64>,
    v: &Array2<f64>,
    params: &GlobalParams,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let m = init.nrows();
    if m < 2 {
        return Err(UmatoError::invalid("global phase needs at least 2 hubs"));
    }
    if v.dim() != (m, m) {
        return Err(UmatoError::invalid("hub weight matrix does not match the layout"));
    }
    let mut y = init.clone();
    let mut trace = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        let (loss, grad) = loss_and_gradient(&y, v, params.curve, params.epsilon);
        if !loss.is_finite() {
            return Err(UmatoError::Diverged(format!(
                "global phase loss is {loss} at epoch {epoch}"
            )));
        }
        trace.push(loss);
        let lr = params.learning_rate * (1.0 - epoch as f64 / params.epochs as f64);
        y.zip_mut_with(&grad, |yi, &g| *yi -= lr * g.clamp(-GRAD_CLIP, GRAD_CLIP));
    }
    Ok((y, trace))
}
