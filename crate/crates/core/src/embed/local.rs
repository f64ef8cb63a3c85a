//! Phase two: placing and refining the expanded nearest neighbors.

use ndarray::Array2;
use rand_distr::weighted::WeightedAliasIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::curve::{CurveParams, PROB_CLAMP};
use super::GRAD_CLIP;
use crate::classify::{PointClass, PointClassification};
use crate::dataset::Dataset;
use crate::error::{Result, UmatoError};
use crate::neighbors::{cmp_candidate, sq_euclidean, FuzzyGraph, KnnIndex};

/// Neighbor lists in both directions: row members plus points listing `i`.
pub(crate) fn undirected_neighbors(knn: &KnnIndex) -> Vec<Vec<(f64, usize)>> {
    let n = knn.n_points();
    let mut adj: Vec<Vec<(f64, usize)>> = (0..n)
        .map(|i| {
            knn.distances(i)
                .iter()
                .copied()
                .zip(knn.neighbors(i).iter().copied())
                .collect()
        })
        .collect();
    for i in 0..n {
        for (&j, &d) in knn.neighbors(i).iter().zip(knn.distances(i)) {
            adj[j].push((d, i));
        }
    }
    for row in adj.iter_mut() {
        row.sort_by(cmp_candidate);
        row.dedup_by_key(|p| p.1);
    }
    adj
}

/// Initial positions for every expanded nearest neighbor.
///
/// Hubs are copied from `hub_positions` (rows in `partition.hubs` order).
/// eNNs are visited in discovery order and each is put at the mean of up to
/// `m_init` nearest already-placed kNN neighbors (either direction), plus
/// Gaussian noise with standard deviation `0.01` times the hub layout's
/// bounding-box diagonal when `noise` is set. Disconnected points stay at 0.
pub fn init_enns(
    partition: &PointClassification,
    knn: &KnnIndex,
    hub_positions: &Array2<f64>,
    m_init: usize,
    noise: bool,
    seed: u64,
) -> Result<Array2<f64>> {
    let n = knn.n_points();
    let d = hub_positions.ncols();
    if hub_positions.nrows() != partition.hubs.len() {
        return Err(UmatoError::invalid("hub layout does not match the hub list"));
    }
    let mut y = Array2::zeros((n, d));
    let mut placed = vec![false; n];
    for (row, &h) in partition.hubs.iter().enumerate() {
        y.row_mut(h).assign(&hub_positions.row(row));
        placed[h] = true;
    }
    let std = 0.01 * bbox_diagonal(hub_positions);
    let normal = Normal::new(0.0, std.max(0.0)).expect("finite std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adj = undirected_neighbors(knn);

    for &e in &partition.enns {
        let anchors: Vec<usize> = adj[e]
            .iter()
            .filter(|p| placed[p.1])
            .take(m_init.max(1))
            .map(|p| p.1)
            .collect();
        // Discovery order guarantees the discovering point is already placed.
        assert!(!anchors.is_empty(), "eNN {e} has no placed neighbor");
        for t in 0..d {
            let mean = anchors.iter().map(|&a| y[[a, t]]).sum::<f64>() / anchors.len() as f64;
            let jitter = if noise { normal.sample(&mut rng) } else { 0.0 };
            y[[e, t]] = mean + jitter;
        }
        placed[e] = true;
    }
    Ok(y)
}

pub(crate) fn bbox_diagonal(y: &Array2<f64>) -> f64 {
    if y.nrows() == 0 {
        return 0.0;
    }
    y.columns()
        .into_iter()
        .map(|c| {
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (hi - lo).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Drops disconnected points from the kNN rows of hubs and eNNs.
///
/// An affected row is refilled with the next nearest non-disconnected points
/// (exact search), so it keeps `k` entries when enough candidates exist.
/// Rows of disconnected points are emptied.
pub fn update_knn_exclude_dcp(
    data: &Dataset,
    knn: &KnnIndex,
    partition: &PointClassification,
) -> Result<KnnIndex> {
    let n = knn.n_points();
    if partition.n_points() != n || data.n_points() != n {
        return Err(UmatoError::invalid("partition, data and index sizes differ"));
    }
    if partition.dcps.is_empty() {
        return Ok(knn.clone());
    }
    let k = knn.k();
    let points = data.points().as_standard_layout();
    let dim = data.n_features();
    let flat = points.as_slice().expect("standard layout");
    let row = |i: usize| &flat[i * dim..(i + 1) * dim];

    let mut indices = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    for i in 0..n {
        if partition.is_dcp(i) {
            indices.push(Vec::new());
            distances.push(Vec::new());
            continue;
        }
        if !knn.neighbors(i).iter().any(|&j| partition.is_dcp(j)) {
            indices.push(knn.neighbors(i).to_vec());
            distances.push(knn.distances(i).to_vec());
            continue;
        }
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i && !partition.is_dcp(j))
            .map(|j| (sq_euclidean(row(i), row(j)), j))
            .collect();
        cand.sort_by(cmp_candidate);
        cand.truncate(k);
        let (idx, dist): (Vec<usize>, Vec<f64>) = cand.into_iter().map(|(d, j)| (j, d.sqrt())).unzip();
        indices.push(idx);
        distances.push(dist);
    }
    Ok(KnnIndex::from_rows_unchecked(indices, distances, k))
}

/// Settings for negative-sampling refinement.
#[derive(Debug, Clone, Copy)]
pub struct LocalParams {
    pub curve: CurveParams,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of each negative sample.
    pub gamma: f64,
    pub negative_samples: usize,
    pub epsilon: f64,
    /// Scale on the attraction applied to a hub endpoint.
    pub hub_attract_penalty: f64,
    /// Scale on the repulsion applied to a sampled (non-hub) point.
    pub repulse_penalty: f64,
}

/// Directed edge: `anchor` is pulled toward `other` with weight `v`.
///
/// An edge is visited once every `period` epochs (fractional periods
/// accumulate); `period = 1` visits it every epoch.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SgdEdge {
    pub anchor: usize,
    pub other: usize,
    pub v: f64,
    pub period: f64,
    pub next: f64,
}

impl SgdEdge {
    /// Visited every epoch with weight `v`.
    pub fn weighted(anchor: usize, other: usize, v: f64) -> Self {
        Self { anchor, other, v, period: 1.0, next: 1.0 }
    }

    /// Visited with unit weight once every `max_v / v` epochs, so the
    /// expected pull per epoch is proportional to `v`.
    pub fn sampled(anchor: usize, other: usize, v: f64, max_v: f64) -> Self {
        let period = max_v / v;
        Self { anchor, other, v: 1.0, period, next: period }
    }
}

/// Shared stochastic update loop.
///
/// `other_scale[p]` scales the attraction applied to `p` when it is the
/// non-anchor endpoint; `negative_scale[p]` scales the repulsion applied to
/// `p` when it is drawn as a negative sample. Returns the sampled objective
/// (negated, so lower is better) accumulated per epoch.
pub(crate) fn negative_sampling_sgd(
    y: &mut Array2<f64>,
    edges: &mut [SgdEdge],
    negative_weights: &[f64],
    other_scale: &[f64],
    negative_scale: &[f64],
    params: &LocalParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let (n, d) = y.dim();
    let mut flat = y.as_standard_layout().into_owned();
    let coords = flat.as_slice_mut().expect("standard layout");
    let sampler = if params.negative_samples > 0 && negative_weights.iter().any(|&w| w > 0.0) {
        Some(WeightedAliasIndex::new(negative_weights.to_vec()).map_err(|e| UmatoError::invalid(e.to_string()))?)
    } else {
        None
    };
    let CurveParams { a, b } = params.curve;
    let mut trace = Vec::with_capacity(params.epochs);
    let mut diff = vec![0.0; d];

    for epoch in 0..params.epochs {
        let lr = params.learning_rate * (1.0 - epoch as f64 / params.epochs as f64);
        edges.shuffle(rng);
        let mut objective = 0.0;
        let due = (epoch + 1) as f64;
        for edge in edges.iter_mut() {
            if edge.next > due {
                continue;
            }
            edge.next += edge.period;
            let (i, j, v) = (edge.anchor, edge.other, edge.v);
            let sq = sq_dist_flat(coords, d, i, j, &mut diff);
            // One powf per pair: sq^(b-1) is sq^b / sq.
            let pb = sq.powf(b);
            let w = 1.0 / (1.0 + a * pb);
            objective -= v * w.max(PROB_CLAMP).ln();
            if sq > 0.0 {
                let coeff = -2.0 * a * b * (pb / sq) * w;
                let js = other_scale[j];
                for t in 0..d {
                    let g = (coeff * diff[t] * v).clamp(-GRAD_CLIP, GRAD_CLIP);
                    coords[i * d + t] += g * lr;
                    coords[j * d + t] -= g * lr * js;
                }
            }
            if let Some(sampler) = &sampler {
                for _ in 0..params.negative_samples {
                    let s = sampler.sample(rng);
                    if s == i {
                        continue;
                    }
                    let sq = sq_dist_flat(coords, d, i, s, &mut diff);
                    let w = 1.0 / (1.0 + a * sq.powf(b));
                    objective -= v * params.gamma * (1.0 - w).max(PROB_CLAMP).ln();
                    if sq <= 0.0 {
                        continue;
                    }
                    let coeff = 2.0 * params.gamma * b * w / (params.epsilon + sq);
                    let ss = negative_scale[s];
                    for t in 0..d {
                        let g = (coeff * diff[t] * v).clamp(-GRAD_CLIP, GRAD_CLIP);
                        coords[i * d + t] += g * lr;
                        coords[s * d + t] -= g * lr * ss;
                    }
                }
            }
            if !coords[i * d..(i + 1) * d].iter().all(|c| c.is_finite()) {
                return Err(UmatoError::Diverged(format!(
                    "point {i} left the finite range at epoch {epoch} on edge ({i}, {j})"
                )));
            }
        }
        trace.push(objective);
    }
    debug_assert_eq!(coords.len(), n * d);
    *y = flat;
    Ok(trace)
}

#[inline]
fn sq_dist_flat(coords: &[f64], d: usize, i: usize, j: usize, diff: &mut [f64]) -> f64 {
    let mut sq = 0.0;
    for t in 0..d {
        let delta = coords[i * d + t] - coords[j * d + t];
        diff[t] = delta;
        sq += delta * delta;
    }
    sq
}

/// Negative-sampling weights proportional to degree^(3/4).
pub(crate) fn negative_weights(graph: &FuzzyGraph) -> Vec<f64> {
    graph
        .degrees()
        .into_iter()
        .map(|deg| (deg as f64).powf(0.75))
        .collect()
}

/// Refines eNN positions against the fuzzy graph over hubs and eNNs.
///
/// Only edges anchored at an eNN are used. A hub endpoint receives
/// `hub_attract_penalty` times the attraction; sampled eNNs receive
/// `repulse_penalty` times the repulsion and sampled hubs are not moved.
pub fn local_phase(
    graph: &FuzzyGraph,
    partition: &PointClassification,
    init: &Array2<f64>,
    params: &LocalParams,
    seed: u64,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let n = graph.n_points();
    if init.nrows() != n || partition.n_points() != n {
        return Err(UmatoError::invalid("layout, graph and partition sizes differ"));
    }
    let class = partition.classes();
    let mut edges = Vec::new();
    for e in graph.edges() {
        if class[e.i] == PointClass::Enn {
            edges.push(SgdEdge::weighted(e.i, e.j, e.weight));
        }
        if class[e.j] == PointClass::Enn {
            edges.push(SgdEdge::weighted(e.j, e.i, e.weight));
        }
    }
    let mut weights = negative_weights(graph);
    for (w, c) in weights.iter_mut().zip(class) {
        if *c == PointClass::Dcp {
            *w = 0.0;
        }
    }
    let other_scale: Vec<f64> = class
        .iter()
        .map(|c| if *c == PointClass::Hub { params.hub_attract_penalty } else { 1.0 })
        .collect();
    let negative_scale: Vec<f64> = class
        .iter()
        .map(|c| if *c == PointClass::Enn { params.repulse_penalty } else { 0.0 })
        .collect();
    let mut y = init.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = negative_sampling_sgd(
        &mut y,
        &mut edges,
        &weights,
        &other_scale,
        &negative_scale,
        params,
        &mut rng,
    )?;
    Ok((y, trace))
}

/// Isotropic random layout in `[-10, 10]^d`, used for random initialization.
pub fn random_layout(n: usize, d: usize, seed: u64) -> Array2<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, d), |_| rng.random_range(-10.0..10.0))
}
