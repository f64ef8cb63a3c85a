//! k-nearest-neighbor indices and the fuzzy edge weights built on top of them.

mod cache;
mod descent;
mod exact;
mod fuzzy;

pub use cache::{read_knn_cache, write_knn_cache};
pub use descent::knn_descent;
pub use exact::knn_exact;
pub use fuzzy::{compute_rho_sigma, fuzzy_weights, sigma_residual, Edge, FuzzyGraph};

use crate::dataset::Dataset;
use crate::error::{Result, UmatoError};

/// Above this size the automatic backend switches from brute force to NN-descent.
pub const EXACT_KNN_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => sq_euclidean(a, b).sqrt(),
        }
    }
}

#[inline]
pub fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_euclidean(a, b).sqrt()
}

/// Which kNN construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnnBackend {
    /// Exact up to [`EXACT_KNN_LIMIT`] points, NN-descent above.
    #[default]
    Auto,
    Exact,
    Descent { max_iters: usize },
}

impl std::fmt::Display for KnnBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KnnBackend::Auto => f.write_str("auto"),
            KnnBackend::Exact => f.write_str("exact"),
            KnnBackend::Descent { max_iters } => write!(f, "descent:{max_iters}"),
        }
    }
}

impl std::str::FromStr for KnnBackend {
    type Err = UmatoError;

    /// Accepts `auto`, `exact`, `descent` (20 iterations) or `descent:<iters>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(KnnBackend::Auto),
            "exact" => Ok(KnnBackend::Exact),
            "descent" => Ok(KnnBackend::Descent { max_iters: 20 }),
            other => other
                .strip_prefix("descent:")
                .and_then(|n| n.parse().ok())
                .filter(|&n: &usize| n > 0)
                .map(|max_iters| KnnBackend::Descent { max_iters })
                .ok_or_else(|| UmatoError::invalid(format!("unknown kNN backend '{s}'"))),
        }
    }
}

/// Builds a kNN index over `data` with the requested backend.
pub fn build_knn(data: &Dataset, k: usize, backend: KnnBackend, seed: u64) -> Result<KnnIndex> {
    match backend {
        KnnBackend::Exact => knn_exact(data, k),
        KnnBackend::Descent { max_iters } => knn_descent(data, k, max_iters, seed),
        KnnBackend::Auto if data.n_points() <= EXACT_KNN_LIMIT => knn_exact(data, k),
        KnnBackend::Auto => knn_descent(data, k, 20, seed),
    }
}

/// Neighbor lists sorted by ascending distance, self excluded.
///
/// Rows normally hold exactly `k` entries; rows can be shorter after
/// disconnected points are filtered out.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex {
    indices: Vec<Vec<usize>>,
    distances: Vec<Vec<f64>>,
    k: usize,
    metric: Metric,
}

impl KnnIndex {
    /// Validates and wraps precomputed neighbor rows.
    pub fn from_rows(indices: Vec<Vec<usize>>, distances: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        let n = indices.len();
        if distances.len() != n {
            return Err(UmatoError::invalid("index and distance row counts differ"));
        }
        for (i, (row, drow)) in indices.iter().zip(&distances).enumerate() {
            if row.len() != drow.len() || row.len() > k {
                return Err(UmatoError::invalid(format!("row {i} has inconsistent length")));
            }
            if row.iter().any(|&j| j >= n || j == i) {
                return Err(UmatoError::invalid(format!("row {i} holds an invalid index")));
            }
            if drow.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                return Err(UmatoError::invalid(format!("row {i} holds an invalid distance")));
            }
            if drow.windows(2).any(|w| w[0] > w[1]) {
                return Err(UmatoError::invalid(format!("row {i} is not sorted by distance")));
            }
        }
        Ok(Self {
            indices,
            distances,
            k,
            metric: Metric::Euclidean,
        })
    }

    pub(crate) fn from_rows_unchecked(indices: Vec<Vec<usize>>, distances: Vec<Vec<f64>>, k: usize) -> Self {
        Self {
            indices,
            distances,
            k,
            metric: Metric::Euclidean,
        }
    }

    pub fn n_points(&self) -> usize {
        self.indices.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[usize], &[f64])> {
        self.indices
            .iter()
            .zip(&self.distances)
            .map(|(i, d)| (i.as_slice(), d.as_slice()))
    }

    /// Edge count summed over rows.
    pub fn n_entries(&self) -> usize {
        self.indices.iter().map(Vec::len).sum()
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(UmatoError::NeighborCount { k, n });
    }
    Ok(())
}

/// Orders candidates by distance, then by index.
#[inline]
pub(crate) fn cmp_candidate(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}
