//! Local connectivity (`rho`), bandwidth (`sigma`) and symmetrized edge weights.

use rayon::prelude::*;

use super::KnnIndex;
use crate::error::{Result, UmatoError};

const SIGMA_TOLERANCE: f64 = 1e-5;
const SIGMA_MAX_ITERS: usize = 64;
const SIGMA_LOWER: f64 = 1e-8;
const SIGMA_FLOOR_SCALE: f64 = 1e-3;
const SIGMA_ABS_FLOOR: f64 = 1e-12;

/// Sum of the membership kernel over one row, minus `log2(k)`.
pub fn sigma_residual(distances: &[f64], rho: f64, sigma: f64) -> f64 {
    let sum: f64 = distances
        .iter()
        .map(|&d| membership(d, rho, sigma))
        .sum();
    sum - (distances.len() as f64).log2()
}

#[inline]
fn membership(d: f64, rho: f64, sigma: f64) -> f64 {
    let excess = d - rho;
    if excess <= 0.0 {
        1.0
    } else {
        (-excess / sigma).exp()
    }
}

fn row_rho_sigma(distances: &[f64]) -> (f64, f64) {
    if distances.is_empty() {
        return (0.0, 1.0);
    }
    let rho = distances
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let rho = if rho.is_finite() { rho } else { 0.0 };
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    let floor = (SIGMA_FLOOR_SCALE * mean).max(SIGMA_ABS_FLOOR);
    let max_d = distances.iter().copied().fold(0.0, f64::max);

    let f = |s: f64| sigma_residual(distances, rho, s);
    let mut lo = SIGMA_LOWER;
    if f(lo) >= 0.0 {
        // Enough neighbors sit at or below rho to reach the target on their own.
        return (rho, floor);
    }
    let mut hi = (max_d * 1024.0).max(2.0 * SIGMA_LOWER);
    for _ in 0..SIGMA_MAX_ITERS {
        if f(hi) > 0.0 {
            break;
        }
        hi *= 2.0;
    }
    let mut sigma = 0.5 * (lo + hi);
    for _ in 0..SIGMA_MAX_ITERS {
        sigma = 0.5 * (lo + hi);
        let r = f(sigma);
        if r.abs() <= SIGMA_TOLERANCE {
            break;
        }
        if r > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
    }
    (rho, sigma.max(floor))
}

/// Per-point `rho` (smallest positive neighbor distance) and `sigma`.
///
/// `sigma` is found by bisection so that the row's membership sum equals
/// `log2(row length)`, then clamped below by `1e-3` times the mean row distance.
/// Rows made only of duplicates get `rho = 0` and the floor.
pub fn compute_rho_sigma(knn: &KnnIndex) -> (Vec<f64>, Vec<f64>) {
    let pairs: Vec<(f64, f64)> = (0..knn.n_points())
        .into_par_iter()
        .map(|i| row_rho_sigma(knn.distances(i)))
        .collect();
    pairs.into_iter().unzip()
}

/// An undirected weighted edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// kNN graph with directed memberships and their symmetrized union.
#[derive(Debug, Clone)]
pub struct FuzzyGraph {
    pub knn: KnnIndex,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    directed: Vec<Vec<f64>>,
    edges: Vec<Edge>,
}

impl FuzzyGraph {
    pub fn n_points(&self) -> usize {
        self.knn.n_points()
    }

    /// Undirected edges sorted by `(i, j)`; weights lie in `(0, 1]`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Directed memberships of row `i`, aligned with `knn.neighbors(i)`.
    pub fn directed(&self, i: usize) -> &[f64] {
        &self.directed[i]
    }

    /// Number of undirected edges touching each point.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_points()];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    /// Weight of the undirected edge `{i, j}`, zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&(a, b)))
            .map(|pos| self.edges[pos].weight)
            .unwrap_or(0.0)
    }
}

/// Directed memberships on kNN edges, merged by the probabilistic t-conorm
/// `a + b - a * b`.
pub fn fuzzy_weights(knn: &KnnIndex, rho: &[f64], sigma: &[f64]) -> Result<FuzzyGraph> {
    let n = knn.n_points();
    if rho.len() != n || sigma.len() != n {
        return Err(UmatoError::invalid("rho/sigma length does not match the index"));
    }
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(UmatoError::invalid("sigma must be positive"));
    }
    let directed: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            knn.distances(i)
                .iter()
                .map(|&d| membership(d, rho[i], sigma[i]))
                .collect()
        })
        .collect();

    // (low, high, weight of low -> high, weight of high -> low)
    let mut half: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(knn.n_entries());
    for i in 0..n {
        for (&j, &w) in knn.neighbors(i).iter().zip(&directed[i]) {
            if i < j {
                half.push((i, j, w, 0.0));
            } else {
                half.push((j, i, 0.0, w));
            }
        }
    }
    half.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut edges: Vec<Edge> = Vec::with_capacity(half.len());
    let mut pos = 0;
    while pos < half.len() {
        let (i, j, mut fwd, mut back) = half[pos];
        pos += 1;
        // A pair appears at most twice: once from each endpoint's row.
        if pos < half.len() && half[pos].0 == i && half[pos].1 == j {
            fwd += half[pos].2;
            back += half[pos].3;
            pos += 1;
        }
        edges.push(Edge {
            i,
            j,
            weight: t_conorm(fwd, back),
        });
    }
    edges.retain(|e| e.weight > 0.0);
    Ok(FuzzyGraph {
        knn: knn.clone(),
        rho: rho.to_vec(),
        sigma: sigma.to_vec(),
        directed,
        edges,
    })
}

#[inline]
fn t_conorm(a: f64, b: f64) -> f64 {
    // Same value as a + b - ab, but exactly 1 whenever either side is 1.
    1.0 - (1.0 - a) * (1.0 - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::neighbors::knn_exact;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn random_knn(n: usize, k: usize, seed: u64) -> KnnIndex {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0));
        knn_exact(&Dataset::new(m, "r").unwrap(), k).unwrap()
    }

    #[test]
    fn rho_is_first_positive_distance() {
        let (rho, _) = row_rho_sigma(&[0.0, 2.0, 4.0]);
        assert_eq!(rho, 2.0);
    }

    #[test]
    fn saturated_row_is_clamped() {
        let row = [1.5; 6];
        let (rho, sigma) = row_rho_sigma(&row);
        assert_eq!(rho, 1.5);
        assert_eq!(sigma, 1e-3 * 1.5);
        assert!(sigma_residual(&row, rho, sigma) > 0.0);
    }

    #[test]
    fn duplicates_saturate() {
        let (rho, sigma) = row_rho_sigma(&[0.0, 0.0, 0.0]);
        assert_eq!(rho, 0.0);
        assert_eq!(sigma, SIGMA_ABS_FLOOR);
        assert_eq!(membership(0.0, rho, sigma), 1.0);
    }

    #[test]
    fn sigma_solves_target() {
        let knn = random_knn(300, 15, 2);
        let (rho, sigma) = compute_rho_sigma(&knn);
        for i in 0..300 {
            let r = sigma_residual(knn.distances(i), rho[i], sigma[i]);
            assert!(r.abs() <= 1e-5, "row {i}: residual {r}");
            let expected_rho = knn.distances(i).iter().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
            assert_eq!(rho[i], expected_rho);
        }
    }

    #[test]
    fn weight_at_rho_is_one() {
        assert_eq!(membership(2.0, 2.0, 0.3), 1.0);
        assert!(membership(2.5, 2.0, 0.3) < 1.0);
    }

    #[test]
    fn t_conorm_identity() {
        // Point 0's only neighbor is 1 at its rho; point 1 points to 2 instead.
        let knn = KnnIndex::from_rows(
            vec![vec![1], vec![2], vec![1]],
            vec![vec![1.0], vec![0.5], vec![0.5]],
            1,
        )
        .unwrap();
        let (rho, sigma) = compute_rho_sigma(&knn);
        let g = fuzzy_weights(&knn, &rho, &sigma).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 0), 1.0);
        assert_eq!(g.weight(0, 2), 0.0);
    }

    #[test]
    fn symmetric_weights_match_recomputation() {
        let knn = random_knn(150, 10, 5);
        let (rho, sigma) = compute_rho_sigma(&knn);
        let g = fuzzy_weights(&knn, &rho, &sigma).unwrap();
        let mut directed: HashMap<(usize, usize), f64> = HashMap::new();
        for i in 0..150 {
            for (&j, &d) in knn.neighbors(i).iter().zip(knn.distances(i)) {
                let v = (-(d - rho[i]).max(0.0) / sigma[i]).exp();
                directed.insert((i, j), v);
            }
        }
        for e in g.edges() {
            let a = directed.get(&(e.i, e.j)).copied().unwrap_or(0.0);
            let b = directed.get(&(e.j, e.i)).copied().unwrap_or(0.0);
            assert!((e.weight - (a + b - a * b)).abs() <= 1e-12);
            assert!(e.weight > 0.0 && e.weight <= 1.0);
            assert!(e.i < e.j);
        }
        let pairs: std::collections::HashSet<(usize, usize)> =
            directed.keys().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        assert_eq!(pairs.len(), g.edges().len());
        assert!(g.edges().len() <= 150 * 10);
    }

    #[test]
    fn memberships_decrease_along_row() {
        let knn = random_knn(120, 8, 11);
        let (rho, sigma) = compute_rho_sigma(&knn);
        let g = fuzzy_weights(&knn, &rho, &sigma).unwrap();
        for i in 0..120 {
            let row = g.directed(i);
            assert!(row.windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(row[0], 1.0);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let knn = random_knn(20, 3, 1);
        assert!(fuzzy_weights(&knn, &[0.0; 3], &[1.0; 3]).is_err());
        assert!(fuzzy_weights(&knn, &[0.0; 20], &[0.0; 20]).is_err());
    }
}
