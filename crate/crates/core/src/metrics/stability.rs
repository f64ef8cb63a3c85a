//! Stability protocols built on [`procrustes_distance`].

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::procrustes::procrustes_distance;
use crate::dataset::Dataset;
use crate::embed::{pca_init, random_layout, sub_seed, Embedder};
use crate::error::{Result, UmatoError};

/// Sorted indices of `ceil(rate * n)` points drawn without replacement.
pub fn subsample_indices(n: usize, rate: f64, seed: u64) -> Result<Vec<usize>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(UmatoError::invalid(format!("sampling rate must lie in (0, 1], got {rate}")));
    }
    let m = ((rate * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Embeds the full data and a subsample with the same seed, then compares
/// the subsample's projection with the matching rows of the full one.
pub fn stability_subsample(data: &Dataset, embedder: &dyn Embedder, rate: f64, seed: u64) -> Result<f64> {
    let idx = subsample_indices(data.n_points(), rate, sub_seed(seed, 17))?;
    let full = embedder.embed(data, None, seed)?;
    let part = embedder.embed(&data.subset(&idx)?, None, seed)?;
    let rows = full.coords.select(Axis(0), &idx);
    procrustes_distance(&part.coords, &rows)
}

/// Initial layouts used by [`stability_init`]: `n_random` uniform clouds
/// followed by the PCA layout.
pub fn stability_inits(data: &Dataset, dim: usize, n_random: usize, seed: u64) -> Result<Vec<Array2<f64>>> {
    let mut inits: Vec<Array2<f64>> = (0..n_random)
        .map(|t| random_layout(data.n_points(), dim, sub_seed(seed, 100 + t as u64)))
        .collect();
    inits.push(pca_init(data, dim)?);
    Ok(inits)
}

/// Mean pairwise Procrustes distance between projections started from
/// `n_random_inits` random layouts plus the PCA layout.
pub fn stability_init(data: &Dataset, embedder: &dyn Embedder, n_random_inits: usize, seed: u64) -> Result<f64> {
    let inits = stability_inits(data, embedder.output_dim(), n_random_inits, seed)?;
    let projections = inits
        .iter()
        .map(|init| embedder.embed(data, Some(init), seed).map(|p| p.coords))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..projections.len() {
        for b in (a + 1)..projections.len() {
            total += procrustes_distance(&projections[a], &projections[b])?;
            pairs += 1;
        }
    }
    Ok(if pairs == 0 { 0.0 } else { total / pairs as f64 })
}
