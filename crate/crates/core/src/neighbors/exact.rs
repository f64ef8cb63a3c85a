use rayon::prelude::*;

use super::{check_k, cmp_candidate, sq_euclidean, KnnIndex};
use crate::dataset::Dataset;
use crate::error::Result;

/// Brute-force k nearest neighbors; equal distances go to the lower index.
pub fn knn_exact(data: &Dataset, k: usize) -> Result<KnnIndex> {
    let n = data.n_points();
    check_k(k, n)?;
    let points = data.points().as_standard_layout();
    let dim = data.n_features();
    let flat = points.as_slice().expect("standard layout");
    let row = |i: usize| &flat[i * dim..(i + 1) * dim];

    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = row(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_euclidean(xi, row(j)), j))
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, cmp_candidate);
                cand.truncate(k);
            }
            cand.sort_unstable_by(cmp_candidate);
            cand.into_iter().map(|(d, j)| (j, d.sqrt())).unzip()
        })
        .collect();
    let (indices, distances) = rows.into_iter().unzip();
    Ok(KnnIndex::from_rows_unchecked(indices, distances, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::UmatoError;
    use crate::neighbors::euclidean;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn collinear_points() {
        let d = Dataset::new(array![[0.0], [1.0], [3.0]], "c").unwrap();
        let knn = knn_exact(&d, 1).unwrap();
        let firsts: Vec<usize> = (0..3).map(|i| knn.neighbors(i)[0]).collect();
        assert_eq!(firsts, vec![1, 0, 1]);
        assert_eq!(knn.distances(2), &[2.0]);
    }

    #[test]
    fn complete_rows_at_n_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Array2::from_shape_fn((12, 3), |_| rng.random::<f64>());
        let d = Dataset::new(m, "r").unwrap();
        let knn = knn_exact(&d, 11).unwrap();
        for i in 0..12 {
            let mut row = knn.neighbors(i).to_vec();
            row.sort_unstable();
            let expected: Vec<usize> = (0..12).filter(|&j| j != i).collect();
            assert_eq!(row, expected);
        }
    }

    #[test]
    fn matches_full_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = Array2::from_shape_fn((200, 10), |_| rng.random_range(-1.0..1.0));
        let d = Dataset::new(m.clone(), "r").unwrap();
        let k = 12;
        let knn = knn_exact(&d, k).unwrap();
        for i in 0..200 {
            let xi = m.row(i).to_vec();
            let mut all: Vec<(f64, usize)> = (0..200)
                .filter(|&j| j != i)
                .map(|j| (euclidean(&xi, &m.row(j).to_vec()), j))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = all[..k].iter().map(|p| p.1).collect();
            assert_eq!(knn.neighbors(i), expected.as_slice());
            for (dd, (e, _)) in knn.distances(i).iter().zip(&all[..k]) {
                assert!((dd - e).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        let d = Dataset::new(array![[0.0], [-1.0], [1.0], [5.0]], "t").unwrap();
        let knn = knn_exact(&d, 2).unwrap();
        assert_eq!(knn.neighbors(0), &[1, 2]);
    }

    #[test]
    fn k_out_of_range() {
        let d = Dataset::new(array![[0.0], [1.0]], "t").unwrap();
        assert!(matches!(knn_exact(&d, 2), Err(UmatoError::NeighborCount { k: 2, n: 2 })));
        assert!(knn_exact(&d, 0).is_err());
    }
}
