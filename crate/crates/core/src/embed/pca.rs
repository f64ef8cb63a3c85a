use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::dataset::Dataset;
use crate::error::{Result, UmatoError};

/// Standard deviation of the leading component after initialization.
pub const INIT_SCALE: f64 = 10.0;

/// Projects centered data onto its top `d` principal axes.
///
/// Each axis is sign-fixed so its largest-magnitude loading is positive.
/// Scores are not rescaled.
pub fn pca_scores(points: &Array2<f64>, d: usize) -> Result<Array2<f64>> {
    let (n, dim) = points.dim();
    if d == 0 || d > dim {
        return Err(UmatoError::invalid(format!(
            "cannot take {d} components of {dim}-dimensional data"
        )));
    }
    if n < 2 {
        return Err(UmatoError::invalid("PCA needs at least 2 points"));
    }
    let mean = points.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let centered = points - &mean;
    let x = DMatrix::from_row_iterator(n, dim, centered.iter().copied());
    let cov = (x.transpose() * &x) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]).then(p.cmp(&q)));
    let mut basis = DMatrix::zeros(dim, d);
    for (c, &src) in order.iter().take(d).enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
        basis.set_column(c, &col);
    }
    let scores = x * basis;
    Ok(Array2::from_shape_fn((n, d), |(i, j)| scores[(i, j)]))
}

/// PCA initialization: principal-axis scores, uniformly rescaled so the
/// leading axis has standard deviation [`INIT_SCALE`].
pub fn pca_init(data: &Dataset, d: usize) -> Result<Array2<f64>> {
    let mut scores = pca_scores(data.points(), d)?;
    let n = scores.nrows() as f64;
    let first = scores.column(0);
    let mean = first.sum() / n;
    let sd = (first.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        scores.mapv_inplace(|v| v * INIT_SCALE / sd);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbors::euclidean;
    use ndarray::{concatenate, Axis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn cloud(n: usize, scales: &[f64], seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, scales.len()), |(_, j)| scales[j] * rng.sample::<f64, _>(StandardNormal))
    }

    fn corr(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.sum() / n, b.sum() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn axis_aligned_data_keeps_axes() {
        let mut m = cloud(500, &[5.0, 1.0], 1);
        m -= &m.mean_axis(Axis(0)).unwrap();
        // Remove the sample correlation so the coordinate axes are exact principal axes.
        let c0 = m.column(0).to_owned();
        let proj = c0.dot(&m.column(1)) / c0.dot(&c0);
        m.column_mut(1).scaled_add(-proj, &c0);
        let d = Dataset::new(m.clone(), "a").unwrap();
        let p = pca_init(&d, 2).unwrap();
        assert!(corr(p.column(0), m.column(0)).abs() >= 0.999);
        assert!(corr(p.column(1), m.column(1)).abs() >= 0.999);
        let n = p.nrows() as f64;
        let sd0 = (p.column(0).iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        assert!((sd0 - INIT_SCALE).abs() < 1e-9);
    }

    #[test]
    fn full_rank_projection_preserves_shape() {
        let m = cloud(40, &[3.0, 2.0, 1.0], 2);
        let d = Dataset::new(m.clone(), "a").unwrap();
        let p = pca_init(&d, 3).unwrap();
        let scale = euclidean(p.row(0).as_slice().unwrap(), p.row(1).as_slice().unwrap())
            / euclidean(m.row(0).as_slice().unwrap(), m.row(1).as_slice().unwrap());
        for i in 0..40 {
            for j in 0..40 {
                let hd = euclidean(m.row(i).as_slice().unwrap(), m.row(j).as_slice().unwrap());
                let ld = euclidean(p.row(i).as_slice().unwrap(), p.row(j).as_slice().unwrap());
                assert!((ld - scale * hd).abs() <= 1e-9 * (1.0 + ld));
            }
        }
    }

    #[test]
    fn duplicated_rows_map_together() {
        let m = cloud(20, &[1.0, 2.0, 0.5], 3);
        let doubled = concatenate(Axis(0), &[m.view(), m.view()]).unwrap();
        let p = pca_init(&Dataset::new(doubled, "d").unwrap(), 2).unwrap();
        for i in 0..20 {
            for j in 0..2 {
                assert!((p[[i, j]] - p[[i + 20, j]]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sign_convention() {
        let m = cloud(100, &[4.0, 1.0], 5);
        let flipped = m.mapv(|v| -v);
        let a = pca_scores(&m, 2).unwrap();
        let b = pca_scores(&flipped, 2).unwrap();
        // Negating the data negates the scores, never the loadings.
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x + y).abs() < 1e-9);
        }
    }

    #[test]
    fn too_many_components() {
        let d = Dataset::new(cloud(10, &[1.0, 1.0], 1), "x").unwrap();
        assert!(pca_init(&d, 3).is_err());
    }
}
