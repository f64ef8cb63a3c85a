//! Synthetic manifolds used for demonstrations and tests.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{Result, UmatoError};

fn quartile(t: f64, lo: f64, hi: f64) -> usize {
    (((t - lo) / (hi - lo) * 4.0).floor() as usize).min(3)
}

/// A plane rolled up in 3D. Labels are the quartile of the roll parameter.
pub fn gen_swiss_roll(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(UmatoError::invalid("swiss roll needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (1.5 * PI, 4.5 * PI);
    let mut points = Array2::zeros((n, 3));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = rng.random_range(lo..hi);
        let h = rng.random_range(0.0..21.0);
        points[[i, 0]] = t * t.cos();
        points[[i, 1]] = h;
        points[[i, 2]] = t * t.sin();
        labels.push(quartile(t, lo, hi));
    }
    Dataset::new(points, "swiss_roll")?.with_labels(labels)
}

/// A plane bent into an S. Labels are the quartile of the curve parameter.
pub fn gen_s_curve(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(UmatoError::invalid("s-curve needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (-1.5 * PI, 1.5 * PI);
    let mut points = Array2::zeros((n, 3));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = rng.random_range(lo..hi);
        let h = rng.random_range(0.0..2.0);
        points.row_mut(i).assign(&s_curve_point(t, h));
        labels.push(quartile(t, lo, hi));
    }
    Dataset::new(points, "s_curve")?.with_labels(labels)
}

pub(crate) fn s_curve_point(t: f64, h: f64) -> ndarray::Array1<f64> {
    let sign = if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    };
    ndarray::array![t.sin(), h, sign * (t.cos() - 1.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpheresParams {
    pub n_inner_spheres: usize,
    pub n_per_inner: usize,
    pub n_outer: usize,
    pub dim: usize,
    pub inner_radius: f64,
}

impl Default for SpheresParams {
    fn default() -> Self {
        Self {
            n_inner_spheres: 10,
            n_per_inner: 500,
            n_outer: 5000,
            dim: 101,
            inner_radius: 5.0,
        }
    }
}

impl SpheresParams {
    pub fn outer_radius(&self) -> f64 {
        5.0 * self.inner_radius
    }

    /// Per-axis standard deviation of the inner-sphere centers.
    ///
    /// Scaled by `1/sqrt(dim)` so the expected center norm is
    /// `2 * inner_radius`, well inside the enclosing sphere.
    pub fn center_std(&self) -> f64 {
        2.0 * self.inner_radius / (self.dim as f64).sqrt()
    }
}

/// Small spheres enclosed by one large sphere, all in `dim` dimensions.
///
/// Returns the dataset and the inner-sphere centers (one row per sphere).
/// Inner spheres take labels `0..n_inner_spheres`; the enclosing sphere takes
/// label `n_inner_spheres`.
pub fn gen_spheres(params: &SpheresParams, seed: u64) -> Result<(Dataset, Array2<f64>)> {
    let p = params;
    if p.dim < 2 {
        return Err(UmatoError::invalid("spheres need dim >= 2"));
    }
    if !(p.inner_radius > 0.0 && p.inner_radius.is_finite()) {
        return Err(UmatoError::invalid("inner radius must be positive"));
    }
    let n = p.n_inner_spheres * p.n_per_inner + p.n_outer;
    if n == 0 {
        return Err(UmatoError::invalid("spheres dataset would be empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Array2::zeros((n, p.dim));
    let mut labels = Vec::with_capacity(n);
    let mut centers = Array2::zeros((p.n_inner_spheres, p.dim));
    let std = p.center_std();
    let mut row = 0;
    for s in 0..p.n_inner_spheres {
        for c in centers.row_mut(s).iter_mut() {
            *c = std * rng.sample::<f64, _>(StandardNormal);
        }
        for _ in 0..p.n_per_inner {
            let dir = unit_vector(&mut rng, p.dim);
            for j in 0..p.dim {
                points[[row, j]] = centers[[s, j]] + p.inner_radius * dir[j];
            }
            labels.push(s);
            row += 1;
        }
    }
    let r = p.outer_radius();
    for _ in 0..p.n_outer {
        let dir = unit_vector(&mut rng, p.dim);
        for j in 0..p.dim {
            points[[row, j]] = r * dir[j];
        }
        labels.push(p.n_inner_spheres);
        row += 1;
    }
    let data = Dataset::new(points, "spheres")?.with_labels(labels)?;
    Ok((data, centers))
}

fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
