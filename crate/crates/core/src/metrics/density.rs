//! Global-structure metrics over pairwise distances: Gaussian-kernel density
//! divergence (KL and L2/DTM) and Kruskal stress.

use ndarray::Array2;
use rayon::prelude::*;

use super::rank::{check_pair, rows};
use crate::error::{Result, UmatoError};
use crate::neighbors::euclidean;

/// Normalized kernel density of every point.
///
/// Distances are divided by the largest pairwise distance, each point's
/// density is `sum_{j != i} exp(-d_ij^2 / sigma)`, and the densities are
/// scaled to sum to one.
pub fn kernel_density(points: &Array2<f64>, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(UmatoError::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let pts = rows(points);
    let n = pts.len();
    let max_dist = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| euclidean(&pts[i], &pts[j]))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let scale = if max_dist > 0.0 { 1.0 / max_dist } else { 0.0 };
    let dens: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = euclidean(&pts[i], &pts[j]) * scale;
                    (-d * d / sigma).exp()
                })
                .sum()
        })
        .collect();
    let total: f64 = dens.iter().sum();
    Ok(dens.into_iter().map(|v| v / total).collect())
}

/// KL divergence of projection densities from data densities.
pub fn density_kl(data: &Array2<f64>, proj: &Array2<f64>, sigma: f64) -> Result<f64> {
    check_pair(data, proj)?;
    let p = kernel_density(data, sigma)?;
    let q = kernel_density(proj, sigma)?;
    Ok(kl(&p, &q))
}

pub(crate) fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(f64::MIN_POSITIVE)).ln())
        .sum()
}

/// Euclidean distance between data and projection density vectors.
pub fn dtm(data: &Array2<f64>, proj: &Array2<f64>, sigma: f64) -> Result<f64> {
    check_pair(data, proj)?;
    let p = kernel_density(data, sigma)?;
    let q = kernel_density(proj, sigma)?;
    Ok(p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Kruskal stress-1 between data and projection distances.
pub fn stress(data: &Array2<f64>, proj: &Array2<f64>) -> Result<f64> {
    check_pair(data, proj)?;
    let hd = rows(data);
    let ld = rows(proj);
    let n = hd.len();
    let (num, den) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut num = 0.0;
            let mut den = 0.0;
            for j in (i + 1)..n {
                let delta = euclidean(&hd[i], &hd[j]);
                let d = euclidean(&ld[i], &ld[j]);
                num += (delta - d) * (delta - d);
                den += delta * delta;
            }
            (num, den)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    if den == 0.0 {
        return Err(UmatoError::invalid("stress is undefined when all data points coincide"));
    }
    Ok((num / den).sqrt())
}

/// Class-pairwise KL matrix and its sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPairKl {
    pub classes: Vec<usize>,
    pub matrix: Array2<f64>,
    pub total: f64,
}

/// `matrix[[i, j]]` is [`density_kl`] over the points labelled
/// `classes[i]` or `classes[j]`. The diagonal is zero.
pub fn class_pair_kl(data: &Array2<f64>, proj: &Array2<f64>, labels: &[usize], sigma: f64) -> Result<ClassPairKl> {
    check_pair(data, proj)?;
    if labels.len() != data.nrows() {
        return Err(UmatoError::invalid(format!(
            "{} labels for {} points",
            labels.len(),
            data.nrows()
        )));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(UmatoError::invalid("class_pair_kl needs at least two classes"));
    }
    let c = classes.len();
    let mut matrix = Array2::zeros((c, c));
    for a in 0..c {
        for b in (a + 1)..c {
            let idx: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == classes[a] || labels[i] == classes[b])
                .collect();
            let hd = data.select(ndarray::Axis(0), &idx);
            let ld = proj.select(ndarray::Axis(0), &idx);
            let v = density_kl(&hd, &ld, sigma)?;
            matrix[[a, b]] = v;
            matrix[[b, a]] = v;
        }
    }
    let total = matrix.sum();
    Ok(ClassPairKl { classes, matrix, total })
}
