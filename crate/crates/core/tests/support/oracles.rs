//! Naive reference implementations of the metrics, shared by test targets.
#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random data/projection pair with 12 to 25 points.
pub fn instance(seed: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(12..=25);
    let x = Array2::from_shape_fn((n, 5), |_| rng.random_range(-3.0..3.0));
    let y = Array2::from_shape_fn((n, 2), |_| rng.random_range(-3.0..3.0));
    (x, y)
}

pub fn dist(m: &Array2<f64>, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for t in 0..m.ncols() {
        s += (m[[i, t]] - m[[j, t]]) * (m[[i, t]] - m[[j, t]]);
    }
    s.sqrt()
}

/// rank[i][j]: 1-based position of j in i's neighbor list, ties by index.
pub fn ranks(m: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut out = vec![vec![0; n]; n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(m, i, a).partial_cmp(&dist(m, i, b)).unwrap().then(a.cmp(&b)));
        for (pos, &j) in others.iter().enumerate() {
            out[i][j] = pos + 1;
        }
    }
    out
}

pub fn oracle_trust(x: &Array2<f64>, y: &Array2<f64>, k: usize) -> f64 {
    let n = x.nrows();
    let (rh, rl) = (ranks(x), ranks(y));
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i && rl[i][j] <= k && rh[i][j] > k {
                sum += (rh[i][j] - k) as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * sum
}

pub fn oracle_mrre(x: &Array2<f64>, y: &Array2<f64>, k: usize) -> f64 {
    let n = x.nrows();
    let (rh, rl) = (ranks(x), ranks(y));
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i && rl[i][j] <= k {
                sum += (rh[i][j] as f64 - rl[i][j] as f64).abs() / rl[i][j] as f64;
            }
        }
    }
    let mut c = 0.0;
    for l in 1..=k {
        c += (n as f64 - 2.0 * l as f64 + 1.0).abs() / l as f64;
    }
    1.0 - sum / (n as f64 * c)
}

pub fn oracle_density(m: &Array2<f64>, sigma: f64) -> Vec<f64> {
    let n = m.nrows();
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max = max.max(dist(m, i, j));
        }
    }
    let mut rho = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = dist(m, i, j) / max;
                rho[i] += (-d * d / sigma).exp();
            }
        }
    }
    let total: f64 = rho.iter().sum();
    rho.iter().map(|r| r / total).collect()
}

pub fn oracle_kl(x: &Array2<f64>, y: &Array2<f64>, sigma: f64) -> f64 {
    let (p, q) = (oracle_density(x, sigma), oracle_density(y, sigma));
    let mut s = 0.0;
    for i in 0..p.len() {
        s += p[i] * (p[i] / q[i]).ln();
    }
    s
}

pub fn oracle_dtm(x: &Array2<f64>, y: &Array2<f64>, sigma: f64) -> f64 {
    let (p, q) = (oracle_density(x, sigma), oracle_density(y, sigma));
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - q[i]) * (p[i] - q[i]);
    }
    s.sqrt()
}

pub fn oracle_stress(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let n = x.nrows();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (dist(x, i, j), dist(y, i, j));
            num += (a - b) * (a - b);
            den += a * a;
        }
    }
    (num / den).sqrt()
}

/// 2D Procrustes by the closed-form best angle, for rotations and for
/// reflections, keeping the smaller residual.
pub fn oracle_procrustes(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let prep = |m: &Array2<f64>| {
        let n = m.nrows() as f64;
        let (mx, my) = (m.column(0).sum() / n, m.column(1).sum() / n);
        let pts: Vec<(f64, f64)> = m.rows().into_iter().map(|r| (r[0] - mx, r[1] - my)).collect();
        let norm = pts.iter().map(|(x, y)| x * x + y * y).sum::<f64>().sqrt();
        pts.into_iter().map(|(x, y)| (x / norm, y / norm)).collect::<Vec<_>>()
    };
    let (p, q) = (prep(a), prep(b));
    let residual = |flip: f64| {
        let (mut dot, mut cross) = (0.0, 0.0);
        for (&(px, py), &(qx, qy)) in p.iter().zip(&q) {
            let py = py * flip;
            dot += px * qx + py * qy;
            cross += px * qy - py * qx;
        }
        let theta = cross.atan2(dot);
        let (s, c) = theta.sin_cos();
        let mut r = 0.0;
        for (&(px, py), &(qx, qy)) in p.iter().zip(&q) {
            let py = py * flip;
            let (rx, ry) = (c * px - s * py, s * px + c * py);
            r += (rx - qx) * (rx - qx) + (ry - qy) * (ry - qy);
        }
        r.sqrt()
    };
    residual(1.0).min(residual(-1.0))
}
