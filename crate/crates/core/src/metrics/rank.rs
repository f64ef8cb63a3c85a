//! Rank-based neighborhood metrics: trustworthiness, continuity and the two
//! mean relative rank errors.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Result, UmatoError};
use crate::neighbors::sq_euclidean;

/// Full neighbor-rank tables for both spaces.
///
/// `hd[i][j]` is the 1-based rank of `j` among the neighbors of `i` by
/// distance (ties broken by index); the diagonal holds 0. Quadratic memory,
/// so meant for small point sets; the metrics below stream rows instead.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTables {
    pub hd: Vec<Vec<u32>>,
    pub ld: Vec<Vec<u32>>,
}

impl RankTables {
    pub fn new(data: &Array2<f64>, proj: &Array2<f64>) -> Result<Self> {
        check_pair(data, proj)?;
        let hd_rows = rows(data);
        let ld_rows = rows(proj);
        let n = data.nrows();
        let hd = (0..n).into_par_iter().map(|i| rank_row(&hd_rows, i)).collect();
        let ld = (0..n).into_par_iter().map(|i| rank_row(&ld_rows, i)).collect();
        Ok(Self { hd, ld })
    }
}

pub(crate) fn check_pair(data: &Array2<f64>, proj: &Array2<f64>) -> Result<()> {
    if data.nrows() != proj.nrows() {
        return Err(UmatoError::invalid(format!(
            "data has {} rows but the projection has {}",
            data.nrows(),
            proj.nrows()
        )));
    }
    if data.nrows() < 2 {
        return Err(UmatoError::invalid("metrics need at least 2 points"));
    }
    Ok(())
}

pub(crate) fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Neighbor order of point `i`, nearest first, self excluded.
fn neighbor_order(points: &[Vec<f64>], i: usize) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| (sq_euclidean(&points[i], &points[j]), j))
        .collect();
    cand.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.into_iter().map(|c| c.1).collect()
}

fn ranks_from_order(order: &[usize], n: usize) -> Vec<u32> {
    let mut rank = vec![0u32; n];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r as u32 + 1;
    }
    rank
}

fn rank_row(points: &[Vec<f64>], i: usize) -> Vec<u32> {
    ranks_from_order(&neighbor_order(points, i), points.len())
}

/// All four rank metrics at one neighborhood size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankScores {
    pub k: usize,
    pub trustworthiness: f64,
    pub continuity: f64,
    /// `1 - MRRE` over projection neighborhoods.
    pub mrre_f: f64,
    /// `1 - MRRE` over data neighborhoods.
    pub mrre_m: f64,
}

impl RankScores {
    /// Harmonic mean of trustworthiness and continuity.
    pub fn tc_f1(&self) -> f64 {
        f1(self.trustworthiness, self.continuity)
    }
}

pub fn f1(t: f64, c: f64) -> f64 {
    if t + c == 0.0 {
        0.0
    } else {
        2.0 * t * c / (t + c)
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    // k < N/2 keeps the trustworthiness normalizer positive.
    if k == 0 || 2 * k >= n {
        return Err(UmatoError::invalid(format!(
            "rank metrics need 1 <= k < N/2, got k = {k} for N = {n}"
        )));
    }
    Ok(())
}

#[derive(Default, Clone, Copy)]
struct Sums {
    trust: f64,
    cont: f64,
    mrre_f: f64,
    mrre_m: f64,
}

/// Computes every rank metric for each `k` in one pass over the rows.
pub fn rank_metrics(data: &Array2<f64>, proj: &Array2<f64>, ks: &[usize]) -> Result<Vec<RankScores>> {
    check_pair(data, proj)?;
    let n = data.nrows();
    for &k in ks {
        check_k(k, n)?;
    }
    let hd_rows = rows(data);
    let ld_rows = rows(proj);
    let per_row: Vec<Vec<Sums>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let hd_order = neighbor_order(&hd_rows, i);
            let ld_order = neighbor_order(&ld_rows, i);
            let r_hd = ranks_from_order(&hd_order, n);
            let r_ld = ranks_from_order(&ld_order, n);
            ks.iter()
                .map(|&k| {
                    let kk = k as f64;
                    let mut s = Sums::default();
                    for &j in &ld_order[..k] {
                        let (h, l) = (r_hd[j] as f64, r_ld[j] as f64);
                        if h > kk {
                            s.trust += h - kk;
                        }
                        s.mrre_f += (h - l).abs() / l;
                    }
                    for &j in &hd_order[..k] {
                        let (h, l) = (r_hd[j] as f64, r_ld[j] as f64);
                        if l > kk {
                            s.cont += l - kk;
                        }
                        s.mrre_m += (h - l).abs() / h;
                    }
                    s
                })
                .collect()
        })
        .collect();

    let nf = n as f64;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            let mut total = Sums::default();
            for row in &per_row {
                total.trust += row[slot].trust;
                total.cont += row[slot].cont;
                total.mrre_f += row[slot].mrre_f;
                total.mrre_m += row[slot].mrre_m;
            }
            let kk = k as f64;
            let tc_norm = 2.0 / (nf * kk * (2.0 * nf - 3.0 * kk - 1.0));
            let c = mrre_normalizer(n, k);
            RankScores {
                k,
                trustworthiness: 1.0 - tc_norm * total.trust,
                continuity: 1.0 - tc_norm * total.cont,
                mrre_f: 1.0 - total.mrre_f / c,
                mrre_m: 1.0 - total.mrre_m / c,
            }
        })
        .collect())
}

/// `N * sum_{l=1..k} |N - 2l + 1| / l`.
pub fn mrre_normalizer(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    nf * (1..=k)
        .map(|l| (nf - 2.0 * l as f64 + 1.0).abs() / l as f64)
        .sum::<f64>()
}

fn single(data: &Array2<f64>, proj: &Array2<f64>, k: usize) -> Result<RankScores> {
    Ok(rank_metrics(data, proj, &[k])?[0])
}

pub fn trustworthiness(data: &Array2<f64>, proj: &Array2<f64>, k: usize) -> Result<f64> {
    Ok(single(data, proj, k)?.trustworthiness)
}

pub fn continuity(data: &Array2<f64>, proj: &Array2<f64>, k: usize) -> Result<f64> {
    Ok(single(data, proj, k)?.continuity)
}

pub fn mrre_f(data: &Array2<f64>, proj: &Array2<f64>, k: usize) -> Result<f64> {
    Ok(single(data, proj, k)?.mrre_f)
}

pub fn mrre_m(data: &Array2<f64>, proj: &Array2<f64>, k: usize) -> Result<f64> {
    Ok(single(data, proj, k)?.mrre_m)
}
