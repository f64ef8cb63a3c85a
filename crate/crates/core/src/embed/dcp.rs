//! Placement of disconnected points after optimization.

use ndarray::Array2;

use super::local::undirected_neighbors;
use crate::classify::PointClassification;
use crate::error::{Result, UmatoError};
use crate::neighbors::KnnIndex;

/// Puts each disconnected point at the centroid of its non-disconnected kNN
/// row members.
///
/// Points whose whole row is disconnected are resolved in waves: at each
/// wave the pending points are ordered by how many resolved neighbors (in
/// either kNN direction) they have, most first, and placed at the mean of
/// those. Anything still unresolved goes to the centroid of all hubs and eNNs.
/// Hubs and eNNs are never moved.
pub fn place_dcps(
    partition: &PointClassification,
    knn: &KnnIndex,
    layout: &Array2<f64>,
) -> Result<Array2<f64>> {
    let n = knn.n_points();
    if layout.nrows() != n || partition.n_points() != n {
        return Err(UmatoError::invalid("layout, index and partition sizes differ"));
    }
    let mut y = layout.clone();
    if partition.dcps.is_empty() {
        return Ok(y);
    }
    let d = y.ncols();
    let mut resolved: Vec<bool> = (0..n).map(|i| !partition.is_dcp(i)).collect();

    let mut pending = Vec::new();
    for &p in &partition.dcps {
        let members: Vec<usize> = knn
            .neighbors(p)
            .iter()
            .copied()
            .filter(|&j| !partition.is_dcp(j))
            .collect();
        if members.is_empty() {
            pending.push(p);
        } else {
            set_mean(&mut y, p, &members, d);
        }
    }
    for &p in &partition.dcps {
        resolved[p] = resolved[p] || !pending.contains(&p);
    }

    let adj = undirected_neighbors(knn);
    while !pending.is_empty() {
        let mut ranked: Vec<(usize, usize)> = pending
            .iter()
            .map(|&p| (adj[p].iter().filter(|q| resolved[q.1]).count(), p))
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        if ranked[0].0 == 0 {
            break;
        }
        let mut still = Vec::new();
        for (_, p) in ranked {
            let members: Vec<usize> = adj[p].iter().filter(|q| resolved[q.1]).map(|q| q.1).collect();
            if members.is_empty() {
                still.push(p);
            } else {
                set_mean(&mut y, p, &members, d);
                resolved[p] = true;
            }
        }
        pending = still;
    }
    if !pending.is_empty() {
        let anchored: Vec<usize> = (0..n).filter(|&i| !partition.is_dcp(i)).collect();
        for p in pending {
            set_mean(&mut y, p, &anchored, d);
        }
    }
    Ok(y)
}

fn set_mean(y: &mut Array2<f64>, p: usize, members: &[usize], d: usize) {
    if members.is_empty() {
        return;
    }
    for t in 0..d {
        let m = members.iter().map(|&j| y[[j, t]]).sum::<f64>() / members.len() as f64;
        y[[p, t]] = m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn index(rows: Vec<Vec<usize>>) -> KnnIndex {
        let k = rows.iter().map(Vec::len).max().unwrap();
        let d = rows.iter().map(|r| (1..=r.len()).map(|c| c as f64).collect()).collect();
        KnnIndex::from_rows(rows, d, k).unwrap()
    }

    #[test]
    fn centroid_of_anchored_neighbors() {
        let knn = index(vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![0, 1]]);
        let part = PointClassification::from_sets(4, vec![0], vec![1, 2], vec![3]).unwrap();
        let y0 = array![[0.0, 0.0], [2.0, 4.0], [9.0, 9.0], [100.0, 100.0]];
        let y = place_dcps(&part, &knn, &y0).unwrap();
        assert!((y[[3, 0]] - 1.0).abs() <= 1e-12);
        assert!((y[[3, 1]] - 2.0).abs() <= 1e-12);
        assert_eq!(y.slice(ndarray::s![..3, ..]), y0.slice(ndarray::s![..3, ..]));
    }

    #[test]
    fn no_dcps_is_identity() {
        let knn = index(vec![vec![1], vec![0]]);
        let part = PointClassification::from_sets(2, vec![0], vec![1], vec![]).unwrap();
        let y0 = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(place_dcps(&part, &knn, &y0).unwrap(), y0);
    }

    #[test]
    fn dcp_chain_lands_inside_cluster() {
        // 18 anchored points on a 6x3 grid; points 18 and 19 only list each other.
        let n = 20;
        let mut rows: Vec<Vec<usize>> = (0..18).map(|i| vec![(i + 1) % 18, (i + 17) % 18]).collect();
        rows.push(vec![19, 0]);
        rows.push(vec![18, 1]);
        rows[18] = vec![19];
        rows[19] = vec![18];
        let knn = index(rows);
        let part = PointClassification::from_sets(n, vec![0], (1..18).collect(), vec![18, 19]).unwrap();
        let mut y0 = Array2::zeros((n, 2));
        for i in 0..18 {
            y0[[i, 0]] = (i % 6) as f64;
            y0[[i, 1]] = (i / 6) as f64;
        }
        y0[[18, 0]] = f64::MAX;
        let y = place_dcps(&part, &knn, &y0).unwrap();
        for p in [18, 19] {
            assert!(y[[p, 0]].is_finite() && y[[p, 1]].is_finite());
            assert!((0.0..=5.0).contains(&y[[p, 0]]));
            assert!((0.0..=2.0).contains(&y[[p, 1]]));
        }
    }
}
