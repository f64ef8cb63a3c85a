//! Hub / expanded-neighbor / disconnected-point partition.
//!
//! Hubs are picked greedily by how often a point appears in other points' kNN
//! rows; each pick removes the hub and its kNN row from the candidate pool so
//! later hubs land elsewhere. The hubs' rows are then expanded transitively
//! (the rows of every newly reached point are followed) and anything never
//! reached is a disconnected point.

use std::collections::VecDeque;

use crate::error::{Result, UmatoError};
use crate::neighbors::KnnIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Hub,
    Enn,
    Dcp,
}

impl PointClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointClass::Hub => "hub",
            PointClass::Enn => "enn",
            PointClass::Dcp => "dcp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointClassification {
    /// Hubs in selection order.
    pub hubs: Vec<usize>,
    /// Expanded nearest neighbors in discovery (breadth-first) order.
    pub enns: Vec<usize>,
    /// Disconnected points, ascending.
    pub dcps: Vec<usize>,
    /// Requested hub count.
    pub n_h: usize,
    classes: Vec<PointClass>,
}

impl PointClassification {
    pub fn n_points(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, i: usize) -> PointClass {
        self.classes[i]
    }

    pub fn classes(&self) -> &[PointClass] {
        &self.classes
    }

    pub fn is_dcp(&self, i: usize) -> bool {
        self.classes[i] == PointClass::Dcp
    }

    pub fn is_hub(&self, i: usize) -> bool {
        self.classes[i] == PointClass::Hub
    }

    /// Selection rank of each hub, `None` for other points.
    pub fn hub_rank(&self) -> Vec<Option<usize>> {
        let mut rank = vec![None; self.n_points()];
        for (r, &h) in self.hubs.iter().enumerate() {
            rank[h] = Some(r);
        }
        rank
    }

    /// Builds a partition from explicit sets, checking that they cover `0..n` disjointly.
    pub fn from_sets(n: usize, hubs: Vec<usize>, enns: Vec<usize>, dcps: Vec<usize>) -> Result<Self> {
        let mut classes = vec![None; n];
        for (set, class) in [(&hubs, PointClass::Hub), (&enns, PointClass::Enn), (&dcps, PointClass::Dcp)] {
            for &i in set {
                match classes.get_mut(i) {
                    Some(slot @ None) => *slot = Some(class),
                    _ => return Err(UmatoError::invalid(format!("point {i} is out of range or listed twice"))),
                }
            }
        }
        let classes = classes
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| UmatoError::invalid(format!("point {i} is unclassified"))))
            .collect::<Result<Vec<_>>>()?;
        let n_h = hubs.len();
        Ok(Self {
            hubs,
            enns,
            dcps,
            n_h,
            classes,
        })
    }
}

/// How often each point occurs in kNN rows, sorted by count descending then index.
pub fn knn_frequency(knn: &KnnIndex) -> Vec<(usize, usize)> {
    let mut counts = vec![0usize; knn.n_points()];
    for (row, _) in knn.rows() {
        for &j in row {
            counts[j] += 1;
        }
    }
    let mut freq: Vec<(usize, usize)> = counts.into_iter().enumerate().collect();
    freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    freq
}

/// Splits points into hubs, expanded nearest neighbors and disconnected points.
///
/// Stops early, with a warning, when the candidate pool runs out before
/// `n_h` hubs are picked.
pub fn classify_points(knn: &KnnIndex, n_h: usize) -> Result<PointClassification> {
    let n = knn.n_points();
    if n_h == 0 || n_h > n {
        return Err(UmatoError::invalid(format!(
            "hub count {n_h} must lie in 1..={n}"
        )));
    }
    let order = knn_frequency(knn);
    let mut removed = vec![false; n];
    let mut hubs = Vec::with_capacity(n_h);
    let mut cursor = 0;
    while hubs.len() < n_h {
        while cursor < n && removed[order[cursor].0] {
            cursor += 1;
        }
        if cursor == n {
            break;
        }
        let hub = order[cursor].0;
        hubs.push(hub);
        removed[hub] = true;
        for &j in knn.neighbors(hub) {
            removed[j] = true;
        }
    }
    if hubs.len() < n_h {
        log::warn!(
            "candidate pool exhausted after {} of {} requested hubs",
            hubs.len(),
            n_h
        );
    }

    let mut classes = vec![PointClass::Dcp; n];
    for &h in &hubs {
        classes[h] = PointClass::Hub;
    }
    let mut reached = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &h in &hubs {
        reached[h] = true;
        queue.push_back(h);
    }
    let mut enns = Vec::new();
    while let Some(p) = queue.pop_front() {
        for &j in knn.neighbors(p) {
            if !reached[j] {
                reached[j] = true;
                classes[j] = PointClass::Enn;
                enns.push(j);
                queue.push_back(j);
            }
        }
    }
    let dcps = (0..n).filter(|&i| classes[i] == PointClass::Dcp).collect();
    Ok(PointClassification {
        hubs,
        enns,
        dcps,
        n_h,
        classes,
    })
}
