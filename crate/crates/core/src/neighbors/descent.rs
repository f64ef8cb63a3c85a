//! Approximate kNN by iterated local joins over neighbors-of-neighbors.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_k, cmp_candidate, sq_euclidean, KnnIndex};
use crate::dataset::Dataset;
use crate::error::Result;

/// Stop once an iteration changes fewer than this fraction of `N * k` entries.
const CONVERGENCE_FRACTION: f64 = 0.001;

#[derive(Clone, Copy)]
struct Entry {
    sq_dist: f64,
    index: usize,
    is_new: bool,
}

/// Bounded neighbor list kept sorted by (distance, index).
struct NeighborHeap {
    entries: Vec<Entry>,
    k: usize,
}

impl NeighborHeap {
    fn new(k: usize) -> Self {
        Self {
            entries: Vec::with_capacity(k + 1),
            k,
        }
    }

    fn push(&mut self, sq_dist: f64, index: usize) -> bool {
        let key = (sq_dist, index);
        if self.entries.len() == self.k {
            let worst = self.entries[self.k - 1];
            if cmp_candidate(&key, &(worst.sq_dist, worst.index)).is_ge() {
                return false;
            }
        }
        if self.entries.iter().any(|e| e.index == index) {
            return false;
        }
        let pos = self
            .entries
            .partition_point(|e| cmp_candidate(&(e.sq_dist, e.index), &key).is_lt());
        self.entries.insert(
            pos,
            Entry {
                sq_dist,
                index,
                is_new: true,
            },
        );
        self.entries.truncate(self.k);
        true
    }
}

/// NN-descent from a random initial graph.
///
/// Runs at most `max_iters` rounds and stops early when a round updates fewer
/// than 0.1% of the `N * k` entries. Deterministic for a given `seed`.
pub fn knn_descent(data: &Dataset, k: usize, max_iters: usize, seed: u64) -> Result<KnnIndex> {
    let n = data.n_points();
    check_k(k, n)?;
    let points = data.points().as_standard_layout();
    let dim = data.n_features();
    let flat = points.as_slice().expect("standard layout");
    let row = |i: usize| &flat[i * dim..(i + 1) * dim];
    let dist = |a: usize, b: usize| sq_euclidean(row(a), row(b));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heaps: Vec<NeighborHeap> = (0..n).map(|_| NeighborHeap::new(k)).collect();
    for (i, heap) in heaps.iter_mut().enumerate() {
        // Sample k distinct non-self indices from 0..n-1 and shift past i.
        for j in index::sample(&mut rng, n - 1, k) {
            let j = if j >= i { j + 1 } else { j };
            heap.push(dist(i, j), j);
        }
    }

    let threshold = CONVERGENCE_FRACTION * (n * k) as f64;
    for _ in 0..max_iters {
        let mut new_lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut old_lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, heap) in heaps.iter_mut().enumerate() {
            for e in heap.entries.iter_mut() {
                if e.is_new {
                    new_lists[i].push(e.index);
                    e.is_new = false;
                } else {
                    old_lists[i].push(e.index);
                }
            }
        }
        let mut new_rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut old_rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for &j in &new_lists[i] {
                new_rev[j].push(i);
            }
            for &j in &old_lists[i] {
                old_rev[j].push(i);
            }
        }
        for i in 0..n {
            merge_sampled(&mut new_lists[i], &mut new_rev[i], k, &mut rng);
            merge_sampled(&mut old_lists[i], &mut old_rev[i], k, &mut rng);
        }

        let mut updates = 0usize;
        for i in 0..n {
            let new = &new_lists[i];
            let old = &old_lists[i];
            for (a, &u) in new.iter().enumerate() {
                for &w in &new[a + 1..] {
                    updates += join(&mut heaps, u, w, &dist);
                }
                for &w in old {
                    updates += join(&mut heaps, u, w, &dist);
                }
            }
        }
        if (updates as f64) < threshold {
            break;
        }
    }

    let (indices, distances) = heaps
        .into_iter()
        .map(|h| {
            h.entries
                .into_iter()
                .map(|e| (e.index, e.sq_dist.sqrt()))
                .unzip::<_, _, Vec<_>, Vec<_>>()
        })
        .unzip();
    Ok(KnnIndex::from_rows_unchecked(indices, distances, k))
}

fn join(heaps: &mut [NeighborHeap], u: usize, w: usize, dist: &impl Fn(usize, usize) -> f64) -> usize {
    if u == w {
        return 0;
    }
    let d = dist(u, w);
    usize::from(heaps[u].push(d, w)) + usize::from(heaps[w].push(d, u))
}

/// Appends up to `k` randomly chosen reverse neighbors to `forward`, without duplicates.
fn merge_sampled(forward: &mut Vec<usize>, reverse: &mut Vec<usize>, k: usize, rng: &mut ChaCha8Rng) {
    reverse.shuffle(rng);
    reverse.truncate(k);
    for &r in reverse.iter() {
        if !forward.contains(&r) {
            forward.push(r);
        }
    }
}
