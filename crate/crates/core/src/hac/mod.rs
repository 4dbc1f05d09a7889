//! Average-linkage hierarchical agglomerative clustering with a distance
//! threshold.
//!
//! [`hac_exact`] merges the closest pair of clusters while their average
//! linkage `d(A, B) = mean_{a in A, b in B} |a - b|` is at most `epsilon`.
//! Linkages are maintained with the Lance-Williams update for average linkage
//! and candidate pairs sit in a lazy min-heap. Equal distances are broken by
//! the pair of smallest member indices, so the output is a pure function of
//! the input.
//!
//! Two scalable variants share the same merge arithmetic:
//! [`hac_multiround`] clusters over a `(k, tau)` nearest-neighbour graph of
//! centroids and repeats on the result, and [`assign_to_clusters`] clusters a
//! subset and attaches the rest to their nearest centroid.

mod assign;
mod clustering;
mod exact;
mod graph;

use std::cell::Cell;

pub use assign::{assign_to_clusters, Assignment};
pub use clustering::{rand_index, Clustering, Merge};
pub use exact::{average_linkage, hac_exact, hac_to_target_size, tune_epsilon, EPSILON_GRID_STEPS};
pub use graph::{hac_multiround, NNGraph};

/// Relative slack on threshold tests. Linkages that equal `epsilon` in exact
/// arithmetic can land a few ulps above it after rounding.
pub const THRESHOLD_RTOL: f64 = 1e-12;

/// `distance <= epsilon` up to [`THRESHOLD_RTOL`].
#[inline]
pub fn within_threshold(distance: f64, epsilon: f64) -> bool {
    distance <= epsilon || distance <= epsilon + epsilon.abs() * THRESHOLD_RTOL
}

thread_local! {
    static RUNS: Cell<usize> = const { Cell::new(0) };
}

/// Number of clustering passes (`hac_exact`, `hac_to_target_size`,
/// `hac_multiround`) started on the current thread.
pub fn invocation_count() -> usize {
    RUNS.with(Cell::get)
}

fn count_invocation() {
    RUNS.with(|c| c.set(c.get() + 1));
}

/// Average-linkage distance of a merged cluster `A ∪ B` to a third cluster,
/// given `d(A, C)`, `d(B, C)` and the weights of `A` and `B`.
///
/// Written as `lo + (hi - lo) * w_hi / (w_a + w_b)` rather than the usual
/// weighted sum: the result can never round below `min(d(A,C), d(B,C))`,
/// which keeps the merge sequence monotone in floating point.
#[inline]
pub(crate) fn average_update(d_a: f64, w_a: f64, d_b: f64, w_b: f64) -> f64 {
    let (lo, hi, w_hi) = if d_a <= d_b {
        (d_a, d_b, w_b)
    } else {
        (d_b, d_a, w_a)
    };
    lo + (hi - lo) * (w_hi / (w_a + w_b))
}

/// Heap entry for a candidate merge. Ordered so that `BinaryHeap` pops the
/// smallest `(distance, a, b)` first.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub distance: f64,
    pub a: u32,
    pub b: u32,
}

impl Candidate {
    pub fn new(distance: f64, x: usize, y: usize) -> Self {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        Self {
            distance,
            a: a as u32,
            b: b as u32,
        }
    }

    fn key(&self) -> (f64, u32, u32) {
        (self.distance, self.a, self.b)
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (d1, a1, b1) = self.key();
        let (d2, a2, b2) = other.key();
        d2.total_cmp(&d1)
            .then_with(|| a2.cmp(&a1))
            .then_with(|| b2.cmp(&b1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BinaryHeap;

    #[test]
    fn heap_pops_smallest_then_lexicographic() {
        let mut heap = BinaryHeap::new();
        heap.push(Candidate::new(0.5, 3, 1));
        heap.push(Candidate::new(0.2, 5, 4));
        heap.push(Candidate::new(0.2, 0, 9));
        heap.push(Candidate::new(0.2, 0, 2));
        let order: Vec<(u32, u32)> = std::iter::from_fn(|| heap.pop()).map(|c| (c.a, c.b)).collect();
        assert_eq!(order, vec![(0, 2), (0, 9), (4, 5), (1, 3)]);
    }

    #[test]
    fn average_update_matches_weighted_mean() {
        let d = average_update(1.0, 2.0, 4.0, 1.0);
        assert!((d - 2.0).abs() < 1e-15);
        assert_eq!(average_update(3.0, 1.0, 3.0, 7.0), 3.0);
        assert_eq!(average_update(4.0, 1.0, 1.0, 2.0), average_update(1.0, 2.0, 4.0, 1.0));
    }
}
