//! Multi-round HAC over `(k, tau)` nearest-neighbour graphs.
//!
//! Each round clusters the centroids of the previous round's clusters, but
//! only lets two clusters merge when some pair of their nodes shares an
//! edge. Linkages along edges follow the same Lance-Williams update as
//! [`super::hac_exact`]; when only one side of a merge has an edge to a third
//! cluster, the missing linkage is computed directly from the node
//! positions. With a complete graph the first round therefore replays
//! `hac_exact` step for step.

use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;

use super::{average_update, count_invocation, within_threshold, Candidate, Clustering, Merge};
use crate::data::{matrix::distance, Matrix};
use crate::{Error, Result};

/// Symmetric `(k, tau)`-nearest-neighbour graph: `u ~ v` iff one is among the
/// other's `k` nearest neighbours (ties by index) and `|u - v| <= tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct NNGraph {
    k: usize,
    tau: f64,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NNGraph {
    pub fn build(points: &Matrix, k: usize, tau: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("nearest-neighbour graph needs k >= 1"));
        }
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::arg(format!("tau must be >= 0, got {tau}")));
        }
        let n = points.rows();
        let knn: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let xu = points.row(u);
                let mut cands: Vec<(usize, f64)> = (0..n)
                    .filter(|&v| v != u)
                    .map(|v| (v, distance(xu, points.row(v))))
                    .collect();
                let order = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
                if cands.len() > k {
                    cands.select_nth_unstable_by(k - 1, order);
                    cands.truncate(k);
                }
                cands.sort_unstable_by(order);
                cands
            })
            .collect();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (u, nn) in knn.iter().enumerate() {
            for &(v, d) in nn {
                if d <= tau {
                    adjacency[u].push((v, d));
                    adjacency[v].push((u, d));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(v, _)| v);
            list.dedup_by_key(|&mut (v, _)| v);
        }
        Ok(Self { k, tau, adjacency })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Neighbours of `u` with edge lengths, ascending by id.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[u]
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search_by_key(&v, |&(w, _)| w).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

struct RoundOutput {
    groups: Vec<Vec<usize>>,
    merges: Vec<Merge>,
}

/// Graph-restricted average-linkage HAC over weighted nodes.
fn graph_round(nodes: &Matrix, weights: &[f64], graph: &NNGraph, epsilon: f64) -> RoundOutput {
    let n = nodes.rows();
    let mut adj: Vec<BTreeMap<usize, f64>> = (0..n)
        .map(|u| graph.neighbors(u).iter().copied().collect())
        .collect();
    let mut heap = BinaryHeap::new();
    for (u, list) in adj.iter().enumerate() {
        for (&v, &d) in list.range(u + 1..) {
            if within_threshold(d, epsilon) {
                heap.push(Candidate::new(d, u, v));
            }
        }
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
    let mut weight = weights.to_vec();
    let mut alive = vec![true; n];
    let mut merges = Vec::new();

    let linkage = |a: &[usize], b: &[usize], wa: f64, wb: f64| -> f64 {
        let mut total = 0.0;
        for &u in a {
            for &v in b {
                total += weights[u] * weights[v] * distance(nodes.row(u), nodes.row(v));
            }
        }
        total / (wa * wb)
    };

    while let Some(cand) = heap.pop() {
        let (a, b) = (cand.a as usize, cand.b as usize);
        if !alive[a] || !alive[b] || adj[a].get(&b) != Some(&cand.distance) {
            continue;
        }
        merges.push(Merge {
            a,
            b,
            distance: cand.distance,
        });
        let (wa, wb) = (weight[a], weight[b]);
        let adj_a = std::mem::take(&mut adj[a]);
        let adj_b = std::mem::take(&mut adj[b]);
        let mut neighbours: Vec<usize> = adj_a.keys().chain(adj_b.keys()).copied().collect();
        neighbours.sort_unstable();
        neighbours.dedup();
        let mut merged = BTreeMap::new();
        for c in neighbours {
            if c == a || c == b {
                continue;
            }
            let da = adj_a
                .get(&c)
                .copied()
                .unwrap_or_else(|| linkage(&members[a], &members[c], wa, weight[c]));
            let db = adj_b
                .get(&c)
                .copied()
                .unwrap_or_else(|| linkage(&members[b], &members[c], wb, weight[c]));
            let d = average_update(da, wa, db, wb);
            merged.insert(c, d);
            adj[c].remove(&b);
            adj[c].insert(a, d);
            if within_threshold(d, epsilon) {
                heap.push(Candidate::new(d, a, c));
            }
        }
        adj[a] = merged;
        alive[b] = false;
        weight[a] = wa + wb;
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
    }
    RoundOutput {
        groups: members.into_iter().filter(|m| !m.is_empty()).collect(),
        merges,
    }
}

/// Multi-round HAC. Round one runs on the points themselves; every later
/// round runs on the centroids of the clusters found so far, weighted by
/// cluster size. Stops early once a round makes no merge.
///
/// `merge_log` is non-decreasing within each round; a later round may merge
/// at a smaller centroid distance than an earlier one.
pub fn hac_multiround(
    points: &Matrix,
    epsilon: f64,
    knn_k: usize,
    tau: f64,
    rounds: usize,
) -> Result<Clustering> {
    if points.rows() == 0 {
        return Err(Error::arg("cannot cluster zero points"));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::arg(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if rounds == 0 {
        return Err(Error::arg("multi-round HAC needs at least one round"));
    }
    count_invocation();
    let mut current = Clustering::singletons(points.rows(), epsilon);
    let mut log = Vec::new();
    for _ in 0..rounds {
        let centroids = current.centroids(points)?;
        let weights: Vec<f64> = current.sizes().into_iter().map(|s| s as f64).collect();
        let graph = NNGraph::build(&centroids, knn_k, tau)?;
        let out = graph_round(&centroids, &weights, &graph, epsilon);
        if out.merges.is_empty() {
            break;
        }
        // Node ids follow cluster order, i.e. smallest member order.
        let rep = |node: usize| current.cluster(node)[0];
        log.extend(out.merges.iter().map(|m| Merge {
            a: rep(m.a),
            b: rep(m.b),
            distance: m.distance,
        }));
        let groups = out
            .groups
            .iter()
            .map(|nodes| nodes.iter().flat_map(|&u| current.cluster(u).iter().copied()).collect())
            .collect();
        current = Clustering::new(epsilon, groups, Vec::new())?;
    }
    Clustering::new(epsilon, current.clusters().to_vec(), log)
}
