use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::check_budget;
use crate::hac::Clustering;
use crate::rng;
use crate::{Error, Result};

/// Round-robin over the clusters induced on `candidates` by `cluster_of`.
///
/// Induced clusters are visited smallest first (ties by cluster id). Each
/// pass takes one uniformly random unselected member from every cluster that
/// still has one, until `k_t` indices are chosen.
pub fn round_robin_select(
    candidates: &[usize],
    cluster_of: impl Fn(usize) -> usize,
    k_t: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    check_budget(k_t, candidates.len())?;
    let mut induced: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in candidates {
        induced.entry(cluster_of(i)).or_default().push(i);
    }
    let mut groups: Vec<(usize, Vec<usize>)> = induced.into_iter().collect();
    groups.sort_by_key(|(id, members)| (members.len(), *id));
    let mut r = rng::stream(seed, 0);
    for (_, members) in &mut groups {
        members.sort_unstable();
        members.dedup();
        members.shuffle(&mut r);
    }
    if groups.iter().map(|(_, m)| m.len()).sum::<usize>() != candidates.len() {
        return Err(Error::arg("candidate list contains repeated indices"));
    }
    let mut selected = Vec::with_capacity(k_t);
    let mut taken = 0;
    while selected.len() < k_t {
        for (_, members) in &groups {
            if selected.len() == k_t {
                break;
            }
            if let Some(&i) = members.get(taken) {
                selected.push(i);
            }
        }
        taken += 1;
    }
    Ok(selected)
}

/// [`round_robin_select`] with clusters taken from a HAC clustering.
pub fn cluster_margin_select(m: &[usize], clustering: &Clustering, k_t: usize, seed: u64) -> Result<Vec<usize>> {
    if let Some(&bad) = m.iter().find(|&&i| i >= clustering.len()) {
        return Err(Error::arg(format!("index {bad} is not covered by the clustering")));
    }
    round_robin_select(m, |i| clustering.assignment(i), k_t, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(selected: &[usize], c: &Clustering) -> Vec<usize> {
        let mut out = vec![0; c.num_clusters()];
        for &i in selected {
            out[c.assignment(i)] += 1;
        }
        out
    }

    #[test]
    fn sizes_one_two_three() {
        let c = Clustering::new(1.0, vec![vec![0], vec![1, 2], vec![3, 4, 5]], vec![]).unwrap();
        let m = [0, 1, 2, 3, 4, 5];
        for seed in 0..20 {
            let s = cluster_margin_select(&m, &c, 5, seed).unwrap();
            assert_eq!(counts(&s, &c), vec![1, 2, 2]);
        }
        let s = cluster_margin_select(&m, &c, 3, 1).unwrap();
        assert_eq!(counts(&s, &c), vec![1, 1, 1]);
        let mut all = cluster_margin_select(&m, &c, 6, 1).unwrap();
        all.sort_unstable();
        assert_eq!(all, m);
        assert!(cluster_margin_select(&m, &c, 7, 1).is_err());
    }

    #[test]
    fn restricted_to_candidates() {
        let c = Clustering::new(1.0, vec![vec![0, 1, 2, 3], vec![4], vec![5, 6]], vec![]).unwrap();
        // Induced sizes: cluster 0 -> 1 ({3}), cluster 2 -> 2.
        let s = cluster_margin_select(&[3, 5, 6], &c, 2, 0).unwrap();
        assert_eq!(s[0], 3);
        assert!(s[1] == 5 || s[1] == 6);
    }

    proptest! {
        #[test]
        fn distinct_members_and_coverage(labels in proptest::collection::vec(0usize..8, 1..60), frac in 0.0f64..1.0, seed: u64) {
            let n = labels.len();
            let mut groups = vec![Vec::new(); 8];
            for (i, &g) in labels.iter().enumerate() {
                groups[g].push(i);
            }
            let c = Clustering::new(1.0, groups, vec![]).unwrap();
            let m: Vec<usize> = (0..n).collect();
            let k = ((n as f64) * frac) as usize;
            let s = cluster_margin_select(&m, &c, k, seed).unwrap();
            let mut sorted = s.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), k);
            if k >= c.num_clusters() {
                prop_assert!(counts(&s, &c).iter().all(|&x| x >= 1));
            }
        }
    }
}
