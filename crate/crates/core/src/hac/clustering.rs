use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::{Error, Result};

/// One agglomeration step. `a` and `b` are the smallest member indices of the
/// two clusters; the merged cluster is known by `a` afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// A flat partition of `0..n` into clusters.
///
/// Clusters are stored with sorted members and ordered by their smallest
/// member; a cluster's id is its position in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    epsilon: f64,
    clusters: Vec<Vec<usize>>,
    assignment: Vec<usize>,
    merge_log: Vec<Merge>,
}

impl Clustering {
    pub fn new(epsilon: f64, mut clusters: Vec<Vec<usize>>, merge_log: Vec<Merge>) -> Result<Self> {
        clusters.retain(|c| !c.is_empty());
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        let n: usize = clusters.iter().map(Vec::len).sum();
        let mut assignment = vec![usize::MAX; n];
        for (id, members) in clusters.iter().enumerate() {
            for &i in members {
                if i >= n || assignment[i] != usize::MAX {
                    return Err(Error::arg(format!(
                        "clusters do not partition 0..{n} (index {i})"
                    )));
                }
                assignment[i] = id;
            }
        }
        Ok(Self {
            epsilon,
            clusters,
            assignment,
            merge_log,
        })
    }

    pub fn singletons(n: usize, epsilon: f64) -> Self {
        Self {
            epsilon,
            clusters: (0..n).map(|i| vec![i]).collect(),
            assignment: (0..n).collect(),
            merge_log: Vec::new(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of clustered instances.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster(&self, id: usize) -> &[usize] {
        &self.clusters[id]
    }

    pub fn assignment(&self, instance: usize) -> usize {
        self.assignment[instance]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignment
    }

    pub fn merge_log(&self) -> &[Merge] {
        &self.merge_log
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    pub fn mean_cluster_size(&self) -> f64 {
        self.len() as f64 / self.num_clusters().max(1) as f64
    }

    /// Arithmetic mean of each cluster's rows, in cluster-id order.
    pub fn centroids(&self, points: &Matrix) -> Result<Matrix> {
        if points.rows() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: points.rows(),
            });
        }
        let d = points.cols();
        let mut values = Vec::with_capacity(self.num_clusters() * d);
        for members in &self.clusters {
            let mut c = vec![0.0; d];
            for &i in members {
                for (acc, v) in c.iter_mut().zip(points.row(i)) {
                    *acc += v;
                }
            }
            let inv = 1.0 / members.len() as f64;
            values.extend(c.into_iter().map(|v| v * inv));
        }
        Matrix::new(self.num_clusters(), d, values)
    }

    /// Checks that the merge log is non-decreasing and never exceeds epsilon
    /// (up to [`super::THRESHOLD_RTOL`]).
    pub fn check_merge_log(&self) -> Result<()> {
        for w in self.merge_log.windows(2) {
            if w[1].distance < w[0].distance {
                return Err(Error::arg(format!(
                    "merge distances decrease: {} then {}",
                    w[0].distance, w[1].distance
                )));
            }
        }
        if let Some(m) = self.merge_log.iter().find(|m| !super::within_threshold(m.distance, self.epsilon)) {
            return Err(Error::arg(format!(
                "merge at {} exceeds epsilon {}",
                m.distance, self.epsilon
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ClusteringFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ClusteringFile = serde_json::from_str(text)?;
        Clustering::new(
            file.epsilon.unwrap_or(f64::INFINITY),
            file.clusters,
            file.merge_log
                .into_iter()
                .map(|(a, b, distance)| Merge { a, b, distance })
                .collect(),
        )
    }

    pub fn store(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form. An infinite epsilon is written as `null`.
#[derive(Serialize, Deserialize)]
struct ClusteringFile {
    epsilon: Option<f64>,
    clusters: Vec<Vec<usize>>,
    merge_log: Vec<(usize, usize, f64)>,
}

impl From<&Clustering> for ClusteringFile {
    fn from(c: &Clustering) -> Self {
        Self {
            epsilon: c.epsilon.is_finite().then_some(c.epsilon),
            clusters: c.clusters.clone(),
            merge_log: c.merge_log.iter().map(|m| (m.a, m.b, m.distance)).collect(),
        }
    }
}

/// Rand index between two partitions of the same index set: the fraction of
/// instance pairs on which they agree (together in both or apart in both).
pub fn rand_index(x: &Clustering, y: &Clustering) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Ok(1.0);
    }
    let pairs = |m: usize| (m * m.saturating_sub(1) / 2) as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for i in 0..n {
        *joint.entry((x.assignment(i), y.assignment(i))).or_default() += 1;
    }
    let together_x: f64 = x.sizes().into_iter().map(pairs).sum();
    let together_y: f64 = y.sizes().into_iter().map(pairs).sum();
    let together_both: f64 = joint.values().map(|&m| pairs(m)).sum();
    let total = pairs(n);
    let disagreements = together_x + together_y - 2.0 * together_both;
    Ok((total - disagreements) / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalises_and_validates() {
        let c = Clustering::new(1.0, vec![vec![3, 1], vec![2, 0]], vec![]).unwrap();
        assert_eq!(c.clusters(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(c.assignment(3), 1);
        assert!(Clustering::new(1.0, vec![vec![0, 1], vec![1]], vec![]).is_err());
        assert!(Clustering::new(1.0, vec![vec![0, 2]], vec![]).is_err());
    }

    #[test]
    fn json_round_trip_with_infinite_epsilon() {
        let c = Clustering::new(
            f64::INFINITY,
            vec![vec![0, 1], vec![2]],
            vec![Merge {
                a: 0,
                b: 1,
                distance: 0.25,
            }],
        )
        .unwrap();
        let text = c.to_json().unwrap();
        assert!(text.contains("\"merge_log\":[[0,1,0.25]]"));
        assert_eq!(Clustering::from_json(&text).unwrap(), c);
    }

    #[test]
    fn rand_index_examples() {
        let a = Clustering::new(0.0, vec![vec![0, 1], vec![2, 3]], vec![]).unwrap();
        let b = Clustering::new(0.0, vec![vec![0, 1, 2, 3]], vec![]).unwrap();
        assert_eq!(rand_index(&a, &a).unwrap(), 1.0);
        // Pairs: 01 23 agree; 02 03 12 13 disagree.
        assert!((rand_index(&a, &b).unwrap() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn centroids_are_member_means() {
        let pts = Matrix::new(3, 1, vec![0.0, 2.0, 10.0]).unwrap();
        let c = Clustering::new(1.0, vec![vec![0, 1], vec![2]], vec![]).unwrap();
        assert_eq!(c.centroids(&pts).unwrap().as_slice(), &[1.0, 10.0]);
    }
}
