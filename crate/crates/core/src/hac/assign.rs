use super::{within_threshold, Clustering};
use crate::data::{matrix::squared_distance, Matrix};
use crate::{Error, Result};

/// Result of [`assign_to_clusters`].
#[derive(Debug, Clone)]
pub struct Assignment {
    /// Partition of `0..base + new`: base instances keep their indices, new
    /// point `j` becomes instance `base_points.rows() + j`.
    pub clustering: Clustering,
    /// Point-to-centroid distances evaluated, `|clusters| * |new points|`.
    pub distance_evaluations: usize,
}

/// Attaches each new point to its nearest base centroid (ties to the smaller
/// cluster id) when that centroid is within `epsilon_c`; otherwise the point
/// becomes a singleton. Centroids are those of `base` and stay fixed.
pub fn assign_to_clusters(
    points: &Matrix,
    base: &Clustering,
    base_points: &Matrix,
    epsilon_c: f64,
) -> Result<Assignment> {
    if base.is_empty() {
        return Err(Error::arg("base clustering is empty"));
    }
    if points.cols() != base_points.cols() {
        return Err(Error::Dimension {
            expected: base_points.cols(),
            got: points.cols(),
        });
    }
    if epsilon_c.is_nan() || epsilon_c < 0.0 {
        return Err(Error::arg(format!("epsilon_c must be >= 0, got {epsilon_c}")));
    }
    let centroids = base.centroids(base_points)?;
    let offset = base.len();
    let mut clusters: Vec<Vec<usize>> = base.clusters().to_vec();
    let mut evaluations = 0;
    for (j, x) in points.iter_rows().enumerate() {
        let mut best = (f64::INFINITY, 0usize);
        for (id, c) in centroids.iter_rows().enumerate() {
            let d = squared_distance(x, c);
            evaluations += 1;
            if d < best.0 {
                best = (d, id);
            }
        }
        let instance = offset + j;
        if within_threshold(best.0.sqrt(), epsilon_c) {
            clusters[best.1].push(instance);
        } else {
            clusters.push(vec![instance]);
        }
    }
    Ok(Assignment {
        clustering: Clustering::new(base.epsilon(), clusters, base.merge_log().to_vec())?,
        distance_evaluations: evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_gaussian_mixture;
    use crate::hac::{hac_exact, rand_index};

    #[test]
    fn point_on_centroid_joins() {
        let base_pts = Matrix::column(&[0.0, 2.0, 10.0]).unwrap();
        let base = Clustering::new(1.5, vec![vec![0, 1], vec![2]], vec![]).unwrap();
        let out = assign_to_clusters(&Matrix::column(&[1.0]).unwrap(), &base, &base_pts, 0.5).unwrap();
        assert_eq!(out.clustering.cluster(0), &[0, 1, 3]);
        assert_eq!(out.distance_evaluations, 2);
    }

    #[test]
    fn far_point_becomes_singleton_and_base_is_untouched() {
        let base_pts = Matrix::column(&[0.0, 2.0, 10.0]).unwrap();
        let base = Clustering::new(1.5, vec![vec![0, 1], vec![2]], vec![]).unwrap();
        let out = assign_to_clusters(&Matrix::column(&[5.0]).unwrap(), &base, &base_pts, 1.0).unwrap();
        assert_eq!(out.clustering.num_clusters(), 3);
        assert_eq!(out.clustering.cluster(2), &[3]);
        assert_eq!(out.clustering.cluster(0), &[0, 1]);
        assert_eq!(out.clustering.cluster(1), &[2]);
    }

    #[test]
    fn dimension_mismatch() {
        let base_pts = Matrix::column(&[0.0]).unwrap();
        let base = Clustering::singletons(1, 1.0);
        assert!(assign_to_clusters(&Matrix::zeros(1, 2), &base, &base_pts, 1.0).is_err());
    }

    #[test]
    fn seeded_assignment_tracks_full_hac() {
        let ds = synth_gaussian_mixture(4, 50, 3, 6.0, 5, 21).unwrap();
        let x = ds.features();
        let n = x.rows();
        assert_eq!(n, 1000);
        // Every tenth instance forms the seed subset; reorder so it comes first.
        let seed_idx: Vec<usize> = (0..n).step_by(10).collect();
        let rest: Vec<usize> = (0..n).filter(|i| i % 10 != 0).collect();
        let order: Vec<usize> = seed_idx.iter().chain(&rest).copied().collect();
        let reordered = x.select_rows(&order);
        let eps = 1.0;
        let seed_pts = x.select_rows(&seed_idx);
        let base = hac_exact(&seed_pts, eps).unwrap();
        let out = assign_to_clusters(&x.select_rows(&rest), &base, &seed_pts, eps).unwrap();
        assert_eq!(out.distance_evaluations, base.num_clusters() * rest.len());
        let full = hac_exact(&reordered, eps).unwrap();
        let ri = rand_index(&full, &out.clustering).unwrap();
        assert!(ri >= 0.90, "rand index {ri}");
    }
}
