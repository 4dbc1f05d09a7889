//! Synthetic Gaussian mixtures with controllable redundancy.
//!
//! Each class `c` has a center at `separation * u_c`: `u_c = e_c` when the
//! dimension can hold one axis per class, otherwise `L` equally spaced unit
//! vectors on the circle spanned by the first two axes (and `c * separation`
//! on the line when `d == 1`). A base point is its center plus standard normal
//! noise; every base point appears `duplication` times, copies after the first
//! being jittered by noise of scale `separation / 100`.

use std::f64::consts::TAU;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Dataset, LabelTriple, Labels, Matrix};
use crate::rng::{self, Rng as StreamRng};
use crate::{Error, Result};

const POOL_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

fn class_center(c: usize, num_classes: usize, dim: usize, separation: f64) -> Vec<f64> {
    let mut center = vec![0.0; dim];
    if num_classes <= dim {
        center[c] = separation;
    } else if dim >= 2 {
        let angle = TAU * c as f64 / num_classes as f64;
        center[0] = separation * angle.cos();
        center[1] = separation * angle.sin();
    } else {
        center[0] = separation * c as f64;
    }
    center
}

fn push_noisy(out: &mut Vec<f64>, base: &[f64], scale: f64, rng: &mut StreamRng) {
    out.extend(base.iter().map(|&b| {
        let z: f64 = rng.sample(StandardNormal);
        b + scale * z
    }));
}

/// Parameters for a multiclass mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMixture {
    pub num_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub duplication: usize,
    pub seed: u64,
}

impl GaussianMixture {
    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::arg("mixture needs at least two classes"));
        }
        if self.dim == 0 {
            return Err(Error::arg("mixture dimension must be positive"));
        }
        if self.duplication == 0 {
            return Err(Error::arg("duplication must be at least 1"));
        }
        if !self.separation.is_finite() || self.separation < 0.0 {
            return Err(Error::arg("separation must be finite and non-negative"));
        }
        Ok(())
    }

    fn centers(&self) -> Vec<Vec<f64>> {
        (0..self.num_classes)
            .map(|c| class_center(c, self.num_classes, self.dim, self.separation))
            .collect()
    }

    fn draw(&self, per_class: usize, duplication: usize, stream: u64) -> Result<Dataset> {
        self.validate()?;
        let centers = self.centers();
        let mut rng = rng::stream(self.seed, stream);
        let n = self.num_classes * per_class * duplication;
        let mut values = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        let jitter = self.separation / 100.0;
        let mut base = Vec::with_capacity(self.dim);
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per_class {
                base.clear();
                push_noisy(&mut base, center, 1.0, &mut rng);
                values.extend_from_slice(&base);
                labels.push(c);
                for _ in 1..duplication {
                    push_noisy(&mut values, &base, jitter, &mut rng);
                    labels.push(c);
                }
            }
        }
        let features = Matrix::new(n, self.dim, values)?;
        Dataset::new(features, Labels::Multiclass(labels), self.num_classes)
    }

    /// The training pool: `num_classes * per_class * duplication` instances,
    /// grouped by class, copies of one base point adjacent.
    pub fn generate(&self) -> Result<Dataset> {
        self.draw(self.per_class, self.duplication, POOL_STREAM)
    }

    /// Fresh base points from the same class centers, without duplication.
    pub fn test_set(&self, per_class: usize) -> Result<Dataset> {
        self.draw(per_class, 1, TEST_STREAM)
    }
}

pub fn synth_gaussian_mixture(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    duplication: usize,
    seed: u64,
) -> Result<Dataset> {
    GaussianMixture {
        num_classes,
        per_class,
        dim,
        separation,
        duplication,
        seed,
    }
    .generate()
}

/// Multilabel mixture with partial annotation.
///
/// Each base instance carries between 2 and 5 positive classes (capped at
/// `num_classes - 1`); its features are the mean of the positive class centers
/// plus unit noise. Every positive is annotated, together with as many
/// negatives drawn from the remaining classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultilabelMixture {
    pub num_classes: usize,
    pub instances: usize,
    pub dim: usize,
    pub separation: f64,
    pub duplication: usize,
    pub seed: u64,
}

impl MultilabelMixture {
    fn draw(&self, instances: usize, duplication: usize, stream: u64) -> Result<Dataset> {
        if self.num_classes < 3 {
            return Err(Error::arg("multilabel mixture needs at least three classes"));
        }
        if self.dim == 0 || duplication == 0 {
            return Err(Error::arg("dimension and duplication must be positive"));
        }
        let centers: Vec<Vec<f64>> = (0..self.num_classes)
            .map(|c| class_center(c, self.num_classes, self.dim, self.separation))
            .collect();
        let mut rng = rng::stream(self.seed, stream);
        let max_pos = 5.min(self.num_classes - 1);
        let min_pos = 2.min(max_pos);
        let jitter = self.separation / 100.0;
        let mut values = Vec::new();
        let mut triples = Vec::new();
        let mut row = 0;
        for _ in 0..instances {
            let m = rng.random_range(min_pos..=max_pos);
            let classes = index::sample(&mut rng, self.num_classes, self.num_classes).into_vec();
            let (pos, neg) = classes.split_at(m);
            let mut mean = vec![0.0; self.dim];
            for &c in pos {
                for (acc, v) in mean.iter_mut().zip(&centers[c]) {
                    *acc += v / m as f64;
                }
            }
            let mut base = Vec::with_capacity(self.dim);
            push_noisy(&mut base, &mean, 1.0, &mut rng);
            let negs = &neg[..m.min(neg.len())];
            for copy in 0..duplication {
                if copy == 0 {
                    values.extend_from_slice(&base);
                } else {
                    push_noisy(&mut values, &base, jitter, &mut rng);
                }
                let mut annotated: Vec<LabelTriple> = pos
                    .iter()
                    .map(|&c| (c, true))
                    .chain(negs.iter().map(|&c| (c, false)))
                    .map(|(class, positive)| LabelTriple {
                        instance: row,
                        class,
                        positive,
                    })
                    .collect();
                annotated.sort_by_key(|t| t.class);
                triples.extend(annotated);
                row += 1;
            }
        }
        let features = Matrix::new(row, self.dim, values)?;
        Dataset::new(features, Labels::Multilabel(triples), self.num_classes)
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.draw(self.instances, self.duplication, POOL_STREAM)
    }

    pub fn test_set(&self, instances: usize) -> Result<Dataset> {
        self.draw(instances, 1, TEST_STREAM)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_one_per_class() {
        let ds = synth_gaussian_mixture(2, 1, 1, 10.0, 1, 7).unwrap();
        assert_eq!(ds.num_instances(), 2);
        let mut ys = ds.multiclass_labels().unwrap().to_vec();
        ys.sort_unstable();
        assert_eq!(ys, vec![0, 1]);
    }

    #[test]
    fn counts_with_duplication() {
        let ds = synth_gaussian_mixture(3, 100, 2, 5.0, 3, 1).unwrap();
        assert_eq!(ds.num_instances(), 900);
        let ys = ds.multiclass_labels().unwrap();
        for c in 0..3 {
            assert_eq!(ys.iter().filter(|&&y| y == c).count(), 300);
        }
    }

    #[test]
    fn same_seed_bit_identical() {
        let a = synth_gaussian_mixture(3, 20, 4, 3.0, 2, 99).unwrap();
        let b = synth_gaussian_mixture(3, 20, 4, 3.0, 2, 99).unwrap();
        let c = synth_gaussian_mixture(3, 20, 4, 3.0, 2, 100).unwrap();
        assert!(a
            .features()
            .as_slice()
            .iter()
            .zip(b.features().as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn copies_stay_close_to_their_base() {
        let ds = synth_gaussian_mixture(2, 5, 3, 4.0, 4, 3).unwrap();
        let x = ds.features();
        for base in (0..x.rows()).step_by(4) {
            for copy in 1..4 {
                let d = super::super::euclidean_distance(x.row(base), x.row(base + copy)).unwrap();
                assert!(d < 0.5, "copy drifted {d}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(synth_gaussian_mixture(1, 5, 2, 1.0, 1, 0).is_err());
        assert!(synth_gaussian_mixture(2, 5, 0, 1.0, 1, 0).is_err());
        assert!(synth_gaussian_mixture(2, 5, 2, 1.0, 0, 0).is_err());
    }

    #[test]
    fn multilabel_annotations() {
        let mix = MultilabelMixture {
            num_classes: 8,
            instances: 50,
            dim: 8,
            separation: 3.0,
            duplication: 2,
            seed: 5,
        };
        let ds = mix.generate().unwrap();
        assert_eq!(ds.num_instances(), 100);
        let t = ds.triples().unwrap();
        for i in 0..ds.num_instances() {
            let pos = t.iter().filter(|a| a.instance == i && a.positive).count();
            let neg = t.iter().filter(|a| a.instance == i && !a.positive).count();
            assert!((2..=5).contains(&pos));
            assert_eq!(neg, pos.min(8 - pos));
        }
    }
}
