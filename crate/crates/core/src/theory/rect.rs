use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::{check_trials, mean_and_se, run_trials, BetaEstimate, Cdf, UniformCdf};
use crate::data::{squared_distance, Matrix};
use crate::{Error, Result};

/// Axis-aligned box `prod_i [a_i, b_i]` inside the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VersionSpaceBox {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl VersionSpaceBox {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::arg("box corners must share a positive dimension"));
        }
        if a.iter().zip(&b).any(|(&lo, &hi)| !(0.0 <= lo && lo <= hi && hi <= 1.0)) {
            return Err(Error::arg("box needs 0 <= a_i <= b_i <= 1"));
        }
        Ok(Self { a, b })
    }

    pub fn lower(&self) -> &[f64] {
        &self.a
    }

    pub fn upper(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// `prod_i F_i(b_i) - prod_i F_i(a_i)`: the largest disagreement mass between
/// two origin-anchored boxes whose corners lie in `range`.
pub fn rectangle_diameter(range: &VersionSpaceBox, cdfs: &[&dyn Cdf]) -> Result<f64> {
    if cdfs.len() != range.dim() {
        return Err(Error::Dimension {
            expected: range.dim(),
            got: cdfs.len(),
        });
    }
    let hi: f64 = range.b.iter().zip(cdfs).map(|(&v, f)| f.cdf(v)).product();
    let lo: f64 = range.a.iter().zip(cdfs).map(|(&v, f)| f.cdf(v)).product();
    Ok((hi - lo).max(0.0))
}

/// Per-axis range of corners `w` for which the box `[0, w]` labels every
/// sampled point like `[0, v]` does.
///
/// `a_i` is the largest positive coordinate. `b_i` is the smallest `x_i`
/// over negatives that exceed the lower corner on axis `i` only; a negative
/// that exceeds it on several axes constrains no single axis and is skipped,
/// so the result contains the exact version space.
pub fn version_space_box(points: &Matrix, sample: &[usize], v: &[f64]) -> Result<VersionSpaceBox> {
    let d = points.cols();
    if v.len() != d {
        return Err(Error::Dimension { expected: d, got: v.len() });
    }
    let positive = |x: &[f64]| x.iter().zip(v).all(|(xi, vi)| xi <= vi);
    let mut a = vec![0.0f64; d];
    for &i in sample {
        let x = points.row(i);
        if positive(x) {
            a.iter_mut().zip(x).for_each(|(ai, &xi)| *ai = ai.max(xi));
        }
    }
    let mut b = vec![1.0f64; d];
    for &i in sample {
        let x = points.row(i);
        if positive(x) {
            continue;
        }
        let mut above = x.iter().zip(&a).enumerate().filter(|(_, (xi, ai))| xi > ai);
        if let (Some((axis, (&xi, _))), None) = (above.next(), above.next()) {
            b[axis] = b[axis].min(xi);
        }
    }
    VersionSpaceBox::new(a, b)
}

fn prod_cdf(w: &[f64], cdfs: &[&dyn Cdf]) -> f64 {
    w.iter().zip(cdfs).map(|(&v, f)| f.cdf(v)).product()
}

fn meet_mass(w: &[f64], u: &[f64], cdfs: &[&dyn Cdf]) -> f64 {
    w.iter().zip(u).zip(cdfs).map(|((&x, &y), f)| f.cdf(x.min(y))).product()
}

/// Largest disagreement mass between two origin-anchored boxes that label
/// every sampled point like `[0, v]` does.
///
/// The consistent corners form a meet-closed set with least element `a` (the
/// componentwise maximum of the positives); its maximal elements are found by
/// choosing, on every axis but the last, either 1 or a coordinate of some
/// negative as the (open) upper limit, the last axis then being forced. The
/// diameter is the largest `P(w) + P(u) - 2 P(w ^ u)` over pairs of those
/// corners and `a`. When the consistent set is a box this is
/// `prod F(b) - prod F(a)` as in [`rectangle_diameter`].
pub fn version_space_diameter(points: &Matrix, sample: &[usize], v: &[f64], cdfs: &[&dyn Cdf]) -> Result<f64> {
    let d = points.cols();
    if v.len() != d || cdfs.len() != d {
        return Err(Error::Dimension { expected: d, got: v.len().min(cdfs.len()) });
    }
    let lower = version_space_box(points, sample, v)?;
    let a = lower.lower().to_vec();
    let negatives: Vec<&[f64]> = sample
        .iter()
        .map(|&i| points.row(i))
        .filter(|x| x.iter().zip(v).any(|(xi, vi)| xi > vi))
        .collect();
    let candidates: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut c: Vec<f64> = negatives.iter().map(|x| x[i]).filter(|&xi| xi > a[i]).collect();
            c.push(1.0);
            c.sort_unstable_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    let mut corners: Vec<Vec<f64>> = Vec::new();
    let mut w = vec![0.0; d];
    fn walk(
        axis: usize,
        w: &mut Vec<f64>,
        alive: &[&[f64]],
        a: &[f64],
        candidates: &[Vec<f64>],
        corners: &mut Vec<Vec<f64>>,
    ) {
        let d = w.len();
        if axis + 1 == d {
            let top = alive.iter().map(|x| x[axis]).fold(1.0f64, f64::min);
            if top > a[axis] || (alive.is_empty() && top >= a[axis]) {
                w[axis] = top;
                corners.push(w.clone());
            }
            return;
        }
        for &c in &candidates[axis] {
            w[axis] = c;
            let rest: Vec<&[f64]> = alive.iter().copied().filter(|x| x[axis] < c).collect();
            walk(axis + 1, w, &rest, a, candidates, corners);
        }
    }
    walk(0, &mut w, &negatives, &a, &candidates, &mut corners);
    // Keep the maximal corners only.
    corners.sort_by(|x, y| y.iter().zip(x).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let mut maximal: Vec<Vec<f64>> = Vec::new();
    for c in corners {
        if !maximal.iter().any(|m| m.iter().zip(&c).all(|(p, q)| p >= q)) {
            maximal.push(c);
        }
    }
    maximal.push(a.clone());
    let mass: Vec<f64> = maximal.iter().map(|w| prod_cdf(w, cdfs)).collect();
    let mut best: f64 = 0.0;
    for i in 0..maximal.len() {
        for j in i + 1..maximal.len() {
            let dis = mass[i] + mass[j] - 2.0 * meet_mass(&maximal[i], &maximal[j], cdfs);
            best = best.max(dis);
        }
    }
    Ok(best.max(0.0))
}

/// For each axis `i` and `j = 1..=k/d`, the pool point nearest to
/// `F_i^{-1}(j d / k) e_i`; a point already taken is replaced by the next
/// nearest one. Ties go to the smaller index.
pub fn axis_quantile_sampler(x: &Matrix, k: usize, cdfs: &[&dyn Cdf]) -> Result<Vec<usize>> {
    let d = x.cols();
    if cdfs.len() != d {
        return Err(Error::Dimension { expected: d, got: cdfs.len() });
    }
    if d == 0 || !k.is_multiple_of(d) {
        return Err(Error::arg(format!("k = {k} must be a multiple of the dimension {d}")));
    }
    if k > x.rows() {
        return Err(Error::arg(format!("k = {k} exceeds the pool size {}", x.rows())));
    }
    let per_axis = k / d;
    let mut taken = vec![false; x.rows()];
    let mut out = Vec::with_capacity(k);
    let mut target = vec![0.0; d];
    for (axis, f) in cdfs.iter().enumerate() {
        for j in 1..=per_axis {
            target.iter_mut().for_each(|t| *t = 0.0);
            target[axis] = f.quantile(j as f64 / per_axis as f64);
            let mut best = (f64::INFINITY, usize::MAX);
            for (i, row) in x.iter_rows().enumerate() {
                if !taken[i] {
                    let dist = squared_distance(row, &target);
                    if dist < best.0 {
                        best = (dist, i);
                    }
                }
            }
            taken[best.1] = true;
            out.push(best.1);
        }
    }
    Ok(out)
}

/// Origin-anchored boxes on Uniform[0, 1]^d with a uniformly random true
/// corner: axis quantile sampler versus `k` uniform picks.
pub fn beta_estimate_rect(n: usize, k: usize, d: usize, trials: usize, seed: u64) -> Result<BetaEstimate> {
    check_trials(trials, n, k)?;
    if d == 0 || !k.is_multiple_of(d) {
        return Err(Error::arg(format!("k = {k} must be a positive multiple of d = {d}")));
    }
    let cdfs: Vec<&dyn Cdf> = vec![&UniformCdf; d];
    let bound = (d * d) as f64 / k as f64;
    let pairs = run_trials(trials, seed, |r| {
        let x = Matrix::new(n, d, (0..n * d).map(|_| r.random::<f64>()).collect()).expect("finite");
        let v: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
        let s = axis_quantile_sampler(&x, k, &cdfs).expect("validated shape");
        let u = index::sample(r, n, k).into_vec();
        let diam = |sample: &[usize]| version_space_diameter(&x, sample, &v, &cdfs).expect("valid shape");
        (diam(&s), diam(&u))
    });
    let violations = pairs.iter().filter(|(db, _)| *db > bound).count();
    let (b, u): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (mb, sb) = mean_and_se(&b);
    let (mu, su) = mean_and_se(&u);
    Ok(BetaEstimate {
        k,
        n,
        d,
        trials,
        mean_diam_structured: mb,
        mean_diam_uniform: mu,
        beta_hat: mb / mu,
        std_errors: [sb, su],
        regime_warning: (k as f64).powi(2) > n as f64,
        bound_violations: Some(violations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{beta_estimate_1d, quantile_sampler_1d};

    #[test]
    fn diameter_examples() {
        let f: Vec<&dyn Cdf> = vec![&UniformCdf; 2];
        let same = VersionSpaceBox::new(vec![0.3, 0.6], vec![0.3, 0.6]).unwrap();
        assert_eq!(rectangle_diameter(&same, &f).unwrap(), 0.0);
        let b = VersionSpaceBox::new(vec![0.5, 0.5], vec![0.75, 0.75]).unwrap();
        assert!((rectangle_diameter(&b, &f).unwrap() - 0.3125).abs() < 1e-15);
        let full = VersionSpaceBox::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(rectangle_diameter(&full, &f).unwrap(), 1.0);
        assert!(VersionSpaceBox::new(vec![0.6], vec![0.5]).is_err());
    }

    #[test]
    fn axis_sampler_examples() {
        let x = Matrix::from_rows(&[
            vec![0.5, 0.01],
            vec![0.99, 0.02],
            vec![0.01, 0.48],
            vec![0.02, 0.97],
            vec![0.7, 0.7],
        ])
        .unwrap();
        let f: Vec<&dyn Cdf> = vec![&UniformCdf; 2];
        assert_eq!(axis_quantile_sampler(&x, 4, &f).unwrap(), vec![0, 1, 2, 3]);
        assert!(axis_quantile_sampler(&x, 3, &f).is_err());
        let line = [0.05, 0.93, 0.4, 0.61, 0.27, 0.8];
        let col = Matrix::column(&line).unwrap();
        let picked: Vec<f64> = axis_quantile_sampler(&col, 3, &[&UniformCdf]).unwrap().into_iter().map(|i| line[i]).collect();
        let mut picked_sorted = picked.clone();
        picked_sorted.sort_unstable_by(f64::total_cmp);
        assert_eq!(picked_sorted, quantile_sampler_1d(&line, 3, &UniformCdf).unwrap());
    }

    #[test]
    fn box_extraction() {
        let x = Matrix::from_rows(&[vec![0.2, 0.1], vec![0.6, 0.05], vec![0.1, 0.9], vec![0.8, 0.8]]).unwrap();
        let b = version_space_box(&x, &[0, 1, 2, 3], &[0.5, 0.5]).unwrap();
        assert_eq!(b.lower(), &[0.2, 0.1]);
        assert_eq!(b.upper(), &[0.6, 0.9]);
    }

    #[test]
    fn one_dimension_matches_thresholds() {
        let r = beta_estimate_rect(5000, 20, 1, 400, 5).unwrap();
        let t = beta_estimate_1d(5000, 20, 400, 5).unwrap();
        let gap = (r.mean_diam_structured - t.mean_diam_structured).abs();
        assert!(gap <= 4.0 * (r.std_errors[0] + t.std_errors[0]) + 0.1 / 20.0, "{r:?} {t:?}");
    }
}
