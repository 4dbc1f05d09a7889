use crate::data::Matrix;
use crate::{Error, Result};

use super::check_budget;

/// Gap between the two largest probabilities of each row.
pub fn margin_scores(probs: &Matrix) -> Result<Vec<f64>> {
    if probs.cols() < 2 {
        return Err(Error::arg("margin needs at least two classes"));
    }
    Ok(probs
        .iter_rows()
        .map(|row| {
            let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &p in row {
                if p > first {
                    second = first;
                    first = p;
                } else if p > second {
                    second = p;
                }
            }
            first - second
        })
        .collect())
}

/// Margin of a single binary probability, `|2p - 1|`.
pub fn binary_margin(p: f64) -> f64 {
    (2.0 * p - 1.0).abs()
}

/// `h[y] - max_{y' != y} h[y']`.
pub fn labeled_margin(scores: &[f64], y: usize) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::arg("margin needs at least two classes"));
    }
    let hy = *scores
        .get(y)
        .ok_or_else(|| Error::arg(format!("label {y} out of range for {} classes", scores.len())))?;
    let other = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != y)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(hy - other)
}

/// The `k_m` entries of `unlabeled` with the smallest score, sorted by
/// `(score, index)`.
pub fn select_lowest_margin(unlabeled: &[usize], scores: &[f64], k_m: usize) -> Result<Vec<usize>> {
    check_budget(k_m, unlabeled.len())?;
    if let Some(&bad) = unlabeled.iter().find(|&&i| i >= scores.len()) {
        return Err(Error::arg(format!("index {bad} has no score")));
    }
    let mut order = unlabeled.to_vec();
    let key = |a: &usize, b: &usize| scores[*a].total_cmp(&scores[*b]).then(a.cmp(b));
    if k_m < order.len() && k_m > 0 {
        order.select_nth_unstable_by(k_m - 1, key);
    }
    order.truncate(k_m);
    order.sort_unstable_by(key);
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_examples() {
        let p = Matrix::from_rows(&[vec![0.5, 0.3, 0.2], vec![1.0 / 3.0; 3], vec![0.0, 1.0, 0.0]]).unwrap();
        let s = margin_scores(&p).unwrap();
        assert!((s[0] - 0.2).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
        assert_eq!(s[2], 1.0);
        assert!(margin_scores(&Matrix::column(&[1.0]).unwrap()).is_err());
    }

    #[test]
    fn labeled_margin_examples() {
        let h = [2.0, 0.5, -1.0];
        assert_eq!(labeled_margin(&h, 0).unwrap(), 1.5);
        assert_eq!(labeled_margin(&h, 2).unwrap(), -3.0);
        assert_eq!(labeled_margin(&[1.0, 1.0, 0.0], 1).unwrap(), 0.0);
        assert!(labeled_margin(&h, 3).is_err());
    }

    #[test]
    fn lowest_margin_examples() {
        assert_eq!(select_lowest_margin(&[0, 1, 2], &[0.9, 0.1, 0.5], 2).unwrap(), vec![1, 2]);
        assert_eq!(select_lowest_margin(&[0, 1, 2], &[0.3; 3], 2).unwrap(), vec![0, 1]);
        assert_eq!(select_lowest_margin(&[0, 1, 2], &[0.9, 0.1, 0.5], 3).unwrap(), vec![1, 2, 0]);
        assert!(select_lowest_margin(&[0, 1], &[0.9, 0.1], 3).is_err());
    }

    #[test]
    fn logit_scaling_keeps_binary_margin_order() {
        let logits = [-2.0, 0.3, 1.5, -0.1, 4.0];
        let rank = |c: f64| {
            let rows: Vec<Vec<f64>> = logits
                .iter()
                .map(|&s| {
                    let p = 1.0 / (1.0 + (-c * s).exp());
                    vec![p, 1.0 - p]
                })
                .collect();
            let s = margin_scores(&Matrix::from_rows(&rows).unwrap()).unwrap();
            select_lowest_margin(&[0, 1, 2, 3, 4], &s, 5).unwrap()
        };
        assert_eq!(rank(1.0), rank(3.0));
        assert_eq!(rank(1.0), rank(0.2));
    }
}
