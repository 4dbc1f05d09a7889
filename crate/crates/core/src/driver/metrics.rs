use std::collections::HashMap;

use crate::data::{LabelTriple, Matrix};
use crate::model::argmax;
use crate::{Error, Result};

/// Fraction of rows whose argmax (ties to the smaller class) equals the label.
pub fn accuracy(probs: &Matrix, labels: &[usize]) -> Result<f64> {
    if probs.rows() != labels.len() {
        return Err(Error::Dimension {
            expected: probs.rows(),
            got: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Metric("accuracy of an empty set".into()));
    }
    let hits = probs.iter_rows().zip(labels).filter(|(row, &y)| argmax(row) == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Average precision over pooled `(instance, class, score)` pairs ranked by
/// descending score, ties kept in input order.
pub fn pooled_average_precision(scores: &[(usize, usize, f64)], labels: &[LabelTriple]) -> Result<f64> {
    let truth: HashMap<(usize, usize), bool> = labels.iter().map(|t| ((t.instance, t.class), t.positive)).collect();
    let mut ranked: Vec<(f64, bool)> = scores
        .iter()
        .map(|&(i, c, s)| {
            truth
                .get(&(i, c))
                .map(|&y| (s, y))
                .ok_or_else(|| Error::Metric(format!("pair ({i}, {c}) has no label")))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &(_, positive)) in ranked.iter().enumerate() {
        if positive {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(Error::Metric("average precision needs at least one positive".into()));
    }
    Ok(total / hits as f64)
}
