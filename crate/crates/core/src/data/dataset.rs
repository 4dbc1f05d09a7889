use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

/// One partial annotation: `positive` says whether `class` is present on `instance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelTriple {
    pub instance: usize,
    pub class: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    /// One class per instance.
    Multiclass(Vec<usize>),
    /// Sparse `(instance, class, bool)` annotations; not every pair is annotated.
    Multilabel(Vec<LabelTriple>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Labels,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Labels, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::arg("a dataset needs at least one class"));
        }
        let n = features.rows();
        match &labels {
            Labels::Multiclass(ys) => {
                if ys.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: ys.len(),
                    });
                }
                if let Some(&bad) = ys.iter().find(|&&y| y >= num_classes) {
                    return Err(Error::arg(format!(
                        "label {bad} out of range for {num_classes} classes"
                    )));
                }
            }
            Labels::Multilabel(triples) => {
                let mut seen = HashSet::with_capacity(triples.len());
                for t in triples {
                    if t.instance >= n || t.class >= num_classes {
                        return Err(Error::arg(format!(
                            "annotation ({}, {}) outside {n} instances x {num_classes} classes",
                            t.instance, t.class
                        )));
                    }
                    if !seen.insert((t.instance, t.class)) {
                        return Err(Error::arg(format!(
                            "duplicate annotation for ({}, {})",
                            t.instance, t.class
                        )));
                    }
                }
            }
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_instances(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Number of labelable units: instances for multiclass data,
    /// annotated pairs for multilabel data.
    pub fn num_units(&self) -> usize {
        match &self.labels {
            Labels::Multiclass(ys) => ys.len(),
            Labels::Multilabel(t) => t.len(),
        }
    }

    pub fn multiclass_labels(&self) -> Option<&[usize]> {
        match &self.labels {
            Labels::Multiclass(ys) => Some(ys),
            Labels::Multilabel(_) => None,
        }
    }

    pub fn triples(&self) -> Option<&[LabelTriple]> {
        match &self.labels {
            Labels::Multiclass(_) => None,
            Labels::Multilabel(t) => Some(t),
        }
    }
}

/// Disjoint labeled / unlabeled index sets covering `0..n`.
///
/// Indices only ever move from unlabeled to labeled.
#[derive(Debug, Clone)]
pub struct Pool {
    labeled: Vec<usize>,
    is_labeled: Vec<bool>,
}

impl Pool {
    pub fn new(n: usize) -> Self {
        Self {
            labeled: Vec::new(),
            is_labeled: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.is_labeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_labeled.is_empty()
    }

    /// Labeled indices in the order they were labeled.
    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    /// Unlabeled indices, ascending.
    pub fn unlabeled(&self) -> Vec<usize> {
        self.is_labeled
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (!l).then_some(i))
            .collect()
    }

    pub fn num_unlabeled(&self) -> usize {
        self.len() - self.labeled.len()
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.is_labeled[i]
    }

    /// Moves `batch` into the labeled set. Rejects the whole batch, leaving the
    /// pool untouched, if any index is out of range, already labeled or repeated.
    pub fn label(&mut self, batch: &[usize]) -> Result<()> {
        let mut seen = HashSet::with_capacity(batch.len());
        for &i in batch {
            if i >= self.len() {
                return Err(Error::arg(format!("index {i} outside pool of {}", self.len())));
            }
            if self.is_labeled[i] || !seen.insert(i) {
                return Err(Error::arg(format!("index {i} labeled twice")));
            }
        }
        for &i in batch {
            self.is_labeled[i] = true;
            self.labeled.push(i);
        }
        Ok(())
    }
}
