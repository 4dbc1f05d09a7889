//! One-hidden-layer network: `z = tanh(x W1 + b1)`, logits `s = z W2 + b2`.
//!
//! Multiclass data uses a softmax over the logits; multilabel data treats
//! every logit as an independent sigmoid.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{load_matrix, store_matrix, Dataset, Labels, Matrix};
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 32;
const PROB_FLOOR: f64 = 1e-12;

/// Dense row-major weights. `w1` is `d x h`, `w2` is `h x L`.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPParams {
    d: usize,
    h: usize,
    l: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    d: usize,
    h: usize,
    #[serde(rename = "L")]
    l: usize,
    seed: u64,
}

impl MLPParams {
    pub fn from_parts(
        d: usize,
        h: usize,
        l: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        if d == 0 || h == 0 || l == 0 {
            return Err(Error::arg(format!("invalid network shape {d}x{h}x{l}")));
        }
        let p = Self { d, h, l, w1, b1, w2, b2 };
        let shapes = [(p.w1.len(), d * h), (p.b1.len(), h), (p.w2.len(), h * l), (p.b2.len(), l)];
        for (got, expected) in shapes {
            if got != expected {
                return Err(Error::Dimension { expected, got });
            }
        }
        if p.flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("network weights must be finite"));
        }
        Ok(p)
    }

    pub fn zeros(d: usize, h: usize, l: usize) -> Result<Self> {
        Self::from_parts(d, h, l, vec![0.0; d * h], vec![0.0; h], vec![0.0; h * l], vec![0.0; l])
    }

    /// Xavier-uniform weights, zero biases.
    pub fn xavier(d: usize, h: usize, l: usize, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(d, h, l)?;
        let mut r = rng::stream(seed, 0);
        let a1 = (6.0 / (d + h) as f64).sqrt();
        let a2 = (6.0 / (h + l) as f64).sqrt();
        p.w1.iter_mut().for_each(|w| *w = r.random_range(-a1..a1));
        p.w2.iter_mut().for_each(|w| *w = r.random_range(-a2..a2));
        Ok(p)
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn hidden(&self) -> usize {
        self.h
    }

    pub fn num_classes(&self) -> usize {
        self.l
    }

    pub fn num_params(&self) -> usize {
        self.d * self.h + self.h + self.h * self.l + self.l
    }

    /// All weights as one vector, ordered `w1, b1, w2, b2`.
    pub fn flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::Dimension {
                expected: self.num_params(),
                got: values.len(),
            });
        }
        let (w1, rest) = values.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.h);
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
        Ok(())
    }

    /// Writes `w1.alxm`, `b1.alxm`, `w2.alxm`, `b2.alxm` and `manifest.json`.
    pub fn store(&self, dir: impl AsRef<Path>, seed: u64) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        store_matrix(&Matrix::new(self.d, self.h, self.w1.clone())?, dir.join("w1.alxm"))?;
        store_matrix(&Matrix::new(1, self.h, self.b1.clone())?, dir.join("b1.alxm"))?;
        store_matrix(&Matrix::new(self.h, self.l, self.w2.clone())?, dir.join("w2.alxm"))?;
        store_matrix(&Matrix::new(1, self.l, self.b2.clone())?, dir.join("b2.alxm"))?;
        let manifest = Manifest {
            d: self.d,
            h: self.h,
            l: self.l,
            seed,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Returns the parameters and the seed recorded in the manifest.
    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, u64)> {
        let dir = dir.as_ref();
        let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let read = |name: &str| load_matrix(dir.join(name)).map(Matrix::into_vec);
        let p = Self::from_parts(m.d, m.h, m.l, read("w1.alxm")?, read("b1.alxm")?, read("w2.alxm")?, read("b2.alxm")?)?;
        Ok((p, m.seed))
    }

    fn hidden_row(&self, x: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.b1);
        for (i, &xi) in x.iter().enumerate() {
            let w = &self.w1[i * self.h..(i + 1) * self.h];
            for (zj, wj) in z.iter_mut().zip(w) {
                *zj += xi * wj;
            }
        }
        z.iter_mut().for_each(|v| *v = v.tanh());
    }

    fn logits_row(&self, z: &[f64], s: &mut [f64]) {
        s.copy_from_slice(&self.b2);
        for (j, &zj) in z.iter().enumerate() {
            let w = &self.w2[j * self.l..(j + 1) * self.l];
            for (sk, wk) in s.iter_mut().zip(w) {
                *sk += zj * wk;
            }
        }
    }

    fn check_input(&self, features: &Matrix) -> Result<()> {
        if features.cols() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: features.cols(),
            });
        }
        Ok(())
    }

    fn map_rows(&self, features: &Matrix, width: usize, f: impl Fn(&[f64], &mut [f64])) -> Result<Matrix> {
        self.check_input(features)?;
        let mut out = vec![0.0; features.rows() * width];
        for (x, o) in features.iter_rows().zip(out.chunks_mut(width.max(1))) {
            f(x, o);
        }
        Matrix::new(features.rows(), width, out)
    }
}

fn softmax_in_place(s: &mut [f64]) {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in s.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    s.iter_mut().for_each(|v| *v /= total);
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Penultimate activations, `n x h`.
pub fn embed(params: &MLPParams, features: &Matrix) -> Result<Matrix> {
    params.map_rows(features, params.h, |x, z| params.hidden_row(x, z))
}

pub fn logits(params: &MLPParams, features: &Matrix) -> Result<Matrix> {
    let mut z = vec![0.0; params.h];
    params.check_input(features)?;
    let mut out = vec![0.0; features.rows() * params.l];
    for (x, s) in features.iter_rows().zip(out.chunks_mut(params.l)) {
        params.hidden_row(x, &mut z);
        params.logits_row(&z, s);
    }
    Matrix::new(features.rows(), params.l, out)
}

/// Softmax class probabilities, `n x L`.
pub fn predict_proba(params: &MLPParams, features: &Matrix) -> Result<Matrix> {
    let mut s = logits(params, features)?.into_vec();
    for row in s.chunks_mut(params.l) {
        softmax_in_place(row);
    }
    Matrix::new(features.rows(), params.l, s)
}

/// Independent per-class sigmoid probabilities, `n x L`.
pub fn predict_binary(params: &MLPParams, features: &Matrix) -> Result<Matrix> {
    let mut s = logits(params, features)?.into_vec();
    s.iter_mut().for_each(|v| *v = sigmoid(*v));
    Matrix::new(features.rows(), params.l, s)
}

/// `-ln p[label]`, with `p` floored at 1e-12.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs
        .get(label)
        .ok_or_else(|| Error::arg(format!("label {label} out of range for {} classes", probs.len())))?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Binary log-loss of probability `p` against `positive`.
pub fn binary_cross_entropy(p: f64, positive: bool) -> f64 {
    let q = if positive { p } else { 1.0 - p };
    -q.max(PROB_FLOOR).ln()
}

/// Index of the largest entry, ties to the smaller index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Gradient of the loss at the predicted label with respect to the last
/// layer: block `y` is `(p_y - [y == argmax p]) * z`.
pub fn gradient_embedding_from_parts(probs: &[f64], z: &[f64]) -> Vec<f64> {
    let top = argmax(probs);
    let mut out = Vec::with_capacity(probs.len() * z.len());
    for (y, &p) in probs.iter().enumerate() {
        let coef = p - if y == top { 1.0 } else { 0.0 };
        out.extend(z.iter().map(|&v| coef * v));
    }
    out
}

pub fn gradient_embedding(params: &MLPParams, x: &[f64]) -> Result<Vec<f64>> {
    let m = Matrix::new(1, x.len(), x.to_vec())?;
    let z = embed(params, &m)?;
    let p = predict_proba(params, &m)?;
    Ok(gradient_embedding_from_parts(p.row(0), z.row(0)))
}

/// Gradient embeddings for every row, `n x (h L)`.
pub fn gradient_embeddings(params: &MLPParams, features: &Matrix) -> Result<Matrix> {
    let z = embed(params, features)?;
    let p = predict_proba(params, features)?;
    let width = params.h * params.l;
    let mut out = Vec::with_capacity(features.rows() * width);
    for (pi, zi) in p.iter_rows().zip(z.iter_rows()) {
        out.extend(gradient_embedding_from_parts(pi, zi));
    }
    Matrix::new(features.rows(), width, out)
}

/// Mean loss over `units` plus `l2 / 2 * (|W1|^2 + |W2|^2)`, and its gradient.
///
/// A unit is an instance for multiclass data and an annotation index for
/// multilabel data.
pub fn loss_and_gradient(
    params: &MLPParams,
    dataset: &Dataset,
    units: &[usize],
    l2: f64,
) -> Result<(f64, MLPParams)> {
    if units.is_empty() {
        return Err(Error::arg("loss over an empty batch"));
    }
    if dataset.dim() != params.d {
        return Err(Error::Dimension {
            expected: params.d,
            got: dataset.dim(),
        });
    }
    if dataset.num_classes() != params.l {
        return Err(Error::Dimension {
            expected: params.l,
            got: dataset.num_classes(),
        });
    }
    let (h, l) = (params.h, params.l);
    let mut grad = MLPParams::zeros(params.d, h, l)?;
    let mut z = vec![0.0; h];
    let mut s = vec![0.0; l];
    let mut ds = vec![0.0; l];
    let mut da = vec![0.0; h];
    let mut loss = 0.0;
    let scale = 1.0 / units.len() as f64;
    for &u in units {
        if u >= dataset.num_units() {
            return Err(Error::arg(format!("unit {u} out of range")));
        }
        let instance = match dataset.labels() {
            Labels::Multiclass(_) => u,
            Labels::Multilabel(t) => t[u].instance,
        };
        let x = dataset.features().row(instance);
        params.hidden_row(x, &mut z);
        params.logits_row(&z, &mut s);
        match dataset.labels() {
            Labels::Multiclass(ys) => {
                softmax_in_place(&mut s);
                loss += cross_entropy(&s, ys[u])?;
                ds.copy_from_slice(&s);
                ds[ys[u]] -= 1.0;
            }
            Labels::Multilabel(t) => {
                let p = sigmoid(s[t[u].class]);
                loss += binary_cross_entropy(p, t[u].positive);
                ds.iter_mut().for_each(|v| *v = 0.0);
                ds[t[u].class] = p - if t[u].positive { 1.0 } else { 0.0 };
            }
        }
        for (j, &zj) in z.iter().enumerate() {
            let w2 = &params.w2[j * l..(j + 1) * l];
            let g2 = &mut grad.w2[j * l..(j + 1) * l];
            let mut back = 0.0;
            for k in 0..l {
                g2[k] += scale * zj * ds[k];
                back += ds[k] * w2[k];
            }
            da[j] = back * (1.0 - zj * zj);
        }
        for (g, d) in grad.b2.iter_mut().zip(&ds) {
            *g += scale * d;
        }
        for (g, d) in grad.b1.iter_mut().zip(&da) {
            *g += scale * d;
        }
        for (i, &xi) in x.iter().enumerate() {
            let g1 = &mut grad.w1[i * h..(i + 1) * h];
            for (g, d) in g1.iter_mut().zip(&da) {
                *g += scale * xi * d;
            }
        }
    }
    loss *= scale;
    if l2 > 0.0 {
        let norm: f64 = params.w1.iter().chain(&params.w2).map(|w| w * w).sum();
        loss += 0.5 * l2 * norm;
        for (g, w) in grad.w1.iter_mut().zip(&params.w1) {
            *g += l2 * w;
        }
        for (g, w) in grad.w2.iter_mut().zip(&params.w2) {
            *g += l2 * w;
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub sgd_batch: usize,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            sgd_batch: 32,
            epochs: 20,
            seed: 0,
            l2: 0.0,
        }
    }
}

/// Minibatch SGD over `labeled` units, starting from `init` or from a
/// Xavier initialisation seeded by `config.seed`. Each epoch visits the units
/// in a fresh seeded order.
pub fn train_sgd(
    dataset: &Dataset,
    labeled: &[usize],
    config: &TrainConfig,
    init: Option<&MLPParams>,
) -> Result<MLPParams> {
    if labeled.is_empty() {
        return Err(Error::arg("cannot train on an empty labeled set"));
    }
    if !(config.learning_rate > 0.0) || config.sgd_batch == 0 || config.l2 < 0.0 {
        return Err(Error::arg("learning rate must be > 0, batch >= 1, l2 >= 0"));
    }
    let mut params = match init {
        Some(p) => p.clone(),
        None => MLPParams::xavier(dataset.dim(), DEFAULT_HIDDEN, dataset.num_classes(), config.seed)?,
    };
    let mut order = labeled.to_vec();
    let mut r = rng::stream(config.seed, 1);
    let mut flat = params.flat();
    for _ in 0..config.epochs {
        order.shuffle(&mut r);
        for batch in order.chunks(config.sgd_batch) {
            let (_, grad) = loss_and_gradient(&params, dataset, batch, config.l2)?;
            for (w, g) in flat.iter_mut().zip(grad.flat()) {
                *w -= config.learning_rate * g;
            }
            params.set_flat(&flat)?;
        }
    }
    if flat.iter().any(|w| !w.is_finite()) {
        return Err(Error::arg("training diverged; lower the learning rate"));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_gaussian_mixture, MultilabelMixture};
    use proptest::prelude::*;

    fn small_random(d: usize, h: usize, l: usize, seed: u64) -> MLPParams {
        let mut p = MLPParams::xavier(d, h, l, seed).unwrap();
        let mut r = rng::stream(seed, 9);
        p.b1.iter_mut().chain(p.b2.iter_mut()).for_each(|b| *b = r.random_range(-0.5..0.5));
        p
    }

    #[test]
    fn zero_weights_give_uniform_probabilities_and_zero_embedding() {
        let p = MLPParams::zeros(3, 4, 5).unwrap();
        let x = Matrix::new(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.5, 0.5]).unwrap();
        let probs = predict_proba(&p, &x).unwrap();
        assert!(probs.as_slice().iter().all(|&v| (v - 0.2).abs() < 1e-15));
        assert!(embed(&p, &x).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let two = MLPParams::zeros(3, 4, 2).unwrap();
        assert_eq!(predict_proba(&two, &x).unwrap().row(0), &[0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch() {
        let p = MLPParams::zeros(3, 4, 2).unwrap();
        assert!(predict_proba(&p, &Matrix::zeros(1, 2)).is_err());
        assert!(embed(&p, &Matrix::zeros(1, 4)).is_err());
        assert!(gradient_embedding(&p, &[1.0]).is_err());
    }

    #[test]
    fn gradient_embedding_direct_formula() {
        let g = gradient_embedding_from_parts(&[0.7, 0.3], &[1.0, 2.0]);
        let want = [-0.3, -0.6, 0.3, 0.6];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(gradient_embedding_from_parts(&[0.0, 1.0, 0.0], &[3.0, -1.0]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        assert!((cross_entropy(&[0.5, 0.5], 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[1e-15, 1.0], 0).unwrap() + 1e-12f64.ln()).abs() < 1e-12);
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn separable_line_is_learned() {
        let xs: Vec<f64> = (0..40).map(|i| if i < 20 { -2.0 + i as f64 * 0.05 } else { 1.0 + i as f64 * 0.05 }).collect();
        let ys: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let ds = Dataset::new(Matrix::column(&xs).unwrap(), Labels::Multiclass(ys.clone()), 2).unwrap();
        let all: Vec<usize> = (0..40).collect();
        let cfg = TrainConfig {
            epochs: 50,
            sgd_batch: 8,
            ..TrainConfig::default()
        };
        let p = train_sgd(&ds, &all, &cfg, None).unwrap();
        let probs = predict_proba(&p, ds.features()).unwrap();
        let correct = probs.iter_rows().zip(&ys).filter(|(r, &y)| argmax(r) == y).count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn zero_epochs_returns_init_and_training_is_deterministic() {
        let ds = synth_gaussian_mixture(3, 20, 4, 3.0, 1, 1).unwrap();
        let init = MLPParams::xavier(4, 8, 3, 5).unwrap();
        let labeled: Vec<usize> = (0..30).collect();
        let mut cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert_eq!(train_sgd(&ds, &labeled, &cfg, Some(&init)).unwrap(), init);
        cfg.epochs = 3;
        let a = train_sgd(&ds, &labeled, &cfg, Some(&init)).unwrap();
        let b = train_sgd(&ds, &labeled, &cfg, Some(&init)).unwrap();
        assert_eq!(a.flat(), b.flat());
        assert!(train_sgd(&ds, &[], &cfg, Some(&init)).is_err());
    }

    #[test]
    fn training_does_not_raise_loss() {
        let ds = synth_gaussian_mixture(4, 50, 5, 3.0, 1, 8).unwrap();
        let labeled: Vec<usize> = (0..200).step_by(2).collect();
        let init = MLPParams::xavier(5, 16, 4, 2).unwrap();
        let (before, _) = loss_and_gradient(&init, &ds, &labeled, 0.0).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        };
        let trained = train_sgd(&ds, &labeled, &cfg, Some(&init)).unwrap();
        let (after, _) = loss_and_gradient(&trained, &ds, &labeled, 0.0).unwrap();
        assert!(after <= 1.1 * before, "{before} -> {after}");
    }

    #[test]
    fn multilabel_gradient_matches_finite_differences() {
        let ds = MultilabelMixture {
            num_classes: 6,
            instances: 15,
            dim: 3,
            separation: 2.0,
            duplication: 1,
            seed: 4,
        }
        .generate()
        .unwrap();
        let p = small_random(3, 5, 6, 3);
        let units: Vec<usize> = (0..ds.num_units()).collect();
        let (_, g) = loss_and_gradient(&p, &ds, &units, 0.01).unwrap();
        let base = p.flat();
        let mut q = p.clone();
        for (i, gi) in g.flat().into_iter().enumerate() {
            let mut v = base.clone();
            v[i] += 1e-5;
            q.set_flat(&v).unwrap();
            let up = loss_and_gradient(&q, &ds, &units, 0.01).unwrap().0;
            v[i] -= 2e-5;
            q.set_flat(&v).unwrap();
            let down = loss_and_gradient(&q, &ds, &units, 0.01).unwrap().0;
            let fd = (up - down) / 2e-5;
            assert!((fd - gi).abs() <= 1e-6 + 1e-4 * fd.abs().max(gi.abs()), "param {i}: {fd} vs {gi}");
        }
    }

    #[test]
    fn store_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = small_random(3, 4, 2, 11);
        p.store(dir.path(), 11).unwrap();
        let (q, seed) = MLPParams::load(dir.path()).unwrap();
        assert_eq!(p, q);
        assert_eq!(seed, 11);
        let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(manifest.contains("\"L\": 2"));
    }

    proptest! {
        #[test]
        fn outputs_stay_in_range(seed in any::<u64>(), xs in proptest::collection::vec(-50.0f64..50.0, 12)) {
            let p = small_random(4, 6, 3, seed);
            let x = Matrix::new(3, 4, xs).unwrap();
            for row in predict_proba(&p, &x).unwrap().iter_rows() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(row.iter().all(|&v| v >= 0.0));
            }
            prop_assert!(embed(&p, &x).unwrap().as_slice().iter().all(|v| v.abs() <= 1.0));
            let g = gradient_embeddings(&p, &x).unwrap();
            for row in g.iter_rows() {
                for j in 0..6 {
                    let s: f64 = (0..3).map(|y| row[y * 6 + j]).sum();
                    prop_assert!(s.abs() < 1e-9);
                }
            }
        }
    }
}
