use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ClusteringConfig, ExperimentConfig, Method};
use super::metrics::{accuracy, pooled_average_precision};
use crate::data::{Dataset, Labels, Matrix, Pool};
use crate::hac::{hac_exact, hac_to_target_size, invocation_count};
use crate::model::{embed, gradient_embeddings, predict_binary, predict_proba, train_sgd, MLPParams, TrainConfig};
use crate::rng::mix;
use crate::samplers::{
    binary_margin, margin_scores, partitioned_select, random_select, BadgeSampler,
    ClusterMarginSampler, KCenterSampler, MarginSampler, RandomSampler,
};
use crate::{Error, Result};

/// Metrics after one labeling round; iteration 0 is the seed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: usize,
    pub labels_used: usize,
    /// Multiclass accuracy, or pair accuracy at threshold 0.5 for multilabel runs.
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled_ap: Option<f64>,
    pub wall_ms: f64,
    pub seed: u64,
    pub method: Method,
}

const SEED_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const TRAIN_STREAM: u64 = 3;
const SELECT_STREAM: u64 = 4;

fn unit_instances(dataset: &Dataset) -> Vec<usize> {
    match dataset.labels() {
        Labels::Multiclass(ys) => (0..ys.len()).collect(),
        Labels::Multilabel(t) => t.iter().map(|t| t.instance).collect(),
    }
}

fn unit_scores(params: &MLPParams, dataset: &Dataset) -> Result<Vec<f64>> {
    match dataset.labels() {
        Labels::Multiclass(_) => margin_scores(&predict_proba(params, dataset.features())?),
        Labels::Multilabel(t) => {
            let p = predict_binary(params, dataset.features())?;
            Ok(t.iter().map(|t| binary_margin(p.get(t.instance, t.class))).collect())
        }
    }
}

fn evaluate(params: &MLPParams, test: &Dataset) -> Result<(f64, Option<f64>)> {
    match test.labels() {
        Labels::Multiclass(ys) => Ok((accuracy(&predict_proba(params, test.features())?, ys)?, None)),
        Labels::Multilabel(t) => {
            let p = predict_binary(params, test.features())?;
            let scores: Vec<(usize, usize, f64)> = t.iter().map(|t| (t.instance, t.class, p.get(t.instance, t.class))).collect();
            let hits = t.iter().zip(&scores).filter(|(t, s)| (s.2 >= 0.5) == t.positive).count();
            let ap = pooled_average_precision(&scores, t)?;
            Ok((hits as f64 / t.len().max(1) as f64, Some(ap)))
        }
    }
}

fn train(dataset: &Dataset, labeled: &[usize], config: &ExperimentConfig, round: usize, init: &MLPParams) -> Result<MLPParams> {
    let tc = TrainConfig {
        seed: mix(mix(config.train.seed, config.trial_seed), TRAIN_STREAM + 16 * round as u64),
        ..config.train
    };
    train_sgd(dataset, labeled, &tc, Some(init))
}

/// Runs seed training, optional one-off clustering of the seed model's
/// embeddings, and `iterations` rounds of select, label, retrain.
///
/// The seed set and the initial weights depend only on `trial_seed`, so runs
/// of different methods with the same trial seed start from the same model.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let start = Instant::now();
    let (dataset, test) = config.dataset.load()?;
    if dataset.dim() != test.dim() || dataset.num_classes() != test.num_classes() {
        return Err(Error::arg("evaluation set does not match the pool's shape"));
    }
    let n_units = dataset.num_units();
    config.validate(n_units)?;
    let multilabel = dataset.triples().is_some();
    if multilabel && matches!(config.method, Method::Badge) {
        return Err(Error::arg("badge needs softmax outputs; use it on multiclass data"));
    }
    let instance_of = unit_instances(&dataset);
    let all_units: Vec<usize> = (0..n_units).collect();

    let mut pool = Pool::new(n_units);
    pool.label(&random_select(&all_units, config.seed_set_size, mix(config.trial_seed, SEED_STREAM))?)?;
    let init = MLPParams::xavier(dataset.dim(), config.hidden, dataset.num_classes(), mix(config.trial_seed, INIT_STREAM))?;
    let mut params = train(&dataset, pool.labeled(), config, 0, &init)?;

    let mut records = Vec::with_capacity(config.iterations + 1);
    let mut record = |iteration: usize, labels_used: usize, params: &MLPParams| -> Result<()> {
        let (acc, ap) = evaluate(params, &test)?;
        records.push(RunRecord {
            iteration,
            labels_used,
            accuracy: acc,
            pooled_ap: ap,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            seed: config.trial_seed,
            method: config.method,
        });
        Ok(())
    };
    record(0, pool.labeled().len(), &params)?;

    let cluster_of: Vec<usize> = if config.method == Method::ClusterMargin {
        let before = invocation_count();
        let z = embed(&params, dataset.features())?;
        let clustering = match config.clustering {
            ClusteringConfig::Epsilon(eps) => hac_exact(&z, eps)?,
            ClusteringConfig::TargetMeanSize(t) => hac_to_target_size(&z, t)?.1,
        };
        debug_assert_eq!(invocation_count() - before, 1);
        instance_of.iter().map(|&i| clustering.assignment(i)).collect()
    } else {
        Vec::new()
    };

    for round in 1..=config.iterations {
        let unlabeled = pool.unlabeled();
        let seed = mix(config.trial_seed, SELECT_STREAM + 16 * round as u64);
        let k = config.target_batch;
        let m = config.partitions;
        let batch = match config.method {
            Method::Random => partitioned_select(&RandomSampler, &unlabeled, k, m, seed)?,
            Method::Margin => {
                let scores = unit_scores(&params, &dataset)?;
                partitioned_select(&MarginSampler { scores: &scores }, &unlabeled, k, m, seed)?
            }
            Method::ClusterMargin => {
                let scores = unit_scores(&params, &dataset)?;
                let sampler = ClusterMarginSampler {
                    scores: &scores,
                    cluster_of: &cluster_of,
                    margin_batch: config.margin_batch,
                    target_batch: config.target_batch,
                };
                partitioned_select(&sampler, &unlabeled, k, m, seed)?
            }
            Method::Coreset => {
                let z = embed(&params, dataset.features())?.select_rows(&instance_of);
                let sampler = KCenterSampler {
                    embeddings: &z,
                    centers: pool.labeled(),
                };
                partitioned_select(&sampler, &unlabeled, k, m, seed)?
            }
            Method::Badge => {
                let g: Matrix = gradient_embeddings(&params, dataset.features())?;
                partitioned_select(&BadgeSampler { gradients: &g }, &unlabeled, k, m, seed)?
            }
        };
        pool.label(&batch)?;
        debug_assert_eq!(pool.labeled().len(), config.seed_set_size + round * k);
        let from = if config.warm_start { params } else { init.clone() };
        params = train(&dataset, pool.labeled(), config, round, &from)?;
        record(round, pool.labeled().len(), &params)?;
    }
    Ok(records)
}

/// Appends one JSON object per record.
pub fn write_runs(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

pub fn read_runs(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            Error::format(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::DatasetConfig;

    fn config(method: Method) -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetConfig::Synthetic {
                num_classes: 4,
                per_class: 15,
                dim: 4,
                separation: 3.0,
                duplication: 4,
                seed: 2,
                test_per_class: 20,
            },
            seed_set_size: 20,
            iterations: 3,
            margin_batch: 40,
            target_batch: 10,
            clustering: ClusteringConfig::TargetMeanSize(3.0),
            method,
            train: TrainConfig {
                epochs: 5,
                sgd_batch: 16,
                ..TrainConfig::default()
            },
            hidden: 8,
            warm_start: true,
            partitions: 1,
            trial_seed: 5,
        }
    }

    #[test]
    fn bookkeeping_for_every_method() {
        for method in [Method::Random, Method::Margin, Method::ClusterMargin, Method::Coreset, Method::Badge] {
            let runs = run_experiment(&config(method)).unwrap();
            assert_eq!(runs.len(), 4);
            for (i, r) in runs.iter().enumerate() {
                assert_eq!(r.labels_used, 20 + 10 * i);
                assert!((0.0..=1.0).contains(&r.accuracy));
            }
        }
    }

    #[test]
    fn clustering_runs_once_and_results_repeat() {
        let cfg = config(Method::ClusterMargin);
        let before = invocation_count();
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(invocation_count() - before, 1);
        let b = run_experiment(&cfg).unwrap();
        let strip = |rs: &[RunRecord]| rs.iter().map(|r| (r.labels_used, r.accuracy.to_bits())).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        let before = invocation_count();
        run_experiment(&config(Method::Margin)).unwrap();
        assert_eq!(invocation_count(), before);
    }

    #[test]
    fn seed_models_agree_across_methods() {
        let a = run_experiment(&config(Method::Random)).unwrap();
        let b = run_experiment(&config(Method::Margin)).unwrap();
        assert_eq!(a[0].accuracy, b[0].accuracy);
    }

    #[test]
    fn multilabel_run_reports_average_precision() {
        let mut cfg = config(Method::ClusterMargin);
        cfg.dataset = DatasetConfig::SyntheticMultilabel {
            num_classes: 6,
            instances: 40,
            dim: 4,
            separation: 3.0,
            duplication: 2,
            seed: 1,
            test_instances: 30,
        };
        let runs = run_experiment(&cfg).unwrap();
        assert!(runs.iter().all(|r| r.pooled_ap.is_some_and(|ap| (0.0..=1.0).contains(&ap))));
        cfg.method = Method::Badge;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn run_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs/a.jsonl");
        let runs = run_experiment(&config(Method::Random)).unwrap();
        write_runs(&path, &runs).unwrap();
        assert_eq!(read_runs(&path).unwrap(), runs);
        fs::write(&path, "{not json}\n").unwrap();
        assert!(read_runs(&path).is_err());
    }

    #[test]
    fn rejects_oversized_budgets() {
        let mut cfg = config(Method::Random);
        cfg.iterations = 100;
        assert!(matches!(run_experiment(&cfg), Err(Error::Budget(_))));
    }
}
