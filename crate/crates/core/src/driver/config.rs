use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv_dataset, Dataset, GaussianMixture, MultilabelMixture};
use crate::model::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClusterMargin,
    Margin,
    Badge,
    Coreset,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClusterMargin => "cluster-margin",
            Method::Margin => "margin",
            Method::Badge => "badge",
            Method::Coreset => "coreset",
            Method::Random => "random",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::arg(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Synthetic {
        num_classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
        duplication: usize,
        seed: u64,
        /// Base points per class in the held-out set.
        test_per_class: usize,
    },
    SyntheticMultilabel {
        num_classes: usize,
        instances: usize,
        dim: usize,
        separation: f64,
        duplication: usize,
        seed: u64,
        test_instances: usize,
    },
    Csv {
        features: PathBuf,
        #[serde(default)]
        triples: Option<PathBuf>,
        /// Held-out files in the same layout; without them the pool itself is scored.
        #[serde(default)]
        test_features: Option<PathBuf>,
        #[serde(default)]
        test_triples: Option<PathBuf>,
    },
}

impl DatasetConfig {
    /// Pool and held-out evaluation set.
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        match self {
            DatasetConfig::Synthetic {
                num_classes,
                per_class,
                dim,
                separation,
                duplication,
                seed,
                test_per_class,
            } => {
                let g = GaussianMixture {
                    num_classes: *num_classes,
                    per_class: *per_class,
                    dim: *dim,
                    separation: *separation,
                    duplication: *duplication,
                    seed: *seed,
                };
                Ok((g.generate()?, g.test_set(*test_per_class)?))
            }
            DatasetConfig::SyntheticMultilabel {
                num_classes,
                instances,
                dim,
                separation,
                duplication,
                seed,
                test_instances,
            } => {
                let g = MultilabelMixture {
                    num_classes: *num_classes,
                    instances: *instances,
                    dim: *dim,
                    separation: *separation,
                    duplication: *duplication,
                    seed: *seed,
                };
                Ok((g.generate()?, g.test_set(*test_instances)?))
            }
            DatasetConfig::Csv {
                features,
                triples,
                test_features,
                test_triples,
            } => {
                let pool = load_csv_dataset(features, triples.as_deref())?;
                let test = match test_features {
                    Some(f) => load_csv_dataset(f, test_triples.as_deref())?,
                    None => pool.clone(),
                };
                Ok((pool, test))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringConfig {
    Epsilon(f64),
    TargetMeanSize(f64),
}

fn default_hidden() -> usize {
    crate::model::DEFAULT_HIDDEN
}

fn default_true() -> bool {
    true
}

fn default_partitions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub seed_set_size: usize,
    pub iterations: usize,
    pub margin_batch: usize,
    pub target_batch: usize,
    pub clustering: ClusteringConfig,
    pub method: Method,
    pub train: TrainConfig,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Continue from the previous model each iteration instead of restarting.
    #[serde(default = "default_true")]
    pub warm_start: bool,
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    pub trial_seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn validate(&self, pool_size: usize) -> Result<()> {
        if self.seed_set_size == 0 {
            return Err(Error::arg("seed set must be nonempty"));
        }
        if self.target_batch == 0 || self.target_batch > self.margin_batch {
            return Err(Error::arg(format!(
                "need 1 <= target_batch <= margin_batch, got {} and {}",
                self.target_batch, self.margin_batch
            )));
        }
        let needed = self.seed_set_size + self.iterations * self.target_batch;
        if needed > pool_size {
            return Err(Error::Budget(format!(
                "seed set plus {} batches needs {needed} labels, pool has {pool_size}",
                self.iterations
            )));
        }
        if self.hidden == 0 || self.partitions == 0 {
            return Err(Error::arg("hidden width and partitions must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let text = r#"{
            "dataset": {"kind": "synthetic", "num_classes": 3, "per_class": 10, "dim": 2,
                        "separation": 3.0, "duplication": 2, "seed": 1, "test_per_class": 5},
            "seed_set_size": 10, "iterations": 2, "margin_batch": 20, "target_batch": 5,
            "clustering": {"target_mean_size": 4.0},
            "method": "cluster-margin",
            "train": {"learning_rate": 0.1, "sgd_batch": 16, "epochs": 5, "seed": 0},
            "trial_seed": 3
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.method, Method::ClusterMargin);
        assert_eq!(cfg.hidden, 32);
        assert!(cfg.warm_start);
        assert_eq!(cfg.clustering, ClusteringConfig::TargetMeanSize(4.0));
        cfg.validate(60).unwrap();
        assert!(cfg.validate(15).is_err());
        assert_eq!("coreset".parse::<Method>().unwrap(), Method::Coreset);
        assert!("nope".parse::<Method>().is_err());
    }
}
