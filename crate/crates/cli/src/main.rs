use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use alx_core::data::{load_matrix, Matrix};
use alx_core::driver::{emit_plots, run_experiment, write_runs, ExperimentConfig, Method};
use alx_core::hac::{hac_exact, hac_multiround, hac_to_target_size, tune_epsilon, Clustering};
use alx_core::model::gradient_embedding_from_parts;
use alx_core::samplers::{
    BadgeSampler, BatchSampler, ClusterMarginSampler, KCenterSampler, MarginSampler, RandomSampler,
    margin_scores,
};
use alx_core::theory::{
    beta_estimate_1d, beta_estimate_rect, cluster_margin_v, equivalence_check_1d, CMVConfig, SubsetSelector,
};
use alx_core::{Error, Result};

#[derive(Parser)]
#[command(name = "alx", about = "Batch active learning with cluster-margin selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster an embedding matrix with average-linkage HAC.
    Cluster(ClusterArgs),
    /// Select one batch from a scored pool.
    Select(SelectArgs),
    /// Run an active learning experiment and append its records.
    Experiment(ExperimentArgs),
    /// Plot a metric from run files as SVG.
    Plot(PlotArgs),
    /// Monte Carlo checks of the sampling theory.
    #[command(subcommand)]
    Theory(TheoryCommand),
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, conflicts_with = "target_size", required_unless_present = "target_size")]
    epsilon: Option<f64>,
    #[arg(long)]
    target_size: Option<f64>,
    #[arg(long)]
    multi_round: bool,
    #[arg(long, default_value_t = 50)]
    knn: usize,
    #[arg(long, default_value_t = f64::INFINITY)]
    tau: f64,
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    method: String,
    /// Penultimate-layer embeddings, one row per pool instance.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Class probabilities, one row per pool instance.
    #[arg(long)]
    probs: Option<PathBuf>,
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[arg(long)]
    km: Option<usize>,
    #[arg(long)]
    kt: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON array of already labeled indices.
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Glob pattern of JSONL run files.
    #[arg(long)]
    runs: String,
    #[arg(long, default_value = "accuracy")]
    metric: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Threshold class on [0,1]: quantile versus uniform subsets.
    Beta1d {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Axis-aligned rectangles in [0,1]^d.
    Rect {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Margin-based halfspace learner with a pluggable subset selector.
    Cmv {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 10.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = Selector::QuantileCluster)]
        selector: Selector,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quantile sampler versus random-in-cluster sampler on [0,1].
    Equiv {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Selector {
    Uniform,
    QuantileCluster,
}

#[derive(Serialize)]
struct Batch<'a> {
    method: &'a str,
    seed: u64,
    batch: Vec<usize>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alx: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster(a) => cluster(a),
        Command::Select(a) => select(a),
        Command::Experiment(a) => experiment(a),
        Command::Plot(a) => plot(a),
        Command::Theory(t) => theory(t),
    }
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let points = load_matrix(&a.input)?;
    let clustering = match (a.multi_round, a.epsilon, a.target_size) {
        (false, Some(eps), _) => hac_exact(&points, eps)?,
        (false, None, Some(t)) => hac_to_target_size(&points, t)?.1,
        (true, eps, target) => {
            let eps = match (eps, target) {
                (Some(e), _) => e,
                (None, Some(t)) => tune_epsilon(&points, t)?,
                (None, None) => unreachable!(),
            };
            hac_multiround(&points, eps, a.knn, a.tau, a.rounds)?
        }
        (false, None, None) => unreachable!(),
    };
    clustering.store(&a.out)
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str, method: Method) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Argument(format!("--{flag} is required for {}", method.name())))
}

fn select(a: SelectArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    let labeled: Vec<usize> = match &a.labeled {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => Vec::new(),
    };
    let probs = a.probs.as_deref().map(load_matrix).transpose()?;
    let embeddings = a.embeddings.as_deref().map(load_matrix).transpose()?;
    let n = probs
        .as_ref()
        .or(embeddings.as_ref())
        .map(Matrix::rows)
        .ok_or_else(|| Error::Argument("--probs or --embeddings is required".into()))?;
    if let Some(&bad) = labeled.iter().find(|&&i| i >= n) {
        return Err(Error::Argument(format!("labeled index {bad} outside a pool of {n}")));
    }
    let mut is_labeled = vec![false; n];
    labeled.iter().for_each(|&i| is_labeled[i] = true);
    let pool: Vec<usize> = (0..n).filter(|&i| !is_labeled[i]).collect();
    let batch = match method {
        Method::Random => RandomSampler.select(&pool, a.kt, a.seed)?,
        Method::Margin => {
            let p = probs.as_ref().ok_or_else(|| Error::Argument("--probs is required for margin".into()))?;
            MarginSampler { scores: &margin_scores(p)? }.select(&pool, a.kt, a.seed)?
        }
        Method::Coreset => {
            need(&a.embeddings, "embeddings", method)?;
            let e = embeddings.as_ref().unwrap();
            KCenterSampler { embeddings: e, centers: &labeled }.select(&pool, a.kt, a.seed)?
        }
        Method::Badge => {
            need(&a.embeddings, "embeddings", method)?;
            need(&a.probs, "probs", method)?;
            let (p, z) = (probs.as_ref().unwrap(), embeddings.as_ref().unwrap());
            if z.rows() != p.rows() {
                return Err(Error::Dimension { expected: p.rows(), got: z.rows() });
            }
            let rows: Vec<Vec<f64>> =
                (0..n).map(|i| gradient_embedding_from_parts(p.row(i), z.row(i))).collect();
            let gradients = Matrix::from_rows(&rows)?;
            BadgeSampler { gradients: &gradients }.select(&pool, a.kt, a.seed)?
        }
        Method::ClusterMargin => {
            let p = probs.as_ref().ok_or_else(|| Error::Argument("--probs is required for cluster-margin".into()))?;
            let clustering = Clustering::load(need(&a.clusters, "clusters", method)?)?;
            if clustering.len() != n {
                return Err(Error::Dimension { expected: n, got: clustering.len() });
            }
            let km = a.km.ok_or_else(|| Error::Argument("--km is required for cluster-margin".into()))?;
            let scores = margin_scores(p)?;
            ClusterMarginSampler {
                scores: &scores,
                cluster_of: clustering.assignments(),
                margin_batch: km,
                target_batch: a.kt,
            }
            .select(&pool, a.kt, a.seed)?
        }
    };
    let out = Batch { method: method.name(), seed: a.seed, batch };
    fs::write(&a.out, serde_json::to_string_pretty(&out)?)?;
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let records = run_experiment(&cfg)?;
    let path = a.out.join(format!("{}_seed{}.jsonl", cfg.method.name(), cfg.trial_seed));
    write_runs(&path, &records)?;
    println!("{}", path.display());
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let pattern = glob::glob(&a.runs).map_err(|e| Error::Argument(e.to_string()))?;
    let mut files = Vec::new();
    for entry in pattern {
        files.push(entry.map_err(|e| Error::Argument(e.to_string()))?);
    }
    files.sort();
    emit_plots(&files, &a.metric, &a.out)
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn theory(t: TheoryCommand) -> Result<()> {
    match t {
        TheoryCommand::Beta1d { n, k, trials, seed } => print_json(&beta_estimate_1d(n, k, trials, seed)?),
        TheoryCommand::Rect { n, k, d, trials, seed } => print_json(&beta_estimate_rect(n, k, d, trials, seed)?),
        TheoryCommand::Cmv { d, eps, delta, gamma, selector, seed } => {
            let cfg = CMVConfig { d, epsilon: eps, delta, gamma, seed, ..CMVConfig::default() };
            let selector = match selector {
                Selector::Uniform => SubsetSelector::Uniform,
                Selector::QuantileCluster => SubsetSelector::QuantileCluster,
            };
            print_json(&cluster_margin_v(&cfg, selector)?)
        }
        TheoryCommand::Equiv { n, k, trials, seed } => print_json(&equivalence_check_1d(n, k, trials, seed)?),
    }
}
