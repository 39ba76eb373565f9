//! JSON experiment configuration and the command implementations behind
//! the CLI.
//!
//! A configuration names a dataset source (preset, explicit synthetic
//! parameters, or a LEAF-style JSON file), learner overrides, strategy
//! settings and a seed list. Validation collects every problem before any
//! work starts. The CLI binary is a thin shell over [`cmd_generate`],
//! [`cmd_run`], [`cmd_sweep_alpha`] and [`cmd_suite`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    dataset_presets, generate_synthetic, load_leaf_json, write_leaf_json, FederatedDataset,
    SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::federation::{run_repeated, Strategy, StrategyConfig, UpdateRoute};
use crate::learning::{Architecture, LearnerSpec};
use crate::pruning::CostModel;
use crate::reporting::{aggregate_seeds, write_csv, MeanRow};
use crate::tensor::SeedSpec;
use crate::transform::DctVariant;

pub const DEFAULT_DATASET_SEED: u64 = 7;
pub const DEFAULT_TOTAL_ROUNDS: usize = 50;
/// Default proximal coefficient when FedProx is selected.
pub const DEFAULT_FEDPROX_MU: f64 = 0.01;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Named preset: `mnist_like`, `femnist_like[(c)]`, `mex_like`,
    /// `goodreads_like`.
    pub preset: Option<String>,
    /// Full generator parameters (alternative to `preset`).
    pub synthetic: Option<SyntheticSpec>,
    /// Path to a LEAF-style JSON file (alternative to both).
    pub leaf_json: Option<PathBuf>,
    /// Generator seed override for presets.
    pub seed: Option<u64>,
    /// Classes-per-client override for presets.
    pub classes_per_client: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArchitectureSection {
    /// `"mlr"`
    Name(String),
    /// `{"mlp": [hidden sizes...]}`
    Mlp { mlp: Vec<usize> },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub architecture: Option<ArchitectureSection>,
    pub learning_rate: Option<f64>,
    pub local_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub proximal_mu: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    /// `fedavg` (default), `fedprox` or `fedsim`.
    pub strategy: Option<Strategy>,
    /// Frequency-space exchange on (default) or off (baseline).
    pub fedft_enabled: Option<bool>,
    /// `difference` (default) or `complete`.
    pub update_route: Option<UpdateRoute>,
    pub alpha: Option<f64>,
    pub prune_start_round: Option<usize>,
    pub clients_per_round: Option<usize>,
    pub n_clusters: Option<usize>,
    pub total_rounds: Option<usize>,
    /// DCT variant: `i`, `ii`, `iii` or `iv` (default).
    pub variant: Option<DctVariant>,
    pub bytes_per_value: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment name used in output file names; defaults to the preset
    /// name or `experiment`.
    pub name: Option<String>,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub strategy: StrategySection,
    /// Seeds to repeat the run over; defaults to `[1]`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let raw =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&raw)
            .map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))
    }
}

/// A fully validated, ready-to-run experiment.
pub struct ResolvedExperiment {
    pub name: String,
    pub dataset: FederatedDataset,
    pub learner: LearnerSpec,
    pub strategy: StrategyConfig,
    pub seeds: Vec<u64>,
}

/// Resolve a configuration: apply preset defaults, build the dataset, and
/// validate everything, reporting all problems at once.
pub fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedExperiment> {
    let mut problems: Vec<String> = Vec::new();

    let sources = [
        cfg.dataset.preset.is_some(),
        cfg.dataset.synthetic.is_some(),
        cfg.dataset.leaf_json.is_some(),
    ]
    .iter()
    .filter(|&&s| s)
    .count();
    if sources != 1 {
        problems.push(
            "dataset must name exactly one of `preset`, `synthetic` or `leaf_json`".to_string(),
        );
    }

    let preset = match cfg.dataset.preset.as_deref() {
        Some(name) => match dataset_presets(name) {
            Ok(p) => Some(p),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        },
        None => None,
    };
    if cfg.dataset.preset.is_none() {
        if cfg.dataset.seed.is_some() {
            problems.push("dataset.seed only applies to presets".to_string());
        }
        if cfg.dataset.classes_per_client.is_some() {
            problems.push("dataset.classes_per_client only applies to presets".to_string());
        }
    }

    let synthetic: Option<SyntheticSpec> = if let Some(p) = &preset {
        let mut s = p.synthetic.clone();
        s.seed = cfg.dataset.seed.unwrap_or(DEFAULT_DATASET_SEED);
        if let Some(c) = cfg.dataset.classes_per_client {
            s.classes_per_client = c;
        }
        Some(s)
    } else {
        cfg.dataset.synthetic.clone()
    };
    if let Some(s) = &synthetic {
        if let Err(Error::Config(more)) = s.validate() {
            problems.extend(more);
        }
    }

    let architecture = match &cfg.learner.architecture {
        None => Architecture::Mlr,
        Some(ArchitectureSection::Name(n)) if n == "mlr" => Architecture::Mlr,
        Some(ArchitectureSection::Name(n)) => {
            problems.push(format!(
                "unknown architecture `{n}` (expected \"mlr\" or {{\"mlp\": [...]}})"
            ));
            Architecture::Mlr
        }
        Some(ArchitectureSection::Mlp { mlp }) => Architecture::Mlp(mlp.clone()),
    };

    let strategy = cfg.strategy.strategy.unwrap_or(Strategy::FedAvg);
    let proximal_mu = cfg.learner.proximal_mu.unwrap_or(match strategy {
        Strategy::FedProx => DEFAULT_FEDPROX_MU,
        _ => 0.0,
    });

    // Dataset-independent field checks, so one pass reports everything.
    if let Some(a) = cfg.strategy.alpha {
        if !(0.0..1.0).contains(&a) {
            problems.push(format!("alpha must be in [0, 1), got {a}"));
        }
    }
    if let Some(b) = cfg.strategy.bytes_per_value {
        if b != 4 && b != 8 {
            problems.push(format!("bytes_per_value must be 4 or 8, got {b}"));
        }
    }
    let total_rounds = cfg.strategy.total_rounds.unwrap_or(DEFAULT_TOTAL_ROUNDS);
    if let Some(p) = cfg.strategy.prune_start_round {
        if p > total_rounds {
            problems.push(format!(
                "prune_start_round ({p}) must not exceed total_rounds ({total_rounds})"
            ));
        }
    }
    if let Some(lr) = cfg.learner.learning_rate {
        if !(lr.is_finite() && lr >= 0.0) {
            problems.push(format!("learning_rate must be finite and non-negative, got {lr}"));
        }
    }
    if cfg.learner.local_epochs == Some(0) {
        problems.push("local_epochs must be positive".to_string());
    }
    if cfg.learner.batch_size == Some(0) {
        problems.push("batch_size must be positive when given".to_string());
    }
    if !(proximal_mu.is_finite() && proximal_mu >= 0.0) {
        problems.push(format!("proximal_mu must be finite and non-negative, got {proximal_mu}"));
    }

    let seeds = if cfg.seeds.is_empty() {
        vec![1]
    } else {
        cfg.seeds.clone()
    };

    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }

    // Build the dataset (config-level checks passed).
    let dataset = if let Some(s) = &synthetic {
        generate_synthetic(s)?
    } else {
        load_leaf_json(cfg.dataset.leaf_json.as_ref().expect("one source"))?
    };

    let learner = LearnerSpec {
        architecture,
        input_dim: dataset.feature_dim,
        num_classes: dataset.num_classes,
        learning_rate: cfg
            .learner
            .learning_rate
            .or(preset.as_ref().map(|p| p.learning_rate))
            .unwrap_or(0.01),
        local_epochs: cfg
            .learner
            .local_epochs
            .or(preset.as_ref().map(|p| p.local_epochs))
            .unwrap_or(20),
        batch_size: cfg.learner.batch_size,
        proximal_mu,
    };

    let clients_per_round = cfg
        .strategy
        .clients_per_round
        .or(preset.as_ref().map(|p| p.clients_per_round))
        .unwrap_or_else(|| dataset.num_clients().min(10));
    let n_clusters = cfg
        .strategy
        .n_clusters
        .or(preset.as_ref().map(|p| p.n_clusters))
        .unwrap_or_else(|| clients_per_round.min(2));

    let strategy_cfg = StrategyConfig {
        strategy,
        fedft_enabled: cfg.strategy.fedft_enabled.unwrap_or(true),
        update_route: cfg.strategy.update_route.unwrap_or(UpdateRoute::Difference),
        alpha: cfg.strategy.alpha.unwrap_or(0.0),
        prune_start_round: cfg.strategy.prune_start_round.unwrap_or(0),
        clients_per_round,
        n_clusters,
        total_rounds,
        variant: cfg.strategy.variant.unwrap_or_default(),
        seed: SeedSpec::new(seeds[0]),
        cost_model: CostModel {
            bytes_per_value: cfg.strategy.bytes_per_value.unwrap_or(4),
        },
    };
    // Surface strategy/learner problems now rather than at run time.
    strategy_cfg.validate(dataset.num_clients())?;
    learner.validate()?;

    let name = cfg
        .name
        .clone()
        .or(preset.map(|p| p.name))
        .unwrap_or_else(|| "experiment".to_string());

    Ok(ResolvedExperiment {
        name,
        dataset,
        learner,
        strategy: strategy_cfg,
        seeds,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

/// `0.15`-style alpha rendering for file names (shortest round-trip form).
fn alpha_label(alpha: f64) -> String {
    format!("{alpha}")
}

fn csv_name(name: &str, strategy: Strategy, alpha: f64) -> String {
    format!("{name}_{}_{}.csv", strategy.name(), alpha_label(alpha))
}

/// Generate the configured dataset and write it as LEAF-style JSON to
/// `out_dir/<name>.json`. Deterministic: identical config and seed give
/// identical bytes.
pub fn cmd_generate(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<PathBuf> {
    let mut cfg = cfg.clone();
    if cfg.dataset.leaf_json.is_some() {
        return Err(Error::usage(
            "generate requires a preset or synthetic dataset, not leaf_json",
        ));
    }
    if let Some(seed) = seed_override {
        if let Some(s) = cfg.dataset.synthetic.as_mut() {
            s.seed = seed;
        } else {
            cfg.dataset.seed = Some(seed);
        }
    }
    let resolved = resolve(&cfg)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join(format!("{}.json", resolved.name));
    write_leaf_json(&resolved.dataset, &path)?;
    Ok(path)
}

/// Run an experiment over its seed list and write one seed-averaged CSV
/// named `{name}_{strategy}_{alpha}.csv`.
pub fn cmd_run(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Vec<PathBuf>> {
    let mut cfg = cfg.clone();
    if let Some(seed) = seed_override {
        cfg.seeds = vec![seed];
    }
    let resolved = resolve(&cfg)?;
    let curve = run_curve(&resolved)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join(csv_name(
        &resolved.name,
        resolved.strategy.strategy,
        resolved.strategy.alpha,
    ));
    write_csv(&curve, &path)?;
    Ok(vec![path])
}

fn run_curve(resolved: &ResolvedExperiment) -> Result<Vec<MeanRow>> {
    let runs = run_repeated(
        &resolved.dataset,
        &resolved.learner,
        &resolved.strategy,
        &resolved.seeds,
    )?;
    aggregate_seeds(&runs)
}

pub struct SweepArtifacts {
    pub run_csvs: Vec<PathBuf>,
    pub summary_csv: PathBuf,
}

/// Run the experiment once per pruning rate and emit per-rate CSVs plus a
/// summary table with columns `alpha,final_accuracy,cumulative_cost_mb`.
pub fn cmd_sweep_alpha(
    cfg: &ExperimentConfig,
    alphas: &[f64],
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<SweepArtifacts> {
    let mut cfg = cfg.clone();
    if let Some(seed) = seed_override {
        cfg.seeds = vec![seed];
    }
    let cfg = &cfg;
    if alphas.is_empty() {
        return Err(Error::usage("sweep needs at least one alpha"));
    }
    let bad: Vec<String> = alphas
        .iter()
        .filter(|a| !(0.0..1.0).contains(*a))
        .map(|a| format!("alpha {a} outside [0, 1)"))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    let resolved = resolve(cfg)?;
    ensure_dir(out_dir)?;
    let mut run_csvs = Vec::with_capacity(alphas.len());
    let mut summary = String::from("alpha,final_accuracy,cumulative_cost_mb\n");
    for &alpha in alphas {
        let mut exp = ResolvedExperiment {
            name: resolved.name.clone(),
            dataset: resolved.dataset.clone(),
            learner: resolved.learner.clone(),
            strategy: resolved.strategy.clone(),
            seeds: resolved.seeds.clone(),
        };
        exp.strategy.alpha = alpha;
        let curve = run_curve(&exp)?;
        let path = out_dir.join(csv_name(&exp.name, exp.strategy.strategy, alpha));
        write_csv(&curve, &path)?;
        if let Some(last) = curve.last() {
            summary.push_str(&format!(
                "{},{:.9e},{:.9e}\n",
                alpha_label(alpha),
                last.mean.weighted_accuracy,
                last.mean.cumulative_payload_mb
            ));
        }
        run_csvs.push(path);
    }
    let summary_csv = out_dir.join(format!(
        "{}_{}_sweep_summary.csv",
        resolved.name,
        resolved.strategy.strategy.name()
    ));
    std::fs::write(&summary_csv, summary)
        .map_err(|e| Error::io(summary_csv.display().to_string(), e))?;
    Ok(SweepArtifacts {
        run_csvs,
        summary_csv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// The full preset matrix: 4 dataset presets x {FedAvg, FedProx,
    /// FedSim} x {baseline, frequency-space} at alpha = 0.
    Paper,
    /// A quick sanity matrix on the MNIST-like preset.
    Smoke,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        match s {
            "paper" => Ok(Suite::Paper),
            "smoke" => Ok(Suite::Smoke),
            other => Err(Error::usage(format!(
                "unknown suite `{other}` (expected `paper` or `smoke`)"
            ))),
        }
    }
}

/// Run a named experiment suite. `rounds`/`seeds` override the suite
/// defaults (paper: 100 rounds, seeds 1-3; smoke: 5 rounds, seed 1).
pub fn cmd_suite(
    suite: Suite,
    out_dir: &Path,
    rounds: Option<usize>,
    seeds: Option<Vec<u64>>,
) -> Result<Vec<PathBuf>> {
    let (presets, strategies, rounds, seeds): (&[&str], &[Strategy], usize, Vec<u64>) = match suite
    {
        Suite::Paper => (
            &["mnist_like", "femnist_like", "mex_like", "goodreads_like"],
            &[Strategy::FedAvg, Strategy::FedProx, Strategy::FedSim],
            rounds.unwrap_or(100),
            seeds.unwrap_or_else(|| vec![1, 2, 3]),
        ),
        Suite::Smoke => (
            &["mnist_like"],
            &[Strategy::FedAvg],
            rounds.unwrap_or(5),
            seeds.unwrap_or_else(|| vec![1]),
        ),
    };
    ensure_dir(out_dir)?;
    let mut paths = Vec::new();
    for preset in presets {
        for &strategy in strategies {
            for fedft in [false, true] {
                let cfg = ExperimentConfig {
                    name: Some(format!(
                        "{preset}_{}",
                        if fedft { "fedft" } else { "baseline" }
                    )),
                    dataset: DatasetSection {
                        preset: Some(preset.to_string()),
                        ..Default::default()
                    },
                    learner: LearnerSection::default(),
                    strategy: StrategySection {
                        strategy: Some(strategy),
                        fedft_enabled: Some(fedft),
                        alpha: Some(0.0),
                        total_rounds: Some(rounds),
                        ..Default::default()
                    },
                    seeds: seeds.clone(),
                    output_dir: None,
                };
                paths.extend(cmd_run(&cfg, out_dir, None)?);
            }
        }
    }
    Ok(paths)
}
