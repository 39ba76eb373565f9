//! The federated round engine.
//!
//! One round is: select K clients, broadcast the global model, run local
//! updates, collect (possibly pruned, frequency-space) uploads, aggregate,
//! evaluate. With the frequency path enabled the server holds the global
//! model as DCT coefficients and aggregation happens directly on
//! coefficients; the baseline path never touches transform or pruning
//! code.
//!
//! Two upload routes exist: `difference` sends the transformed update
//! delta and the server adds it onto its stored coefficients before
//! averaging, `complete` sends the transformed full model. Aggregation
//! consumes updates in canonical client order, so results do not depend on
//! scheduling.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::data::FederatedDataset;
use crate::error::{Error, Result};
use crate::learning::{self, LearnerSpec};
use crate::pruning::{self, CostModel, FrequencyUpdate};
use crate::reporting::RoundRecord;
use crate::tensor::{linear_combine, model_stats, purpose, ModelParams, SeedSpec};
use crate::transform::{inverse_model, transform_model, DctVariant, FrequencyModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    FedAvg,
    FedProx,
    FedSim,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::FedAvg => "fedavg",
            Strategy::FedProx => "fedprox",
            Strategy::FedSim => "fedsim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRoute {
    /// Upload `T(w_new - w_received)`; the server adds it to its stored
    /// coefficients before averaging.
    Difference,
    /// Upload `T(w_new)` directly.
    Complete,
}

/// Full configuration of a federated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub fedft_enabled: bool,
    pub update_route: UpdateRoute,
    /// Requested pruning rate in `[0, 1)`.
    pub alpha: f64,
    /// First round (0-indexed) at which pruning applies; 0 prunes from the
    /// start.
    pub prune_start_round: usize,
    pub clients_per_round: usize,
    /// Cluster count for FedSim; ignored by the other strategies.
    pub n_clusters: usize,
    pub total_rounds: usize,
    pub variant: DctVariant,
    pub seed: SeedSpec,
    pub cost_model: CostModel,
}

impl StrategyConfig {
    pub fn validate(&self, num_clients: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.clients_per_round == 0 || self.clients_per_round > num_clients {
            problems.push(format!(
                "clients_per_round must be in [1, {num_clients}], got {}",
                self.clients_per_round
            ));
        }
        if self.strategy == Strategy::FedSim
            && (self.n_clusters == 0 || self.n_clusters > self.clients_per_round)
        {
            problems.push(format!(
                "n_clusters must be in [1, clients_per_round={}], got {}",
                self.clients_per_round, self.n_clusters
            ));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            problems.push(format!("alpha must be in [0, 1), got {}", self.alpha));
        }
        if self.prune_start_round > self.total_rounds {
            problems.push(format!(
                "prune_start_round ({}) must not exceed total_rounds ({})",
                self.prune_start_round, self.total_rounds
            ));
        }
        if let Err(e) = self.cost_model.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// The server's authoritative model representation: coefficients when the
/// frequency path is enabled, plain parameters otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum GlobalModel {
    Frequency(FrequencyModel),
    Tensor(ModelParams),
}

impl GlobalModel {
    /// Tensor-space view for evaluation.
    pub fn to_tensor_space(&self) -> Result<ModelParams> {
        match self {
            GlobalModel::Frequency(f) => inverse_model(f),
            GlobalModel::Tensor(m) => Ok(m.clone()),
        }
    }

    fn is_finite(&self) -> bool {
        let params = match self {
            GlobalModel::Frequency(f) => &f.params,
            GlobalModel::Tensor(m) => m,
        };
        params.iter().all(|(_, t)| t.is_finite())
    }
}

/// Server-side run state.
#[derive(Debug, Clone)]
pub struct ServerState {
    pub round: usize,
    pub global: GlobalModel,
    /// Mean upstream megabytes accumulated per selected client.
    pub cumulative_payload_mb: f64,
}

/// Uniform sample of `k` distinct client indices, deterministic per
/// `(seed, round)` and returned in canonical (ascending index) order.
pub fn select_clients(num_clients: usize, k: usize, round: usize, seed: &SeedSpec) -> Result<Vec<usize>> {
    if k == 0 || k > num_clients {
        return Err(Error::usage(format!(
            "cannot select {k} of {num_clients} clients"
        )));
    }
    let mut rng = seed.rng(&[purpose::SELECTION, round as u64]);
    let mut picked = rand::seq::index::sample(&mut rng, num_clients, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// What one client sends back to the server.
#[derive(Debug, Clone)]
pub enum ClientUpdate {
    Frequency(FrequencyUpdate),
    Tensor(ModelParams),
}

/// Per-client variance tracks for the round (population variance over all
/// parameters). Frequency tracks are zero when the frequency path is
/// disabled.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClientVariances {
    pub var_w: f64,
    pub var_dw: f64,
    pub var_w_hat: f64,
    pub var_dw_hat: f64,
}

#[derive(Debug, Clone)]
pub struct ClientRoundOutput {
    pub update: ClientUpdate,
    pub payload_mb: f64,
    pub variances: ClientVariances,
    pub alpha_realized: f64,
}

fn local_update(
    received: &ModelParams,
    shard: &crate::data::ClientShard,
    learner: &LearnerSpec,
    strategy: Strategy,
    seed: u64,
) -> Result<ModelParams> {
    match strategy {
        Strategy::FedProx => learning::local_update_prox(received, received, shard, learner, seed),
        _ => learning::local_update_sgd(received, shard, learner, seed),
    }
}

fn effective_alpha(cfg: &StrategyConfig, round: usize) -> f64 {
    if round >= cfg.prune_start_round {
        cfg.alpha
    } else {
        0.0
    }
}

/// Client-side work for one round with the frequency path enabled.
/// `received` must be the inverse transform of `server_freq`; the engine
/// computes it once per round since it is identical for every client.
fn client_round_frequency(
    server_freq: &FrequencyModel,
    received: &ModelParams,
    shard: &crate::data::ClientShard,
    learner: &LearnerSpec,
    cfg: &StrategyConfig,
    round: usize,
    seed: u64,
) -> Result<ClientRoundOutput> {
    let updated = local_update(received, shard, learner, cfg.strategy, seed)?;
    let delta = updated.subtract(received)?;
    let alpha = effective_alpha(cfg, round);

    let (to_prune, delta_hat_params, w_hat_params);
    match cfg.update_route {
        UpdateRoute::Difference => {
            let delta_hat = transform_model(&delta, cfg.variant)?;
            w_hat_params = server_freq.params.add(&delta_hat.params)?;
            delta_hat_params = delta_hat.params.clone();
            to_prune = delta_hat;
        }
        UpdateRoute::Complete => {
            let w_hat = transform_model(&updated, cfg.variant)?;
            delta_hat_params = w_hat.params.subtract(&server_freq.params)?;
            w_hat_params = w_hat.params.clone();
            to_prune = w_hat;
        }
    }
    let update = pruning::prune(&to_prune, alpha)?;
    if !update.entries.iter().all(|e| e.coeffs.is_finite()) {
        return Err(Error::NonFinite { round });
    }
    let payload_mb = pruning::payload_megabytes(&update, &cfg.cost_model);
    let variances = ClientVariances {
        var_w: model_stats(&updated)?.1,
        var_dw: model_stats(&delta)?.1,
        var_w_hat: model_stats(&w_hat_params)?.1,
        var_dw_hat: model_stats(&delta_hat_params)?.1,
    };
    let alpha_realized = update.alpha_realized;
    Ok(ClientRoundOutput {
        update: ClientUpdate::Frequency(update),
        payload_mb,
        variances,
        alpha_realized,
    })
}

/// Client-side work for one baseline round (no transforms, dense upload).
fn client_round_baseline(
    received: &ModelParams,
    shard: &crate::data::ClientShard,
    learner: &LearnerSpec,
    cfg: &StrategyConfig,
    round: usize,
    seed: u64,
) -> Result<ClientRoundOutput> {
    let updated = local_update(received, shard, learner, cfg.strategy, seed)?;
    if !updated.iter().all(|(_, t)| t.is_finite()) {
        return Err(Error::NonFinite { round });
    }
    let delta = updated.subtract(received)?;
    let payload_mb = pruning::dense_payload_megabytes(updated.total_elements(), &cfg.cost_model);
    let variances = ClientVariances {
        var_w: model_stats(&updated)?.1,
        var_dw: model_stats(&delta)?.1,
        var_w_hat: 0.0,
        var_dw_hat: 0.0,
    };
    Ok(ClientRoundOutput {
        update: ClientUpdate::Tensor(updated),
        payload_mb,
        variances,
        alpha_realized: 0.0,
    })
}

/// One client's round: reconstruct the received model if needed, run the
/// local update, and package the upload with its payload cost and variance
/// tracks.
pub fn client_round(
    global: &GlobalModel,
    shard: &crate::data::ClientShard,
    learner: &LearnerSpec,
    cfg: &StrategyConfig,
    round: usize,
    seed: u64,
) -> Result<ClientRoundOutput> {
    match global {
        GlobalModel::Frequency(f) => {
            let received = inverse_model(f)?;
            client_round_frequency(f, &received, shard, learner, cfg, round, seed)
        }
        GlobalModel::Tensor(w) => client_round_baseline(w, shard, learner, cfg, round, seed),
    }
}

/// Size-weighted average `sum_k (n_k / n) models[k]` in canonical order.
pub fn weighted_average(models: &[ModelParams], sizes: &[usize]) -> Result<ModelParams> {
    if models.is_empty() || models.len() != sizes.len() {
        return Err(Error::usage(
            "weighted_average needs one size per model and at least one model",
        ));
    }
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::usage("weighted_average got zero total size"));
    }
    let coeffs: Vec<f64> = sizes.iter().map(|&n| n as f64 / total as f64).collect();
    linear_combine(&coeffs, models)
}

/// Seeded k-means over flattened update vectors.
///
/// Initial centroids are sampled without replacement from the distinct
/// vectors; when fewer distinct vectors than clusters exist the effective
/// cluster count shrinks. Lloyd iterations stop after 100 rounds or when
/// no centroid moves more than 1e-6. Returns per-input assignments and the
/// number of non-empty clusters.
pub fn cluster_clients(
    features: &[Vec<f64>],
    n_clusters: usize,
    seed: u64,
) -> Result<(Vec<usize>, usize)> {
    if features.is_empty() {
        return Err(Error::usage("cluster_clients needs at least one update"));
    }
    if n_clusters == 0 || n_clusters > features.len() {
        return Err(Error::usage(format!(
            "n_clusters must be in [1, {}], got {n_clusters}",
            features.len()
        )));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::usage("update vectors have inconsistent lengths"));
    }

    let mut distinct: Vec<usize> = Vec::new();
    'outer: for (i, f) in features.iter().enumerate() {
        for &j in &distinct {
            if features[j] == *f {
                continue 'outer;
            }
        }
        distinct.push(i);
    }
    let k = n_clusters.min(distinct.len());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, distinct.len(), k).into_vec();
    chosen.sort_unstable();
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|&c| features[distinct[c]].clone()).collect();

    let sq_dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
    };

    let mut assignments = vec![0usize; features.len()];
    for _ in 0..100 {
        for (a, f) in assignments.iter_mut().zip(features.iter()) {
            let mut best = 0usize;
            let mut best_d = sq_dist(f, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = sq_dist(f, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            *a = best;
        }
        let mut moved: f64 = 0.0;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = assignments
                .iter()
                .enumerate()
                .filter(|(_, &a)| a == c)
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                continue; // keep previous centroid
            }
            let mut mean = vec![0.0; dim];
            for &m in &members {
                for (acc, v) in mean.iter_mut().zip(features[m].iter()) {
                    *acc += v;
                }
            }
            for v in mean.iter_mut() {
                *v /= members.len() as f64;
            }
            moved = moved.max(sq_dist(centroid, &mean).sqrt());
            *centroid = mean;
        }
        if moved < 1e-6 {
            break;
        }
    }
    let mut seen: Vec<usize> = assignments.clone();
    seen.sort_unstable();
    seen.dedup();
    Ok((assignments, seen.len()))
}

/// Two-level FedSim aggregation: size-weighted mean inside each cluster,
/// then an unweighted mean across the (non-empty) cluster models.
pub fn cluster_aggregate(
    models: &[ModelParams],
    sizes: &[usize],
    assignments: &[usize],
) -> Result<(ModelParams, usize)> {
    if models.len() != assignments.len() || models.len() != sizes.len() {
        return Err(Error::usage(
            "cluster_aggregate needs one size and one assignment per model",
        ));
    }
    let mut cluster_ids: Vec<usize> = assignments.to_vec();
    cluster_ids.sort_unstable();
    cluster_ids.dedup();
    let mut cluster_models = Vec::with_capacity(cluster_ids.len());
    for &c in &cluster_ids {
        let member_models: Vec<ModelParams> = models
            .iter()
            .zip(assignments.iter())
            .filter(|(_, &a)| a == c)
            .map(|(m, _)| m.clone())
            .collect();
        let member_sizes: Vec<usize> = sizes
            .iter()
            .zip(assignments.iter())
            .filter(|(_, &a)| a == c)
            .map(|(&s, _)| s)
            .collect();
        cluster_models.push(weighted_average(&member_models, &member_sizes)?);
    }
    let k = cluster_models.len();
    let global = if k == 1 {
        cluster_models.pop().unwrap()
    } else {
        let coeffs = vec![1.0 / k as f64; k];
        linear_combine(&coeffs, &cluster_models)?
    };
    Ok((global, k))
}

/// Reconstruct the per-client models the server averages, in the space the
/// server operates in: `w_hat_t + delta_hat_k` on the difference route,
/// the densified upload on the complete route, raw parameters in baseline
/// mode.
fn reconstruct_models(
    route: UpdateRoute,
    global: &GlobalModel,
    updates: &[ClientUpdate],
) -> Result<Vec<ModelParams>> {
    updates
        .iter()
        .map(|u| match (u, global) {
            (ClientUpdate::Frequency(u), GlobalModel::Frequency(f)) => match route {
                UpdateRoute::Difference => f.params.add(&pruning::densify(u).params),
                UpdateRoute::Complete => Ok(pruning::densify(u).params),
            },
            (ClientUpdate::Tensor(m), GlobalModel::Tensor(_)) => Ok(m.clone()),
            _ => Err(Error::usage("client update does not match server mode")),
        })
        .collect()
}

fn wrap_like(global: &GlobalModel, aggregated: ModelParams) -> GlobalModel {
    match global {
        GlobalModel::Frequency(f) => GlobalModel::Frequency(FrequencyModel {
            params: aggregated,
            variant: f.variant,
        }),
        GlobalModel::Tensor(_) => GlobalModel::Tensor(aggregated),
    }
}

/// Size-weighted federated averaging of one round's uploads, in the
/// server's space (frequency coefficients or plain parameters).
pub fn aggregate_fedavg(
    server: &GlobalModel,
    updates: &[ClientUpdate],
    sizes: &[usize],
    route: UpdateRoute,
) -> Result<GlobalModel> {
    let models = reconstruct_models(route, server, updates)?;
    Ok(wrap_like(server, weighted_average(&models, sizes)?))
}

/// Two-level FedSim aggregation of one round's uploads; returns the new
/// global and the number of non-empty clusters.
pub fn aggregate_fedsim(
    server: &GlobalModel,
    updates: &[ClientUpdate],
    sizes: &[usize],
    assignments: &[usize],
    route: UpdateRoute,
) -> Result<(GlobalModel, usize)> {
    let models = reconstruct_models(route, server, updates)?;
    let (aggregated, k_eff) = cluster_aggregate(&models, sizes, assignments)?;
    Ok((wrap_like(server, aggregated), k_eff))
}

/// Flattened update vectors used as the clustering signal: the (densified)
/// coefficient delta in frequency mode, the raw parameter delta otherwise.
fn clustering_features(
    route: UpdateRoute,
    global: &GlobalModel,
    updates: &[ClientUpdate],
) -> Result<Vec<Vec<f64>>> {
    updates
        .iter()
        .map(|u| match (u, global) {
            (ClientUpdate::Frequency(u), GlobalModel::Frequency(f)) => match route {
                UpdateRoute::Difference => Ok(pruning::densify(u).params.flatten()),
                UpdateRoute::Complete => {
                    Ok(pruning::densify(u).params.subtract(&f.params)?.flatten())
                }
            },
            (ClientUpdate::Tensor(m), GlobalModel::Tensor(w)) => Ok(m.subtract(w)?.flatten()),
            _ => Err(Error::usage("client update does not match server mode")),
        })
        .collect()
}

fn aggregate_round(
    cfg: &StrategyConfig,
    global: &GlobalModel,
    updates: &[ClientUpdate],
    sizes: &[usize],
    round: usize,
) -> Result<(GlobalModel, Option<usize>)> {
    match cfg.strategy {
        Strategy::FedAvg | Strategy::FedProx => Ok((
            aggregate_fedavg(global, updates, sizes, cfg.update_route)?,
            None,
        )),
        Strategy::FedSim => {
            let features = clustering_features(cfg.update_route, global, updates)?;
            let cluster_seed = cfg.seed.child(&[purpose::CLUSTERING, round as u64]);
            let (assignments, _) = cluster_clients(&features, cfg.n_clusters, cluster_seed)?;
            let (model, k_eff) =
                aggregate_fedsim(global, updates, sizes, &assignments, cfg.update_route)?;
            Ok((model, Some(k_eff)))
        }
    }
}

/// Run one seeded experiment, returning the per-round metric records and
/// the final server state.
pub fn run_experiment_with_state(
    dataset: &FederatedDataset,
    learner: &LearnerSpec,
    cfg: &StrategyConfig,
) -> Result<(Vec<RoundRecord>, ServerState)> {
    cfg.validate(dataset.num_clients())?;
    learner.validate()?;
    if learner.input_dim != dataset.feature_dim || learner.num_classes != dataset.num_classes {
        return Err(Error::Config(vec![format!(
            "learner dims ({}, {}) do not match dataset ({}, {})",
            learner.input_dim, learner.num_classes, dataset.feature_dim, dataset.num_classes
        )]));
    }

    let init = learner.init_params(cfg.seed.child(&[purpose::MODEL_INIT]))?;
    let mut server = ServerState {
        round: 0,
        global: if cfg.fedft_enabled {
            GlobalModel::Frequency(transform_model(&init, cfg.variant)?)
        } else {
            GlobalModel::Tensor(init)
        },
        cumulative_payload_mb: 0.0,
    };

    let mut records = Vec::with_capacity(cfg.total_rounds);
    for round in 0..cfg.total_rounds {
        let selected = select_clients(
            dataset.num_clients(),
            cfg.clients_per_round,
            round,
            &cfg.seed,
        )?;

        // The received tensor-space model is identical for every client;
        // reconstruct it once.
        let received = server.global.to_tensor_space()?;
        let mut outputs = Vec::with_capacity(selected.len());
        for &idx in &selected {
            let seed = cfg
                .seed
                .child(&[purpose::LOCAL_UPDATE, round as u64, idx as u64]);
            let shard = &dataset.shards[idx];
            let out = match &server.global {
                GlobalModel::Frequency(f) => {
                    client_round_frequency(f, &received, shard, learner, cfg, round, seed)?
                }
                GlobalModel::Tensor(_) => {
                    client_round_baseline(&received, shard, learner, cfg, round, seed)?
                }
            };
            outputs.push(out);
        }
        let sizes: Vec<usize> = selected
            .iter()
            .map(|&i| dataset.shards[i].train_len())
            .collect();

        let updates: Vec<ClientUpdate> = outputs.iter().map(|o| o.update.clone()).collect();
        let (new_global, effective_clusters) =
            aggregate_round(cfg, &server.global, &updates, &sizes, round)?;
        if !new_global.is_finite() {
            return Err(Error::NonFinite { round });
        }
        server.global = new_global;
        server.round = round + 1;

        let eval_params = server.global.to_tensor_space()?;
        let (weighted_accuracy, _) = learning::evaluate(&eval_params, &dataset.shards)?;

        let k = outputs.len() as f64;
        let per_round_payload_mb = outputs.iter().map(|o| o.payload_mb).sum::<f64>() / k;
        server.cumulative_payload_mb += per_round_payload_mb;
        let mean = |f: fn(&ClientVariances) -> f64| -> f64 {
            outputs.iter().map(|o| f(&o.variances)).sum::<f64>() / k
        };
        let alpha_realized = match &outputs[0].update {
            ClientUpdate::Frequency(u) => u.alpha_realized,
            ClientUpdate::Tensor(_) => 0.0,
        };
        records.push(RoundRecord {
            round,
            weighted_accuracy,
            per_round_payload_mb,
            cumulative_payload_mb: server.cumulative_payload_mb,
            var_w: mean(|v| v.var_w),
            var_dw: mean(|v| v.var_dw),
            var_w_hat: mean(|v| v.var_w_hat),
            var_dw_hat: mean(|v| v.var_dw_hat),
            alpha_realized,
            effective_clusters,
            seed: cfg.seed.global_seed,
        });
    }
    Ok((records, server))
}

/// Run one seeded experiment, returning the per-round metric records.
pub fn run_experiment(
    dataset: &FederatedDataset,
    learner: &LearnerSpec,
    cfg: &StrategyConfig,
) -> Result<Vec<RoundRecord>> {
    run_experiment_with_state(dataset, learner, cfg).map(|(records, _)| records)
}

/// Repeat an experiment across seeds (same dataset, fresh model
/// initialisation, selection and shuffling per seed).
pub fn run_repeated(
    dataset: &FederatedDataset,
    learner: &LearnerSpec,
    cfg: &StrategyConfig,
    seeds: &[u64],
) -> Result<Vec<Vec<RoundRecord>>> {
    if seeds.is_empty() {
        return Err(Error::usage("run_repeated needs at least one seed"));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let mut seeded = cfg.clone();
        seeded.seed = SeedSpec::new(s);
        runs.push(run_experiment(dataset, learner, &seeded)?);
    }
    Ok(runs)
}
