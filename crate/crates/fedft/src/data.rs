//! Federated dataset generation and loading.
//!
//! The synthetic generator draws class-conditional Gaussian features with
//! unit covariance. Class means sit on a seeded random simplex: mutually
//! orthogonal directions scaled by `sqrt(2) * class_separation`, so every
//! pair of class means is `2 * class_separation` apart and the per-class
//! decision margin is `class_separation` standard deviations. Statistical
//! heterogeneity is controlled by restricting the number of distinct
//! classes each client holds.
//!
//! Datasets can also be loaded from (and exported to) a LEAF-style JSON
//! layout; see [`load_leaf_json`] for the schema.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{purpose, sample_normal, SeedSpec, Tensor};

/// One client's local train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client_id: String,
    /// `[n_train, feature_dim]`
    pub train_x: Tensor,
    pub train_y: Vec<usize>,
    /// `[n_test, feature_dim]`
    pub test_x: Tensor,
    pub test_y: Vec<usize>,
}

impl ClientShard {
    pub fn train_len(&self) -> usize {
        self.train_y.len()
    }

    pub fn test_len(&self) -> usize {
        self.test_y.len()
    }

    pub fn total_len(&self) -> usize {
        self.train_len() + self.test_len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Synthetic(SyntheticSpec),
    File(PathBuf),
}

/// A complete federated dataset: one shard per client.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedDataset {
    pub shards: Vec<ClientShard>,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub provenance: Provenance,
}

impl FederatedDataset {
    pub fn num_clients(&self) -> usize {
        self.shards.len()
    }

    pub fn total_samples(&self) -> usize {
        self.shards.iter().map(|s| s.total_len()).sum()
    }

    pub fn client_ids(&self) -> Vec<&str> {
        self.shards.iter().map(|s| s.client_id.as_str()).collect()
    }

    /// Content equality ignoring provenance.
    pub fn same_data(&self, other: &FederatedDataset) -> bool {
        self.num_classes == other.num_classes
            && self.feature_dim == other.feature_dim
            && self.shards == other.shards
    }
}

/// Parameters for the synthetic non-IID generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_clients: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub classes_per_client: usize,
    /// Inclusive range of per-client sample counts (train + test).
    pub samples_range: (usize, usize),
    pub class_separation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.num_clients == 0 {
            problems.push("num_clients must be positive".to_string());
        }
        if self.num_classes < 2 {
            problems.push("num_classes must be at least 2".to_string());
        }
        if self.feature_dim == 0 {
            problems.push("feature_dim must be positive".to_string());
        }
        if self.classes_per_client == 0 || self.classes_per_client > self.num_classes {
            problems.push(format!(
                "classes_per_client must be in [1, num_classes], got {} of {}",
                self.classes_per_client, self.num_classes
            ));
        }
        if self.num_classes > self.feature_dim {
            problems.push(format!(
                "num_classes ({}) must not exceed feature_dim ({}) for the simplex construction",
                self.num_classes, self.feature_dim
            ));
        }
        if self.samples_range.0 < 2 {
            problems.push("samples_range minimum must be at least 2 (one train + one test sample)".to_string());
        }
        if self.samples_range.0 > self.samples_range.1 {
            problems.push(format!(
                "samples_range minimum {} exceeds maximum {}",
                self.samples_range.0, self.samples_range.1
            ));
        }
        if !(self.class_separation.is_finite() && self.class_separation >= 0.0) {
            problems.push("class_separation must be a finite non-negative real".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Test-set size for a client with `total` samples: a 20% split rounded to
/// the nearest integer, clamped so both splits are non-empty. The loader
/// applies the same rule, so export/load round-trips reproduce splits.
pub fn test_split_count(total: usize) -> usize {
    ((0.2 * total as f64).round() as usize).clamp(1, total - 1)
}

/// Mutually orthogonal unit vectors from seeded Gaussian draws
/// (Gram-Schmidt), scaled to place class means `2 * separation` apart.
fn class_means(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let seeds = SeedSpec::new(spec.seed);
    let mut rng = seeds.rng(&[purpose::CLASS_MEANS]);
    let d = spec.feature_dim;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(spec.num_classes);
    while basis.len() < spec.num_classes {
        let mut v = sample_normal(&mut rng, d, 0.0, 1.0);
        for b in &basis {
            let dot: f64 = v.iter().zip(b.iter()).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= dot * bi;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // essentially-dependent draw; resample
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        basis.push(v);
    }
    let scale = spec.class_separation * std::f64::consts::SQRT_2;
    for b in basis.iter_mut() {
        for v in b.iter_mut() {
            *v *= scale;
        }
    }
    basis
}

/// Generate a deterministic synthetic federated dataset.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FederatedDataset> {
    spec.validate()?;
    let means = class_means(spec);
    let seeds = SeedSpec::new(spec.seed);
    let d = spec.feature_dim;
    let mut shards = Vec::with_capacity(spec.num_clients);
    for i in 0..spec.num_clients {
        let mut rng = seeds.rng(&[purpose::CLIENT_DATA, i as u64]);
        let classes: Vec<usize> = {
            let mut sampled =
                rand::seq::index::sample(&mut rng, spec.num_classes, spec.classes_per_client)
                    .into_vec();
            sampled.sort_unstable();
            sampled
        };
        let total = rng.random_range(spec.samples_range.0..=spec.samples_range.1);
        let n_test = test_split_count(total);
        let n_train = total - n_test;
        let mut xs = Vec::with_capacity(total * d);
        let mut ys = Vec::with_capacity(total);
        for _ in 0..total {
            let label = classes[rng.random_range(0..classes.len())];
            let noise = sample_normal(&mut rng, d, 0.0, 1.0);
            xs.extend(means[label].iter().zip(noise.iter()).map(|(m, n)| m + n));
            ys.push(label);
        }
        let (train_flat, test_flat) = xs.split_at(n_train * d);
        let (train_y, test_y) = ys.split_at(n_train);
        shards.push(ClientShard {
            client_id: format!("client_{i:04}"),
            train_x: Tensor::new(vec![n_train, d], train_flat.to_vec())?,
            train_y: train_y.to_vec(),
            test_x: Tensor::new(vec![n_test, d], test_flat.to_vec())?,
            test_y: test_y.to_vec(),
        });
    }
    Ok(FederatedDataset {
        shards,
        num_classes: spec.num_classes,
        feature_dim: spec.feature_dim,
        provenance: Provenance::Synthetic(spec.clone()),
    })
}

#[derive(Serialize, Deserialize)]
struct LeafUser {
    x: Vec<Vec<f64>>,
    y: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct LeafFile {
    users: Vec<String>,
    num_samples: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<usize>,
    user_data: BTreeMap<String, LeafUser>,
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::DatasetParse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Load a LEAF-style JSON dataset.
///
/// Schema: a top-level object with `users` (list of ids), `num_samples`
/// (list of per-user totals, same order), optional `num_classes`, and
/// `user_data` mapping each id to `{"x": [[f64; d]; n], "y": [int; n]}`.
/// Within a user, samples are ordered train-then-test; the 80/20 boundary
/// is re-derived with [`test_split_count`], so files written by
/// [`write_leaf_json`] load back to identical datasets. When `num_classes`
/// is absent it is inferred as `max(y) + 1`.
pub fn load_leaf_json(path: impl AsRef<Path>) -> Result<FederatedDataset> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: LeafFile =
        serde_json::from_str(&raw).map_err(|e| parse_err(path, format!("invalid JSON: {e}")))?;

    if file.users.is_empty() {
        return Err(parse_err(path, "no users in file"));
    }
    if file.users.len() != file.num_samples.len() {
        return Err(parse_err(
            path,
            format!(
                "users ({}) and num_samples ({}) lengths differ",
                file.users.len(),
                file.num_samples.len()
            ),
        ));
    }
    let mut seen = HashSet::new();
    for u in &file.users {
        if !seen.insert(u.as_str()) {
            return Err(parse_err(path, format!("duplicate user id `{u}`")));
        }
    }
    if file.user_data.len() != file.users.len() {
        return Err(parse_err(
            path,
            format!(
                "user_data has {} entries for {} users",
                file.user_data.len(),
                file.users.len()
            ),
        ));
    }

    let mut feature_dim: Option<usize> = None;
    let mut max_label: i64 = -1;
    let mut shards = Vec::with_capacity(file.users.len());
    for (user, &declared) in file.users.iter().zip(file.num_samples.iter()) {
        let data = file
            .user_data
            .get(user)
            .ok_or_else(|| parse_err(path, format!("user `{user}` missing from user_data")))?;
        let n = data.x.len();
        if n != data.y.len() {
            return Err(parse_err(
                path,
                format!("user `{user}` has {n} feature rows but {} labels", data.y.len()),
            ));
        }
        if n != declared {
            return Err(parse_err(
                path,
                format!("user `{user}` declares {declared} samples but has {n}"),
            ));
        }
        if n < 2 {
            return Err(parse_err(
                path,
                format!("user `{user}` needs at least 2 samples for a train/test split, has {n}"),
            ));
        }
        for row in &data.x {
            match feature_dim {
                None => feature_dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(parse_err(
                        path,
                        format!(
                            "user `{user}` has a feature row of length {} (expected {d})",
                            row.len()
                        ),
                    ));
                }
                _ => {}
            }
        }
        for &label in &data.y {
            if label < 0 {
                return Err(parse_err(path, format!("user `{user}` has negative label {label}")));
            }
            max_label = max_label.max(label);
        }
        let d = feature_dim.unwrap_or(0);
        if d == 0 {
            return Err(parse_err(path, format!("user `{user}` has empty feature rows")));
        }
        let n_test = test_split_count(n);
        let n_train = n - n_test;
        let mut flat = Vec::with_capacity(n * d);
        for row in &data.x {
            flat.extend_from_slice(row);
        }
        let labels: Vec<usize> = data.y.iter().map(|&l| l as usize).collect();
        shards.push(ClientShard {
            client_id: user.clone(),
            train_x: Tensor::new(vec![n_train, d], flat[..n_train * d].to_vec())?,
            train_y: labels[..n_train].to_vec(),
            test_x: Tensor::new(vec![n_test, d], flat[n_train * d..].to_vec())?,
            test_y: labels[n_train..].to_vec(),
        });
    }

    let inferred = (max_label + 1) as usize;
    let num_classes = match file.num_classes {
        Some(c) => {
            if inferred > c {
                return Err(parse_err(
                    path,
                    format!("label {max_label} out of range for declared num_classes {c}"),
                ));
            }
            c
        }
        None => inferred,
    };
    Ok(FederatedDataset {
        shards,
        num_classes,
        feature_dim: feature_dim.unwrap(),
        provenance: Provenance::File(path.to_path_buf()),
    })
}

/// Export a dataset to the LEAF-style JSON schema accepted by
/// [`load_leaf_json`]. Output bytes are a pure function of the dataset.
pub fn write_leaf_json(dataset: &FederatedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut user_data = BTreeMap::new();
    let mut users = Vec::with_capacity(dataset.shards.len());
    let mut num_samples = Vec::with_capacity(dataset.shards.len());
    for shard in &dataset.shards {
        let d = dataset.feature_dim;
        let mut x: Vec<Vec<f64>> = Vec::with_capacity(shard.total_len());
        x.extend(shard.train_x.data().chunks_exact(d).map(|r| r.to_vec()));
        x.extend(shard.test_x.data().chunks_exact(d).map(|r| r.to_vec()));
        let mut y: Vec<i64> = Vec::with_capacity(shard.total_len());
        y.extend(shard.train_y.iter().map(|&l| l as i64));
        y.extend(shard.test_y.iter().map(|&l| l as i64));
        users.push(shard.client_id.clone());
        num_samples.push(shard.total_len());
        user_data.insert(shard.client_id.clone(), LeafUser { x, y });
    }
    let file = LeafFile {
        users,
        num_samples,
        num_classes: Some(dataset.num_classes),
        user_data,
    };
    let json = serde_json::to_string(&file).expect("dataset serializes");
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Generator parameters plus run defaults for a named preset, at desk
/// scale (client counts 0.1x their reference configuration, minimum 10;
/// per-round selection and cluster counts clamped to stay feasible).
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub synthetic: SyntheticSpec,
    pub learning_rate: f64,
    pub clients_per_round: usize,
    pub n_clusters: usize,
    pub local_epochs: usize,
}

const DESK_SCALE: f64 = 0.1;
const MIN_CLIENTS: usize = 10;

fn desk_clients(reference: usize) -> usize {
    ((reference as f64 * DESK_SCALE).round() as usize).max(MIN_CLIENTS)
}

/// Resolve a preset name: `mnist_like`, `femnist_like` (optionally
/// `femnist_like(c)` to set classes per client), `mex_like`,
/// `goodreads_like`.
pub fn dataset_presets(name: &str) -> Result<Preset> {
    let (base, arg) = match name.find('(') {
        Some(open) if name.ends_with(')') => {
            let inner = &name[open + 1..name.len() - 1];
            let value: usize = inner
                .parse()
                .map_err(|_| Error::usage(format!("invalid preset argument in `{name}`")))?;
            (&name[..open], Some(value))
        }
        _ => (name, None),
    };
    let mut preset = match base {
        "mnist_like" => Preset {
            name: "mnist_like".to_string(),
            synthetic: SyntheticSpec {
                num_clients: desk_clients(1000),
                num_classes: 10,
                feature_dim: 784,
                classes_per_client: 2,
                samples_range: (10, 60),
                class_separation: 3.5,
                seed: 0,
            },
            learning_rate: 0.03,
            clients_per_round: 20,
            n_clusters: 5,
            local_epochs: 20,
        },
        "femnist_like" => Preset {
            name: "femnist_like".to_string(),
            synthetic: SyntheticSpec {
                num_clients: desk_clients(200),
                num_classes: 10,
                feature_dim: 784,
                classes_per_client: 3,
                samples_range: (10, 60),
                class_separation: 3.5,
                seed: 0,
            },
            learning_rate: 0.003,
            clients_per_round: 20,
            n_clusters: 9,
            local_epochs: 20,
        },
        "mex_like" => Preset {
            name: "mex_like".to_string(),
            synthetic: SyntheticSpec {
                num_clients: desk_clients(30),
                num_classes: 7,
                feature_dim: 1280,
                classes_per_client: 2,
                samples_range: (10, 60),
                class_separation: 3.5,
                seed: 0,
            },
            learning_rate: 0.01,
            clients_per_round: 10,
            n_clusters: 3,
            local_epochs: 20,
        },
        "goodreads_like" => Preset {
            name: "goodreads_like".to_string(),
            synthetic: SyntheticSpec {
                num_clients: desk_clients(100),
                num_classes: 2,
                feature_dim: 2517,
                classes_per_client: 2,
                samples_range: (10, 60),
                class_separation: 3.5,
                seed: 0,
            },
            learning_rate: 0.3,
            clients_per_round: 20,
            n_clusters: 11,
            local_epochs: 20,
        },
        other => {
            return Err(Error::usage(format!(
                "unknown dataset preset `{other}` (expected mnist_like, femnist_like[(c)], mex_like or goodreads_like)"
            )))
        }
    };
    if let Some(c) = arg {
        if base != "femnist_like" {
            return Err(Error::usage(format!(
                "preset `{base}` does not take an argument"
            )));
        }
        preset.synthetic.classes_per_client = c;
        preset.name = format!("femnist_like{c}");
    }
    preset.clients_per_round = preset.clients_per_round.min(preset.synthetic.num_clients);
    preset.n_clusters = preset.n_clusters.min(preset.clients_per_round);
    Ok(preset)
}
