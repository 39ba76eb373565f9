//! A deterministic, single-process federated-learning simulator in which
//! all server/client model traffic is represented in DCT frequency space.
//!
//! Clients train locally in tensor space, transform their update (either
//! the parameter delta or the complete model) into frequency coefficients,
//! optionally prune the trailing high-frequency tail, and upload the
//! result. Thanks to the linearity of the transform the server aggregates
//! directly on coefficients; the global model only returns to tensor space
//! for local training and evaluation. Baseline (non-transformed) FedAvg,
//! FedProx and FedSim are available for comparison, along with payload
//! cost accounting and per-round variance tracks.
//!
//! Everything is seeded: a fixed global seed reproduces a run bit for bit.
//!
//! # Layout
//!
//! * [`tensor`] - dense tensors, named parameter lists, seeded RNG.
//! * [`transform`] - separable multi-dimensional DCT, variants I-IV.
//! * [`pruning`] - tail pruning and payload-size accounting.
//! * [`learning`] - MLR / small-MLP learners, SGD and proximal SGD.
//! * [`data`] - synthetic non-IID datasets, LEAF-style JSON I/O, presets.
//! * [`federation`] - client selection, client rounds, aggregation, the
//!   round loop.
//! * [`reporting`] - round records, seed averaging, CSV emission.
//! * [`config`] - JSON experiment configs and the CLI command backends.
//!
//! # Example
//!
//! ```
//! use fedft::prelude::*;
//!
//! let dataset = generate_synthetic(&SyntheticSpec {
//!     num_clients: 8,
//!     num_classes: 4,
//!     feature_dim: 16,
//!     classes_per_client: 2,
//!     samples_range: (6, 12),
//!     class_separation: 2.0,
//!     seed: 1,
//! })
//! .unwrap();
//! let learner = LearnerSpec {
//!     architecture: Architecture::Mlr,
//!     input_dim: 16,
//!     num_classes: 4,
//!     learning_rate: 0.05,
//!     local_epochs: 5,
//!     batch_size: None,
//!     proximal_mu: 0.0,
//! };
//! let cfg = StrategyConfig {
//!     strategy: Strategy::FedAvg,
//!     fedft_enabled: true,
//!     update_route: UpdateRoute::Difference,
//!     alpha: 0.2,
//!     prune_start_round: 0,
//!     clients_per_round: 4,
//!     n_clusters: 2,
//!     total_rounds: 5,
//!     variant: DctVariant::IV,
//!     seed: SeedSpec::new(42),
//!     cost_model: CostModel::default(),
//! };
//! let records = run_experiment(&dataset, &learner, &cfg).unwrap();
//! assert_eq!(records.len(), 5);
//! ```

pub mod config;
pub mod data;
pub mod error;
pub mod federation;
pub mod learning;
pub mod pruning;
pub mod reporting;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};

/// Common imports for examples and downstream code.
pub mod prelude {
    pub use crate::data::{
        dataset_presets, generate_synthetic, load_leaf_json, write_leaf_json, ClientShard,
        FederatedDataset, SyntheticSpec,
    };
    pub use crate::error::{Error, Result};
    pub use crate::federation::{
        cluster_clients, run_experiment, run_repeated, select_clients, GlobalModel, Strategy,
        StrategyConfig, UpdateRoute,
    };
    pub use crate::learning::{
        evaluate, forward_loss, local_update_prox, local_update_sgd, Architecture, LearnerSpec,
    };
    pub use crate::pruning::{densify, payload_megabytes, prune, CostModel};
    pub use crate::reporting::{aggregate_seeds, write_csv, RoundRecord};
    pub use crate::tensor::{
        gaussian_model, linear_combine, model_stats, ModelParams, SeedSpec, Tensor,
    };
    pub use crate::transform::{
        dct_forward, dct_inverse, inverse_model, reconstruction_error, transform_model,
        DctVariant, FrequencyModel,
    };
}
