//! Frequency-space federated averaging (difference route, no pruning)
//! against the plain tensor-space baseline: per-round accuracies agree to
//! within floating-point reconstruction noise, while the server only ever
//! holds coefficients.
//!
//! Run with: cargo run --example basic_federation

use fedft::prelude::*;

fn main() -> Result<()> {
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 20,
        num_classes: 5,
        feature_dim: 40,
        classes_per_client: 2,
        samples_range: (10, 40),
        class_separation: 2.0,
        seed: 11,
    })?;
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 40,
        num_classes: 5,
        learning_rate: 0.05,
        local_epochs: 10,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let fedft_cfg = StrategyConfig {
        strategy: Strategy::FedAvg,
        fedft_enabled: true,
        update_route: UpdateRoute::Difference,
        alpha: 0.0,
        prune_start_round: 0,
        clients_per_round: 8,
        n_clusters: 2,
        total_rounds: 15,
        variant: DctVariant::IV,
        seed: SeedSpec::new(3),
        cost_model: CostModel::default(),
    };
    let mut baseline_cfg = fedft_cfg.clone();
    baseline_cfg.fedft_enabled = false;

    let fedft = run_experiment(&dataset, &learner, &fedft_cfg)?;
    let baseline = run_experiment(&dataset, &learner, &baseline_cfg)?;

    println!(
        "{:>5} {:>16} {:>16} {:>10}",
        "round", "fedft acc", "baseline acc", "gap"
    );
    for (f, b) in fedft.iter().zip(baseline.iter()) {
        println!(
            "{:>5} {:>16.4} {:>16.4} {:>10.2e}",
            f.round,
            f.weighted_accuracy,
            b.weighted_accuracy,
            (f.weighted_accuracy - b.weighted_accuracy).abs()
        );
    }
    println!(
        "\nupstream per client per round: fedft {:.6} MB, baseline {:.6} MB",
        fedft[0].per_round_payload_mb, baseline[0].per_round_payload_mb
    );
    Ok(())
}
