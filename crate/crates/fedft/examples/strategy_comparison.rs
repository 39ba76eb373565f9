//! FedAvg, FedProx and FedSim with and without the frequency-space
//! exchange, on one small non-IID federation.
//!
//! Run with: cargo run --example strategy_comparison

use fedft::prelude::*;

fn main() -> Result<()> {
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 24,
        num_classes: 6,
        feature_dim: 48,
        classes_per_client: 2,
        samples_range: (10, 40),
        class_separation: 2.0,
        seed: 17,
    })?;
    let mut learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 48,
        num_classes: 6,
        learning_rate: 0.05,
        local_epochs: 10,
        batch_size: None,
        proximal_mu: 0.0,
    };

    println!(
        "{:<10} {:<10} {:>12} {:>18}",
        "strategy", "exchange", "final acc", "cumulative MB"
    );
    for strategy in [Strategy::FedAvg, Strategy::FedProx, Strategy::FedSim] {
        learner.proximal_mu = match strategy {
            Strategy::FedProx => 0.01,
            _ => 0.0,
        };
        for fedft in [false, true] {
            let cfg = StrategyConfig {
                strategy,
                fedft_enabled: fedft,
                update_route: UpdateRoute::Difference,
                alpha: 0.0,
                prune_start_round: 0,
                clients_per_round: 8,
                n_clusters: 3,
                total_rounds: 20,
                variant: DctVariant::IV,
                seed: SeedSpec::new(5),
                cost_model: CostModel::default(),
            };
            let records = run_experiment(&dataset, &learner, &cfg)?;
            let last = records.last().unwrap();
            println!(
                "{:<10} {:<10} {:>12.4} {:>18.6}",
                strategy.name(),
                if fedft { "frequency" } else { "tensor" },
                last.weighted_accuracy,
                last.cumulative_payload_mb
            );
        }
    }
    Ok(())
}
