//! The four DCT variants side by side: all are exactly invertible with
//! their matched inverses, all are linear, and all support the federated
//! exchange. They differ in kernel and scale, not in fidelity at zero
//! pruning.
//!
//! Run with: cargo run --example dct_variants

use fedft::prelude::*;

fn main() -> Result<()> {
    let model = gaussian_model(&[("layer0.weight", &[32, 6]), ("layer0.bias", &[6])], 0.0, 0.3, 9)?;

    println!("{:<8} {:>16} {:>16}", "variant", "roundtrip max", "linearity max");
    for variant in DctVariant::ALL {
        let (max_abs, _) = reconstruction_error(&model, variant)?;

        let x = gaussian_model(&[("w", &[12, 4])], 0.0, 1.0, 1)?;
        let y = gaussian_model(&[("w", &[12, 4])], 0.0, 1.0, 2)?;
        let combo = linear_combine(&[0.7, -0.4], &[x.clone(), y.clone()])?;
        let lhs = transform_model(&combo, variant)?;
        let rhs = linear_combine(
            &[0.7, -0.4],
            &[
                transform_model(&x, variant)?.params,
                transform_model(&y, variant)?.params,
            ],
        )?;
        let mut lin = 0.0f64;
        for ((_, l), (_, r)) in lhs.params.iter().zip(rhs.iter()) {
            for (&a, &b) in l.data().iter().zip(r.data().iter()) {
                lin = lin.max((a - b).abs());
            }
        }
        println!("{:<8} {:>16.3e} {:>16.3e}", format!("{variant:?}"), max_abs, lin);
    }

    // A short federated run per variant.
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 16,
        num_classes: 4,
        feature_dim: 24,
        classes_per_client: 2,
        samples_range: (10, 30),
        class_separation: 2.0,
        seed: 13,
    })?;
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 24,
        num_classes: 4,
        learning_rate: 0.05,
        local_epochs: 10,
        batch_size: None,
        proximal_mu: 0.0,
    };
    println!("\n{:<8} {:>12}", "variant", "acc @15");
    for variant in DctVariant::ALL {
        let cfg = StrategyConfig {
            strategy: Strategy::FedAvg,
            fedft_enabled: true,
            update_route: UpdateRoute::Difference,
            alpha: 0.0,
            prune_start_round: 0,
            clients_per_round: 6,
            n_clusters: 2,
            total_rounds: 15,
            variant,
            seed: SeedSpec::new(8),
            cost_model: CostModel::default(),
        };
        let records = run_experiment(&dataset, &learner, &cfg)?;
        println!(
            "{:<8} {:>12.4}",
            format!("{variant:?}"),
            records.last().unwrap().weighted_accuracy
        );
    }
    Ok(())
}
