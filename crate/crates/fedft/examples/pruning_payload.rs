//! Tail pruning and upstream payload accounting on an exercise-recognition
//! sized model (1280 features, 7 classes): with a 7-long last axis the
//! reachable pruning rates are multiples of 1/7.
//!
//! Run with: cargo run --example pruning_payload

use fedft::prelude::*;

fn main() -> Result<()> {
    let model = gaussian_model(&[("layer0.weight", &[1280, 7]), ("layer0.bias", &[7])], 0.0, 0.1, 3)?;
    let freq = transform_model(&model, DctVariant::IV)?;
    let cost = CostModel::default();

    println!(
        "model: 1280x7 weights + 7 bias = {} parameters, {} bytes/value on the wire",
        model.total_elements(),
        cost.bytes_per_value
    );
    println!(
        "{:>10} {:>14} {:>12} {:>12}",
        "alpha req", "alpha realized", "retained", "payload MB"
    );
    for alpha in [0.0, 1.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0, 4.0 / 7.0] {
        let update = prune(&freq, alpha)?;
        println!(
            "{:>10.4} {:>14.4} {:>12} {:>12.6}",
            alpha,
            update.alpha_realized,
            update.retained_elements(),
            payload_megabytes(&update, &cost)
        );
    }

    // Densify puts the zeros back; retained positions are untouched.
    let update = prune(&freq, 2.0 / 7.0)?;
    let dense = densify(&update);
    let again = prune(&dense, 2.0 / 7.0)?;
    println!("\nprune(densify(prune(f))) == prune(f): {}", again == update);
    Ok(())
}
