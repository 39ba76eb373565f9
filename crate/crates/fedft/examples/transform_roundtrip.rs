//! Transform a model into frequency space and back, and check the
//! round-trip error and the energy relation of the unnormalized DCT-IV.
//!
//! Run with: cargo run --example transform_roundtrip

use fedft::prelude::*;

fn main() -> Result<()> {
    // A small two-layer model with Gaussian weights.
    let model = gaussian_model(
        &[
            ("layer0.weight", &[64, 10]),
            ("layer0.bias", &[10]),
        ],
        0.0,
        0.3,
        42,
    )?;

    let freq = transform_model(&model, DctVariant::IV)?;
    let restored = inverse_model(&freq)?;

    let mut max_err = 0.0f64;
    for ((_, a), (_, b)) in model.iter().zip(restored.iter()) {
        for (&x, &y) in a.data().iter().zip(b.data().iter()) {
            max_err = max_err.max((x - y).abs());
        }
    }
    println!("round-trip max abs error: {max_err:.3e}");

    let (max_abs, mean_abs) = reconstruction_error(&model, DctVariant::IV)?;
    println!("reconstruction_error:     max {max_abs:.3e}  mean {mean_abs:.3e}");

    // For a 1-D signal of length N the unnormalized DCT-IV satisfies
    // sum(coeffs^2) = (N/2) * sum(signal^2).
    let signal = gaussian_model(&[("s", &[128])], 0.0, 1.0, 7)?;
    let t = dct_forward(signal.get("s").unwrap(), DctVariant::IV)?;
    let e_in: f64 = signal.get("s").unwrap().data().iter().map(|x| x * x).sum();
    let e_out: f64 = t.data().iter().map(|x| x * x).sum();
    println!(
        "energy: sum(coeffs^2) = {e_out:.6}, (N/2) * sum(signal^2) = {:.6}",
        64.0 * e_in
    );

    // Linearity: T(aX + bY) == a T(X) + b T(Y).
    let x = gaussian_model(&[("w", &[16, 8])], 0.0, 1.0, 1)?;
    let y = gaussian_model(&[("w", &[16, 8])], 0.0, 1.0, 2)?;
    let (a, b) = (0.3, -1.2);
    let lhs = transform_model(&linear_combine(&[a, b], &[x.clone(), y.clone()])?, DctVariant::IV)?;
    let rhs = linear_combine(
        &[a, b],
        &[
            transform_model(&x, DctVariant::IV)?.params,
            transform_model(&y, DctVariant::IV)?.params,
        ],
    )?;
    let mut lin_err = 0.0f64;
    for ((_, l), (_, r)) in lhs.params.iter().zip(rhs.iter()) {
        for (&u, &v) in l.data().iter().zip(r.data().iter()) {
            lin_err = lin_err.max((u - v).abs());
        }
    }
    println!("linearity max abs error:  {lin_err:.3e}");
    Ok(())
}
