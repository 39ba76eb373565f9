//! Dense tensors, named parameter collections and seeded randomness.
//!
//! Everything that moves between clients and the server in the simulator is
//! a [`ModelParams`]: an ordered list of named [`Tensor`]s. Tensors are
//! immutable values; operations return new tensors rather than mutating in
//! place, so models can be shared freely between concurrent workers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense N-dimensional array of `f64` in row-major order.
///
/// Invariants: the shape has rank >= 1 with strictly positive axis lengths,
/// `data.len()` equals the product of the axis lengths, and every entry is
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Build a tensor from a shape and row-major data, validating the
    /// invariants.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::usage("tensor shape must have rank >= 1"));
        }
        if shape.contains(&0) {
            return Err(Error::usage(format!(
                "tensor shape must have positive axis lengths, got {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if data.len() != numel {
            return Err(Error::usage(format!(
                "tensor data length {} does not match shape {:?} (expected {})",
                data.len(),
                shape,
                numel
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::usage("tensor entries must be finite"));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        Tensor::new(shape, vec![0.0; numel])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access for internal numeric kernels. Callers are responsible
    /// for leaving the tensor finite.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn last_axis_len(&self) -> usize {
        *self.shape.last().expect("rank >= 1")
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Ordered list of named tensors; the carrier for model parameters, update
/// differences and frequency coefficients.
///
/// Names are unique and the order is stable, so two models are
/// shape-compatible iff names, order and shapes all match pairwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    entries: Vec<(String, Tensor)>,
}

impl ModelParams {
    pub fn new(entries: Vec<(String, Tensor)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::usage("model must contain at least one tensor"));
        }
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                if entries[i].0 == entries[j].0 {
                    return Err(Error::usage(format!(
                        "duplicate tensor name `{}`",
                        entries[i].0
                    )));
                }
            }
        }
        Ok(ModelParams { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Verify that `other` has the same names, order and shapes. The error
    /// names the first offending tensor.
    pub fn check_compatible(&self, other: &ModelParams) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::usage(format!(
                "models have different tensor counts: {} vs {}",
                self.entries.len(),
                other.entries.len()
            )));
        }
        for ((name_a, t_a), (name_b, t_b)) in self.entries.iter().zip(other.entries.iter()) {
            if name_a != name_b {
                return Err(Error::usage(format!(
                    "tensor name mismatch: `{name_a}` vs `{name_b}`"
                )));
            }
            if t_a.shape() != t_b.shape() {
                return Err(Error::ShapeMismatch {
                    name: name_a.clone(),
                    expected: t_a.shape().to_vec(),
                    got: t_b.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Same names and shapes, all entries zero.
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| {
                    (
                        n.clone(),
                        Tensor {
                            shape: t.shape.clone(),
                            data: vec![0.0; t.numel()],
                        },
                    )
                })
                .collect(),
        }
    }

    /// Apply a fallible tensor-to-tensor function to every entry, keeping
    /// names and order.
    pub fn map_tensors<F>(&self, mut f: F) -> Result<ModelParams>
    where
        F: FnMut(&Tensor) -> Result<Tensor>,
    {
        let mut entries = Vec::with_capacity(self.entries.len());
        for (name, t) in &self.entries {
            entries.push((name.clone(), f(t)?));
        }
        Ok(ModelParams { entries })
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &ModelParams) -> Result<ModelParams> {
        self.check_compatible(other)?;
        self.zip_with(other, |a, b| a + b)
    }

    /// Elementwise `self - other`.
    pub fn subtract(&self, other: &ModelParams) -> Result<ModelParams> {
        self.check_compatible(other)?;
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &ModelParams, f: impl Fn(f64, f64) -> f64) -> Result<ModelParams> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for ((name, a), (_, b)) in self.entries.iter().zip(other.entries.iter()) {
            let data: Vec<f64> = a
                .data
                .iter()
                .zip(b.data.iter())
                .map(|(&x, &y)| f(x, y))
                .collect();
            entries.push((name.clone(), Tensor::new(a.shape.clone(), data)?));
        }
        Ok(ModelParams { entries })
    }

    /// All elements of all tensors, concatenated in entry order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_elements());
        for (_, t) in &self.entries {
            out.extend_from_slice(&t.data);
        }
        out
    }
}

/// Elementwise linear combination `sum_i coeffs[i] * models[i]`.
///
/// All models must be pairwise shape-compatible; names and order are
/// preserved. The accumulation order is fixed (zero-initialised output,
/// then one scaled addition per model, in argument order), so results are
/// bit-reproducible.
pub fn linear_combine(coeffs: &[f64], models: &[ModelParams]) -> Result<ModelParams> {
    if models.is_empty() {
        return Err(Error::usage("linear_combine requires at least one model"));
    }
    if coeffs.len() != models.len() {
        return Err(Error::usage(format!(
            "linear_combine got {} coefficients for {} models",
            coeffs.len(),
            models.len()
        )));
    }
    for m in &models[1..] {
        models[0].check_compatible(m)?;
    }
    let mut out = models[0].zeros_like();
    for (&c, m) in coeffs.iter().zip(models.iter()) {
        for ((_, acc), (_, t)) in out.entries.iter_mut().zip(m.entries.iter()) {
            for (a, &x) in acc.data.iter_mut().zip(t.data.iter()) {
                *a += c * x;
            }
        }
    }
    for (name, t) in &out.entries {
        if !t.is_finite() {
            return Err(Error::usage(format!(
                "linear_combine produced a non-finite value in tensor `{name}`"
            )));
        }
    }
    Ok(out)
}

/// Grand mean and population variance over all elements of all tensors.
///
/// The variance divides by the total element count, extending the per-layer
/// `1/(N*M)` definition across layers. The mean is accumulated relative to
/// the first element, which keeps the variance of constant data at exactly
/// zero.
pub fn model_stats(model: &ModelParams) -> Result<(f64, f64)> {
    let n = model.total_elements();
    if n == 0 {
        return Err(Error::usage("model_stats requires at least one element"));
    }
    let first = model
        .iter()
        .next()
        .and_then(|(_, t)| t.data().first().copied())
        .expect("non-empty model");
    let mut shifted_sum = 0.0;
    for (_, t) in model.iter() {
        shifted_sum += t.data().iter().map(|&x| x - first).sum::<f64>();
    }
    let mean = first + shifted_sum / n as f64;
    let mut sq = 0.0;
    for (_, t) in model.iter() {
        sq += t.data().iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>();
    }
    Ok((mean, sq / n as f64))
}

/// Build a model with i.i.d. `Normal(mean, stddev^2)` entries, deterministic
/// for a fixed seed.
pub fn gaussian_model(
    shapes: &[(&str, &[usize])],
    mean: f64,
    stddev: f64,
    seed: u64,
) -> Result<ModelParams> {
    if stddev < 0.0 {
        return Err(Error::usage("stddev must be non-negative"));
    }
    if shapes.is_empty() {
        return Err(Error::usage("gaussian_model requires at least one shape"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(shapes.len());
    for (name, shape) in shapes {
        let numel: usize = shape.iter().product();
        let data: Vec<f64> = if stddev == 0.0 {
            vec![mean; numel]
        } else {
            let dist = Normal::new(mean, stddev)
                .map_err(|e| Error::usage(format!("invalid normal parameters: {e}")))?;
            (0..numel).map(|_| dist.sample(&mut rng)).collect()
        };
        entries.push((name.to_string(), Tensor::new(shape.to_vec(), data)?));
    }
    ModelParams::new(entries)
}

const SPLITMIX64_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX64_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose tags keep seed streams for unrelated concerns disjoint.
pub mod purpose {
    pub const CLASS_MEANS: u64 = 1;
    pub const CLIENT_DATA: u64 = 2;
    pub const MODEL_INIT: u64 = 3;
    pub const SELECTION: u64 = 4;
    pub const LOCAL_UPDATE: u64 = 5;
    pub const CLUSTERING: u64 = 6;
}

/// A global seed plus the documented derivation rule for child seeds.
///
/// Child seeds are produced by a SplitMix64 absorption chain:
/// `h = splitmix64(global_seed)`, then for each part `p` (purpose tag,
/// round index, client index, ...) `h = splitmix64(h ^ splitmix64(p))`.
/// Derived streams feed `ChaCha8` generators, so the whole pipeline is a
/// fixed, platform-independent algorithm rather than a platform default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub global_seed: u64,
}

impl SeedSpec {
    pub fn new(global_seed: u64) -> Self {
        SeedSpec { global_seed }
    }

    /// Derive a child seed from the global seed and an ordered list of
    /// context parts.
    pub fn child(&self, parts: &[u64]) -> u64 {
        let mut h = splitmix64(self.global_seed);
        for &p in parts {
            h = splitmix64(h ^ splitmix64(p));
        }
        h
    }

    /// A `ChaCha8` generator for the given context.
    pub fn rng(&self, parts: &[u64]) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.child(parts))
    }
}

/// Seeded standard-normal sample vector; helper shared by the data
/// generator and learner initialisation.
pub(crate) fn sample_normal(rng: &mut impl Rng, n: usize, mean: f64, stddev: f64) -> Vec<f64> {
    if stddev == 0.0 {
        return vec![mean; n];
    }
    let dist = Normal::new(mean, stddev).expect("finite normal parameters");
    (0..n).map(|_| dist.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_1d(name: &str, values: &[f64]) -> ModelParams {
        ModelParams::new(vec![(
            name.to_string(),
            Tensor::new(vec![values.len()], values.to_vec()).unwrap(),
        )])
        .unwrap()
    }

    #[test]
    fn tensor_rejects_bad_shapes() {
        assert!(Tensor::new(vec![], vec![]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
        assert!(Tensor::new(vec![2], vec![1.0]).is_err());
        assert!(Tensor::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn linear_combine_identity() {
        let m = model_1d("w", &[1.0, -2.5, 3.0]);
        let out = linear_combine(&[1.0], std::slice::from_ref(&m)).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn linear_combine_mean_and_weighted() {
        let a = model_1d("w", &[2.0]);
        let b = model_1d("w", &[4.0]);
        let mean = linear_combine(&[0.5, 0.5], &[a.clone(), b.clone()]).unwrap();
        assert_eq!(mean.get("w").unwrap().data(), &[3.0]);
        // n1 = 1, n2 = 3 client sizes
        let weighted = linear_combine(&[0.25, 0.75], &[a, b]).unwrap();
        assert_eq!(weighted.get("w").unwrap().data(), &[3.5]);
    }

    #[test]
    fn linear_combine_errors() {
        assert!(matches!(
            linear_combine(&[], &[]),
            Err(Error::Usage(_))
        ));
        let a = model_1d("w", &[1.0, 2.0]);
        let b = model_1d("w", &[1.0]);
        let err = linear_combine(&[0.5, 0.5], &[a, b]).unwrap_err();
        match err {
            Error::ShapeMismatch { name, .. } => assert_eq!(name, "w"),
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn model_stats_basics() {
        let constant = model_1d("w", &[4.2, 4.2, 4.2]);
        let (mean, var) = model_stats(&constant).unwrap();
        assert_eq!(mean, 4.2);
        assert_eq!(var, 0.0);

        // 0.1 is inexact in binary; the variance must still be exactly 0.
        let awkward = model_1d("w", &[0.1, 0.1, 0.1]);
        let (mean, var) = model_stats(&awkward).unwrap();
        assert_eq!(mean, 0.1);
        assert_eq!(var, 0.0);

        let two = model_1d("w", &[0.0, 2.0]);
        let (mean, var) = model_stats(&two).unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(var, 1.0);
    }

    #[test]
    fn model_stats_matches_generator_at_scale() {
        let m = gaussian_model(&[("w", &[100_000])], 0.0, 0.3, 99).unwrap();
        let (_, var) = model_stats(&m).unwrap();
        let expected = 0.09;
        assert!(
            (var - expected).abs() / expected < 0.05,
            "variance {var} not within 5% of {expected}"
        );
    }

    #[test]
    fn gaussian_model_deterministic_and_degenerate() {
        let a = gaussian_model(&[("w", &[8, 3])], 1.5, 0.2, 7).unwrap();
        let b = gaussian_model(&[("w", &[8, 3])], 1.5, 0.2, 7).unwrap();
        assert_eq!(a, b);

        let c = gaussian_model(&[("w", &[8, 3])], 1.5, 0.2, 8).unwrap();
        assert_ne!(a, c);

        let flat = gaussian_model(&[("w", &[4])], -2.0, 0.0, 3).unwrap();
        assert_eq!(flat.get("w").unwrap().data(), &[-2.0; 4]);

        assert!(gaussian_model(&[("w", &[4])], 0.0, -1.0, 3).is_err());
    }

    #[test]
    fn gaussian_model_sample_stats() {
        let m = gaussian_model(&[("w", &[100_000])], 0.5, 0.4, 11).unwrap();
        let (mean, var) = model_stats(&m).unwrap();
        assert!((mean - 0.5).abs() < 0.05 * 0.5 + 0.01);
        assert!((var - 0.16).abs() / 0.16 < 0.05);
    }

    #[test]
    fn child_seeds_are_order_sensitive() {
        let s = SeedSpec::new(42);
        assert_ne!(s.child(&[1, 0]), s.child(&[0, 1]));
        assert_ne!(s.child(&[purpose::SELECTION, 3]), s.child(&[purpose::LOCAL_UPDATE, 3]));
        assert_eq!(s.child(&[1, 2, 3]), s.child(&[1, 2, 3]));
    }

    #[test]
    fn subtract_matches_linear_combine() {
        let a = model_1d("w", &[1.0, 2.0, 3.0]);
        let b = model_1d("w", &[0.5, -1.0, 4.0]);
        let direct = a.subtract(&b).unwrap();
        let via_combine = linear_combine(&[1.0, -1.0], &[a, b]).unwrap();
        assert_eq!(direct, via_combine);
    }
}
