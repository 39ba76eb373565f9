//! Forward and inverse discrete cosine transforms, applied separably along
//! every tensor axis.
//!
//! All four classic DCT variants are supported with unnormalized forward
//! kernels and exact matched inverses, so a forward/inverse round trip is
//! the identity up to floating-point error for every variant. Variant IV is
//! the default: it is symmetric (self-inverse up to a `2/N` scale per axis)
//! and linear, which is what allows federated aggregation to happen
//! directly on coefficients.
//!
//! The implementation is the direct O(N^2)-per-axis evaluation via cached
//! kernel matrices. Tensors in this simulator are desk-scale (a few
//! thousand elements per axis at most), where the direct form is fast
//! enough and easy to audit against the defining sums.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ModelParams, Tensor};

/// DCT variant selector. Variant I requires every transformed axis to have
/// length >= 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DctVariant {
    I,
    II,
    III,
    #[default]
    IV,
}

impl DctVariant {
    pub const ALL: [DctVariant; 4] = [DctVariant::I, DctVariant::II, DctVariant::III, DctVariant::IV];

    pub fn name(self) -> &'static str {
        match self {
            DctVariant::I => "i",
            DctVariant::II => "ii",
            DctVariant::III => "iii",
            DctVariant::IV => "iv",
        }
    }

    /// Minimum transformable axis length (variant I needs two points).
    pub fn min_axis_len(self) -> usize {
        match self {
            DctVariant::I => 2,
            _ => 1,
        }
    }

    /// Forward kernel weight for input index `n`, output index `k`, axis
    /// length `len`. The full 1-D forward transform is
    /// `X[k] = sum_n kernel(n, k, len) * x[n]`.
    pub fn kernel(self, n: usize, k: usize, len: usize) -> f64 {
        let (n, k, len) = (n as f64, k as f64, len as f64);
        match self {
            // X[k] = x[0] + (-1)^k x[N-1] + 2 sum_{0<n<N-1} x[n] cos(pi n k / (N-1))
            DctVariant::I => {
                let w = if n == 0.0 || n == len - 1.0 { 1.0 } else { 2.0 };
                w * (PI * n * k / (len - 1.0)).cos()
            }
            DctVariant::II => (PI * (2.0 * n + 1.0) * k / (2.0 * len)).cos(),
            DctVariant::III => {
                let w = if n == 0.0 { 0.5 } else { 1.0 };
                w * (PI * n * (2.0 * k + 1.0) / (2.0 * len)).cos()
            }
            DctVariant::IV => (PI * (2.0 * n + 1.0) * (2.0 * k + 1.0) / (4.0 * len)).cos(),
        }
    }
}

/// The matched inverse of each forward kernel, expressed as another kernel
/// matrix times a scale:
///
/// * I:   inverse = forward / (2 (N-1))       (DCT-I is involutory)
/// * II:  inverse = (2/N) * DCT-III kernel
/// * III: inverse = (2/N) * DCT-II kernel
/// * IV:  inverse = (2/N) * DCT-IV kernel     (DCT-IV is symmetric)
fn inverse_basis(variant: DctVariant, len: usize) -> (DctVariant, f64) {
    match variant {
        DctVariant::I => (DctVariant::I, 1.0 / (2.0 * (len as f64 - 1.0))),
        DctVariant::II => (DctVariant::III, 2.0 / len as f64),
        DctVariant::III => (DctVariant::II, 2.0 / len as f64),
        DctVariant::IV => (DctVariant::IV, 2.0 / len as f64),
    }
}

type MatrixKey = (DctVariant, usize, bool);

fn kernel_matrix(variant: DctVariant, len: usize, inverse: bool) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<MatrixKey, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("kernel cache poisoned");
    guard
        .entry((variant, len, inverse))
        .or_insert_with(|| {
            let (basis, scale) = if inverse {
                inverse_basis(variant, len)
            } else {
                (variant, 1.0)
            };
            let mut m = vec![0.0; len * len];
            for k in 0..len {
                for n in 0..len {
                    m[k * len + n] = scale * basis.kernel(n, k, len);
                }
            }
            Arc::new(m)
        })
        .clone()
}

/// Apply an `len x len` kernel matrix along `axis` of a row-major tensor.
fn apply_along_axis(shape: &[usize], data: &[f64], axis: usize, matrix: &[f64]) -> Vec<f64> {
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; data.len()];
    for o in 0..outer {
        let base = o * len * inner;
        if inner == 1 {
            let src = &data[base..base + len];
            for (k, row) in matrix.chunks_exact(len).enumerate() {
                let mut acc = 0.0;
                for (m, x) in row.iter().zip(src.iter()) {
                    acc += m * x;
                }
                out[base + k] = acc;
            }
        } else {
            for (k, row) in matrix.chunks_exact(len).enumerate() {
                let dst = &mut out[base + k * inner..base + (k + 1) * inner];
                for (n, &c) in row.iter().enumerate() {
                    let src = &data[base + n * inner..base + (n + 1) * inner];
                    for (d, x) in dst.iter_mut().zip(src.iter()) {
                        *d += c * x;
                    }
                }
            }
        }
    }
    out
}

fn check_axis_lengths(t: &Tensor, variant: DctVariant) -> Result<()> {
    let min = variant.min_axis_len();
    if let Some(&bad) = t.shape().iter().find(|&&len| len < min) {
        return Err(Error::usage(format!(
            "DCT-{} requires every axis length >= {}, got axis of length {} in shape {:?}",
            variant.name().to_uppercase(),
            min,
            bad,
            t.shape()
        )));
    }
    Ok(())
}

fn transform_tensor(t: &Tensor, variant: DctVariant, inverse: bool) -> Result<Tensor> {
    check_axis_lengths(t, variant)?;
    let shape = t.shape().to_vec();
    let mut data = t.data().to_vec();
    for axis in 0..shape.len() {
        let matrix = kernel_matrix(variant, shape[axis], inverse);
        data = apply_along_axis(&shape, &data, axis, &matrix);
    }
    Tensor::new(shape, data)
}

/// Forward DCT of every axis; shape-preserving.
pub fn dct_forward(t: &Tensor, variant: DctVariant) -> Result<Tensor> {
    transform_tensor(t, variant, false)
}

/// Exact matched inverse of [`dct_forward`] for the same variant.
pub fn dct_inverse(t: &Tensor, variant: DctVariant) -> Result<Tensor> {
    transform_tensor(t, variant, true)
}

/// Model parameters represented as frequency coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyModel {
    pub params: ModelParams,
    pub variant: DctVariant,
}

impl FrequencyModel {
    pub fn total_elements(&self) -> usize {
        self.params.total_elements()
    }
}

/// Transform every tensor of a model into frequency space.
pub fn transform_model(m: &ModelParams, variant: DctVariant) -> Result<FrequencyModel> {
    Ok(FrequencyModel {
        params: m.map_tensors(|t| dct_forward(t, variant))?,
        variant,
    })
}

/// Reconstruct tensor-space parameters from a frequency model.
pub fn inverse_model(f: &FrequencyModel) -> Result<ModelParams> {
    f.params.map_tensors(|t| dct_inverse(t, f.variant))
}

/// Max and mean absolute round-trip error `|inverse(forward(m)) - m|` over
/// all elements.
pub fn reconstruction_error(m: &ModelParams, variant: DctVariant) -> Result<(f64, f64)> {
    let restored = inverse_model(&transform_model(m, variant)?)?;
    let mut max_abs = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut count = 0usize;
    for ((_, a), (_, b)) in m.iter().zip(restored.iter()) {
        for (&x, &y) in a.data().iter().zip(b.data().iter()) {
            let e = (x - y).abs();
            max_abs = max_abs.max(e);
            sum_abs += e;
            count += 1;
        }
    }
    Ok((max_abs, sum_abs / count as f64))
}
