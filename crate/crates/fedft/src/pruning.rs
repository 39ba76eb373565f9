//! Positional pruning of frequency coefficients and upstream payload
//! accounting.
//!
//! Pruning zeroes the trailing (highest-frequency) coefficients along each
//! tensor's last axis. Because the zeroed block is contiguous, the wire
//! format is a plain truncation: no index side-channel is needed and the
//! payload is exactly `bytes_per_value * retained_elements`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::transform::{DctVariant, FrequencyModel};

/// Wire-width assumption for cost accounting. Values are computed in f64
/// internally; the cost model is an independent knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub bytes_per_value: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { bytes_per_value: 4 }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        if self.bytes_per_value != 4 && self.bytes_per_value != 8 {
            return Err(Error::usage(format!(
                "bytes_per_value must be 4 or 8, got {}",
                self.bytes_per_value
            )));
        }
        Ok(())
    }
}

/// Megabyte convention used throughout cost reporting: 10^6 bytes.
pub const MEGABYTE: f64 = 1e6;

/// One pruned coefficient tensor. The tensor keeps its full shape; entries
/// with last-axis index >= `retained_len_last_axis` are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedTensor {
    pub name: String,
    pub coeffs: Tensor,
    pub retained_len_last_axis: usize,
}

impl PrunedTensor {
    pub fn retained_elements(&self) -> usize {
        self.coeffs.numel() / self.coeffs.last_axis_len() * self.retained_len_last_axis
    }
}

/// A pruned frequency-space update: what a client puts on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyUpdate {
    pub entries: Vec<PrunedTensor>,
    pub alpha_requested: f64,
    pub alpha_realized: f64,
    pub variant: DctVariant,
}

impl FrequencyUpdate {
    pub fn retained_elements(&self) -> usize {
        self.entries.iter().map(|e| e.retained_elements()).sum()
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|e| e.coeffs.numel()).sum()
    }
}

/// Zero the trailing `round(alpha * L)` coefficients (clamped to `L - 1`)
/// along every tensor's last axis.
///
/// Retained coefficients are unchanged; `alpha_realized` is the fraction of
/// elements actually dropped after per-axis rounding.
pub fn prune(f: &FrequencyModel, alpha: f64) -> Result<FrequencyUpdate> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::usage(format!(
            "pruning rate must be in [0, 1), got {alpha}"
        )));
    }
    let mut entries = Vec::with_capacity(f.params.len());
    let mut retained_total = 0usize;
    let mut total = 0usize;
    for (name, t) in f.params.iter() {
        let last = t.last_axis_len();
        let n_zero = ((alpha * last as f64).round() as usize).min(last - 1);
        let retained = last - n_zero;
        let mut coeffs = t.clone();
        {
            let data = coeffs.data_mut();
            for row in data.chunks_exact_mut(last) {
                for v in &mut row[retained..] {
                    *v = 0.0;
                }
            }
        }
        retained_total += coeffs.numel() / last * retained;
        total += coeffs.numel();
        entries.push(PrunedTensor {
            name: name.to_string(),
            coeffs,
            retained_len_last_axis: retained,
        });
    }
    Ok(FrequencyUpdate {
        entries,
        alpha_requested: alpha,
        alpha_realized: 1.0 - retained_total as f64 / total as f64,
        variant: f.variant,
    })
}

/// Upstream payload of one update in megabytes: retained elements times the
/// wire width. Trailing zero blocks cost nothing.
pub fn payload_megabytes(u: &FrequencyUpdate, c: &CostModel) -> f64 {
    u.retained_elements() as f64 * c.bytes_per_value as f64 / MEGABYTE
}

/// Dense payload of an unpruned model with `total_elements` parameters.
pub fn dense_payload_megabytes(total_elements: usize, c: &CostModel) -> f64 {
    total_elements as f64 * c.bytes_per_value as f64 / MEGABYTE
}

/// Server-side view of a pruned update with zeros re-materialized: the
/// exact inverse of the truncation view.
pub fn densify(u: &FrequencyUpdate) -> FrequencyModel {
    let entries = u
        .entries
        .iter()
        .map(|e| (e.name.clone(), e.coeffs.clone()))
        .collect();
    FrequencyModel {
        params: crate::tensor::ModelParams::new(entries).expect("update entries are valid"),
        variant: u.variant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{gaussian_model, ModelParams};
    use crate::transform::transform_model;

    fn freq_1d(values: &[f64]) -> FrequencyModel {
        FrequencyModel {
            params: ModelParams::new(vec![(
                "w".into(),
                Tensor::new(vec![values.len()], values.to_vec()).unwrap(),
            )])
            .unwrap(),
            variant: DctVariant::IV,
        }
    }

    #[test]
    fn tail_rule_1d() {
        let f = freq_1d(&[4.0, 3.0, 2.0, 1.0]);
        let u = prune(&f, 0.5).unwrap();
        assert_eq!(u.entries[0].coeffs.data(), &[4.0, 3.0, 0.0, 0.0]);
        assert_eq!(u.entries[0].retained_len_last_axis, 2);
        assert_eq!(u.alpha_realized, 0.5);
    }

    #[test]
    fn alpha_zero_is_identity() {
        let f = freq_1d(&[4.0, 3.0, 2.0, 1.0]);
        let u = prune(&f, 0.0).unwrap();
        assert_eq!(u.entries[0].coeffs.data(), &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(u.alpha_realized, 0.0);
        assert_eq!(densify(&u), f);
    }

    #[test]
    fn seven_wide_rows_match_discretization() {
        // With a last axis of 7, alpha = 2/7 zeroes exactly 2 of every 7.
        let m = gaussian_model(&[("w", &[1280, 7])], 0.0, 1.0, 4).unwrap();
        let f = transform_model(&m, DctVariant::IV).unwrap();
        let u = prune(&f, 2.0 / 7.0).unwrap();
        assert_eq!(u.entries[0].retained_len_last_axis, 5);
        assert!((u.alpha_realized - 2.0 / 7.0).abs() < 1e-12);
        for row in u.entries[0].coeffs.data().chunks_exact(7) {
            assert_eq!(&row[5..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn alpha_range_checked() {
        let f = freq_1d(&[1.0]);
        assert!(prune(&f, 1.0).is_err());
        assert!(prune(&f, -0.1).is_err());
    }

    #[test]
    fn clamping_keeps_at_least_one_coefficient() {
        let f = freq_1d(&[5.0, 6.0]);
        let u = prune(&f, 0.99).unwrap();
        assert_eq!(u.entries[0].retained_len_last_axis, 1);
        assert!(u.retained_elements() > 0);
        assert!(payload_megabytes(&u, &CostModel::default()) > 0.0);
    }

    #[test]
    fn mlr_payload_examples() {
        // 784 x 10 weights plus a 10-long bias: 7850 parameters.
        let m = gaussian_model(&[("w", &[784, 10]), ("b", &[10])], 0.0, 0.1, 8).unwrap();
        let f = transform_model(&m, DctVariant::IV).unwrap();
        let cost = CostModel::default();

        let dense = prune(&f, 0.0).unwrap();
        assert_eq!(payload_megabytes(&dense, &cost), 7850.0 * 4.0 / 1e6);
        assert!((payload_megabytes(&dense, &cost) - 0.0314).abs() < 1e-12);

        // alpha = 0.10: one of ten output coefficients dropped per weight
        // row, plus one bias coefficient.
        let pruned = prune(&f, 0.10).unwrap();
        let expected = (784.0 * 9.0 + 9.0) * 4.0 / 1e6;
        assert_eq!(payload_megabytes(&pruned, &cost), expected);
        assert!((expected - 0.02826).abs() < 1e-12);
        assert!((pruned.alpha_realized - 0.1).abs() < 1e-12);
    }

    #[test]
    fn densify_agrees_at_retained_positions() {
        let m = gaussian_model(&[("w", &[9, 6]), ("b", &[6])], 0.0, 1.0, 12).unwrap();
        let f = transform_model(&m, DctVariant::IV).unwrap();
        for alpha in [0.0, 0.2, 0.5, 0.8] {
            let u = prune(&f, alpha).unwrap();
            let d = densify(&u);
            for (((_, orig), (_, densified)), entry) in
                f.params.iter().zip(d.params.iter()).zip(u.entries.iter())
            {
                let last = orig.last_axis_len();
                for (ro, rd) in orig
                    .data()
                    .chunks_exact(last)
                    .zip(densified.data().chunks_exact(last))
                {
                    let keep = entry.retained_len_last_axis;
                    assert_eq!(&ro[..keep], &rd[..keep]);
                    assert!(rd[keep..].iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn prune_is_idempotent() {
        let m = gaussian_model(&[("w", &[5, 8])], 0.0, 1.0, 13).unwrap();
        let f = transform_model(&m, DctVariant::IV).unwrap();
        let once = prune(&f, 0.3).unwrap();
        let twice = prune(&densify(&once), 0.3).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn payload_monotone_in_alpha() {
        let m = gaussian_model(&[("w", &[16, 11]), ("b", &[11])], 0.0, 1.0, 14).unwrap();
        let f = transform_model(&m, DctVariant::IV).unwrap();
        let cost = CostModel::default();
        let mut last = f64::INFINITY;
        for alpha in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9] {
            let p = payload_megabytes(&prune(&f, alpha).unwrap(), &cost);
            assert!(p <= last, "payload increased at alpha={alpha}");
            last = p;
        }
    }

    #[test]
    fn pruned_reconstruction_error_monotone_in_alpha() {
        use crate::transform::inverse_model;
        let m = gaussian_model(&[("w", &[40, 20])], 0.0, 0.3, 19).unwrap();
        let f = transform_model(&m, DctVariant::IV).unwrap();
        let mut last = -1.0;
        for alpha in [0.0, 0.2, 0.4, 0.6, 0.8] {
            let restored = inverse_model(&densify(&prune(&f, alpha).unwrap())).unwrap();
            let mut sum = 0.0;
            let mut count = 0usize;
            for ((_, a), (_, b)) in m.iter().zip(restored.iter()) {
                for (&x, &y) in a.data().iter().zip(b.data().iter()) {
                    sum += (x - y).abs();
                    count += 1;
                }
            }
            let mean_err = sum / count as f64;
            assert!(
                mean_err >= last,
                "mean reconstruction error fell from {last} to {mean_err} at alpha {alpha}"
            );
            last = mean_err;
        }
        assert!(last > 0.0);
    }

    #[test]
    fn cost_model_validation() {
        assert!(CostModel { bytes_per_value: 4 }.validate().is_ok());
        assert!(CostModel { bytes_per_value: 8 }.validate().is_ok());
        assert!(CostModel { bytes_per_value: 2 }.validate().is_err());
    }
}
