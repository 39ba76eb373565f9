//! Per-round metric records, multi-seed averaging and CSV emission.
//!
//! CSV output is a pure function of the record stream: no timestamps, no
//! environment data, reals serialized with 10 significant digits. Two runs
//! of the same seeded experiment therefore produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Metrics for one communication round of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub weighted_accuracy: f64,
    /// Mean upstream megabytes per selected client this round.
    pub per_round_payload_mb: f64,
    /// Running per-client sum of `per_round_payload_mb`.
    pub cumulative_payload_mb: f64,
    pub var_w: f64,
    pub var_dw: f64,
    pub var_w_hat: f64,
    pub var_dw_hat: f64,
    pub alpha_realized: f64,
    /// Non-empty cluster count, FedSim only.
    pub effective_clusters: Option<usize>,
    pub seed: u64,
}

/// The numeric fields of a [`RoundRecord`], used for mean/stddev curves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RoundValues {
    pub weighted_accuracy: f64,
    pub per_round_payload_mb: f64,
    pub cumulative_payload_mb: f64,
    pub var_w: f64,
    pub var_dw: f64,
    pub var_w_hat: f64,
    pub var_dw_hat: f64,
    pub alpha_realized: f64,
}

impl RoundValues {
    fn from_record(r: &RoundRecord) -> Self {
        RoundValues {
            weighted_accuracy: r.weighted_accuracy,
            per_round_payload_mb: r.per_round_payload_mb,
            cumulative_payload_mb: r.cumulative_payload_mb,
            var_w: r.var_w,
            var_dw: r.var_dw,
            var_w_hat: r.var_w_hat,
            var_dw_hat: r.var_dw_hat,
            alpha_realized: r.alpha_realized,
        }
    }

    fn map2(a: &Self, b: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        RoundValues {
            weighted_accuracy: f(a.weighted_accuracy, b.weighted_accuracy),
            per_round_payload_mb: f(a.per_round_payload_mb, b.per_round_payload_mb),
            cumulative_payload_mb: f(a.cumulative_payload_mb, b.cumulative_payload_mb),
            var_w: f(a.var_w, b.var_w),
            var_dw: f(a.var_dw, b.var_dw),
            var_w_hat: f(a.var_w_hat, b.var_w_hat),
            var_dw_hat: f(a.var_dw_hat, b.var_dw_hat),
            alpha_realized: f(a.alpha_realized, b.alpha_realized),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::map2(self, self, |a, _| f(a))
    }
}

/// One row of a seed-averaged curve: per-round mean and population
/// standard deviation of every numeric field.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub round: usize,
    pub mean: RoundValues,
    pub stddev: RoundValues,
}

/// Average per-round records across seeds.
///
/// Every run must cover the identical round range; the standard deviation
/// is the population one (a single seed yields zero).
pub fn aggregate_seeds(runs: &[Vec<RoundRecord>]) -> Result<Vec<MeanRow>> {
    if runs.is_empty() {
        return Err(Error::usage("aggregate_seeds needs at least one run"));
    }
    let rounds: Vec<usize> = runs[0].iter().map(|r| r.round).collect();
    for (i, run) in runs.iter().enumerate() {
        let this: Vec<usize> = run.iter().map(|r| r.round).collect();
        if this != rounds {
            return Err(Error::usage(format!(
                "run {i} covers rounds {this:?}, expected {rounds:?}"
            )));
        }
    }
    let n = runs.len() as f64;
    let mut out = Vec::with_capacity(rounds.len());
    for (i, &round) in rounds.iter().enumerate() {
        let values: Vec<RoundValues> = runs.iter().map(|run| RoundValues::from_record(&run[i])).collect();
        let sum = values
            .iter()
            .fold(RoundValues::default(), |acc, v| RoundValues::map2(&acc, v, |a, b| a + b));
        let mean = sum.map(|v| v / n);
        let sq_sum = values.iter().fold(RoundValues::default(), |acc, v| {
            let centered = RoundValues::map2(v, &mean, |a, b| (a - b) * (a - b));
            RoundValues::map2(&acc, &centered, |a, b| a + b)
        });
        let stddev = sq_sum.map(|v| (v / n).sqrt());
        out.push(MeanRow {
            round,
            mean,
            stddev,
        });
    }
    Ok(out)
}

/// 10-significant-digit serialization used for every real in the CSV.
fn fmt10(v: f64) -> String {
    format!("{v:.9e}")
}

pub const CSV_HEADER: &str = "round,weighted_accuracy,per_round_payload_mb,cumulative_payload_mb,var_w,var_dw,var_w_hat,var_dw_hat,alpha_realized,acc_stddev";

/// Render a seed-averaged curve as CSV text.
pub fn render_csv(curve: &[MeanRow]) -> String {
    let mut out = String::with_capacity(64 * (curve.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in curve {
        let m = &row.mean;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.round,
            fmt10(m.weighted_accuracy),
            fmt10(m.per_round_payload_mb),
            fmt10(m.cumulative_payload_mb),
            fmt10(m.var_w),
            fmt10(m.var_dw),
            fmt10(m.var_w_hat),
            fmt10(m.var_dw_hat),
            fmt10(m.alpha_realized),
            fmt10(row.stddev.weighted_accuracy),
        );
    }
    out
}

/// Write a seed-averaged curve to `path` (header row always present, one
/// data row per round, newline-terminated).
pub fn write_csv(curve: &[MeanRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_csv(curve)).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(round: usize, seed: u64, acc: f64) -> RoundRecord {
        RoundRecord {
            round,
            weighted_accuracy: acc,
            per_round_payload_mb: 0.5,
            cumulative_payload_mb: 0.5 * (round + 1) as f64,
            var_w: 1.0,
            var_dw: 0.5,
            var_w_hat: 2.0,
            var_dw_hat: 1.5,
            alpha_realized: 0.1,
            effective_clusters: None,
            seed,
        }
    }

    #[test]
    fn single_seed_mean_is_identity_with_zero_stddev() {
        let runs = vec![vec![record(0, 1, 0.4), record(1, 1, 0.6)]];
        let curve = aggregate_seeds(&runs).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0].mean.weighted_accuracy, 0.4);
        assert_eq!(curve[0].stddev.weighted_accuracy, 0.0);
        assert_eq!(curve[1].mean.cumulative_payload_mb, 1.0);
    }

    #[test]
    fn two_seeds_average() {
        let runs = vec![vec![record(0, 1, 0.4)], vec![record(0, 2, 0.6)]];
        let curve = aggregate_seeds(&runs).unwrap();
        assert!((curve[0].mean.weighted_accuracy - 0.5).abs() < 1e-15);
        assert!((curve[0].stddev.weighted_accuracy - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ragged_round_ranges_are_rejected() {
        let runs = vec![
            vec![record(0, 1, 0.4), record(1, 1, 0.5)],
            vec![record(0, 2, 0.6)],
        ];
        assert!(aggregate_seeds(&runs).is_err());
    }

    #[test]
    fn clt_scale_noise_reduction() {
        // 35 constant-plus-noise curves: the mean should sit within a few
        // noise/sqrt(35) of the constant.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let noise = 0.05;
        let runs: Vec<Vec<RoundRecord>> = (0..35)
            .map(|s| {
                vec![record(
                    0,
                    s,
                    0.7 + noise * (rng.random::<f64>() * 2.0 - 1.0),
                )]
            })
            .collect();
        let curve = aggregate_seeds(&runs).unwrap();
        let tol = 4.0 * noise / (35.0f64).sqrt();
        assert!(
            (curve[0].mean.weighted_accuracy - 0.7).abs() < tol,
            "mean {} outside {tol} of 0.7",
            curve[0].mean.weighted_accuracy
        );
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let runs = vec![vec![record(0, 1, 0.25), record(1, 1, 0.75)]];
        let curve = aggregate_seeds(&runs).unwrap();
        let text = render_csv(&curve);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[0], "0");
        let parsed: f64 = row[1].parse().unwrap();
        assert!((parsed - 0.25).abs() < 1e-9 * 0.25 + 1e-12);
        assert!(text.ends_with('\n'));

        // Header-only file for an empty curve.
        let empty = render_csv(&[]);
        assert_eq!(empty, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_is_deterministic() {
        let runs = vec![vec![record(0, 7, 1.0 / 3.0)]];
        let a = render_csv(&aggregate_seeds(&runs).unwrap());
        let b = render_csv(&aggregate_seeds(&runs).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn aggregation_commutes_with_field_selection() {
        let runs = vec![
            vec![record(0, 1, 0.2)],
            vec![record(0, 2, 0.4)],
            vec![record(0, 3, 0.9)],
        ];
        let curve = aggregate_seeds(&runs).unwrap();
        let direct: f64 = runs
            .iter()
            .map(|r| r[0].weighted_accuracy)
            .sum::<f64>()
            / 3.0;
        assert_eq!(curve[0].mean.weighted_accuracy, direct);
    }
}
