//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Numerical tolerances are pinned in the constants below; the heavier
//! federated criteria run the MNIST-like preset at its shipped defaults.

use std::time::Instant;

use fedft::config::{cmd_run, ExperimentConfig};
use fedft::data::{dataset_presets, generate_synthetic, FederatedDataset, SyntheticSpec};
use fedft::federation::{
    run_experiment, run_repeated, select_clients, weighted_average, GlobalModel, Strategy,
    StrategyConfig, UpdateRoute,
};
use fedft::learning::{
    evaluate, local_update_prox, local_update_sgd, loss_and_gradient, Architecture, LearnerSpec,
};
use fedft::pruning::{payload_megabytes, prune, CostModel};
use fedft::reporting::{aggregate_seeds, render_csv, RoundRecord};
use fedft::tensor::{gaussian_model, ModelParams, SeedSpec, Tensor};
use fedft::transform::{
    dct_forward, dct_inverse, inverse_model, reconstruction_error, transform_model, DctVariant,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORACLE_MAX_ABS: f64 = 1e-12;
const ROUND_TRIP_MAX_ABS: f64 = 1e-9;
const LINEARITY_REL: f64 = 1e-9;
const COMMUTATION_MAX_ABS: f64 = 1e-8;
const EQUIVALENCE_ACC_GAP: f64 = 0.005; // 0.5 percentage points
const SWEEP_COST_RATIO_TOL: f64 = 0.02;
const PRUNE_ACC_DROP: f64 = 0.03; // 3 percentage points at alpha <= 0.2
const POST_CONV_ACC_DROP: f64 = 0.02; // 2 percentage points up to alpha = 0.4
const VAR_INEQ_FRACTION: f64 = 0.9;
const GRADIENT_REL: f64 = 1e-5;

/// Direct multi-sum evaluation of the separable DCT definition: one
/// weighted cosine factor per axis, full sum over all input indices.
/// Deliberately O(numel^2); independent of the implementation under test.
fn dct_oracle(t: &Tensor, variant: DctVariant) -> Tensor {
    let shape = t.shape().to_vec();
    let rank = shape.len();
    let unravel = |mut flat: usize| {
        let mut idx = vec![0usize; rank];
        for d in (0..rank).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        idx
    };
    let mut out = vec![0.0; t.numel()];
    for (kf, o) in out.iter_mut().enumerate() {
        let k = unravel(kf);
        let mut acc = 0.0;
        for (nf, &x) in t.data().iter().enumerate() {
            let n = unravel(nf);
            let mut w = x;
            for d in 0..rank {
                w *= variant.kernel(n[d], k[d], shape[d]);
            }
            acc += w;
        }
        *o = acc;
    }
    Tensor::new(shape, out).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn model_max_abs_diff(a: &ModelParams, b: &ModelParams) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|((_, x), (_, y))| max_abs_diff(x.data(), y.data()))
        .fold(0.0, f64::max)
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let numel = shape.iter().product();
    let data: Vec<f64> = (0..numel).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn random_shape(rng: &mut ChaCha8Rng, min_len: usize) -> Vec<usize> {
    let rank = rng.random_range(1..=4usize);
    let max_len = match rank {
        1 => 64,
        2 => 32,
        3 => 12,
        _ => 8,
    };
    (0..rank)
        .map(|_| rng.random_range(min_len..=max_len))
        .collect()
}

#[test]
fn criterion_01_transform_matches_direct_sum_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..200 {
        let variant = if case % 2 == 0 { DctVariant::IV } else { DctVariant::I };
        let shape = random_shape(&mut rng, variant.min_axis_len());
        let t = random_tensor(&mut rng, &shape);

        let fast = dct_forward(&t, variant).unwrap();
        let slow = dct_oracle(&t, variant);
        let err = max_abs_diff(fast.data(), slow.data());
        assert!(
            err < ORACLE_MAX_ABS,
            "case {case} shape {shape:?} variant {variant:?}: oracle mismatch {err:.3e}"
        );

        let back = dct_inverse(&fast, variant).unwrap();
        let rt = max_abs_diff(back.data(), t.data());
        assert!(
            rt < ROUND_TRIP_MAX_ABS,
            "case {case} shape {shape:?} variant {variant:?}: round-trip error {rt:.3e}"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "transform criterion took {elapsed:?} (limit 30s)"
    );
    println!("criterion 01 (transform vs direct-sum oracle, 200 tensors, {elapsed:.2?}): PASS");
}

#[test]
fn criterion_02_linearity_and_aggregation_commutation() {
    // Part A: T(aX + bY) vs a T(X) + b T(Y) on 100 random pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..100 {
        let variant = DctVariant::ALL[case % 4];
        let shape = random_shape(&mut rng, variant.min_axis_len());
        let x = random_tensor(&mut rng, &shape);
        let y = random_tensor(&mut rng, &shape);
        let (a, b) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);

        let combo: Vec<f64> = x
            .data()
            .iter()
            .zip(y.data().iter())
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        let lhs = dct_forward(&Tensor::new(shape.clone(), combo).unwrap(), variant).unwrap();
        let tx = dct_forward(&x, variant).unwrap();
        let ty = dct_forward(&y, variant).unwrap();
        let rhs: Vec<f64> = tx
            .data()
            .iter()
            .zip(ty.data().iter())
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        let scale = rhs.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let err = max_abs_diff(lhs.data(), &rhs) / scale;
        assert!(
            err < LINEARITY_REL,
            "case {case} variant {variant:?}: linearity error {err:.3e}"
        );
    }

    // Part B: over ten rounds with five clients at alpha = 0, the
    // frequency-space weighted average of (w_hat_t + delta_hat_k) must
    // inverse-transform to the tensor-space weighted average of the
    // clients' updated models.
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 5,
        num_classes: 4,
        feature_dim: 20,
        classes_per_client: 2,
        samples_range: (8, 20),
        class_separation: 2.0,
        seed: 44,
    })
    .unwrap();
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 20,
        num_classes: 4,
        learning_rate: 0.05,
        local_epochs: 5,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let variant = DctVariant::IV;
    let sizes: Vec<usize> = dataset.shards.iter().map(|s| s.train_len()).collect();
    let mut server = transform_model(&learner.init_params(0).unwrap(), variant).unwrap();
    for round in 0..10 {
        let received = inverse_model(&server).unwrap();
        let mut freq_models = Vec::new();
        let mut tensor_models = Vec::new();
        for (i, shard) in dataset.shards.iter().enumerate() {
            let updated =
                local_update_sgd(&received, shard, &learner, 1000 + round * 10 + i as u64).unwrap();
            let delta = updated.subtract(&received).unwrap();
            let delta_hat = transform_model(&delta, variant).unwrap();
            freq_models.push(server.params.add(&delta_hat.params).unwrap());
            tensor_models.push(updated);
        }
        let freq_agg = weighted_average(&freq_models, &sizes).unwrap();
        let tensor_agg = weighted_average(&tensor_models, &sizes).unwrap();
        let reconstructed = inverse_model(&fedft::transform::FrequencyModel {
            params: freq_agg.clone(),
            variant,
        })
        .unwrap();
        let err = model_max_abs_diff(&reconstructed, &tensor_agg);
        assert!(
            err < COMMUTATION_MAX_ABS,
            "round {round}: commutation error {err:.3e}"
        );
        server = fedft::transform::FrequencyModel {
            params: freq_agg,
            variant,
        };
    }
    println!("criterion 02 (linearity + aggregation commutation): PASS");
}

fn mnist_like_setup(dataset_seed: u64) -> (FederatedDataset, LearnerSpec, StrategyConfig) {
    let preset = dataset_presets("mnist_like").unwrap();
    let mut synth = preset.synthetic.clone();
    synth.seed = dataset_seed;
    let dataset = generate_synthetic(&synth).unwrap();
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: synth.feature_dim,
        num_classes: synth.num_classes,
        learning_rate: preset.learning_rate,
        local_epochs: preset.local_epochs,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let cfg = StrategyConfig {
        strategy: Strategy::FedAvg,
        fedft_enabled: true,
        update_route: UpdateRoute::Difference,
        alpha: 0.0,
        prune_start_round: 0,
        clients_per_round: preset.clients_per_round,
        n_clusters: preset.n_clusters,
        total_rounds: 50,
        variant: DctVariant::IV,
        seed: SeedSpec::new(1),
        cost_model: CostModel::default(),
    };
    (dataset, learner, cfg)
}

#[test]
fn criterion_03_zero_pruning_matches_baseline() {
    let start = Instant::now();
    let (dataset, learner, cfg) = mnist_like_setup(7);
    assert_eq!(dataset.num_clients(), 100);
    assert_eq!(cfg.clients_per_round, 20);
    let seeds = [1u64, 2, 3, 4, 5];

    let fedft_runs = run_repeated(&dataset, &learner, &cfg, &seeds).unwrap();
    let mut baseline_cfg = cfg.clone();
    baseline_cfg.fedft_enabled = false;
    let baseline_runs = run_repeated(&dataset, &learner, &baseline_cfg, &seeds).unwrap();

    let mut max_gap = 0.0f64;
    for (f_run, b_run) in fedft_runs.iter().zip(baseline_runs.iter()) {
        for (f, b) in f_run.iter().zip(b_run.iter()) {
            let gap = (f.weighted_accuracy - b.weighted_accuracy).abs();
            max_gap = max_gap.max(gap);
            assert!(
                gap < EQUIVALENCE_ACC_GAP,
                "seed {} round {}: accuracy gap {gap:.4} exceeds 0.5 points",
                f.seed,
                f.round
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "equivalence criterion took {elapsed:?} (limit 2 min)"
    );
    println!(
        "criterion 03 (zero-pruning equivalence, max gap {max_gap:.2e}, {elapsed:.2?}): PASS"
    );
}

#[test]
fn criterion_04_cost_accounting_and_sweep_ratios() {
    // Exact payload arithmetic on a single update.
    let model = gaussian_model(&[("layer0.weight", &[784, 10]), ("layer0.bias", &[10])], 0.0, 0.1, 5)
        .unwrap();
    let freq = transform_model(&model, DctVariant::IV).unwrap();
    let cost = CostModel::default();
    for alpha in [0.0, 0.1, 0.3] {
        let update = prune(&freq, alpha).unwrap();
        let expected = update.retained_elements() as f64 * 4.0 / 1e6;
        let got = payload_megabytes(&update, &cost);
        assert_eq!(got, expected, "payload is not exactly 4 * retained / 1e6");
    }

    // Sweep ratios: cumulative cost relative to alpha = 0 must track
    // 1 - alpha_realized. Cost is accuracy-independent, so 5 rounds do.
    let (dataset, learner, mut cfg) = mnist_like_setup(7);
    cfg.total_rounds = 5;
    let mut dense_cum = None;
    for alpha in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
        cfg.alpha = alpha;
        let records = run_experiment(&dataset, &learner, &cfg).unwrap();
        let last = records.last().unwrap();
        let dense = *dense_cum.get_or_insert(last.cumulative_payload_mb);
        let ratio = last.cumulative_payload_mb / dense;
        let target = 1.0 - last.alpha_realized;
        assert!(
            (ratio - target).abs() <= SWEEP_COST_RATIO_TOL,
            "alpha {alpha}: cost ratio {ratio:.4} vs 1 - alpha_realized {target:.4}"
        );
        // Per-round payload must be the exact per-update figure.
        let retained_per_update: usize = {
            let update = prune(&freq, alpha).unwrap();
            update.retained_elements()
        };
        let per_client = retained_per_update as f64 * 4.0 / 1e6;
        assert!(
            (records[0].per_round_payload_mb - per_client).abs() < 1e-15,
            "per-round payload {} differs from {per_client}",
            records[0].per_round_payload_mb
        );
    }
    println!("criterion 04 (payload arithmetic + sweep cost ratios): PASS");
}

#[test]
fn criterion_05_pruning_accuracy_pattern() {
    let (dataset, learner, mut cfg) = mnist_like_setup(7);
    let seeds = [1u64, 2, 3, 4, 5];
    let mut mean_final = |alpha: f64| -> f64 {
        cfg.alpha = alpha;
        let runs = run_repeated(&dataset, &learner, &cfg, &seeds).unwrap();
        runs.iter().map(|r| r.last().unwrap().weighted_accuracy).sum::<f64>() / seeds.len() as f64
    };
    let acc0 = mean_final(0.0);
    let acc01 = mean_final(0.1);
    let acc02 = mean_final(0.2);
    let acc05 = mean_final(0.5);
    assert!(
        acc0 - acc01 <= PRUNE_ACC_DROP,
        "alpha 0.1 dropped {:.4} (limit {PRUNE_ACC_DROP})",
        acc0 - acc01
    );
    assert!(
        acc0 - acc02 <= PRUNE_ACC_DROP,
        "alpha 0.2 dropped {:.4} (limit {PRUNE_ACC_DROP})",
        acc0 - acc02
    );
    assert!(
        acc05 < acc0,
        "alpha 0.5 accuracy {acc05:.4} is not strictly below alpha 0 ({acc0:.4})"
    );
    println!(
        "criterion 05 (pruning pattern: acc {acc0:.4} / {acc01:.4} / {acc02:.4} / {acc05:.4} at alpha 0/.1/.2/.5): PASS"
    );
}

#[test]
fn criterion_06_post_convergence_pruning() {
    let (dataset, learner, mut cfg) = mnist_like_setup(7);
    cfg.total_rounds = 100;

    let never = run_experiment(&dataset, &learner, &cfg).unwrap();
    let acc_never = never.last().unwrap().weighted_accuracy;

    cfg.prune_start_round = 50;
    for alpha in [0.1, 0.2, 0.3, 0.4] {
        cfg.alpha = alpha;
        let records = run_experiment(&dataset, &learner, &cfg).unwrap();
        let acc = records.last().unwrap().weighted_accuracy;
        assert!(
            acc_never - acc <= POST_CONV_ACC_DROP,
            "alpha {alpha} from round 50: accuracy {acc:.4} vs never-pruned {acc_never:.4}"
        );

        // Exact two-phase cost arithmetic: 50 dense rounds then 50 pruned
        // rounds, replayed with the engine's own accumulation order.
        let k = cfg.clients_per_round;
        let dense_update = prune(&transform_model(&learner.init_params(0).unwrap(), cfg.variant).unwrap(), 0.0).unwrap();
        let pruned_update = prune(&transform_model(&learner.init_params(0).unwrap(), cfg.variant).unwrap(), alpha).unwrap();
        let cost = CostModel::default();
        let mean_of = |payload: f64| -> f64 {
            let mut s = 0.0;
            for _ in 0..k {
                s += payload;
            }
            s / k as f64
        };
        let p_dense = mean_of(payload_megabytes(&dense_update, &cost));
        let p_pruned = mean_of(payload_megabytes(&pruned_update, &cost));
        let mut expected = 0.0;
        for round in 0..100 {
            expected += if round < 50 { p_dense } else { p_pruned };
        }
        let got = records.last().unwrap().cumulative_payload_mb;
        assert_eq!(
            got, expected,
            "alpha {alpha}: cumulative cost {got} != two-phase arithmetic {expected}"
        );
    }
    println!("criterion 06 (post-convergence pruning, acc anchor {acc_never:.4}): PASS");
}

#[test]
fn criterion_07_variance_properties() {
    // Reference seeded run: difference-route updates must have lower
    // frequency-space variance than the complete model in at least 90% of
    // rounds after round 5.
    let (dataset, learner, mut cfg) = mnist_like_setup(7);
    cfg.total_rounds = 100;
    cfg.alpha = 0.2;
    let records = run_experiment(&dataset, &learner, &cfg).unwrap();
    let after: Vec<&RoundRecord> = records.iter().filter(|r| r.round > 5).collect();
    let holds = after.iter().filter(|r| r.var_dw_hat < r.var_w_hat).count();
    let fraction = holds as f64 / after.len() as f64;
    assert!(
        fraction >= VAR_INEQ_FRACTION,
        "Var(dw_hat) < Var(w_hat) in only {holds}/{} rounds",
        after.len()
    );

    // Reconstruction error grows (non-strictly) with parameter variance.
    let mut last = 0.0;
    for (i, stddev) in [0.1, 0.2, 0.3, 0.4, 0.5].iter().enumerate() {
        let g = gaussian_model(&[("w", &[100, 100])], 0.0, *stddev, 900 + i as u64).unwrap();
        let (_, mean_abs) = reconstruction_error(&g, DctVariant::IV).unwrap();
        assert!(
            mean_abs >= last,
            "reconstruction error decreased at stddev {stddev}"
        );
        last = mean_abs;
    }
    println!(
        "criterion 07 (variance inequality {holds}/{} rounds + monotone sweep): PASS",
        after.len()
    );
}

#[test]
fn criterion_08_gradients_match_finite_differences() {
    let check = |spec: &LearnerSpec, params: &ModelParams, proximal: Option<(&ModelParams, f64)>, tag: &str| {
        let shard = generate_synthetic(&SyntheticSpec {
            num_clients: 1,
            num_classes: spec.num_classes,
            feature_dim: spec.input_dim,
            classes_per_client: spec.num_classes,
            samples_range: (10, 10),
            class_separation: 1.5,
            seed: 321,
        })
        .unwrap()
        .shards
        .remove(0);
        let (x, y) = (&shard.train_x, &shard.train_y);
        let idx: Vec<usize> = (0..y.len()).collect();
        let (_, grad) = loss_and_gradient(params, x, y, &idx, proximal).unwrap();

        let entries: Vec<(&str, &Tensor)> = grad.iter().collect();
        let total: usize = entries.iter().map(|(_, t)| t.numel()).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut checked = 0;
        while checked < 20 {
            let mut flat = rng.random_range(0..total);
            let mut entry = 0;
            while flat >= entries[entry].1.numel() {
                flat -= entries[entry].1.numel();
                entry += 1;
            }
            let h = 1e-5;
            let eval = |delta: f64| -> f64 {
                let perturbed: Vec<(String, Tensor)> = params
                    .iter()
                    .enumerate()
                    .map(|(e, (n, t))| {
                        if e == entry {
                            let mut data = t.data().to_vec();
                            data[flat] += delta;
                            (n.to_string(), Tensor::new(t.shape().to_vec(), data).unwrap())
                        } else {
                            (n.to_string(), t.clone())
                        }
                    })
                    .collect();
                let p = ModelParams::new(perturbed).unwrap();
                loss_and_gradient(&p, x, y, &idx, proximal).unwrap().0
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let analytic = entries[entry].1.data()[flat];
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(
                ((analytic - numeric).abs() / denom) < GRADIENT_REL,
                "{tag}: coordinate {entry}/{flat}: analytic {analytic} vs numeric {numeric}"
            );
            checked += 1;
        }
    };

    let mlr = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 8,
        num_classes: 3,
        learning_rate: 0.1,
        local_epochs: 1,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let mlr_params = gaussian_model(
        &[("layer0.weight", &[8, 3][..]), ("layer0.bias", &[3][..])],
        0.0,
        0.3,
        77,
    )
    .unwrap();
    check(&mlr, &mlr_params, None, "mlr");

    let anchor = mlr.init_params(91).unwrap();
    check(&mlr, &mlr_params, Some((&anchor, 0.7)), "mlr+prox");

    let mlp = LearnerSpec {
        architecture: Architecture::Mlp(vec![6, 5]),
        input_dim: 8,
        num_classes: 3,
        learning_rate: 0.1,
        local_epochs: 1,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let mlp_params = mlp.init_params(78).unwrap();
    check(&mlp, &mlp_params, None, "mlp");
    let mlp_anchor = mlp.init_params(79).unwrap();
    check(&mlp, &mlp_params, Some((&mlp_anchor, 0.3)), "mlp+prox");

    println!("criterion 08 (analytic vs finite-difference gradients): PASS");
}

#[test]
fn criterion_09_cmd_run_is_byte_deterministic() {
    let config: ExperimentConfig = serde_json::from_str(
        r#"{
            "name": "determinism_check",
            "dataset": {"synthetic": {
                "num_clients": 10,
                "num_classes": 4,
                "feature_dim": 16,
                "classes_per_client": 2,
                "samples_range": [8, 16],
                "class_separation": 2.0,
                "seed": 3
            }},
            "learner": {"learning_rate": 0.05, "local_epochs": 5},
            "strategy": {
                "strategy": "fedsim",
                "fedft_enabled": true,
                "alpha": 0.25,
                "clients_per_round": 6,
                "n_clusters": 2,
                "total_rounds": 6
            },
            "seeds": [4, 5]
        }"#,
    )
    .unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = cmd_run(&config, dir_a.path(), None).unwrap();
    let b = cmd_run(&config, dir_b.path(), None).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(
        a[0].file_name().unwrap(),
        b[0].file_name().unwrap(),
        "file naming differs"
    );
    let bytes_a = std::fs::read(&a[0]).unwrap();
    let bytes_b = std::fs::read(&b[0]).unwrap();
    assert_eq!(bytes_a, bytes_b, "CSV bytes differ between runs");
    println!("criterion 09 (byte-identical CSVs across invocations): PASS");
}

#[test]
fn criterion_10_strategy_degeneracies_are_bitwise() {
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 12,
        num_classes: 4,
        feature_dim: 18,
        classes_per_client: 2,
        samples_range: (8, 20),
        class_separation: 2.0,
        seed: 21,
    })
    .unwrap();
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 18,
        num_classes: 4,
        learning_rate: 0.05,
        local_epochs: 5,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let fedavg = StrategyConfig {
        strategy: Strategy::FedAvg,
        fedft_enabled: true,
        update_route: UpdateRoute::Difference,
        alpha: 0.2,
        prune_start_round: 0,
        clients_per_round: 5,
        n_clusters: 1,
        total_rounds: 10,
        variant: DctVariant::IV,
        seed: SeedSpec::new(11),
        cost_model: CostModel::default(),
    };
    let seeds = [11u64, 12];

    let fedavg_runs = run_repeated(&dataset, &learner, &fedavg, &seeds).unwrap();

    // FedSim with one cluster collapses to FedAvg on the same route.
    let mut fedsim = fedavg.clone();
    fedsim.strategy = Strategy::FedSim;
    fedsim.n_clusters = 1;
    let fedsim_runs = run_repeated(&dataset, &learner, &fedsim, &seeds).unwrap();

    // FedProx with mu = 0 takes the identical local-update path.
    let mut fedprox = fedavg.clone();
    fedprox.strategy = Strategy::FedProx;
    let fedprox_runs = run_repeated(&dataset, &learner, &fedprox, &seeds).unwrap();

    let csv = |runs: &[Vec<RoundRecord>]| render_csv(&aggregate_seeds(runs).unwrap());
    assert_eq!(
        csv(&fedavg_runs),
        csv(&fedsim_runs),
        "FedSim(1 cluster) diverged from FedAvg"
    );
    assert_eq!(
        csv(&fedavg_runs),
        csv(&fedprox_runs),
        "FedProx(mu=0) diverged from FedAvg"
    );
    // Field-level bitwise equality, not just formatting.
    for (a, b) in fedavg_runs.iter().flatten().zip(fedsim_runs.iter().flatten()) {
        assert_eq!(a.weighted_accuracy.to_bits(), b.weighted_accuracy.to_bits());
        assert_eq!(a.var_dw_hat.to_bits(), b.var_dw_hat.to_bits());
        assert_eq!(a.cumulative_payload_mb.to_bits(), b.cumulative_payload_mb.to_bits());
    }
    for (a, b) in fedavg_runs.iter().flatten().zip(fedprox_runs.iter().flatten()) {
        assert_eq!(a.weighted_accuracy.to_bits(), b.weighted_accuracy.to_bits());
        assert_eq!(a.var_w.to_bits(), b.var_w.to_bits());
    }
    println!("criterion 10 (FedSim(1)/FedProx(0) bitwise degeneracy): PASS");
}

// Supporting checks used by several criteria: selection sanity and the
// chance-level band for untrained parameters.
#[test]
fn supporting_selection_and_chance_level() {
    let seed = SeedSpec::new(5);
    let a = select_clients(100, 20, 3, &seed).unwrap();
    let b = select_clients(100, 20, 3, &seed).unwrap();
    assert_eq!(a, b);

    // Random parameters on balanced 10-class data sit near chance.
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 10,
        num_classes: 10,
        feature_dim: 30,
        classes_per_client: 10,
        samples_range: (30, 40),
        class_separation: 1.0,
        seed: 61,
    })
    .unwrap();
    for s in 0..10u64 {
        let params = gaussian_model(
            &[("layer0.weight", &[30, 10][..]), ("layer0.bias", &[10][..])],
            0.0,
            0.1,
            s,
        )
        .unwrap();
        let (acc, _) = evaluate(&params, &dataset.shards).unwrap();
        assert!(
            (0.05..=0.20).contains(&acc),
            "seed {s}: random-parameter accuracy {acc:.3} outside chance band"
        );
    }

    // mu = 0 proximal equals plain SGD bitwise at the op level too.
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 30,
        num_classes: 10,
        learning_rate: 0.05,
        local_epochs: 3,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let params = learner.init_params(1).unwrap();
    let sgd = local_update_sgd(&params, &dataset.shards[0], &learner, 9).unwrap();
    let prox = local_update_prox(&params, &params, &dataset.shards[0], &learner, 9).unwrap();
    assert_eq!(sgd, prox);
    println!("supporting checks (selection determinism, chance band): PASS");
}

// Central-training oracle: pooled IID data at separation 3.0 must be
// learnable to at least 90% test accuracy by a plain MLR, establishing
// that the synthetic task is meaningful before any federation runs.
#[test]
fn supporting_central_training_learnability() {
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 40,
        num_classes: 10,
        feature_dim: 60,
        classes_per_client: 10, // pooled/IID
        samples_range: (40, 60),
        class_separation: 3.0,
        seed: 83,
    })
    .unwrap();
    // Pool every client's split into one central shard.
    let d = dataset.feature_dim;
    let mut train_x = Vec::new();
    let mut train_y = Vec::new();
    let mut test_x = Vec::new();
    let mut test_y = Vec::new();
    for s in &dataset.shards {
        train_x.extend_from_slice(s.train_x.data());
        train_y.extend_from_slice(&s.train_y);
        test_x.extend_from_slice(s.test_x.data());
        test_y.extend_from_slice(&s.test_y);
    }
    let pooled = fedft::data::ClientShard {
        client_id: "pooled".into(),
        train_x: Tensor::new(vec![train_y.len(), d], train_x).unwrap(),
        train_y,
        test_x: Tensor::new(vec![test_y.len(), d], test_x).unwrap(),
        test_y,
    };
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: d,
        num_classes: 10,
        learning_rate: 0.05,
        local_epochs: 60,
        batch_size: Some(32),
        proximal_mu: 0.0,
    };
    let trained = local_update_sgd(&learner.init_params(0).unwrap(), &pooled, &learner, 3).unwrap();
    let (acc, _) = evaluate(&trained, std::slice::from_ref(&pooled)).unwrap();
    assert!(
        acc >= 0.90,
        "central MLR reached only {acc:.3} on pooled separation-3.0 data"
    );
    println!("supporting checks (central learnability {acc:.3} >= 0.90): PASS");
}

// The engine in baseline mode must stay away from transform and pruning
// code paths: its records carry no frequency-space signal.
#[test]
fn supporting_baseline_never_touches_frequency_space() {
    let dataset = generate_synthetic(&SyntheticSpec {
        num_clients: 8,
        num_classes: 3,
        feature_dim: 10,
        classes_per_client: 2,
        samples_range: (6, 12),
        class_separation: 2.0,
        seed: 71,
    })
    .unwrap();
    let learner = LearnerSpec {
        architecture: Architecture::Mlr,
        input_dim: 10,
        num_classes: 3,
        learning_rate: 0.05,
        local_epochs: 3,
        batch_size: None,
        proximal_mu: 0.0,
    };
    let cfg = StrategyConfig {
        strategy: Strategy::FedAvg,
        fedft_enabled: false,
        update_route: UpdateRoute::Difference,
        alpha: 0.4,
        prune_start_round: 0,
        clients_per_round: 4,
        n_clusters: 2,
        total_rounds: 4,
        variant: DctVariant::IV,
        seed: SeedSpec::new(2),
        cost_model: CostModel::default(),
    };
    let (records, state) =
        fedft::federation::run_experiment_with_state(&dataset, &learner, &cfg).unwrap();
    assert!(matches!(state.global, GlobalModel::Tensor(_)));
    let dense = (10 * 3 + 3) as f64 * 4.0 / 1e6;
    for r in &records {
        assert_eq!(r.var_w_hat, 0.0);
        assert_eq!(r.var_dw_hat, 0.0);
        assert_eq!(r.alpha_realized, 0.0);
        assert_eq!(r.per_round_payload_mb, dense);
    }
    println!("supporting checks (baseline isolation): PASS");
}
