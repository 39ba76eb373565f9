//! Desk-scale local learners: multinomial logistic regression and a small
//! multi-layer perceptron, trained with mini-batch SGD (optionally with a
//! proximal term pulling towards the received global model).
//!
//! Hidden MLP layers use `tanh`, so the training objective is smooth
//! everywhere and analytic gradients can be validated against central
//! finite differences to tight tolerances.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ClientShard;
use crate::error::{Error, Result};
use crate::tensor::{ModelParams, Tensor};

/// Gradients share the exact structure of the parameters they refer to.
pub type Gradient = ModelParams;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    /// Multinomial logistic regression: one weight matrix
    /// `[input_dim, num_classes]` and one bias `[num_classes]`.
    Mlr,
    /// Fully connected net with the given hidden sizes and `tanh` hidden
    /// activations.
    Mlp(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub architecture: Architecture,
    pub input_dim: usize,
    pub num_classes: usize,
    pub learning_rate: f64,
    pub local_epochs: usize,
    /// `None` selects the default rule: full batch for shards of up to 64
    /// training samples, otherwise mini-batches of 10.
    pub batch_size: Option<usize>,
    /// Proximal coefficient; 0 disables the proximal term entirely.
    pub proximal_mu: f64,
}

impl LearnerSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.input_dim == 0 {
            problems.push("input_dim must be positive".to_string());
        }
        if self.num_classes < 2 {
            problems.push("num_classes must be at least 2".to_string());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            problems.push("learning_rate must be a finite non-negative real".to_string());
        }
        if self.local_epochs == 0 {
            problems.push("local_epochs must be positive".to_string());
        }
        if self.batch_size == Some(0) {
            problems.push("batch_size must be positive when given".to_string());
        }
        if !(self.proximal_mu >= 0.0 && self.proximal_mu.is_finite()) {
            problems.push("proximal_mu must be a finite non-negative real".to_string());
        }
        if let Architecture::Mlp(hidden) = &self.architecture {
            if hidden.contains(&0) {
                problems.push("mlp hidden sizes must be positive".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// (input, output) dimensions of each dense layer in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::new();
        let mut prev = self.input_dim;
        if let Architecture::Mlp(hidden) = &self.architecture {
            for &h in hidden {
                dims.push((prev, h));
                prev = h;
            }
        }
        dims.push((prev, self.num_classes));
        dims
    }

    /// Initial parameters: MLR starts at zero (anchoring the initial loss
    /// at `ln(num_classes)`); MLP weights are seeded `Normal(0, 0.05)` with
    /// zero biases.
    pub fn init_params(&self, seed: u64) -> Result<ModelParams> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for (i, (d_in, d_out)) in self.layer_dims().into_iter().enumerate() {
            let w = match self.architecture {
                Architecture::Mlr => vec![0.0; d_in * d_out],
                Architecture::Mlp(_) => {
                    crate::tensor::sample_normal(&mut rng, d_in * d_out, 0.0, 0.05)
                }
            };
            entries.push((
                format!("layer{i}.weight"),
                Tensor::new(vec![d_in, d_out], w)?,
            ));
            entries.push((format!("layer{i}.bias"), Tensor::new(vec![d_out], vec![0.0; d_out])?));
        }
        ModelParams::new(entries)
    }

    fn effective_batch(&self, n_train: usize) -> usize {
        match self.batch_size {
            Some(b) => b.min(n_train),
            None => {
                if n_train <= 64 {
                    n_train
                } else {
                    10
                }
            }
        }
    }
}

/// Dense layers unpacked from `ModelParams` for the numeric kernels.
struct Net {
    dims: Vec<(usize, usize)>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Net {
    /// Interpret a parameter list as alternating `layerN.weight` /
    /// `layerN.bias` entries.
    fn from_params(params: &ModelParams) -> Result<Net> {
        if !params.len().is_multiple_of(2) {
            return Err(Error::usage(
                "learner parameters must come in weight/bias pairs",
            ));
        }
        let mut dims = Vec::new();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let entries: Vec<(&str, &Tensor)> = params.iter().collect();
        for (i, pair) in entries.chunks_exact(2).enumerate() {
            let (w_name, w) = pair[0];
            let (b_name, b) = pair[1];
            if w_name != format!("layer{i}.weight") || b_name != format!("layer{i}.bias") {
                return Err(Error::usage(format!(
                    "unexpected parameter names `{w_name}`/`{b_name}` for layer {i}"
                )));
            }
            if w.rank() != 2 || b.rank() != 1 || w.shape()[1] != b.shape()[0] {
                return Err(Error::ShapeMismatch {
                    name: w_name.to_string(),
                    expected: vec![w.shape()[0], b.shape()[0]],
                    got: w.shape().to_vec(),
                });
            }
            dims.push((w.shape()[0], w.shape()[1]));
            weights.push(w.data().to_vec());
            biases.push(b.data().to_vec());
        }
        for adjacent in dims.windows(2) {
            if adjacent[0].1 != adjacent[1].0 {
                return Err(Error::usage(format!(
                    "layer dimensions do not chain: {:?} feeds {:?}",
                    adjacent[0], adjacent[1]
                )));
            }
        }
        Ok(Net {
            dims,
            weights,
            biases,
        })
    }

    fn to_params(&self) -> Result<ModelParams> {
        let mut entries = Vec::new();
        for (i, (d_in, d_out)) in self.dims.iter().enumerate() {
            entries.push((
                format!("layer{i}.weight"),
                Tensor::new(vec![*d_in, *d_out], self.weights[i].clone())?,
            ));
            entries.push((
                format!("layer{i}.bias"),
                Tensor::new(vec![*d_out], self.biases[i].clone())?,
            ));
        }
        ModelParams::new(entries)
    }

    fn input_dim(&self) -> usize {
        self.dims[0].0
    }

    fn num_classes(&self) -> usize {
        self.dims.last().unwrap().1
    }

    /// Forward pass for a batch of `b` contiguous rows, recording
    /// post-activation values per layer as `[b, width]` buffers. Hidden
    /// layers apply `tanh`; the last layer is linear.
    ///
    /// The matmul loops run with the input-feature index outermost so each
    /// weight row is streamed once per batch rather than once per sample.
    fn forward_batch(&self, xb: &[f64], b: usize, activations: &mut Vec<Vec<f64>>) {
        activations.clear();
        let mut input = xb;
        for (l, &(d_in, d_out)) in self.dims.iter().enumerate() {
            let mut z = vec![0.0; b * d_out];
            for row in z.chunks_exact_mut(d_out) {
                row.copy_from_slice(&self.biases[l]);
            }
            let w = &self.weights[l];
            for d in 0..d_in {
                let wrow = &w[d * d_out..(d + 1) * d_out];
                for (s, zrow) in z.chunks_exact_mut(d_out).enumerate() {
                    let xv = input[s * d_in + d];
                    for (zv, wv) in zrow.iter_mut().zip(wrow.iter()) {
                        *zv += xv * wv;
                    }
                }
            }
            if l + 1 != self.dims.len() {
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
            activations.push(z);
            input = activations.last().unwrap();
        }
    }
}

/// Numerically stable log-softmax cross-entropy for one logit vector.
/// Returns the loss and writes `softmax - onehot(label)` into `delta`.
fn softmax_loss_delta(logits: &[f64], label: usize, delta: &mut [f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (d, &z) in delta.iter_mut().zip(logits.iter()) {
        let e = (z - max).exp();
        *d = e;
        sum += e;
    }
    for d in delta.iter_mut() {
        *d /= sum;
    }
    let loss = -(delta[label].ln());
    delta[label] -= 1.0;
    loss
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_batch(net: &Net, x: &Tensor, y: &[usize]) -> Result<()> {
    if x.rank() != 2 {
        return Err(Error::usage("batch features must be a rank-2 tensor"));
    }
    let (n, d) = (x.shape()[0], x.shape()[1]);
    if n == 0 || y.is_empty() {
        return Err(Error::usage("batch must be non-empty"));
    }
    if y.len() != n {
        return Err(Error::usage(format!(
            "batch has {n} feature rows but {} labels",
            y.len()
        )));
    }
    if d != net.input_dim() {
        return Err(Error::ShapeMismatch {
            name: "batch".to_string(),
            expected: vec![n, net.input_dim()],
            got: vec![n, d],
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= net.num_classes()) {
        return Err(Error::usage(format!(
            "label {bad} out of range for {} classes",
            net.num_classes()
        )));
    }
    Ok(())
}

/// Mean softmax cross-entropy loss and argmax predictions over a batch.
pub fn forward_loss(params: &ModelParams, x: &Tensor, y: &[usize]) -> Result<(f64, Vec<usize>)> {
    let net = Net::from_params(params)?;
    check_batch(&net, x, y)?;
    let b = y.len();
    let c = net.num_classes();
    let mut activations = Vec::new();
    net.forward_batch(x.data(), b, &mut activations);
    let logits = activations.last().unwrap();
    let mut delta = vec![0.0; c];
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(b);
    for (row, &label) in logits.chunks_exact(c).zip(y.iter()) {
        predictions.push(argmax(row));
        loss += softmax_loss_delta(row, label, &mut delta);
    }
    Ok((loss / b as f64, predictions))
}

fn gather_batch(
    x: &Tensor,
    y: &[usize],
    indices: &[usize],
    xb: &mut Vec<f64>,
    yb: &mut Vec<usize>,
) {
    let d = x.shape()[1];
    xb.clear();
    yb.clear();
    for &s in indices {
        xb.extend_from_slice(&x.data()[s * d..(s + 1) * d]);
        yb.push(y[s]);
    }
}

/// Mean loss and full analytic gradient over the given sample indices.
///
/// When `proximal` is set, adds `mu/2 * ||params - anchor||^2` to the
/// objective (and `mu * (params - anchor)` to the gradient).
pub fn loss_and_gradient(
    params: &ModelParams,
    x: &Tensor,
    y: &[usize],
    indices: &[usize],
    proximal: Option<(&ModelParams, f64)>,
) -> Result<(f64, Gradient)> {
    let net = Net::from_params(params)?;
    check_batch(&net, x, y)?;
    if indices.is_empty() {
        return Err(Error::usage("gradient batch must be non-empty"));
    }
    let (mut xb, mut yb) = (Vec::new(), Vec::new());
    gather_batch(x, y, indices, &mut xb, &mut yb);
    let mut activations = Vec::new();
    let (mut grad_w, mut grad_b) = gradient_buffers(&net);
    let mut loss =
        accumulate_gradient(&net, &xb, &yb, &mut activations, &mut grad_w, &mut grad_b);
    let inv = 1.0 / indices.len() as f64;
    loss *= inv;
    for g in grad_w.iter_mut().chain(grad_b.iter_mut()) {
        for v in g.iter_mut() {
            *v *= inv;
        }
    }
    if let Some((anchor, mu)) = proximal {
        if mu != 0.0 {
            params.check_compatible(anchor)?;
            let anchor_net = Net::from_params(anchor)?;
            for l in 0..net.dims.len() {
                for ((g, &w), &a) in grad_w[l]
                    .iter_mut()
                    .zip(net.weights[l].iter())
                    .zip(anchor_net.weights[l].iter())
                {
                    *g += mu * (w - a);
                    loss += 0.5 * mu * (w - a) * (w - a);
                }
                for ((g, &b), &a) in grad_b[l]
                    .iter_mut()
                    .zip(net.biases[l].iter())
                    .zip(anchor_net.biases[l].iter())
                {
                    *g += mu * (b - a);
                    loss += 0.5 * mu * (b - a) * (b - a);
                }
            }
        }
    }
    let mut entries = Vec::new();
    for (i, (d_in, d_out)) in net.dims.iter().enumerate() {
        entries.push((
            format!("layer{i}.weight"),
            Tensor::new(vec![*d_in, *d_out], std::mem::take(&mut grad_w[i]))?,
        ));
        entries.push((
            format!("layer{i}.bias"),
            Tensor::new(vec![*d_out], std::mem::take(&mut grad_b[i]))?,
        ));
    }
    Ok((loss, ModelParams::new(entries)?))
}

fn gradient_buffers(net: &Net) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let grad_w = net
        .dims
        .iter()
        .map(|(i, o)| vec![0.0; i * o])
        .collect::<Vec<_>>();
    let grad_b = net.dims.iter().map(|(_, o)| vec![0.0; *o]).collect();
    (grad_w, grad_b)
}

/// Batch backprop over gathered rows, accumulating unnormalized gradient
/// sums; returns the summed loss. Gradient matmuls keep the input-feature
/// index outermost so each gradient row is accumulated in cache.
fn accumulate_gradient(
    net: &Net,
    xb: &[f64],
    yb: &[usize],
    activations: &mut Vec<Vec<f64>>,
    grad_w: &mut [Vec<f64>],
    grad_b: &mut [Vec<f64>],
) -> f64 {
    let b = yb.len();
    let layers = net.dims.len();
    let c = net.num_classes();
    net.forward_batch(xb, b, activations);

    // delta_L = softmax(logits) - onehot(y), one row per sample
    let logits = activations.last().unwrap();
    let mut delta = vec![0.0; b * c];
    let mut loss = 0.0;
    for (s, (lrow, drow)) in logits
        .chunks_exact(c)
        .zip(delta.chunks_exact_mut(c))
        .enumerate()
    {
        loss += softmax_loss_delta(lrow, yb[s], drow);
    }

    let mut delta_cur = delta;
    for l in (0..layers).rev() {
        let (d_in, d_out) = net.dims[l];
        let input: &[f64] = if l == 0 { xb } else { &activations[l - 1] };
        let gw = &mut grad_w[l];
        for d in 0..d_in {
            let dst = &mut gw[d * d_out..(d + 1) * d_out];
            for (s, drow) in delta_cur.chunks_exact(d_out).enumerate() {
                let xv = input[s * d_in + d];
                for (g, dv) in dst.iter_mut().zip(drow.iter()) {
                    *g += xv * dv;
                }
            }
        }
        for drow in delta_cur.chunks_exact(d_out) {
            for (g, dv) in grad_b[l].iter_mut().zip(drow.iter()) {
                *g += dv;
            }
        }
        if l > 0 {
            // delta_{l-1} = (delta_l W_l^T) * tanh'(a_{l-1})
            let w = &net.weights[l];
            let a_prev = &activations[l - 1];
            let mut prev = vec![0.0; b * d_in];
            for s in 0..b {
                let drow = &delta_cur[s * d_out..(s + 1) * d_out];
                let arow = &a_prev[s * d_in..(s + 1) * d_in];
                let dst = &mut prev[s * d_in..(s + 1) * d_in];
                for (i, (pv, &a)) in dst.iter_mut().zip(arow.iter()).enumerate() {
                    let wrow = &w[i * d_out..(i + 1) * d_out];
                    let mut acc = 0.0;
                    for (wv, dv) in wrow.iter().zip(drow.iter()) {
                        acc += wv * dv;
                    }
                    *pv = acc * (1.0 - a * a);
                }
            }
            delta_cur = prev;
        }
    }
    loss
}

fn run_local(
    params: &ModelParams,
    anchor: Option<&ModelParams>,
    shard: &ClientShard,
    spec: &LearnerSpec,
    seed: u64,
) -> Result<ModelParams> {
    spec.validate()?;
    let n_train = shard.train_len();
    if n_train == 0 {
        return Err(Error::usage(format!(
            "client `{}` has an empty training set",
            shard.client_id
        )));
    }
    let mut net = Net::from_params(params)?;
    check_batch(&net, &shard.train_x, &shard.train_y)?;
    let anchor_net = match anchor {
        Some(a) => {
            params.check_compatible(a)?;
            Some(Net::from_params(a)?)
        }
        None => None,
    };
    let batch = spec.effective_batch(n_train);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n_train).collect();
    let (mut grad_w, mut grad_b) = gradient_buffers(&net);
    let (mut xb, mut yb) = (Vec::new(), Vec::new());
    let mut activations = Vec::new();
    for _ in 0..spec.local_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            for g in grad_w.iter_mut().chain(grad_b.iter_mut()) {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            gather_batch(&shard.train_x, &shard.train_y, chunk, &mut xb, &mut yb);
            accumulate_gradient(&net, &xb, &yb, &mut activations, &mut grad_w, &mut grad_b);
            let step = spec.learning_rate / chunk.len() as f64;
            let mu = anchor_net.as_ref().map(|_| spec.proximal_mu).unwrap_or(0.0);
            for l in 0..net.dims.len() {
                if let (Some(a), true) = (&anchor_net, mu != 0.0) {
                    for ((w, &g), &aw) in net.weights[l]
                        .iter_mut()
                        .zip(grad_w[l].iter())
                        .zip(a.weights[l].iter())
                    {
                        *w -= step * g + spec.learning_rate * mu * (*w - aw);
                    }
                    for ((b, &g), &ab) in net.biases[l]
                        .iter_mut()
                        .zip(grad_b[l].iter())
                        .zip(a.biases[l].iter())
                    {
                        *b -= step * g + spec.learning_rate * mu * (*b - ab);
                    }
                } else {
                    for (w, &g) in net.weights[l].iter_mut().zip(grad_w[l].iter()) {
                        *w -= step * g;
                    }
                    for (b, &g) in net.biases[l].iter_mut().zip(grad_b[l].iter()) {
                        *b -= step * g;
                    }
                }
            }
        }
    }
    net.to_params()
        .map_err(|_| Error::usage("local update produced non-finite parameters"))
}

/// Plain mini-batch SGD for `local_epochs` passes with seeded shuffling.
/// The input parameters are not modified.
pub fn local_update_sgd(
    params: &ModelParams,
    shard: &ClientShard,
    spec: &LearnerSpec,
    seed: u64,
) -> Result<ModelParams> {
    run_local(params, None, shard, spec, seed)
}

/// SGD on the proximal objective `F_k(w) + mu/2 ||w - global||^2`. With
/// `mu == 0` this takes exactly the same code path as plain SGD, so the
/// trajectories are bit-identical.
pub fn local_update_prox(
    params: &ModelParams,
    global_params: &ModelParams,
    shard: &ClientShard,
    spec: &LearnerSpec,
    seed: u64,
) -> Result<ModelParams> {
    if spec.proximal_mu == 0.0 {
        run_local(params, None, shard, spec, seed)
    } else {
        run_local(params, Some(global_params), shard, spec, seed)
    }
}

/// Weighted mean of per-client test accuracies, weighted by test set size.
pub fn evaluate(params: &ModelParams, shards: &[ClientShard]) -> Result<(f64, Vec<(String, f64)>)> {
    if shards.is_empty() {
        return Err(Error::usage("evaluate requires at least one client"));
    }
    let mut per_client = Vec::with_capacity(shards.len());
    let mut weighted = 0.0;
    let mut total = 0usize;
    for shard in shards {
        let n = shard.test_len();
        if n == 0 {
            return Err(Error::usage(format!(
                "client `{}` has an empty test set",
                shard.client_id
            )));
        }
        let (_, predictions) = forward_loss(params, &shard.test_x, &shard.test_y)?;
        let correct = predictions
            .iter()
            .zip(shard.test_y.iter())
            .filter(|(p, y)| p == y)
            .count();
        let acc = correct as f64 / n as f64;
        weighted += acc * n as f64;
        total += n;
        per_client.push((shard.client_id.clone(), acc));
    }
    Ok((weighted / total as f64, per_client))
}
