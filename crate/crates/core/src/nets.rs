//! Small fully connected ReLU networks trained from scratch, and synthetic
//! datasets to train them on.
//!
//! Hidden layers are affine + ReLU, so the network is piecewise affine in its
//! input; the output layer is affine and produces logits. The head only
//! decides which loss the network is trained with and how logits are turned
//! into probabilities downstream.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{LabelVector, LogitMatrix, Matrix};
use crate::probs::{sigmoid, softmax_into, softplus};
use crate::rng;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    OvaSigmoid,
    Softmax,
}

impl Head {
    /// Loss the head is trained with.
    pub fn loss(self) -> Loss {
        match self {
            Head::OvaSigmoid => Loss::Ova,
            Head::Softmax => Loss::SoftmaxCe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Sum of K binary cross-entropies, one per class.
    Ova,
    SoftmaxCe,
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    /// `out x in`, row-major.
    weights: Matrix,
    bias: Vec<f64>,
}

impl Dense {
    fn n_in(&self) -> usize {
        self.weights.cols()
    }

    fn n_out(&self) -> usize {
        self.weights.rows()
    }

    /// `x W^T + b` for a batch `x` of shape `n x in`.
    fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_out());
        for (i, xr) in x.iter_rows().enumerate() {
            let o = out.row_mut(i);
            for (j, oj) in o.iter_mut().enumerate() {
                let w = self.weights.row(j);
                let mut s = self.bias[j];
                for (a, b) in w.iter().zip(xr) {
                    s += a * b;
                }
                *oj = s;
            }
        }
        out
    }
}

/// Feed-forward ReLU network `[D, hidden..., K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    layers: Vec<Dense>,
    head: Head,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpDoc {
    version: u32,
    layer_dims: Vec<usize>,
    head: Head,
    /// Per layer: weights row-major (`out x in`), then biases.
    params: Vec<f64>,
}

fn check_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(Error::validation(format!(
            "layer dims {layer_dims:?} need at least input and output, all positive"
        )));
    }
    Ok(())
}

impl MlpModel {
    /// Glorot-uniform weights `U(+-sqrt(6 / (fan_in + fan_out)))`, zero biases.
    pub fn new(layer_dims: &[usize], head: Head, seed: u64) -> Result<Self> {
        check_dims(layer_dims)?;
        let mut rng = rng::seeded(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let mut weights = Matrix::zeros(n_out, n_in);
                for v in weights.as_mut_slice() {
                    *v = rng.random_range(-limit..=limit);
                }
                Dense {
                    weights,
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        Ok(MlpModel {
            layer_dims: layer_dims.to_vec(),
            layers,
            head,
        })
    }

    /// All parameters zero.
    pub fn zeros(layer_dims: &[usize], head: Head) -> Result<Self> {
        let mut m = Self::new(layer_dims, head, 0)?;
        m.set_params(&vec![0.0; m.n_params()])?;
        Ok(m)
    }

    /// Builds a model from a flat parameter vector (layout as in the JSON file).
    pub fn from_params(layer_dims: &[usize], head: Head, params: &[f64]) -> Result<Self> {
        let mut m = Self::new(layer_dims, head, 0)?;
        m.set_params(params)?;
        Ok(m)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_dims.last().expect("validated dims")
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::validation(format!(
                "{} parameters given, model has {}",
                params.len(),
                self.n_params()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite model parameter"));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            l.weights
                .as_mut_slice()
                .copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Zeroes every bias. Makes the network positively homogeneous.
    pub fn clear_biases(&mut self) {
        for l in &mut self.layers {
            l.bias.fill(0.0);
        }
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::validation(format!(
                "input has {} features, model expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Raw logits; no finiteness check on the output.
    pub fn forward_raw(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut a = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            a = l.forward(&a);
            if i < last {
                a.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Ok(a)
    }

    pub fn forward(&self, x: &Matrix) -> Result<LogitMatrix> {
        let raw = self.forward_raw(x)?;
        LogitMatrix::new(raw).map_err(|e| match e {
            Error::Validation(m) => Error::Numeric(m),
            other => other,
        })
    }

    /// Mean loss over the batch and its gradient with respect to the flat
    /// parameter vector.
    pub fn loss_and_grad(
        &self,
        x: &Matrix,
        labels: &[usize],
        loss: Loss,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        if labels.len() != x.rows() || x.rows() == 0 {
            return Err(Error::validation(format!(
                "{} labels for {} rows",
                labels.len(),
                x.rows()
            )));
        }
        let n_layers = self.layers.len();
        // Keep pre-activations of every layer for the backward pass.
        let mut inputs: Vec<Matrix> = Vec::with_capacity(n_layers);
        let mut pre: Vec<Matrix> = Vec::with_capacity(n_layers);
        let mut a = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let z = l.forward(&a);
            inputs.push(a);
            a = if i + 1 < n_layers {
                z.map(|v| v.max(0.0))
            } else {
                z.clone()
            };
            pre.push(z);
        }
        let logits = &pre[n_layers - 1];
        let (value, mut delta) = loss_delta(logits, labels, loss);

        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n_layers);
        for li in (0..n_layers).rev() {
            let l = &self.layers[li];
            let input = &inputs[li];
            let mut gw = vec![0.0; l.n_out() * l.n_in()];
            let mut gb = vec![0.0; l.n_out()];
            for (dr, xr) in delta.iter_rows().zip(input.iter_rows()) {
                for (j, &d) in dr.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[j] += d;
                    let row = &mut gw[j * l.n_in()..(j + 1) * l.n_in()];
                    for (g, &xv) in row.iter_mut().zip(xr) {
                        *g += d * xv;
                    }
                }
            }
            grads.push((gw, gb));
            if li > 0 {
                let below = &pre[li - 1];
                let mut next = Matrix::zeros(delta.rows(), l.n_in());
                for (r, dr) in delta.iter_rows().enumerate() {
                    let zr = below.row(r);
                    let out = next.row_mut(r);
                    for (j, &d) in dr.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        for (o, &w) in out.iter_mut().zip(l.weights.row(j)) {
                            *o += d * w;
                        }
                    }
                    for (o, &z) in out.iter_mut().zip(zr) {
                        if z <= 0.0 {
                            *o = 0.0;
                        }
                    }
                }
                delta = next;
            }
        }
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads.into_iter().rev() {
            flat.extend(gw);
            flat.extend(gb);
        }
        Ok((value, flat))
    }

    /// Mean loss over a dataset.
    pub fn loss(&self, x: &Matrix, labels: &[usize], loss: Loss) -> Result<f64> {
        let logits = self.forward_raw(x)?;
        Ok(loss_delta(&logits, labels, loss).0)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = MlpDoc {
            version: MODEL_VERSION,
            layer_dims: self.layer_dims.clone(),
            head: self.head,
            params: self.params(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: MlpDoc = serde_json::from_str(s)?;
        if doc.version != MODEL_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: MODEL_VERSION,
            });
        }
        Self::from_params(&doc.layer_dims, doc.head, &doc.params)
    }
}

/// Mean loss and `d loss / d logits` (already divided by the batch size).
fn loss_delta(logits: &Matrix, labels: &[usize], loss: Loss) -> (f64, Matrix) {
    let n = logits.rows() as f64;
    let mut delta = Matrix::zeros(logits.rows(), logits.cols());
    let mut total = 0.0;
    for (i, (row, &y)) in logits.iter_rows().zip(labels).enumerate() {
        let d = delta.row_mut(i);
        match loss {
            Loss::Ova => {
                for (k, &f) in row.iter().enumerate() {
                    // -ln sigmoid(f) = softplus(-f); -ln(1 - sigmoid(f)) = softplus(f)
                    if k == y {
                        total += softplus(-f);
                        d[k] = (sigmoid(f) - 1.0) / n;
                    } else {
                        total += softplus(f);
                        d[k] = sigmoid(f) / n;
                    }
                }
            }
            Loss::SoftmaxCe => {
                softmax_into(row, 1.0, d);
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + row.iter().map(|&z| (z - m).exp()).sum::<f64>().ln();
                total += lse - row[y];
                d[y] -= 1.0;
                d.iter_mut().for_each(|v| *v /= n);
            }
        }
    }
    (total / n, delta)
}

/// Mini-batch SGD settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean loss over the full training set after the last epoch.
    pub final_loss: f64,
    /// Full-training-set loss after each epoch.
    pub history: Vec<f64>,
}

/// Trains with mini-batch SGD and momentum, reshuffling every epoch from
/// `cfg.seed`. A non-finite loss aborts with [`Error::Diverged`].
pub fn train(
    model: &MlpModel,
    data: &SyntheticDataset,
    loss: Loss,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if cfg.batch_size == 0 {
        return Err(Error::validation("batch size must be at least 1"));
    }
    if data.labels.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    data.labels.check_classes(model.n_classes())?;
    let x = &data.features;
    let y = data.labels.as_slice();
    let mut model = model.clone();
    let mut params = model.params();
    let mut velocity = vec![0.0; params.len()];
    let mut rng = rng::seeded(cfg.seed);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let order = rng::permutation(&mut rng, x.rows());
        for chunk in order.chunks(cfg.batch_size) {
            let bx = x.select_rows(chunk);
            let by: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (value, grad) = model.loss_and_grad(&bx, &by, loss)?;
            if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    last_finite: Box::new(model),
                });
            }
            let mut next = params.clone();
            for ((p, v), g) in next.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
            if next.iter().any(|p| !p.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    last_finite: Box::new(model),
                });
            }
            params = next;
            model.set_params(&params)?;
        }
        let l = model.loss(x, y, loss)?;
        if !l.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_finite: Box::new(model),
            });
        }
        history.push(l);
    }
    let final_loss = match history.last() {
        Some(&l) => l,
        None => model.loss(x, y, loss)?,
    };
    Ok(TrainOutcome {
        model,
        final_loss,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    GaussianBlobs,
    TwoMoons,
}

/// Radius of the circle the blob centres sit on.
pub const BLOB_RADIUS: f64 = 5.0;
/// Scale applied to the unit two-moons shape so its extent matches the blobs.
pub const MOONS_SCALE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub features: Matrix,
    pub labels: LabelVector,
    pub n_classes: usize,
    pub generator: Generator,
    pub seed: u64,
    pub noise_sigma: f64,
}

/// Centre of blob `k` of `n_classes` in `d` dimensions.
pub fn blob_center(k: usize, n_classes: usize, d: usize) -> Vec<f64> {
    let t = 2.0 * std::f64::consts::PI * k as f64 / n_classes as f64;
    let mut c = vec![0.0; d];
    c[0] = BLOB_RADIUS * t.cos();
    if d > 1 {
        c[1] = BLOB_RADIUS * t.sin();
    }
    c
}

/// Balanced synthetic classification data. Labels cycle through the classes
/// and rows are then shuffled, so class counts differ by at most one.
pub fn make_synthetic(
    generator: Generator,
    n_classes: usize,
    n: usize,
    d: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if n_classes < 2 {
        return Err(Error::validation("need at least 2 classes"));
    }
    if n < n_classes {
        return Err(Error::validation(format!(
            "need at least one sample per class ({n} < {n_classes})"
        )));
    }
    if d < 2 {
        return Err(Error::validation("need at least 2 feature dimensions"));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::validation(format!(
            "noise sigma {noise_sigma} must be >= 0"
        )));
    }
    if generator == Generator::TwoMoons && n_classes != 2 {
        return Err(Error::validation(format!(
            "two_moons produces exactly 2 classes, got K = {n_classes}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let order = rng::permutation(&mut rng, n);
    let labels: Vec<usize> = order.iter().map(|&i| i % n_classes).collect();
    let mut features = Matrix::zeros(n, d);
    for (i, &y) in labels.iter().enumerate() {
        let row = features.row_mut(i);
        match generator {
            Generator::GaussianBlobs => row.copy_from_slice(&blob_center(y, n_classes, d)),
            Generator::TwoMoons => {
                let t = rng.random_range(0.0..std::f64::consts::PI);
                let (px, py) = if y == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                };
                row[0] = MOONS_SCALE * px;
                row[1] = MOONS_SCALE * py;
            }
        }
        if noise_sigma > 0.0 {
            for v in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += noise_sigma * z;
            }
        }
    }
    Ok(SyntheticDataset {
        features,
        labels: LabelVector::new(labels, n_classes)?,
        n_classes,
        generator,
        seed,
        noise_sigma,
    })
}

/// Central finite-difference gradient of the mean loss, for checking
/// [`MlpModel::loss_and_grad`].
pub fn numerical_gradient(
    model: &MlpModel,
    x: &Matrix,
    labels: &[usize],
    loss: Loss,
    step: f64,
) -> Result<Vec<f64>> {
    let base = model.params();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for i in 0..base.len() {
        p[i] = base[i] + step;
        probe.set_params(&p)?;
        let up = probe.loss(x, labels, loss)?;
        p[i] = base[i] - step;
        probe.set_params(&p)?;
        let down = probe.loss(x, labels, loss)?;
        p[i] = base[i];
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}
