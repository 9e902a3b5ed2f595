//! Exponential calibration of SLOVA probabilities.
//!
//! The calibration map is `c(p) = sum_i beta_i * p^alpha_i` with
//! `alpha_i > 0`, `beta_i > 0` and `sum_i beta_i = 1`, so `c` is monotone,
//! `c(0) = 0` and `c(1) = 1`. It is fitted by least squares to
//! (average confidence, average accuracy) pairs taken from a sorted,
//! window-averaged set of validation predictions.
//!
//! The constraints are enforced by reparametrisation: `alpha = exp(a)` and
//! `beta = softmax(b)`, so every iterate is a valid monotone map.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{LabelVector, Matrix, ProbKind, ProbMatrix};
use crate::probs::expect_kind;
use crate::rng;

/// Version tag written into serialised calibration models.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Every feature drawn from U[0, 1] (image data scaled to the unit cube).
    UnitUniform,
    /// Each feature drawn uniformly from its observed `[min, max]`.
    FeatureRangeUniform,
}

/// Default number of noise samples for a validation set of `n_val` rows.
pub fn default_noise_count(n_val: usize) -> usize {
    n_val / 10
}

/// Random inputs used to teach the calibration that "none of the classes"
/// is a valid outcome.
pub fn make_noise_samples(
    ref_features: &Matrix,
    count: usize,
    seed: u64,
    mode: NoiseMode,
) -> Matrix {
    let d = ref_features.cols();
    let mut out = Matrix::zeros(count, d);
    if count == 0 {
        return out;
    }
    let mut rng = rng::seeded(seed);
    match mode {
        NoiseMode::UnitUniform => {
            for v in out.as_mut_slice() {
                *v = rng.random::<f64>();
            }
        }
        NoiseMode::FeatureRangeUniform => {
            let ranges = ref_features.column_ranges();
            for i in 0..count {
                for (v, &(lo, hi)) in out.row_mut(i).iter_mut().zip(&ranges) {
                    *v = lo + (hi - lo) * rng.random::<f64>();
                }
            }
        }
    }
    out
}

/// Sorted (probability, label) pairs and their sliding-window averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDataset {
    pub sorted_probs: Vec<f64>,
    pub sorted_labels: Vec<u8>,
    pub window_size: usize,
    pub avg_conf: Vec<f64>,
    pub avg_acc: Vec<f64>,
    /// Selected `(avg_conf, avg_acc)` pairs used as least-squares targets.
    pub fit_points: Vec<(f64, f64)>,
}

impl CalibrationDataset {
    /// Builds the dataset directly from (probability, binary label) pairs.
    pub fn from_pairs(mut pairs: Vec<(f64, u8)>, n_b: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::validation("calibration set is empty"));
        }
        if n_b < 2 {
            return Err(Error::validation(format!(
                "n_b must be at least 2, got {n_b}"
            )));
        }
        if let Some(&(p, _)) = pairs.iter().find(|(p, _)| !(0.0..=1.0).contains(p)) {
            return Err(Error::validation(format!("probability {p} outside [0,1]")));
        }
        // `sort_by` is stable: equal probabilities keep input order.
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (sorted_probs, sorted_labels): (Vec<f64>, Vec<u8>) = pairs.into_iter().unzip();

        let window_size = (sorted_probs.len() / 100).max(1);
        let avg_conf = moving_average(&sorted_probs, window_size);
        let labels_f: Vec<f64> = sorted_labels.iter().map(|&l| f64::from(l)).collect();
        let avg_acc = moving_average(&labels_f, window_size);

        let fit_points = spaced_indices(avg_conf.len(), n_b)
            .into_iter()
            .map(|i| (avg_conf[i], avg_acc[i]))
            .collect();

        Ok(CalibrationDataset {
            sorted_probs,
            sorted_labels,
            window_size,
            avg_conf,
            avg_acc,
            fit_points,
        })
    }

    /// Number of window averages available before subsampling.
    pub fn n_averaged(&self) -> usize {
        self.avg_conf.len()
    }
}

/// Means over every window of `n` consecutive values.
fn moving_average(values: &[f64], n: usize) -> Vec<f64> {
    // Each window is summed from scratch: O(len * n), but free of the drift a
    // running sum picks up over long inputs, and n is only len / 100.
    values
        .windows(n)
        .map(|w| (w.iter().sum::<f64>() / n as f64).clamp(0.0, 1.0))
        .collect()
}

/// `count` indices spread evenly over `0..len` (all of them if `count >= len`).
fn spaced_indices(len: usize, count: usize) -> Vec<usize> {
    if count >= len {
        return (0..len).collect();
    }
    let last = (len - 1) as f64;
    let step = last / (count - 1) as f64;
    (0..count)
        .map(|i| ((i as f64 * step).round() as usize).min(len - 1))
        .collect()
}

/// Gathers K pairs per validation sample (`(P(k|x), [k == y])`) plus K pairs
/// labelled 0 per noise sample, then sorts and window-averages them.
pub fn build_calibration_dataset(
    p: &ProbMatrix,
    labels: &LabelVector,
    noise_probs: Option<&ProbMatrix>,
    n_b: usize,
) -> Result<CalibrationDataset> {
    expect_kind(p, ProbKind::Slova)?;
    labels.check_len(p.n_samples())?;
    labels.check_classes(p.n_classes())?;
    let k = p.n_classes();
    let n_noise = noise_probs.map_or(0, ProbMatrix::n_samples);
    let mut pairs = Vec::with_capacity((p.n_samples() + n_noise) * k);
    for (row, &y) in p.iter_rows().zip(labels.as_slice()) {
        for (c, &v) in row.iter().enumerate() {
            pairs.push((v, u8::from(c == y)));
        }
    }
    if let Some(noise) = noise_probs {
        expect_kind(noise, ProbKind::Slova)?;
        if noise.n_samples() > 0 && noise.n_classes() != k {
            return Err(Error::validation(format!(
                "noise probabilities have {} classes, expected {k}",
                noise.n_classes()
            )));
        }
        for row in noise.iter_rows() {
            pairs.extend(row.iter().map(|&v| (v, 0u8)));
        }
    }
    CalibrationDataset::from_pairs(pairs, n_b)
}

/// Optimiser settings for [`fit_exponential`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Number of `(alpha, beta)` terms.
    pub m: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Extra whole epochs run until at least this many optimizer steps were
    /// taken, so small fit sets converge as far as large ones.
    pub min_steps: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            m: 20,
            epochs: 20,
            learning_rate: 0.02,
            batch_size: 32,
            min_steps: 10_000,
            seed: 0,
        }
    }
}

/// Fitted exponential calibration map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationModel {
    pub version: u32,
    #[serde(rename = "M")]
    pub m: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub fit_loss: f64,
    pub seed: u64,
    pub epochs: usize,
}

impl CalibrationModel {
    /// Builds a model from explicit parameters, checking the constraints.
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let model = CalibrationModel {
            version: MODEL_VERSION,
            m: alphas.len(),
            alphas,
            betas,
            fit_loss: 0.0,
            seed: 0,
            epochs: 0,
        };
        model.validate()?;
        Ok(model)
    }

    /// The identity map (`M = 1`, `alpha = beta = 1`).
    pub fn identity() -> Self {
        CalibrationModel::new(vec![1.0], vec![1.0]).expect("identity is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: MODEL_VERSION,
            });
        }
        if self.m == 0 || self.alphas.len() != self.m || self.betas.len() != self.m {
            return Err(Error::validation(format!(
                "calibration model has M = {} with {} alphas and {} betas",
                self.m,
                self.alphas.len(),
                self.betas.len()
            )));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::validation(format!("alpha {a} is not positive")));
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return Err(Error::validation(format!("beta {b} outside (0, 1]")));
        }
        let s: f64 = self.betas.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("betas sum to {s}, expected 1")));
        }
        Ok(())
    }

    /// Evaluates `c(p)`, clamped to `[0, 1]`.
    pub fn eval(&self, p: f64) -> f64 {
        let c: f64 = self
            .alphas
            .iter()
            .zip(&self.betas)
            .map(|(&a, &b)| b * p.powf(a))
            .sum();
        c.clamp(0.0, 1.0)
    }

    /// Applies `c` to every entry of a SLOVA matrix.
    pub fn apply(&self, p: &ProbMatrix) -> ProbMatrix {
        ProbMatrix::new_unchecked(p.values().map(|v| self.eval(v)), ProbKind::Calibrated)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let h: Header = serde_json::from_str(s)?;
        if h.version != MODEL_VERSION {
            return Err(Error::Version {
                found: h.version,
                expected: MODEL_VERSION,
            });
        }
        let m: CalibrationModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

/// Unconstrained parameters: `alpha = exp(a)`, `beta = softmax(b)`.
struct Params {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Params {
    fn alphas(&self) -> Vec<f64> {
        self.a.iter().map(|a| a.exp()).collect()
    }

    fn betas(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.b.len()];
        crate::probs::softmax_into(&self.b, 1.0, &mut out);
        out
    }
}

/// Mean squared error of the map over `points`.
fn mse(alphas: &[f64], betas: &[f64], points: &[(f64, f64)]) -> f64 {
    let s: f64 = points
        .iter()
        .map(|&(x, y)| {
            let c: f64 = alphas.iter().zip(betas).map(|(a, b)| b * x.powf(*a)).sum();
            (c - y).powi(2)
        })
        .sum();
    s / points.len() as f64
}

/// Gradient of the batch MSE with respect to `(a, b)`.
fn gradient(params: &Params, batch: &[(f64, f64)], ga: &mut [f64], gb: &mut [f64]) {
    let alphas = params.alphas();
    let betas = params.betas();
    let m = alphas.len();
    ga.fill(0.0);
    gb.fill(0.0);
    let mut powers = vec![0.0; m];
    let scale = 2.0 / batch.len() as f64;
    for &(x, y) in batch {
        let ln_x = if x > 0.0 { x.ln() } else { 0.0 };
        let mut c = 0.0;
        for j in 0..m {
            powers[j] = if x > 0.0 { x.powf(alphas[j]) } else { 0.0 };
            c += betas[j] * powers[j];
        }
        let e = scale * (c - y);
        for j in 0..m {
            // d/da_j of beta_j * x^{exp(a_j)} = beta_j * alpha_j * x^alpha_j * ln x
            ga[j] += e * betas[j] * alphas[j] * powers[j] * ln_x;
            // softmax Jacobian: d/db_j c = beta_j * (x^alpha_j - c)
            gb[j] += e * betas[j] * (powers[j] - c);
        }
    }
}

/// Adam state over the concatenated parameter vector.
struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grads[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grads[i] * grads[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

/// Fits the exponential map to `ds.fit_points` by mini-batch Adam on the
/// reparametrised objective. Initialisation draws `a_i ~ U[-1, 2]` and sets
/// `b_i = 0` (equal weights). Deterministic for a fixed `cfg.seed`.
pub fn fit_exponential(ds: &CalibrationDataset, cfg: &FitConfig) -> Result<CalibrationModel> {
    if cfg.m == 0 {
        return Err(Error::validation("M must be at least 1"));
    }
    if ds.fit_points.is_empty() {
        return Err(Error::validation("calibration dataset has no fit points"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::validation("batch size must be at least 1"));
    }
    let m = cfg.m;
    let mut rng = rng::seeded(cfg.seed);
    let mut params = Params {
        a: (0..m).map(|_| rng.random_range(-1.0..2.0)).collect(),
        b: vec![0.0; m],
    };

    let points = &ds.fit_points;
    let mut adam = Adam::new(cfg.learning_rate, 2 * m);
    let mut ga = vec![0.0; m];
    let mut gb = vec![0.0; m];
    let mut flat = vec![0.0; 2 * m];
    let mut grads = vec![0.0; 2 * m];
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let steps_per_epoch = points.len().div_ceil(cfg.batch_size);
    let epochs = cfg.epochs.max(cfg.min_steps.div_ceil(steps_per_epoch));
    for _ in 0..epochs {
        let order = rng::permutation(&mut rng, points.len());
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| points[i]));
            gradient(&params, &batch, &mut ga, &mut gb);
            flat[..m].copy_from_slice(&params.a);
            flat[m..].copy_from_slice(&params.b);
            grads[..m].copy_from_slice(&ga);
            grads[m..].copy_from_slice(&gb);
            adam.step(&mut flat, &grads);
            params.a.copy_from_slice(&flat[..m]);
            params.b.copy_from_slice(&flat[m..]);
        }
    }

    let alphas = params.alphas();
    let betas = params.betas();
    let fit_loss = mse(&alphas, &betas, points);
    if !fit_loss.is_finite() || alphas.iter().any(|a| !a.is_finite() || *a <= 0.0) {
        return Err(Error::Numeric(format!(
            "calibration fit produced non-finite parameters (loss {fit_loss})"
        )));
    }
    Ok(CalibrationModel {
        version: MODEL_VERSION,
        m,
        alphas,
        betas,
        fit_loss,
        seed: cfg.seed,
        epochs,
    })
}

/// Calibration curve for SLOVA scores of a model whose K sigmoids are i.i.d.
/// uniform: the CDF of a product of K uniforms,
/// `c(p) = Gamma(K, ln 1/p) / (K-1)! = p * sum_{j<K} (ln 1/p)^j / j!`.
pub fn exact_random_calibration(p_hat: f64, k: usize) -> f64 {
    assert!(k >= 1, "K must be at least 1");
    if p_hat <= 0.0 {
        return 0.0;
    }
    if p_hat >= 1.0 {
        return 1.0;
    }
    let l = -p_hat.ln();
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= l / j as f64;
        sum += term;
    }
    (p_hat * sum).min(1.0)
}

/// Simplified curve `1 - (1 - p)^K`.
pub fn approx_random_calibration(p_hat: f64, k: usize) -> f64 {
    assert!(k >= 1, "K must be at least 1");
    1.0 - (1.0 - p_hat.clamp(0.0, 1.0)).powi(k as i32)
}

/// Density of a product of K independent U(0,1) variables,
/// `(ln 1/p)^{K-1} / (K-1)!`.
pub fn random_slova_density(p_hat: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        if k == 1 && p_hat == 0.0 {
            return Ok(1.0);
        }
        return Err(Error::Domain(format!(
            "density undefined at p = {p_hat} for K = {k}"
        )));
    }
    let l = -p_hat.ln();
    let mut v = 1.0;
    for j in 1..k {
        v *= l / j as f64;
    }
    Ok(v)
}
