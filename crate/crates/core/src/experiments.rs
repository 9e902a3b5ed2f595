//! Reproducible desk-scale harnesses built on the toy networks.
//!
//! * [`saturation_experiment`]: sigmoids along rays `x + alpha * d` for large
//!   `alpha`, checking when OVA and SLOVA confidences saturate.
//! * [`plane_experiment`]: both confidences over the plane through three
//!   samples.
//! * [`shift_experiment`]: metrics under growing additive Gaussian noise.
//! * [`ood_experiment`]: mean maximum confidence on out-of-distribution sets.
//! * [`ablation_experiment`]: softmax vs OVA vs SLOVA vs calibrated SLOVA.
//! * [`stability_experiment`]: calibration quality over `(M, n_b)` grids.
//!
//! Every random draw comes from a stream derived from the master seed, so a
//! rerun with the same seed gives identical reports.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calibrate::{
    build_calibration_dataset, default_noise_count, fit_exponential, make_noise_samples,
    CalibrationModel, FitConfig, NoiseMode,
};
use crate::error::{Error, Result};
use crate::matrix::{argmax, LabelVector, Matrix, ProbMatrix};
use crate::metrics::{self, friedman_dunn, Alpha, EvalReport, RankingTable, TemperatureFit};
use crate::nets::{self, make_synthetic, Generator, Head, MlpModel, SyntheticDataset, TrainConfig};
use crate::probs::{none_prob, sigmoid_probs, slova_probs, softmax_probs};
use crate::rng;

pub const REPORT_VERSION: u32 = 1;

// Stream ids, one per independent use of the master seed.
const STREAM_TRAIN_DATA: u64 = 1;
const STREAM_VAL_DATA: u64 = 2;
const STREAM_TEST_DATA: u64 = 3;
const STREAM_INIT: u64 = 4;
const STREAM_TRAIN_ORDER: u64 = 5;
const STREAM_NOISE: u64 = 6;
const STREAM_CAL_FIT: u64 = 7;
const STREAM_SHIFT: u64 = 8;
const STREAM_OOD: u64 = 9;
const STREAM_PLANE: u64 = 10;
/// Saturation directions use `STREAM_SATURATION + sweep index`.
const STREAM_SATURATION: u64 = 1 << 32;

fn derive_seed(seed: u64, stream: u64) -> u64 {
    use rand::RngCore;
    rng::stream(seed, stream).next_u64()
}

/// Synthetic task and the two networks trained on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub generator: Generator,
    pub n_classes: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            generator: Generator::GaussianBlobs,
            n_classes: 4,
            dim: 2,
            noise_sigma: 1.0,
            n_train: 2000,
            n_val: 1000,
            n_test: 2000,
            hidden: vec![64, 64],
            epochs: 30,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
        }
    }
}

impl ToyConfig {
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.dim];
        dims.extend(&self.hidden);
        dims.push(self.n_classes);
        dims
    }
}

/// Calibration settings shared by the harnesses and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSettings {
    #[serde(rename = "M")]
    pub m: usize,
    pub epochs: usize,
    pub n_b: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub min_steps: usize,
    pub noise_mode: NoiseMode,
    /// Noise samples as a fraction of the validation set size.
    pub noise_fraction: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        let fit = FitConfig::default();
        CalibrationSettings {
            m: fit.m,
            epochs: fit.epochs,
            n_b: 4000,
            learning_rate: fit.learning_rate,
            batch_size: fit.batch_size,
            min_steps: fit.min_steps,
            noise_mode: NoiseMode::FeatureRangeUniform,
            noise_fraction: 0.1,
        }
    }
}

impl CalibrationSettings {
    pub fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            m: self.m,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            min_steps: self.min_steps,
            seed,
        }
    }

    pub fn noise_count(&self, n_val: usize) -> usize {
        if self.noise_fraction == 0.1 {
            default_noise_count(n_val)
        } else {
            (self.noise_fraction * n_val as f64).floor() as usize
        }
    }
}

/// Data splits plus both trained networks.
#[derive(Debug, Clone)]
pub struct ToyBundle {
    pub train: SyntheticDataset,
    pub val: SyntheticDataset,
    pub test: SyntheticDataset,
    pub ova: MlpModel,
    pub softmax: MlpModel,
    pub ova_loss: f64,
    pub softmax_loss: f64,
}

pub fn make_splits(cfg: &ToyConfig, seed: u64) -> Result<[SyntheticDataset; 3]> {
    let gen = |n, stream| {
        make_synthetic(
            cfg.generator,
            cfg.n_classes,
            n,
            cfg.dim,
            cfg.noise_sigma,
            derive_seed(seed, stream),
        )
    };
    Ok([
        gen(cfg.n_train, STREAM_TRAIN_DATA)?,
        gen(cfg.n_val, STREAM_VAL_DATA)?,
        gen(cfg.n_test, STREAM_TEST_DATA)?,
    ])
}

/// Trains one network with the given head on the training split.
pub fn train_toy_model(
    cfg: &ToyConfig,
    train: &SyntheticDataset,
    head: Head,
    seed: u64,
) -> Result<nets::TrainOutcome> {
    let init = MlpModel::new(&cfg.layer_dims(), head, derive_seed(seed, STREAM_INIT))?;
    let tc = TrainConfig {
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
        batch_size: cfg.batch_size,
        seed: derive_seed(seed, STREAM_TRAIN_ORDER),
    };
    nets::train(&init, train, head.loss(), &tc)
}

/// Generates the splits and trains an OVA and a softmax network with the same
/// initialisation seed and architecture.
pub fn prepare_toy(cfg: &ToyConfig, seed: u64) -> Result<ToyBundle> {
    let [train, val, test] = make_splits(cfg, seed)?;
    let ova = train_toy_model(cfg, &train, Head::OvaSigmoid, seed)?;
    let softmax = train_toy_model(cfg, &train, Head::Softmax, seed)?;
    Ok(ToyBundle {
        train,
        val,
        test,
        ova: ova.model,
        softmax: softmax.model,
        ova_loss: ova.final_loss,
        softmax_loss: softmax.final_loss,
    })
}

/// Probability-producing methods compared by the harnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Softmax,
    TempScaling,
    Ova,
    Slova,
    SlovaCalibrated,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Softmax,
        Method::TempScaling,
        Method::Ova,
        Method::Slova,
        Method::SlovaCalibrated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Softmax => "softmax",
            Method::TempScaling => "temp_scaling",
            Method::Ova => "ova",
            Method::Slova => "slova",
            Method::SlovaCalibrated => "slova_calibrated",
        }
    }
}

/// Post-hoc pieces fitted on the clean validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostHoc {
    pub temperature: TemperatureFit,
    pub calibration: CalibrationModel,
}

/// SLOVA probabilities of an OVA network.
pub fn slova_of(model: &MlpModel, x: &Matrix) -> Result<ProbMatrix> {
    Ok(slova_probs(&sigmoid_probs(&model.forward(x)?)))
}

/// Fits the exponential calibration on validation SLOVA outputs augmented
/// with labelled-none noise inputs.
pub fn fit_calibration(
    ova: &MlpModel,
    val: &SyntheticDataset,
    settings: &CalibrationSettings,
    seed: u64,
) -> Result<CalibrationModel> {
    let p = slova_of(ova, &val.features)?;
    let n_noise = settings.noise_count(val.features.rows());
    let noise_x = make_noise_samples(
        &val.features,
        n_noise,
        derive_seed(seed, STREAM_NOISE),
        settings.noise_mode,
    );
    let noise_p = if n_noise > 0 {
        Some(slova_of(ova, &noise_x)?)
    } else {
        None
    };
    let ds = build_calibration_dataset(&p, &val.labels, noise_p.as_ref(), settings.n_b)?;
    fit_exponential(&ds, &settings.fit_config(derive_seed(seed, STREAM_CAL_FIT)))
}

pub fn fit_post_hoc(
    bundle: &ToyBundle,
    settings: &CalibrationSettings,
    seed: u64,
) -> Result<PostHoc> {
    let val_logits = bundle.softmax.forward(&bundle.val.features)?;
    Ok(PostHoc {
        temperature: metrics::temperature_scale_fit(&val_logits, &bundle.val.labels)?,
        calibration: fit_calibration(&bundle.ova, &bundle.val, settings, seed)?,
    })
}

pub fn method_probs(
    method: Method,
    bundle: &ToyBundle,
    post: &PostHoc,
    x: &Matrix,
) -> Result<ProbMatrix> {
    Ok(match method {
        Method::Softmax => softmax_probs(&bundle.softmax.forward(x)?, 1.0),
        Method::TempScaling => {
            softmax_probs(&bundle.softmax.forward(x)?, post.temperature.temperature)
        }
        Method::Ova => sigmoid_probs(&bundle.ova.forward(x)?),
        Method::Slova => slova_of(&bundle.ova, x)?,
        Method::SlovaCalibrated => post.calibration.apply(&slova_of(&bundle.ova, x)?),
    })
}

// ---------------------------------------------------------------------------
// Saturation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaturationConfig {
    /// Rays start from the first `n_anchors` rows of the anchor matrix.
    pub n_anchors: usize,
    /// Directions per anchor.
    pub n_directions: usize,
    pub alpha_max: f64,
    /// Log-spaced grid points in `[1, alpha_max]`; `alpha = 0` is prepended.
    pub n_alphas: usize,
    pub saturation_tol: f64,
    pub confidence_threshold: f64,
    /// Number of full sweeps copied into the report.
    pub record_sweeps: usize,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        SaturationConfig {
            n_anchors: 10,
            n_directions: 100,
            alpha_max: 1e6,
            n_alphas: 30,
            saturation_tol: 1e-6,
            confidence_threshold: 0.99,
            record_sweeps: 5,
        }
    }
}

/// Sigmoids and confidences along one ray `anchor + alpha * direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationSweep {
    pub anchor: Vec<f64>,
    pub direction: Vec<f64>,
    pub alphas: Vec<f64>,
    /// One sigmoid row per alpha.
    pub sigmoids: Vec<Vec<f64>>,
    pub conf_ova: Vec<f64>,
    pub conf_slova: Vec<f64>,
    pub none_prob: Vec<f64>,
}

/// Mean and standard deviation of both confidences at one alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfidenceCurvePoint {
    pub alpha: f64,
    pub mean_conf_ova: f64,
    pub std_conf_ova: f64,
    pub mean_conf_slova: f64,
    pub std_conf_slova: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationSummary {
    pub n_sweeps: usize,
    pub n_saturated: usize,
    /// Share of rays whose sigmoids are all within tolerance of 0 or 1 at
    /// `alpha_max`.
    pub saturated_fraction: f64,
    /// Saturated rays where "SLOVA confidence >= threshold" agrees with
    /// "exactly one sigmoid at 1".
    pub slova_iff_agreement: usize,
    /// Saturated rays where "OVA confidence >= threshold" agrees with
    /// "at least one sigmoid at 1".
    pub ova_iff_agreement: usize,
    pub exactly_one_count: usize,
    pub none_count: usize,
    /// Exactly-one frequency among saturated rays.
    pub exactly_one_frequency: f64,
    /// All-zero frequency among saturated rays.
    pub none_frequency: f64,
    /// `1 / 2^K`.
    pub reference_one_over_2k: f64,
    /// `K / 2^K`: exactly-one probability under uniform independent signs.
    pub reference_k_over_2k: f64,
    /// No saturated ray, or constant outputs along every ray.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationReport {
    pub alphas: Vec<f64>,
    pub curve: Vec<ConfidenceCurvePoint>,
    pub summary: SaturationSummary,
    pub sweeps: Vec<SaturationSweep>,
}

/// `0` followed by `n` log-spaced values from 1 to `alpha_max`.
pub fn alpha_grid(alpha_max: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    if n == 1 {
        out.push(alpha_max);
        return out;
    }
    let top = alpha_max.log10();
    for i in 0..n {
        let e = top * i as f64 / (n - 1) as f64;
        out.push(10f64.powf(e));
    }
    if let Some(last) = out.last_mut() {
        *last = alpha_max;
    }
    out
}

/// Uniform direction on the unit sphere.
pub fn random_direction(rng: &mut rng::Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Evaluates one ray.
pub fn sweep_ray(
    model: &MlpModel,
    anchor: &[f64],
    direction: &[f64],
    alphas: &[f64],
) -> Result<SaturationSweep> {
    let d = anchor.len();
    let mut x = Matrix::zeros(alphas.len(), d);
    for (i, &a) in alphas.iter().enumerate() {
        for (j, v) in x.row_mut(i).iter_mut().enumerate() {
            *v = anchor[j] + a * direction[j];
        }
    }
    let sig = sigmoid_probs(&model.forward(&x)?);
    let slova = slova_probs(&sig);
    Ok(SaturationSweep {
        anchor: anchor.to_vec(),
        direction: direction.to_vec(),
        alphas: alphas.to_vec(),
        sigmoids: sig.iter_rows().map(<[f64]>::to_vec).collect(),
        conf_ova: sig.confidences(),
        conf_slova: slova.confidences(),
        none_prob: none_prob(&sig),
    })
}

/// Saturation pattern of a sigmoid row: `None` if some entry is not within
/// `tol` of 0 or 1, else the number of entries at 1.
pub fn saturation_pattern(row: &[f64], tol: f64) -> Option<usize> {
    let mut ones = 0;
    for &p in row {
        if p >= 1.0 - tol {
            ones += 1;
        } else if p > tol {
            return None;
        }
    }
    Some(ones)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn saturation_experiment(
    model: &MlpModel,
    anchors: &Matrix,
    cfg: &SaturationConfig,
    seed: u64,
) -> Result<SaturationReport> {
    if model.head() != Head::OvaSigmoid {
        return Err(Error::validation(
            "saturation experiment needs an OVA (sigmoid) model",
        ));
    }
    if anchors.rows() == 0 || cfg.n_anchors == 0 || cfg.n_directions == 0 {
        return Err(Error::validation(
            "need at least one anchor and one direction",
        ));
    }
    if anchors.cols() != model.input_dim() {
        return Err(Error::validation(format!(
            "anchors have {} features, model expects {}",
            anchors.cols(),
            model.input_dim()
        )));
    }
    if cfg.alpha_max < 1e4 || cfg.n_alphas == 0 {
        return Err(Error::validation(format!(
            "alpha_max must be >= 1e4 (got {}) with at least one grid point",
            cfg.alpha_max
        )));
    }
    let alphas = alpha_grid(cfg.alpha_max, cfg.n_alphas);
    let k = model.n_classes();
    let n_anchors = cfg.n_anchors.min(anchors.rows());
    let mut sweeps = Vec::with_capacity(n_anchors * cfg.n_directions);
    for a in 0..n_anchors {
        for j in 0..cfg.n_directions {
            let idx = (a * cfg.n_directions + j) as u64;
            let mut r = rng::stream(seed, STREAM_SATURATION + idx);
            let dir = random_direction(&mut r, anchors.cols());
            sweeps.push(sweep_ray(model, anchors.row(a), &dir, &alphas)?);
        }
    }

    let last = alphas.len() - 1;
    let mut n_saturated = 0;
    let mut slova_agree = 0;
    let mut ova_agree = 0;
    let mut exactly_one = 0;
    let mut none = 0;
    let mut all_constant = true;
    for s in &sweeps {
        if s.sigmoids.iter().any(|r| r != &s.sigmoids[0]) {
            all_constant = false;
        }
        let Some(ones) = saturation_pattern(&s.sigmoids[last], cfg.saturation_tol) else {
            continue;
        };
        n_saturated += 1;
        exactly_one += usize::from(ones == 1);
        none += usize::from(ones == 0);
        let slova_high = s.conf_slova[last] >= cfg.confidence_threshold;
        let ova_high = s.conf_ova[last] >= cfg.confidence_threshold;
        slova_agree += usize::from(slova_high == (ones == 1));
        ova_agree += usize::from(ova_high == (ones >= 1));
    }
    let frac = |c: usize| {
        if n_saturated == 0 {
            0.0
        } else {
            c as f64 / n_saturated as f64
        }
    };
    let summary = SaturationSummary {
        n_sweeps: sweeps.len(),
        n_saturated,
        saturated_fraction: n_saturated as f64 / sweeps.len() as f64,
        slova_iff_agreement: slova_agree,
        ova_iff_agreement: ova_agree,
        exactly_one_count: exactly_one,
        none_count: none,
        exactly_one_frequency: frac(exactly_one),
        none_frequency: frac(none),
        reference_one_over_2k: 0.5f64.powi(k as i32),
        reference_k_over_2k: k as f64 * 0.5f64.powi(k as i32),
        degenerate: n_saturated == 0 || all_constant,
    };

    let curve = alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let ova: Vec<f64> = sweeps.iter().map(|s| s.conf_ova[i]).collect();
            let slova: Vec<f64> = sweeps.iter().map(|s| s.conf_slova[i]).collect();
            let (mo, so) = mean_std(&ova);
            let (ms, ss) = mean_std(&slova);
            ConfidenceCurvePoint {
                alpha,
                mean_conf_ova: mo,
                std_conf_ova: so,
                mean_conf_slova: ms,
                std_conf_slova: ss,
            }
        })
        .collect();
    sweeps.truncate(cfg.record_sweeps);
    Ok(SaturationReport {
        alphas,
        curve,
        summary,
        sweeps,
    })
}

// ---------------------------------------------------------------------------
// Plane

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaneConfig {
    pub n_triplets: usize,
    pub grid_size: usize,
    /// Grid covers `[-extent, extent]^2` in plane coordinates.
    pub extent: f64,
}

impl Default for PlaneConfig {
    fn default() -> Self {
        PlaneConfig {
            n_triplets: 100,
            grid_size: 41,
            extent: 10.0,
        }
    }
}

/// Confidences averaged over triplets; `conf_*[i][j]` is at
/// `(alpha = coords[i], beta = coords[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneGrid {
    pub coords: Vec<f64>,
    pub conf_ova: Vec<Vec<f64>>,
    pub conf_slova: Vec<Vec<f64>>,
    pub n_triplets_used: usize,
    pub n_skipped_collinear: usize,
}

/// Point `x1 + alpha (x2 - x1) + beta (x3 - x1)` on the plane of a triplet.
pub fn plane_point(x1: &[f64], x2: &[f64], x3: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    x1.iter()
        .zip(x2)
        .zip(x3)
        .map(|((a, b), c)| a + alpha * (b - a) + beta * (c - a))
        .collect()
}

fn is_collinear(x1: &[f64], x2: &[f64], x3: &[f64]) -> bool {
    let u: Vec<f64> = x2.iter().zip(x1).map(|(a, b)| a - b).collect();
    let v: Vec<f64> = x3.iter().zip(x1).map(|(a, b)| a - b).collect();
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    uu * vv - uv * uv <= 1e-12 * uu * vv || uu == 0.0 || vv == 0.0
}

/// Evaluates both confidences on the plane grid of each `[i, j, k]` triplet
/// of rows of `samples` and averages them.
pub fn plane_experiment(
    model: &MlpModel,
    samples: &Matrix,
    triplets: &[[usize; 3]],
    cfg: &PlaneConfig,
) -> Result<PlaneGrid> {
    if cfg.grid_size < 3 {
        return Err(Error::validation("grid_size must be at least 3"));
    }
    if model.head() != Head::OvaSigmoid {
        return Err(Error::validation(
            "plane experiment needs an OVA (sigmoid) model",
        ));
    }
    let g = cfg.grid_size;
    let coords: Vec<f64> = (0..g)
        .map(|i| -cfg.extent + 2.0 * cfg.extent * i as f64 / (g - 1) as f64)
        .collect();
    let mut sum_ova = vec![vec![0.0; g]; g];
    let mut sum_slova = vec![vec![0.0; g]; g];
    let mut used = 0;
    let mut skipped = 0;
    for t in triplets {
        if t.iter().any(|&i| i >= samples.rows()) {
            return Err(Error::validation(format!("triplet {t:?} out of range")));
        }
        let (x1, x2, x3) = (samples.row(t[0]), samples.row(t[1]), samples.row(t[2]));
        if is_collinear(x1, x2, x3) {
            skipped += 1;
            continue;
        }
        let mut x = Matrix::zeros(g * g, samples.cols());
        for (i, &a) in coords.iter().enumerate() {
            for (j, &b) in coords.iter().enumerate() {
                x.row_mut(i * g + j)
                    .copy_from_slice(&plane_point(x1, x2, x3, a, b));
            }
        }
        let sig = sigmoid_probs(&model.forward(&x)?);
        let co = sig.confidences();
        let cs = slova_probs(&sig).confidences();
        for i in 0..g {
            for j in 0..g {
                sum_ova[i][j] += co[i * g + j];
                sum_slova[i][j] += cs[i * g + j];
            }
        }
        used += 1;
    }
    if used > 0 {
        for row in sum_ova.iter_mut().chain(sum_slova.iter_mut()) {
            row.iter_mut().for_each(|v| *v /= used as f64);
        }
    }
    Ok(PlaneGrid {
        coords,
        conf_ova: sum_ova,
        conf_slova: sum_slova,
        n_triplets_used: used,
        n_skipped_collinear: skipped,
    })
}

/// Random distinct-index triplets.
pub fn random_triplets(n_rows: usize, count: usize, seed: u64) -> Vec<[usize; 3]> {
    use rand::Rng as _;
    let mut r = rng::stream(seed, STREAM_PLANE);
    (0..count)
        .map(|_| loop {
            let t = [
                r.random_range(0..n_rows),
                r.random_range(0..n_rows),
                r.random_range(0..n_rows),
            ];
            if n_rows < 3 || (t[0] != t[1] && t[1] != t[2] && t[0] != t[2]) {
                break t;
            }
        })
        .collect()
}

pub fn plane_csv(grid: &PlaneGrid) -> String {
    use crate::io::fmt_f64;
    let mut s = String::from("alpha,beta,conf_ova,conf_slova\n");
    for (i, &a) in grid.coords.iter().enumerate() {
        for (j, &b) in grid.coords.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(a),
                fmt_f64(b),
                fmt_f64(grid.conf_ova[i][j]),
                fmt_f64(grid.conf_slova[i][j])
            ));
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Dataset shift

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftConfig {
    /// Noise standard deviations for intensities 1..=5 (level 0 is clean).
    pub sigmas: [f64; 5],
    pub alpha: Alpha,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        ShiftConfig {
            sigmas: [0.5, 1.0, 2.0, 3.0, 5.0],
            alpha: Alpha::P05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodReport {
    pub method: Method,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftLevel {
    pub level: usize,
    pub noise_sigma: f64,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftReport {
    pub levels: Vec<ShiftLevel>,
    pub post_hoc: PostHoc,
    /// Friedman ranking over (level x metric) cases; accuracy enters as error.
    pub ranking: RankingTable,
}

/// Test features with additive Gaussian noise at each intensity. The same
/// standard-normal draw is scaled for every level.
pub fn shifted_inputs(x: &Matrix, sigmas: &[f64], seed: u64) -> Vec<(f64, Matrix)> {
    let mut r = rng::stream(seed, STREAM_SHIFT);
    let z: Vec<f64> = (0..x.as_slice().len())
        .map(|_| StandardNormal.sample(&mut r))
        .collect();
    std::iter::once(0.0)
        .chain(sigmas.iter().copied())
        .map(|s| {
            let mut m = x.clone();
            for (v, zi) in m.as_mut_slice().iter_mut().zip(&z) {
                *v += s * zi;
            }
            (s, m)
        })
        .collect()
}

pub fn shift_experiment(
    bundle: &ToyBundle,
    post: &PostHoc,
    cfg: &ShiftConfig,
    methods: &[Method],
    bins: usize,
    seed: u64,
) -> Result<ShiftReport> {
    if methods.len() < 2 {
        return Err(Error::validation(
            "shift experiment needs at least 2 methods",
        ));
    }
    let inputs = shifted_inputs(&bundle.test.features, &cfg.sigmas, seed);
    let mut levels = Vec::with_capacity(inputs.len());
    for (level, (sigma, x)) in inputs.iter().enumerate() {
        let mut rows = Vec::with_capacity(methods.len());
        for &m in methods {
            let p = method_probs(m, bundle, post, x)?;
            rows.push(MethodReport {
                method: m,
                report: EvalReport::evaluate(&p, &bundle.test.labels, bins)?,
            });
        }
        levels.push(ShiftLevel {
            level,
            noise_sigma: *sigma,
            methods: rows,
        });
    }

    let mut cases = Vec::new();
    for l in &levels {
        let metric_rows: [fn(&EvalReport) -> f64; 4] =
            [|r| 1.0 - r.accuracy, |r| r.ece, |r| r.nll, |r| r.brier];
        for f in metric_rows {
            cases.push(l.methods.iter().map(|m| f(&m.report)).collect::<Vec<_>>());
        }
    }
    let names: Vec<String> = methods.iter().map(|m| m.name().to_string()).collect();
    let control = methods.iter().position(|&m| m == Method::SlovaCalibrated);
    let ranking = friedman_dunn(
        &names,
        &Matrix::from_rows(&cases)?,
        true,
        cfg.alpha,
        control,
    )?;
    Ok(ShiftReport {
        levels,
        post_hoc: post.clone(),
        ranking,
    })
}

pub fn shift_csv(report: &ShiftReport) -> String {
    use crate::io::fmt_f64;
    let mut s = String::from("level,noise_sigma,method,accuracy,ece,nll,brier,mmc\n");
    for l in &report.levels {
        for m in &l.methods {
            let r = &m.report;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                l.level,
                fmt_f64(l.noise_sigma),
                m.method.name(),
                fmt_f64(r.accuracy),
                fmt_f64(r.ece),
                fmt_f64(r.nll),
                fmt_f64(r.brier),
                fmt_f64(r.mmc)
            ));
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Out-of-distribution

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OodConfig {
    pub n_out: usize,
    /// Uniform noise box: training feature ranges widened by this factor
    /// around their centres.
    pub uniform_scale: f64,
    /// Radius of the shifted blob centres.
    pub shifted_radius: f64,
    pub moons_sigma: f64,
}

impl Default for OodConfig {
    fn default() -> Self {
        OodConfig {
            n_out: 2000,
            uniform_scale: 2.0,
            shifted_radius: 12.0,
            moons_sigma: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OodDataset {
    pub name: String,
    pub mmc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OodRow {
    pub method: Method,
    pub test_error: f64,
    pub in_mmc: f64,
    pub out: Vec<OodDataset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OodReport {
    pub datasets: Vec<String>,
    pub rows: Vec<OodRow>,
}

/// The three desk-scale OOD sets: uniform noise, blobs on a wider rotated
/// circle, and two moons embedded in the same feature space.
pub fn ood_datasets(
    train: &SyntheticDataset,
    cfg: &OodConfig,
    seed: u64,
) -> Result<Vec<(String, Matrix)>> {
    use rand::Rng as _;
    let d = train.features.cols();
    let k = train.n_classes;
    let mut r = rng::stream(seed, STREAM_OOD);

    let ranges = train.features.column_ranges();
    let mut uniform = Matrix::zeros(cfg.n_out, d);
    for i in 0..cfg.n_out {
        for (v, &(lo, hi)) in uniform.row_mut(i).iter_mut().zip(&ranges) {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo) * cfg.uniform_scale;
            *v = mid - half + 2.0 * half * r.random::<f64>();
        }
    }

    let mut shifted = Matrix::zeros(cfg.n_out, d);
    for i in 0..cfg.n_out {
        let c = i % k;
        let t = 2.0 * std::f64::consts::PI * (c as f64 + 0.5) / k as f64;
        let row = shifted.row_mut(i);
        row[0] = cfg.shifted_radius * t.cos();
        row[1] = cfg.shifted_radius * t.sin();
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut r);
            *v += train.noise_sigma * z;
        }
    }

    let moons = make_synthetic(
        Generator::TwoMoons,
        2,
        cfg.n_out.max(2),
        d,
        cfg.moons_sigma,
        derive_seed(seed, STREAM_OOD + 100),
    )?;
    Ok(vec![
        ("uniform_noise".into(), uniform),
        ("shifted_blobs".into(), shifted),
        ("two_moons".into(), moons.features),
    ])
}

pub fn ood_experiment(
    bundle: &ToyBundle,
    post: &PostHoc,
    out_sets: &[(String, Matrix)],
    methods: &[Method],
) -> Result<OodReport> {
    let d = bundle.test.features.cols();
    if let Some((name, m)) = out_sets.iter().find(|(_, m)| m.cols() != d) {
        return Err(Error::validation(format!(
            "OOD set '{name}' has {} features, in-distribution data has {d}",
            m.cols()
        )));
    }
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let p_in = method_probs(method, bundle, post, &bundle.test.features)?;
        let out = out_sets
            .iter()
            .map(|(name, x)| {
                Ok(OodDataset {
                    name: name.clone(),
                    mmc: metrics::mmc(&method_probs(method, bundle, post, x)?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(OodRow {
            method,
            test_error: 1.0 - metrics::accuracy(&p_in, &bundle.test.labels)?,
            in_mmc: metrics::mmc(&p_in)?,
            out,
        });
    }
    Ok(OodReport {
        datasets: out_sets.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    })
}

pub fn ood_csv(report: &OodReport) -> String {
    use crate::io::fmt_f64;
    let mut s = String::from("method,test_error,in_mmc");
    for d in &report.datasets {
        s.push_str(&format!(",mmc_{d}"));
    }
    s.push('\n');
    for r in &report.rows {
        s.push_str(&format!(
            "{},{},{}",
            r.method.name(),
            fmt_f64(r.test_error),
            fmt_f64(r.in_mmc)
        ));
        for o in &r.out {
            s.push_str(&format!(",{}", fmt_f64(o.mmc)));
        }
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// Ablation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationReport {
    /// Pooled over every shift level.
    pub variants: Vec<MethodReport>,
    /// Accuracy of ova, slova and slova_calibrated is the same.
    pub ova_variants_same_accuracy: bool,
    /// ECE on the clean validation split used to fit the calibration.
    pub val_ece_slova: f64,
    pub val_ece_slova_calibrated: f64,
}

pub const ABLATION_VARIANTS: [Method; 4] = [
    Method::Softmax,
    Method::Ova,
    Method::Slova,
    Method::SlovaCalibrated,
];

pub fn ablation_experiment(
    bundle: &ToyBundle,
    post: &PostHoc,
    cfg: &ShiftConfig,
    bins: usize,
    seed: u64,
) -> Result<AblationReport> {
    let inputs = shifted_inputs(&bundle.test.features, &cfg.sigmas, seed);
    let d = bundle.test.features.cols();
    let mut pooled = Vec::with_capacity(inputs.len() * bundle.test.features.as_slice().len());
    let mut labels = Vec::new();
    for (_, x) in &inputs {
        pooled.extend_from_slice(x.as_slice());
        labels.extend_from_slice(bundle.test.labels.as_slice());
    }
    let x = Matrix::from_vec(pooled.len() / d, d, pooled)?;
    let labels = LabelVector::new(labels, bundle.test.n_classes)?;

    let mut variants = Vec::new();
    let mut preds: Vec<Vec<usize>> = Vec::new();
    for m in ABLATION_VARIANTS {
        let p = method_probs(m, bundle, post, &x)?;
        if m != Method::Softmax {
            preds.push(p.iter_rows().map(argmax).collect());
        }
        variants.push(MethodReport {
            method: m,
            report: EvalReport::evaluate(&p, &labels, bins)?,
        });
    }
    let accs: Vec<f64> = variants[1..].iter().map(|v| v.report.accuracy).collect();
    let same = accs.windows(2).all(|w| w[0] == w[1]) && preds.windows(2).all(|w| w[0] == w[1]);

    let val_slova = slova_of(&bundle.ova, &bundle.val.features)?;
    let val_cal = post.calibration.apply(&val_slova);
    Ok(AblationReport {
        variants,
        ova_variants_same_accuracy: same,
        val_ece_slova: metrics::ece(&val_slova, &bundle.val.labels, bins)?.0,
        val_ece_slova_calibrated: metrics::ece(&val_cal, &bundle.val.labels, bins)?.0,
    })
}

// ---------------------------------------------------------------------------
// Calibration stability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub m_grid: Vec<usize>,
    pub nb_grid: Vec<usize>,
    /// Stable region: `M > region_min_m` and `n_b > region_min_nb`.
    pub region_min_m: usize,
    pub region_min_nb: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            m_grid: vec![1, 2, 5, 10, 12, 20, 50],
            nb_grid: vec![20, 100, 400, 500, 1000, 4000, 10000],
            region_min_m: 10,
            region_min_nb: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityCell {
    #[serde(rename = "M")]
    pub m: usize,
    pub n_b: usize,
    /// Fit points actually used (`n_b` capped by the averaged points).
    pub n_fit_points: usize,
    pub fit_loss: f64,
    pub ece: f64,
    pub nll: f64,
    pub brier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpread {
    pub n_cells: usize,
    pub ece: f64,
    pub nll: f64,
    pub brier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityReport {
    pub cells: Vec<StabilityCell>,
    /// Max minus min of each metric inside the stable region.
    pub region_spread: StabilitySpread,
}

/// Fixed inputs for the stability sweep: validation SLOVA outputs (with
/// noise rows) to fit on and test SLOVA outputs to score.
#[derive(Debug, Clone)]
pub struct StabilityData {
    pub val: ProbMatrix,
    pub val_labels: LabelVector,
    pub noise: Option<ProbMatrix>,
    pub test: ProbMatrix,
    pub test_labels: LabelVector,
}

impl StabilityData {
    pub fn from_bundle(
        bundle: &ToyBundle,
        settings: &CalibrationSettings,
        seed: u64,
    ) -> Result<Self> {
        let n_noise = settings.noise_count(bundle.val.features.rows());
        let noise_x = make_noise_samples(
            &bundle.val.features,
            n_noise,
            derive_seed(seed, STREAM_NOISE),
            settings.noise_mode,
        );
        Ok(StabilityData {
            val: slova_of(&bundle.ova, &bundle.val.features)?,
            val_labels: bundle.val.labels.clone(),
            noise: if n_noise > 0 {
                Some(slova_of(&bundle.ova, &noise_x)?)
            } else {
                None
            },
            test: slova_of(&bundle.ova, &bundle.test.features)?,
            test_labels: bundle.test.labels.clone(),
        })
    }
}

/// Spread (max - min) of metric triples.
pub fn spread<'a>(cells: impl Iterator<Item = &'a StabilityCell>) -> StabilitySpread {
    let mut n = 0;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in cells {
        n += 1;
        for (i, v) in [c.ece, c.nll, c.brier].into_iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    let d = |i: usize| if n == 0 { 0.0 } else { hi[i] - lo[i] };
    StabilitySpread {
        n_cells: n,
        ece: d(0),
        nll: d(1),
        brier: d(2),
    }
}

pub fn stability_experiment(
    data: &StabilityData,
    settings: &CalibrationSettings,
    cfg: &StabilityConfig,
    bins: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if cfg.m_grid.is_empty() || cfg.nb_grid.is_empty() {
        return Err(Error::validation("stability grids must be nonempty"));
    }
    let mut cells = Vec::with_capacity(cfg.m_grid.len() * cfg.nb_grid.len());
    for &n_b in &cfg.nb_grid {
        let ds = build_calibration_dataset(&data.val, &data.val_labels, data.noise.as_ref(), n_b)?;
        for &m in &cfg.m_grid {
            let fit = FitConfig {
                m,
                ..settings.fit_config(derive_seed(seed, STREAM_CAL_FIT))
            };
            let model = fit_exponential(&ds, &fit)?;
            let p = model.apply(&data.test);
            cells.push(StabilityCell {
                m,
                n_b,
                n_fit_points: ds.fit_points.len(),
                fit_loss: model.fit_loss,
                ece: metrics::ece(&p, &data.test_labels, bins)?.0,
                nll: metrics::nll(&p, &data.test_labels)?,
                brier: metrics::brier(&p, &data.test_labels)?,
            });
        }
    }
    let region_spread = spread(
        cells
            .iter()
            .filter(|c| c.m > cfg.region_min_m && c.n_b > cfg.region_min_nb),
    );
    Ok(StabilityReport {
        cells,
        region_spread,
    })
}

pub fn stability_csv(report: &StabilityReport) -> String {
    use crate::io::fmt_f64;
    let mut s = String::from("M,n_b,n_fit_points,fit_loss,ece,nll,brier\n");
    for c in &report.cells {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.m,
            c.n_b,
            c.n_fit_points,
            fmt_f64(c.fit_loss),
            fmt_f64(c.ece),
            fmt_f64(c.nll),
            fmt_f64(c.brier)
        ));
    }
    s
}

pub fn saturation_csv(report: &SaturationReport) -> String {
    use crate::io::fmt_f64;
    let mut s = String::from("alpha,mean_conf_ova,std_conf_ova,mean_conf_slova,std_conf_slova\n");
    for p in &report.curve {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(p.alpha),
            fmt_f64(p.mean_conf_ova),
            fmt_f64(p.std_conf_ova),
            fmt_f64(p.mean_conf_slova),
            fmt_f64(p.std_conf_slova)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_model(weights: &[f64], k: usize, d: usize) -> MlpModel {
        let mut params = weights.to_vec();
        params.extend(vec![0.0; k]);
        MlpModel::from_params(&[d, k], Head::OvaSigmoid, &params).unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = alpha_grid(1e6, 30);
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1.0);
        assert_eq!(*g.last().unwrap(), 1e6);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unit_directions() {
        let mut r = rng::seeded(3);
        for _ in 0..100 {
            let d = random_direction(&mut r, 5);
            let n: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn all_negative_slopes_saturate_to_none() {
        // logits = W x with every row of W aligned against the direction.
        let m = linear_model(&[-1.0, 0.0, -2.0, 0.0, -0.5, 0.0], 3, 2);
        let s = sweep_ray(&m, &[0.0, 0.0], &[1.0, 0.0], &alpha_grid(1e6, 30)).unwrap();
        let last = s.alphas.len() - 1;
        assert!(s.conf_ova[last] < 1e-6);
        assert!(s.conf_slova[last] < 1e-6);
        assert!((s.none_prob[last] - 1.0).abs() < 1e-9);
        assert_eq!(saturation_pattern(&s.sigmoids[last], 1e-6), Some(0));
    }

    #[test]
    fn exactly_one_positive_slope() {
        let m = linear_model(&[1.0, 0.0, -2.0, 0.0, -0.5, 0.0], 3, 2);
        let s = sweep_ray(&m, &[0.0, 0.0], &[1.0, 0.0], &alpha_grid(1e6, 30)).unwrap();
        let last = s.alphas.len() - 1;
        assert!(s.conf_ova[last] > 0.999999);
        assert!(s.conf_slova[last] > 0.999999);
        assert_eq!(saturation_pattern(&s.sigmoids[last], 1e-6), Some(1));
    }

    #[test]
    fn bias_free_pattern_is_scale_invariant() {
        let mut m = MlpModel::new(&[3, 16, 16, 4], Head::OvaSigmoid, 12).unwrap();
        m.clear_biases();
        let mut r = rng::seeded(5);
        for _ in 0..50 {
            let d = random_direction(&mut r, 3);
            let s = sweep_ray(&m, &[0.0; 3], &d, &[1e5, 2e5]).unwrap();
            assert_eq!(
                saturation_pattern(&s.sigmoids[0], 1e-6),
                saturation_pattern(&s.sigmoids[1], 1e-6)
            );
        }
    }

    #[test]
    fn saturation_rejects_small_alpha_max() {
        let m = linear_model(&[1.0, 0.0], 1, 2);
        let cfg = SaturationConfig {
            alpha_max: 100.0,
            ..SaturationConfig::default()
        };
        assert!(saturation_experiment(&m, &Matrix::zeros(1, 2), &cfg, 0).is_err());
    }

    #[test]
    fn zero_model_is_degenerate() {
        let m = MlpModel::zeros(&[2, 4, 3], Head::OvaSigmoid).unwrap();
        let cfg = SaturationConfig {
            n_anchors: 1,
            n_directions: 5,
            ..SaturationConfig::default()
        };
        let r = saturation_experiment(&m, &Matrix::zeros(1, 2), &cfg, 0).unwrap();
        assert!(r.summary.degenerate);
    }

    #[test]
    fn plane_anchor_and_dominance() {
        let m = MlpModel::new(&[2, 8, 3], Head::OvaSigmoid, 2).unwrap();
        let samples =
            Matrix::from_rows(&[vec![1.0, 0.5], vec![-2.0, 1.0], vec![0.3, -1.5]]).unwrap();
        let cfg = PlaneConfig {
            n_triplets: 1,
            grid_size: 5,
            extent: 2.0,
        };
        let g = plane_experiment(&m, &samples, &[[0, 1, 2]], &cfg).unwrap();
        assert_eq!(g.coords[2], 0.0);
        let direct = sigmoid_probs(
            &m.forward(&Matrix::from_rows(&[vec![1.0, 0.5]]).unwrap())
                .unwrap(),
        );
        assert_eq!(g.conf_ova[2][2], direct.confidences()[0]);
        assert_eq!(g.conf_slova[2][2], slova_probs(&direct).confidences()[0]);
        for (ro, rs) in g.conf_ova.iter().zip(&g.conf_slova) {
            for (o, s) in ro.iter().zip(rs) {
                assert!(s <= o);
            }
        }
        // Collinear triplet is skipped.
        let line = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let g = plane_experiment(&m, &line, &[[0, 1, 2]], &cfg).unwrap();
        assert_eq!((g.n_triplets_used, g.n_skipped_collinear), (0, 1));
        assert!(plane_experiment(
            &m,
            &samples,
            &[[0, 1, 2]],
            &PlaneConfig {
                grid_size: 2,
                ..cfg
            }
        )
        .is_err());
    }

    #[test]
    fn shifted_level_zero_is_clean() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let levels = shifted_inputs(&x, &[1.0, 2.0, 3.0, 4.0, 5.0], 9);
        assert_eq!(levels.len(), 6);
        assert_eq!(levels[0], (0.0, x));
    }

    #[test]
    fn stability_spread_of_nothing() {
        assert_eq!(spread(std::iter::empty()).n_cells, 0);
    }
}
