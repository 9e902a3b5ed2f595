//! Scoring rules, reliability bins, the temperature-scaling baseline and the
//! Friedman / Bonferroni-Dunn rank comparison.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::matrix::{argmax, row_max, LabelVector, LogitMatrix, Matrix, ProbMatrix};
use crate::probs::LOG_CLAMP;

pub const DEFAULT_BINS: usize = 15;

/// One equal-width confidence bin of a reliability diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean confidence of the samples in the bin; 0 when empty.
    pub avg_conf: f64,
    /// Fraction of correct predictions in the bin; 0 when empty.
    pub avg_acc: f64,
}

/// Normaliser of the per-bin gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EceNorm {
    /// `sum |B_i| / N * gap_i`, the usual definition.
    Samples,
    /// `sum |B_i| / n_bins * gap_i`, as the formula is sometimes printed.
    /// Kept only for side-by-side comparison.
    Bins,
}

fn check_shapes(p: &ProbMatrix, labels: &LabelVector) -> Result<()> {
    if p.n_samples() == 0 {
        return Err(Error::validation("no samples to evaluate"));
    }
    labels.check_len(p.n_samples())?;
    labels.check_classes(p.n_classes())
}

/// Reliability bins over `(0, 1]`; confidence `c` lands in bin
/// `ceil(c * bins)` (1-based), with `c = 0` in the first bin.
pub fn reliability_bins(
    p: &ProbMatrix,
    labels: &LabelVector,
    bins: usize,
) -> Result<Vec<ReliabilityBin>> {
    if bins == 0 {
        return Err(Error::validation("bin count must be at least 1"));
    }
    check_shapes(p, labels)?;
    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    for (row, &y) in p.iter_rows().zip(labels.as_slice()) {
        let pred = argmax(row);
        let conf = row[pred];
        let b = ((conf * bins as f64).ceil() as usize).clamp(1, bins) - 1;
        count[b] += 1;
        conf_sum[b] += conf;
        hits[b] += usize::from(pred == y);
    }
    Ok((0..bins)
        .map(|b| {
            let n = count[b];
            let (avg_conf, avg_acc) = if n == 0 {
                (0.0, 0.0)
            } else {
                (conf_sum[b] / n as f64, hits[b] as f64 / n as f64)
            };
            ReliabilityBin {
                lo: b as f64 / bins as f64,
                hi: (b + 1) as f64 / bins as f64,
                count: n,
                avg_conf,
                avg_acc,
            }
        })
        .collect())
}

/// ECE recomputed from bins.
pub fn ece_from_bins(bins: &[ReliabilityBin], norm: EceNorm) -> f64 {
    let denom = match norm {
        EceNorm::Samples => bins.iter().map(|b| b.count).sum::<usize>() as f64,
        EceNorm::Bins => bins.len() as f64,
    };
    if denom == 0.0 {
        return 0.0;
    }
    bins.iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / denom * (b.avg_acc - b.avg_conf).abs())
        .sum()
}

/// Expected calibration error with equal-width bins.
pub fn ece(
    p: &ProbMatrix,
    labels: &LabelVector,
    bins: usize,
) -> Result<(f64, Vec<ReliabilityBin>)> {
    let b = reliability_bins(p, labels, bins)?;
    Ok((ece_from_bins(&b, EceNorm::Samples), b))
}

/// Mean over samples of `sum_k (p_k - [k == y])^2`. SLOVA rows are scored as
/// given, without renormalisation.
pub fn brier(p: &ProbMatrix, labels: &LabelVector) -> Result<f64> {
    check_shapes(p, labels)?;
    let s: f64 = p
        .iter_rows()
        .zip(labels.as_slice())
        .map(|(row, &y)| {
            row.iter()
                .enumerate()
                .map(|(k, &v)| {
                    let t = if k == y { 1.0 } else { 0.0 };
                    (v - t).powi(2)
                })
                .sum::<f64>()
        })
        .sum();
    Ok(s / p.n_samples() as f64)
}

/// Mean of `-ln p(y|x)` with the probability clamped to `[1e-12, 1]`.
pub fn nll(p: &ProbMatrix, labels: &LabelVector) -> Result<f64> {
    check_shapes(p, labels)?;
    let s: f64 = p
        .iter_rows()
        .zip(labels.as_slice())
        .map(|(row, &y)| -row[y].clamp(LOG_CLAMP, 1.0).ln())
        .sum();
    Ok(s / p.n_samples() as f64)
}

/// Mean maximum confidence.
pub fn mmc(p: &ProbMatrix) -> Result<f64> {
    if p.n_samples() == 0 {
        return Err(Error::validation("no samples to evaluate"));
    }
    Ok(p.iter_rows().map(row_max).sum::<f64>() / p.n_samples() as f64)
}

pub fn accuracy(p: &ProbMatrix, labels: &LabelVector) -> Result<f64> {
    check_shapes(p, labels)?;
    let hits = p
        .iter_rows()
        .zip(labels.as_slice())
        .filter(|(row, &y)| argmax(row) == y)
        .count();
    Ok(hits as f64 / p.n_samples() as f64)
}

/// Metrics bundle for one probability matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub n_samples: usize,
    pub n_classes: usize,
    pub accuracy: f64,
    pub ece: f64,
    /// ECE with the bin-count normaliser, for comparison only.
    pub ece_bin_normalized: f64,
    pub nll: f64,
    pub brier: f64,
    pub mmc: f64,
    pub bins: Vec<ReliabilityBin>,
}

impl EvalReport {
    pub fn evaluate(p: &ProbMatrix, labels: &LabelVector, bins: usize) -> Result<Self> {
        let (ece, b) = ece(p, labels, bins)?;
        Ok(EvalReport {
            n_samples: p.n_samples(),
            n_classes: p.n_classes(),
            accuracy: accuracy(p, labels)?,
            ece,
            ece_bin_normalized: ece_from_bins(&b, EceNorm::Bins),
            nll: nll(p, labels)?,
            brier: brier(p, labels)?,
            mmc: mmc(p)?,
            bins: b,
        })
    }
}

/// Result of the temperature-scaling baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub temperature: f64,
    pub nll: f64,
    /// All labels identical, or the optimum sits on the search boundary
    /// (typical for perfectly separated data).
    pub degenerate: bool,
}

/// Mean softmax NLL of `logits / t`.
pub fn softmax_nll(logits: &LogitMatrix, labels: &[usize], t: f64) -> f64 {
    let mut s = 0.0;
    for (row, &y) in logits.values().iter_rows().zip(labels) {
        // -log softmax(z/t)_y = logsumexp(z/t) - z_y/t
        let m = row_max(row) / t;
        let lse = m + row.iter().map(|&z| (z / t - m).exp()).sum::<f64>().ln();
        s += lse - row[y] / t;
    }
    s / labels.len() as f64
}

/// Fits a single temperature `T > 0` minimising softmax NLL by golden-section
/// search over `ln T` in `[-3, 3]`.
pub fn temperature_scale_fit(logits: &LogitMatrix, labels: &LabelVector) -> Result<TemperatureFit> {
    labels.check_len(logits.n_samples())?;
    labels.check_classes(logits.n_classes())?;
    if logits.n_samples() < logits.n_classes() {
        return Err(Error::validation(format!(
            "temperature scaling needs at least K = {} samples, got {}",
            logits.n_classes(),
            logits.n_samples()
        )));
    }
    let y = labels.as_slice();
    let same_labels = y.iter().all(|&v| v == y[0]);
    let f = |log_t: f64| softmax_nll(logits, y, log_t.exp());

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-3.0f64, 3.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-9 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let log_t = 0.5 * (lo + hi);
    let nll = f(log_t);
    if !nll.is_finite() {
        return Err(Error::Numeric(
            "temperature search produced non-finite NLL".into(),
        ));
    }
    Ok(TemperatureFit {
        temperature: log_t.exp(),
        nll,
        degenerate: same_labels || log_t.abs() > 3.0 - 1e-6,
    })
}

/// Softmax probabilities at a fitted temperature.
pub fn temperature_scaled_probs(logits: &LogitMatrix, t: f64) -> ProbMatrix {
    crate::probs::softmax_probs(logits, t)
}

/// Significance level of the Bonferroni-Dunn test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha {
    #[serde(rename = "0.05")]
    P05,
    #[serde(rename = "0.10")]
    P10,
}

impl Alpha {
    pub fn value(self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P10 => 0.10,
        }
    }
}

/// Two-tailed Bonferroni-Dunn critical values for m = 2..=10 methods
/// (Demšar 2006, Table 5b).
const Q_05: [f64; 9] = [
    1.960, 2.241, 2.394, 2.498, 2.576, 2.638, 2.690, 2.724, 2.773,
];
const Q_10: [f64; 9] = [
    1.645, 1.960, 2.128, 2.241, 2.326, 2.394, 2.450, 2.498, 2.539,
];

pub fn bonferroni_dunn_q(m: usize, alpha: Alpha) -> Result<f64> {
    if !(2..=10).contains(&m) {
        return Err(Error::validation(format!(
            "critical values are tabulated for 2..=10 methods, got {m}"
        )));
    }
    Ok(match alpha {
        Alpha::P05 => Q_05[m - 2],
        Alpha::P10 => Q_10[m - 2],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingTable {
    pub methods: Vec<String>,
    /// Rows are cases, columns methods.
    pub scores: Vec<Vec<f64>>,
    pub ranks: Vec<Vec<f64>>,
    pub mean_ranks: Vec<f64>,
    pub chi2: f64,
    pub p_value: f64,
    pub alpha: Alpha,
    pub critical_distance: f64,
    pub control: Option<usize>,
    /// Per method: mean-rank gap to the control exceeds the critical distance.
    pub differs_from_control: Vec<bool>,
}

/// Ranks within one row, 1 = best; ties share the mean of their positions.
fn rank_row(row: &[f64], lower_is_better: bool) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = row[a].total_cmp(&row[b]);
        if lower_is_better {
            o
        } else {
            o.reverse()
        }
    });
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && row[idx[j + 1]] == row[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Friedman rank test over a `cases x methods` score table, with the
/// Bonferroni-Dunn critical distance for comparisons against `control`.
pub fn friedman_dunn(
    methods: &[String],
    scores: &Matrix,
    lower_is_better: bool,
    alpha: Alpha,
    control: Option<usize>,
) -> Result<RankingTable> {
    let n = scores.rows();
    let m = scores.cols();
    if m < 2 || n < 2 {
        return Err(Error::validation(format!(
            "Friedman test needs at least 2 methods and 2 cases, got {m} and {n}"
        )));
    }
    if methods.len() != m {
        return Err(Error::validation(format!(
            "{} method names for {m} columns",
            methods.len()
        )));
    }
    if !scores.is_finite() {
        return Err(Error::validation("score table contains non-finite values"));
    }
    if let Some(c) = control {
        if c >= m {
            return Err(Error::validation(format!("control index {c} out of range")));
        }
    }
    let ranks: Vec<Vec<f64>> = scores
        .iter_rows()
        .map(|r| rank_row(r, lower_is_better))
        .collect();
    let mean_ranks: Vec<f64> = (0..m)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let (nf, mf) = (n as f64, m as f64);
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * nf / (mf * (mf + 1.0)) * (sum_sq - mf * (mf + 1.0).powi(2) / 4.0)).max(0.0);
    let p_value = ChiSquared::new(mf - 1.0)
        .map(|d| d.sf(chi2))
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let q = bonferroni_dunn_q(m, alpha)?;
    let critical_distance = q * (mf * (mf + 1.0) / (6.0 * nf)).sqrt();
    let differs_from_control = match control {
        Some(c) => mean_ranks
            .iter()
            .map(|r| (r - mean_ranks[c]).abs() > critical_distance)
            .collect(),
        None => vec![false; m],
    };
    Ok(RankingTable {
        methods: methods.to_vec(),
        scores: scores.iter_rows().map(<[f64]>::to_vec).collect(),
        ranks,
        mean_ranks,
        chi2,
        p_value,
        alpha,
        critical_distance,
        control,
        differs_from_control,
    })
}
