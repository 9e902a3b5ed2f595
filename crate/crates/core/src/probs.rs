//! Probability transforms from logits to OVA, SLOVA and auxiliary scores.
//!
//! An OVA model produces K independent sigmoids `p_k`. The SLOVA probability
//! of class `k` is the chance that the model accepts `k` and rejects every
//! other class, `p_k * prod_{j != k} (1 - p_j)`. Products are accumulated in
//! log space so that large K does not underflow intermediate results; exact
//! zero factors are tracked separately and give exact zeros.

use crate::error::{Error, Result};
use crate::matrix::{row_max, LabelVector, LogitMatrix, Matrix, ProbKind, ProbMatrix};

/// Lower clamp for arguments of `ln` in loss computations.
pub const LOG_CLAMP: f64 = 1e-12;

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid_probs(logits: &LogitMatrix) -> ProbMatrix {
    ProbMatrix::new_unchecked(logits.values().map(sigmoid), ProbKind::Sigmoid)
}

/// Row-wise softmax of `logits / temperature`.
pub fn softmax_probs(logits: &LogitMatrix, temperature: f64) -> ProbMatrix {
    let v = logits.values();
    let mut out = Matrix::zeros(v.rows(), v.cols());
    for (i, r) in v.iter_rows().enumerate() {
        softmax_into(r, temperature, out.row_mut(i));
    }
    ProbMatrix::new_unchecked(out, ProbKind::Softmax)
}

pub(crate) fn softmax_into(logits: &[f64], temperature: f64, out: &mut [f64]) {
    let m = row_max(logits);
    let mut z = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = ((l - m) / temperature).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}

/// `ln(1 - p)` split into (finite log, is-exact-zero) so products over many
/// factors can distinguish a hard zero from a small value.
#[inline]
fn log_complement(p: f64) -> (f64, bool) {
    if p >= 1.0 {
        (0.0, true)
    } else {
        ((-p).ln_1p(), false)
    }
}

#[inline]
fn log_value(p: f64) -> (f64, bool) {
    if p <= 0.0 {
        (0.0, true)
    } else {
        (p.ln(), false)
    }
}

fn slova_row(p: &[f64], out: &mut [f64]) {
    let k = p.len();
    // Leave-one-out sums via prefix/suffix accumulation.
    let mut prefix_log = vec![0.0; k + 1];
    let mut prefix_zero = vec![0usize; k + 1];
    for j in 0..k {
        let (l, z) = log_complement(p[j]);
        prefix_log[j + 1] = prefix_log[j] + l;
        prefix_zero[j + 1] = prefix_zero[j] + usize::from(z);
    }
    let mut suffix_log = 0.0;
    let mut suffix_zero = 0usize;
    for j in (0..k).rev() {
        let zeros = prefix_zero[j] + suffix_zero;
        // p_j times a factor <= 1 keeps `out[j] <= p[j]` exact in floating
        // point, which exp(ln p_j + ...) does not.
        out[j] = if zeros > 0 || p[j] <= 0.0 {
            0.0
        } else {
            p[j] * (prefix_log[j] + suffix_log).exp()
        };
        let (l, z) = log_complement(p[j]);
        suffix_log += l;
        suffix_zero += usize::from(z);
    }
}

/// SLOVA probabilities from a sigmoid matrix.
pub fn slova_probs(p: &ProbMatrix) -> ProbMatrix {
    let v = p.values();
    let mut out = Matrix::zeros(v.rows(), v.cols());
    for (i, r) in v.iter_rows().enumerate() {
        slova_row(r, out.row_mut(i));
    }
    ProbMatrix::new_unchecked(out, ProbKind::Slova)
}

/// Eq.-2 style OVA confidence: the largest sigmoid in each row.
pub fn ova_confidence(p: &ProbMatrix) -> Vec<f64> {
    p.confidences()
}

/// Largest SLOVA probability in each row.
pub fn slova_confidence(p: &ProbMatrix) -> Vec<f64> {
    p.confidences()
}

fn log_product(factors: impl Iterator<Item = (f64, bool)>) -> f64 {
    let mut s = 0.0;
    for (l, zero) in factors {
        if zero {
            return 0.0;
        }
        s += l;
    }
    s.exp()
}

/// Probability that no class is correct: `prod_k (1 - p_k)`.
pub fn none_prob(p: &ProbMatrix) -> Vec<f64> {
    p.iter_rows()
        .map(|r| log_product(r.iter().map(|&v| log_complement(v))))
        .collect()
}

/// Probability of the most likely label subset: classes with `p >= 1/2`
/// accepted, the rest rejected.
pub fn multilabel_confidence(p: &ProbMatrix) -> Vec<f64> {
    p.iter_rows()
        .map(|r| {
            log_product(r.iter().map(|&v| {
                if v >= 0.5 {
                    log_value(v)
                } else {
                    log_complement(v)
                }
            }))
        })
        .collect()
}

/// Mean one-vs-all binary cross-entropy,
/// `-ln p_y - sum_{k != y} ln(1 - p_k)`, with log arguments clamped at
/// [`LOG_CLAMP`].
pub fn ova_loss(logits: &LogitMatrix, labels: &LabelVector) -> Result<f64> {
    labels.check_len(logits.n_samples())?;
    labels.check_classes(logits.n_classes())?;
    let mut total = 0.0;
    for (r, &y) in logits.values().iter_rows().zip(labels.as_slice()) {
        for (k, &f) in r.iter().enumerate() {
            let p = sigmoid(f);
            let q = if k == y { p } else { 1.0 - p };
            total -= q.max(LOG_CLAMP).ln();
        }
    }
    Ok(total / logits.n_samples() as f64)
}

/// Checks a probability matrix is a sigmoid matrix.
pub(crate) fn expect_kind(p: &ProbMatrix, kind: ProbKind) -> Result<()> {
    if p.kind() != kind {
        return Err(Error::validation(format!(
            "expected {kind:?} probabilities, got {:?}",
            p.kind()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sig(rows: &[Vec<f64>]) -> ProbMatrix {
        ProbMatrix::from_rows(rows, ProbKind::Sigmoid).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_abs_diff_eq!(sigmoid(1000.0), 1.0, epsilon = 1e-12);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_abs_diff_eq!(sigmoid(3f64.ln()), 0.75, epsilon = 1e-15);
        for x in [-1e4, -700.0, 700.0, 1e4] {
            assert!(sigmoid(x).is_finite());
        }
    }

    #[test]
    fn slova_hand_cases() {
        let s = slova_probs(&sig(&[vec![1.0, 0.0, 0.0], vec![0.9, 0.8, 0.1]]));
        assert_eq!(s.row(0), &[1.0, 0.0, 0.0]);
        let want = [0.162, 0.072, 0.002];
        for (a, b) in s.row(1).iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let one = slova_probs(&sig(&[vec![0.7]]));
        assert_abs_diff_eq!(one.row(0)[0], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn slova_large_k_does_not_underflow_to_zero() {
        let row = vec![0.01; 1000];
        let s = slova_probs(&sig(&[row]));
        // 0.01 * 0.99^999 ~ 4.3e-7
        let want = 0.01 * 0.99f64.powi(999);
        assert!((s.row(0)[0] / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn confidences() {
        let p = sig(&[
            vec![0.9, 0.8, 0.1],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 0.0],
        ]);
        assert_eq!(ova_confidence(&p), vec![0.9, 0.5, 0.0]);
        let s = slova_probs(&p);
        assert_abs_diff_eq!(slova_confidence(&s)[0], 0.162, epsilon = 1e-15);

        let half = sig(&[vec![0.5, 0.5]]);
        assert_eq!(slova_confidence(&slova_probs(&half)), vec![0.25]);
        let onehot = sig(&[vec![0.0, 1.0, 0.0]]);
        assert_eq!(slova_confidence(&slova_probs(&onehot)), vec![1.0]);
    }

    #[test]
    fn none_and_multilabel() {
        let p = sig(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.3, 0.2],
            vec![0.5, 0.5, 0.0],
        ]);
        assert_eq!(none_prob(&p), vec![1.0, 0.0, 0.25]);

        let m = multilabel_confidence(&sig(&[vec![0.9, 0.8, 0.1], vec![0.0, 0.0, 0.0]]));
        assert_abs_diff_eq!(m[0], 0.648, epsilon = 1e-15);
        assert_eq!(m[1], 1.0);
        assert_eq!(multilabel_confidence(&sig(&[vec![1.0, 1.0]])), vec![1.0]);
        // p = 1/2 is accepted: factor 0.5 either way, but it must not be 0.
        assert_eq!(multilabel_confidence(&sig(&[vec![0.5]])), vec![0.5]);
    }

    #[test]
    fn ova_loss_cases() {
        let y0 = LabelVector::new(vec![0], 3).unwrap();
        let good = LogitMatrix::from_rows(&[vec![40.0, -40.0, -40.0]]).unwrap();
        assert!(ova_loss(&good, &y0).unwrap() < 1e-12);

        let even = LogitMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let y = LabelVector::new(vec![0], 2).unwrap();
        assert_abs_diff_eq!(
            ova_loss(&even, &y).unwrap(),
            2.0 * 2f64.ln(),
            epsilon = 1e-12
        );

        let flipped = LogitMatrix::from_rows(&[vec![-40.0, 40.0, 40.0]]).unwrap();
        let l = ova_loss(&flipped, &y0).unwrap();
        // Each saturated wrong factor is clamped at -ln(1e-12).
        assert_abs_diff_eq!(l, 3.0 * -(LOG_CLAMP.ln()), epsilon = 1e-9);
    }

    #[test]
    fn ova_loss_rejects_bad_labels() {
        let l = LogitMatrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let y = LabelVector::new(vec![5], 6).unwrap();
        assert!(matches!(ova_loss(&l, &y), Err(Error::Validation(_))));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let l = LogitMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1000.0, 0.0, -1000.0]]).unwrap();
        let p = softmax_probs(&l, 1.0);
        for r in p.iter_rows() {
            assert_abs_diff_eq!(r.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }
}
