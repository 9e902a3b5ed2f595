//! Reference implementations shared by the integration tests. They depend only
//! on the documented parameter layout, never on library internals.

#![allow(dead_code)]

use slova::nets::Loss;

/// Mean loss of a ReLU network given its flat parameters (per layer:
/// row-major `out x in` weights, then biases).
pub fn reference_loss(
    dims: &[usize],
    params: &[f64],
    x: &[Vec<f64>],
    y: &[usize],
    loss: Loss,
) -> f64 {
    let mut total = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let mut a = row.clone();
        let mut off = 0;
        for (l, w) in dims.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &params[off..off + n_in * n_out];
            let bias = &params[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            let mut next: Vec<f64> = (0..n_out)
                .map(|j| bias[j] + (0..n_in).map(|i| weights[j * n_in + i] * a[i]).sum::<f64>())
                .collect();
            if l + 2 < dims.len() {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = next;
        }
        total += match loss {
            Loss::Ova => a
                .iter()
                .enumerate()
                .map(|(k, &f)| {
                    let s = if k == label { -f } else { f };
                    // ln(1 + e^s), written to stay finite for large |s|.
                    s.max(0.0) + (-s.abs()).exp().ln_1p()
                })
                .sum::<f64>(),
            Loss::SoftmaxCe => {
                let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - a[label]
            }
        };
    }
    total / y.len() as f64
}

/// Central finite differences of [`reference_loss`].
pub fn reference_gradient(
    dims: &[usize],
    params: &[f64],
    x: &[Vec<f64>],
    y: &[usize],
    loss: Loss,
    step: f64,
) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            p[i] = params[i] + step;
            let up = reference_loss(dims, &p, x, y, loss);
            p[i] = params[i] - step;
            let down = reference_loss(dims, &p, x, y, loss);
            p[i] = params[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Largest `|a - b| / max(|a|, |b|)` over components where either side is
/// above `floor`; components below it are compared absolutely against
/// `floor * tol`.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&u, &v)| {
            let scale = u.abs().max(v.abs());
            if scale > floor {
                (u - v).abs() / scale
            } else {
                (u - v).abs() / floor
            }
        })
        .fold(0.0, f64::max)
}

/// `prod_{k in S} p_k * prod_{j not in S} (1 - p_j)` for the subset `mask`.
pub fn subset_product(p: &[f64], mask: u32) -> f64 {
    p.iter()
        .enumerate()
        .map(|(k, &v)| if mask >> k & 1 == 1 { v } else { 1.0 - v })
        .product()
}
