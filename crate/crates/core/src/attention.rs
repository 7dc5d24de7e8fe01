//! Softmax attention over a list of equally sized similarity embeddings.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// `logit_f = w·φ_f + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Vec<f64>,
    pub b: f64,
}

impl AttentionParams {
    /// Zero weights: uniform attention.
    pub fn zeros(width: usize) -> Self {
        AttentionParams {
            w: vec![0.0; width],
            b: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attended {
    pub weights: Vec<f64>,
    pub pooled: Vec<f64>,
}

/// Softmax (max-subtracted) of the logits, then the weighted sum.
pub fn attend(embeddings: &[&[f64]], params: &AttentionParams) -> Attended {
    assert!(!embeddings.is_empty(), "attention over an empty list");
    let width = params.w.len();
    let logits: Vec<f64> = embeddings
        .iter()
        .map(|e| math::dot(&params.w, e) + params.b)
        .collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| math::exp(l - top)).collect();
    let z: f64 = exps.iter().sum();
    let weights: Vec<f64> = exps.iter().map(|e| e / z).collect();
    let mut pooled = vec![0.0; width];
    for (a, e) in weights.iter().zip(embeddings) {
        for (p, x) in pooled.iter_mut().zip(e.iter()) {
            *p += a * x;
        }
    }
    Attended { weights, pooled }
}

/// Backward pass of [`attend`]. Adds parameter gradients into `grad` and
/// returns the gradient for every input embedding.
pub fn attend_backward(
    embeddings: &[&[f64]],
    params: &AttentionParams,
    weights: &[f64],
    d_pooled: &[f64],
    grad: &mut AttentionParams,
) -> Vec<Vec<f64>> {
    let scores: Vec<f64> = embeddings.iter().map(|e| math::dot(d_pooled, e)).collect();
    let mean: f64 = weights.iter().zip(&scores).map(|(a, s)| a * s).sum();
    let mut out = Vec::with_capacity(embeddings.len());
    for ((e, &a), &s) in embeddings.iter().zip(weights).zip(&scores) {
        let dlogit = a * (s - mean);
        for (g, x) in grad.w.iter_mut().zip(e.iter()) {
            *g += dlogit * x;
        }
        grad.b += dlogit;
        out.push(
            d_pooled
                .iter()
                .zip(&params.w)
                .map(|(d, w)| a * d + dlogit * w)
                .collect(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_split_evenly() {
        let p = AttentionParams {
            w: vec![0.3, -1.0],
            b: 0.2,
        };
        let x = [1.0, 2.0];
        let out = attend(&[&x, &x], &p);
        assert_eq!(out.weights, vec![0.5, 0.5]);
        assert_eq!(out.pooled, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weights_are_uniform() {
        let p = AttentionParams::zeros(2);
        let out = attend(&[&[5.0, 1.0], &[-3.0, 2.0], &[0.0, 0.0]], &p);
        for w in out.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn singleton_passes_through() {
        let p = AttentionParams {
            w: vec![10.0],
            b: 1.0,
        };
        let out = attend(&[&[4.0]], &p);
        assert_eq!(out.weights, vec![1.0]);
        assert_eq!(out.pooled, vec![4.0]);
    }

    #[test]
    fn large_logits_stay_finite() {
        let p = AttentionParams {
            w: vec![1.0],
            b: 0.0,
        };
        let out = attend(&[&[1000.0], &[-1000.0]], &p);
        assert_eq!(out.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let e1 = [0.3, -1.2, 0.5];
        let e2 = [1.1, 0.4, -0.7];
        let e3 = [-0.2, 0.9, 0.1];
        let params = AttentionParams {
            w: vec![0.4, -0.3, 0.8],
            b: 0.1,
        };
        let dout = [0.7, -0.2, 1.3];
        let f = |p: &AttentionParams, es: [&[f64]; 3]| -> f64 {
            math::dot(&attend(&es, p).pooled, &dout)
        };
        let out = attend(&[&e1, &e2, &e3], &params);
        let mut grad = AttentionParams::zeros(3);
        let dembs = attend_backward(&[&e1, &e2, &e3], &params, &out.weights, &dout, &mut grad);
        let h = 1e-6;
        for i in 0..3 {
            let mut hi = params.clone();
            hi.w[i] += h;
            let mut lo = params.clone();
            lo.w[i] -= h;
            let num = (f(&hi, [&e1, &e2, &e3]) - f(&lo, [&e1, &e2, &e3])) / (2.0 * h);
            assert!((num - grad.w[i]).abs() < 1e-8);
        }
        assert!(grad.b.abs() < 1e-12);
        for d in 0..3 {
            let mut hi = e2;
            hi[d] += h;
            let mut lo = e2;
            lo[d] -= h;
            let num = (f(&params, [&e1, &hi, &e3]) - f(&params, [&e1, &lo, &e3])) / (2.0 * h);
            assert!((num - dembs[1][d]).abs() < 1e-8);
        }
    }
}
