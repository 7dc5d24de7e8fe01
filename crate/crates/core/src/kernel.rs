//! Cosine similarity matrices and RBF kernel pooling.
//!
//! For row `i` and kernel `k`, `K_k(i) = Σ_j exp(-(S_ij - μ_k)² / 2σ_k²)` and
//! the pooled feature is `φ_k = Σ_i ln(K_k(i) + ε)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Guard inside the logarithm.
pub const LOG_EPS: f64 = 1e-10;

/// Means and widths of the RBF kernels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelBank {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Default for KernelBank {
    /// One exact-match kernel at 1.0 (σ = 1e-3) and ten soft kernels from
    /// 0.9 down to -0.9 in steps of 0.2 (σ = 0.1).
    fn default() -> Self {
        let mut mu = vec![1.0];
        let mut sigma = vec![1e-3];
        for i in 0..10 {
            mu.push(0.9 - 0.2 * i as f64);
            sigma.push(0.1);
        }
        KernelBank { mu, sigma }
    }
}

impl KernelBank {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> crate::Result<Self> {
        if mu.len() != sigma.len() || mu.is_empty() {
            return Err(crate::Error::Config(
                "kernel means and widths must pair up".into(),
            ));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(crate::Error::Config(
                "kernel widths must be positive".into(),
            ));
        }
        Ok(KernelBank { mu, sigma })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    #[inline]
    fn response(&self, k: usize, s: f64) -> f64 {
        let d = s - self.mu[k];
        math::exp(-d * d / (2.0 * self.sigma[k] * self.sigma[k]))
    }
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = math::norm(a);
    let nb = math::norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    math::dot(a, b) / (na * nb)
}

/// Dense `rows × cols` matrix with validity masks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub row_mask: Vec<bool>,
    pub col_mask: Vec<bool>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols);
        SimilarityMatrix {
            rows,
            cols,
            values,
            row_mask: vec![true; rows],
            col_mask: vec![true; cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
}

/// `S_ij = cos(target_i, candidate_j)`, all cells valid.
pub fn similarity_matrix(target: &[&[f64]], candidate: &[&[f64]]) -> SimilarityMatrix {
    let mut values = Vec::with_capacity(target.len() * candidate.len());
    for t in target {
        for c in candidate {
            values.push(cosine(t, c));
        }
    }
    SimilarityMatrix::new(target.len(), candidate.len(), values)
}

fn mask_weights(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()
}

/// Kernel-pool a masked matrix. A matrix without any valid row or column
/// pools to the zero vector.
pub fn kernel_pool(s: &SimilarityMatrix, bank: &KernelBank) -> Vec<f64> {
    let rw = mask_weights(&s.row_mask);
    let cw = mask_weights(&s.col_mask);
    pool_weighted(&s.values, &rw, &cw, bank).0
}

/// Gradient of `Σ_k dphi_k φ_k` with respect to every matrix cell.
pub fn kernel_pool_backward(s: &SimilarityMatrix, bank: &KernelBank, dphi: &[f64]) -> Vec<f64> {
    let rw = mask_weights(&s.row_mask);
    let cw = mask_weights(&s.col_mask);
    let (_, kvals) = pool_weighted(&s.values, &rw, &cw, bank);
    let mut ds = vec![0.0; s.values.len()];
    pool_weighted_backward(&s.values, &rw, &cw, bank, &kvals, dphi, &mut ds);
    ds
}

/// Pooling with per-row and per-column multiplicities. A row of weight `r`
/// stands for `r` identical rows, a column of weight `c` for `c` identical
/// columns; zero weight masks it out. Returns φ and the `rows × K` kernel
/// sums needed by the backward pass.
pub(crate) fn pool_weighted(
    values: &[f64],
    row_w: &[f64],
    col_w: &[f64],
    bank: &KernelBank,
) -> (Vec<f64>, Vec<f64>) {
    let nk = bank.len();
    let (rows, cols) = (row_w.len(), col_w.len());
    let mut phi = vec![0.0; nk];
    let mut kvals = vec![0.0; rows * nk];
    if !row_w.iter().any(|&w| w > 0.0) || !col_w.iter().any(|&w| w > 0.0) {
        return (phi, kvals);
    }
    for i in 0..rows {
        if row_w[i] == 0.0 {
            continue;
        }
        let kv = &mut kvals[i * nk..(i + 1) * nk];
        for j in 0..cols {
            if col_w[j] == 0.0 {
                continue;
            }
            let s = values[i * cols + j];
            for (k, slot) in kv.iter_mut().enumerate() {
                *slot += col_w[j] * bank.response(k, s);
            }
        }
        for k in 0..nk {
            phi[k] += row_w[i] * math::ln(kv[k] + LOG_EPS);
        }
    }
    (phi, kvals)
}

/// Accumulates `∂(dphi·φ)/∂S` into `ds`.
pub(crate) fn pool_weighted_backward(
    values: &[f64],
    row_w: &[f64],
    col_w: &[f64],
    bank: &KernelBank,
    kvals: &[f64],
    dphi: &[f64],
    ds: &mut [f64],
) {
    let nk = bank.len();
    let (rows, cols) = (row_w.len(), col_w.len());
    if !row_w.iter().any(|&w| w > 0.0) || !col_w.iter().any(|&w| w > 0.0) {
        return;
    }
    let mut dk = vec![0.0; nk];
    let inv_var: Vec<f64> = bank.sigma.iter().map(|s| 1.0 / (s * s)).collect();
    for i in 0..rows {
        if row_w[i] == 0.0 {
            continue;
        }
        for k in 0..nk {
            dk[k] = dphi[k] * row_w[i] / (kvals[i * nk + k] + LOG_EPS);
        }
        for j in 0..cols {
            if col_w[j] == 0.0 {
                continue;
            }
            let s = values[i * cols + j];
            let mut g = 0.0;
            for k in 0..nk {
                let d = s - bank.mu[k];
                g -= dk[k] * bank.response(k, s) * d * inv_var[k];
            }
            ds[i * cols + j] += col_w[j] * g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bank_values() {
        let b = KernelBank::default();
        assert_eq!(b.len(), 11);
        let want = [1.0, 0.9, 0.7, 0.5, 0.3, 0.1, -0.1, -0.3, -0.5, -0.7, -0.9];
        for (m, w) in b.mu.iter().zip(want) {
            assert!((m - w).abs() < 1e-12);
        }
        assert_eq!(b.sigma[0], 1e-3);
        assert!(b.sigma[1..].iter().all(|&s| s == 0.1));
    }

    #[test]
    fn exact_match_kernel() {
        let bank = KernelBank::new(vec![1.0], vec![1e-3]).unwrap();
        let s = SimilarityMatrix::new(1, 1, vec![1.0]);
        let phi = kernel_pool(&s, &bank);
        assert!(phi[0].abs() < 1e-9);
    }

    #[test]
    fn soft_kernel_counts() {
        let bank = KernelBank::new(vec![0.5], vec![0.1]).unwrap();
        let s = SimilarityMatrix::new(1, 2, vec![0.5, 0.5]);
        let phi = kernel_pool(&s, &bank);
        assert!((phi[0] - core::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn fully_masked_is_zero() {
        let mut s = SimilarityMatrix::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]);
        s.col_mask = vec![false, false];
        assert_eq!(kernel_pool(&s, &KernelBank::default()), vec![0.0; 11]);
        let empty = SimilarityMatrix::new(0, 3, vec![]);
        assert_eq!(kernel_pool(&empty, &KernelBank::default()), vec![0.0; 11]);
    }

    #[test]
    fn weights_equal_duplication() {
        let bank = KernelBank::default();
        let dup = SimilarityMatrix::new(2, 3, vec![0.3, 0.3, -0.2, 0.3, 0.3, -0.2]);
        let (phi_w, _) = pool_weighted(&[0.3, -0.2], &[2.0], &[2.0, 1.0], &bank);
        let phi = kernel_pool(&dup, &bank);
        for (a, b) in phi.iter().zip(&phi_w) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
