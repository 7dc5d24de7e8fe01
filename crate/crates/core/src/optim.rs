//! First-order optimizers over named parameter groups.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// A model whose trainable values can be listed as flat groups in a fixed
/// order. Gradients use the same type, so groups line up one to one.
pub trait Parameters {
    fn group_names(&self) -> Vec<String>;
    fn groups(&self) -> Vec<&[f64]>;
    fn groups_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_parameters(&self) -> usize {
        self.groups().iter().map(|g| g.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.groups()
            .iter()
            .all(|g| g.iter().all(|v| v.is_finite()))
    }

    fn scale(&mut self, factor: f64) {
        for g in self.groups_mut() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }

    fn fill_zero(&mut self) {
        for g in self.groups_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Sgd
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Optimizer {
            kind,
            lr,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// One descent step: `params -= lr * update(grads)`. Groups whose
    /// gradient is entirely zero are left untouched by Adam as well.
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        self.step += 1;
        let grads = grads.groups();
        let mut params = params.groups_mut();
        assert_eq!(grads.len(), params.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(&grads) {
                    for (x, d) in p.iter_mut().zip(g.iter()) {
                        *x -= self.lr * d;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                if self.first.is_empty() {
                    self.first = grads.iter().map(|g| vec![0.0; g.len()]).collect();
                    self.second = self.first.clone();
                }
                let t = self.step as f64;
                let c1 = 1.0 - math::powf(beta1, t);
                let c2 = 1.0 - math::powf(beta2, t);
                for (gi, (p, g)) in params.iter_mut().zip(&grads).enumerate() {
                    if g.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let m = &mut self.first[gi];
                    let v = &mut self.second[gi];
                    for i in 0..p.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        let mhat = m[i] / c1;
                        let vhat = v[i] / c2;
                        p[i] -= self.lr * mhat / (math::sqrt(vhat) + eps);
                    }
                }
            }
        }
    }
}
