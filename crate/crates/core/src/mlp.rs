//! Small fully connected networks with rectified-linear hidden layers and a
//! linear output layer.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;

/// `y = W x + b`, `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = math::sqrt(6.0 / (inputs + outputs) as f64);
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| rng.gen_range(-limit..limit))
                .collect(),
            bias: vec![0.0; outputs],
        }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                math::dot(row, x) + self.bias[o]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept for the backward pass; `inputs[l]` feeds layer `l`.
#[derive(Debug, Clone)]
pub struct MlpTape {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl Mlp {
    /// `widths = [input, hidden..., output]`.
    pub fn new<R: Rng>(widths: &[usize], rng: &mut R) -> Self {
        assert!(widths.len() >= 2);
        Mlp {
            layers: widths
                .windows(2)
                .map(|w| Dense::glorot(w[0], w[1], rng))
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.inputs, l.outputs)).collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_tape(x).output
    }

    pub fn forward_tape(&self, x: &[f64]) -> MlpTape {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&cur);
            let next = if l < last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            inputs.push(core::mem::replace(&mut cur, next));
            pre.push(z);
        }
        MlpTape {
            inputs,
            pre,
            output: cur,
        }
    }

    /// Accumulates parameter gradients into `grad`; returns `∂/∂x`.
    pub fn backward(&self, tape: &MlpTape, d_out: &[f64], grad: &mut Mlp) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut delta = d_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l < last {
                for (d, z) in delta.iter_mut().zip(&tape.pre[l]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let x = &tape.inputs[l];
            let g = &mut grad.layers[l];
            let mut dx = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = o * layer.inputs;
                for i in 0..layer.inputs {
                    g.weights[row + i] += d * x[i];
                    dx[i] += d * layer.weights[row + i];
                }
            }
            delta = dx;
        }
        delta
    }

    pub fn group_names(&self, prefix: &str) -> Vec<String> {
        let mut names = Vec::new();
        for l in 0..self.layers.len() {
            names.push(format!("{prefix}.{l}.weight"));
            names.push(format!("{prefix}.{l}.bias"));
        }
        names
    }

    pub fn groups(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_network_scores_zero() {
        let net = Mlp::new(&[3, 4, 2, 1], &mut seed::rng(1)).zeros_like();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]), vec![0.0]);
    }

    #[test]
    fn identity_path_passes_positive_input() {
        let mut net = Mlp::new(&[1, 1, 1, 1], &mut seed::rng(1)).zeros_like();
        for l in &mut net.layers {
            l.weights[0] = 1.0;
        }
        assert_eq!(net.forward(&[2.5]), vec![2.5]);
        assert_eq!(net.forward(&[-2.5]), vec![0.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let net = Mlp::new(&[4, 5, 3, 2], &mut seed::rng(9));
        let x = [0.3, -0.8, 1.5, 0.2];
        let dout = [0.6, -1.1];
        let f = |n: &Mlp, x: &[f64]| math::dot(&n.forward(x), &dout);
        let tape = net.forward_tape(&x);
        let mut grad = net.zeros_like();
        let dx = net.backward(&tape, &dout, &mut grad);
        let h = 1e-6;
        for i in 0..4 {
            let mut hi = x;
            hi[i] += h;
            let mut lo = x;
            lo[i] -= h;
            assert!(((f(&net, &hi) - f(&net, &lo)) / (2.0 * h) - dx[i]).abs() < 1e-7);
        }
        for (gi, g) in grad.groups().iter().enumerate() {
            for j in 0..g.len() {
                let mut hi = net.clone();
                hi.groups_mut()[gi][j] += h;
                let mut lo = net.clone();
                lo.groups_mut()[gi][j] -= h;
                let num = (f(&hi, &x) - f(&lo, &x)) / (2.0 * h);
                assert!((num - g[j]).abs() < 1e-7, "group {gi} index {j}");
            }
        }
    }
}
