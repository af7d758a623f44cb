use rand::Rng;

use super::tensor::{Param, Tensor};

/// Convolution whose kernel spans a whole input row: every row of an
/// `(rows, inputs)` matrix is mapped to `outputs` channels with shared weights.
/// Applied to a single row it is an ordinary dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RowConv {
    pub weight: Param,
    pub bias: Param,
    pub inputs: usize,
    pub outputs: usize,
}

impl RowConv {
    /// Fan-in scaled uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        Self {
            weight: Param::new(Tensor::uniform(&[outputs, inputs], bound, rng)),
            bias: Param::new(Tensor::zeros(&[outputs])),
            inputs,
            outputs,
        }
    }

    pub fn forward(&self, x: &[f64], rows: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), rows * self.inputs);
        let w = &self.weight.value.data;
        let b = &self.bias.value.data;
        let mut out = vec![0.0; rows * self.outputs];
        for r in 0..rows {
            let xr = &x[r * self.inputs..(r + 1) * self.inputs];
            for o in 0..self.outputs {
                let wo = &w[o * self.inputs..(o + 1) * self.inputs];
                let mut acc = b[o];
                for i in 0..self.inputs {
                    acc += wo[i] * xr[i];
                }
                out[r * self.outputs + o] = acc;
            }
        }
        out
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. `x`.
    pub fn backward(&mut self, x: &[f64], rows: usize, grad_out: &[f64]) -> Vec<f64> {
        let mut grad_in = vec![0.0; rows * self.inputs];
        let w = &self.weight.value.data;
        let gw = &mut self.weight.grad.data;
        let gb = &mut self.bias.grad.data;
        for r in 0..rows {
            let xr = &x[r * self.inputs..(r + 1) * self.inputs];
            let gi = &mut grad_in[r * self.inputs..(r + 1) * self.inputs];
            for o in 0..self.outputs {
                let g = grad_out[r * self.outputs + o];
                if g == 0.0 {
                    continue;
                }
                gb[o] += g;
                let base = o * self.inputs;
                for i in 0..self.inputs {
                    gw[base + i] += g * xr[i];
                    gi[i] += g * w[base + i];
                }
            }
        }
        grad_in
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

pub fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

/// Masks `grad` by the sign of the pre-activation `z`.
pub fn relu_backward(z: &[f64], grad: &[f64]) -> Vec<f64> {
    z.iter().zip(grad).map(|(&zi, &g)| if zi > 0.0 { g } else { 0.0 }).collect()
}

/// Column means of a `(rows, cols)` matrix.
pub fn mean_rows(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut m = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            m[c] += x[r * cols + c];
        }
    }
    let inv = 1.0 / rows as f64;
    m.iter_mut().for_each(|v| *v *= inv);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn row_conv_shares_weights_across_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = RowConv::new(3, 4, &mut rng);
        let x = [0.1, -0.2, 0.3, 0.1, -0.2, 0.3];
        let y = layer.forward(&x, 2);
        assert_eq!(y[..4], y[4..]);
    }

    #[test]
    fn zero_upstream_gradient_leaves_params_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut layer = RowConv::new(3, 2, &mut rng);
        let gin = layer.backward(&[1.0, 2.0, 3.0], 1, &[0.0, 0.0]);
        assert!(gin.iter().all(|&g| g == 0.0));
        assert!(layer.weight.grad.data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = RowConv::new(16, 8, &mut rng);
        assert!(layer.weight.value.data.iter().all(|w| w.abs() <= 0.25));
        assert!(layer.bias.value.data.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn mean_rows_of_duplicates() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let dup = [1.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 4.0];
        assert_eq!(mean_rows(&x, 2, 2), mean_rows(&dup, 4, 2));
    }
}
