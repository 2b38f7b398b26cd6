use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fill_uniform, Parameters};
use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn random<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let mut layer = Dense::zeros(in_dim, out_dim);
        fill_uniform(rng, &mut layer.weight, in_dim);
        fill_uniform(rng, &mut layer.bias, in_dim);
        layer
    }

    pub fn identity(dim: usize) -> Self {
        let mut layer = Dense::zeros(dim, dim);
        for i in 0..dim {
            layer.weight[i * dim + i] = 1.0;
        }
        layer
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.weight.len() != self.in_dim * self.out_dim || self.bias.len() != self.out_dim {
            return Err(Error::ShapeMismatch(format!(
                "dense {}x{} has {} weights and {} biases",
                self.out_dim,
                self.in_dim,
                self.weight.len(),
                self.bias.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        self.weight
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    pub fn try_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::ShapeMismatch(format!(
                "dense expects input width {}, got {}",
                self.in_dim,
                x.len()
            )));
        }
        Ok(self.forward(x))
    }

    /// Accumulates `dW`, `db` into `grad` and returns `dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; self.in_dim];
        for (o, &g) in dy.iter().enumerate() {
            grad.bias[o] += g;
            if g == 0.0 {
                continue;
            }
            let row = o * self.in_dim..(o + 1) * self.in_dim;
            let grow = &mut grad.weight[row.clone()];
            for (gw, &v) in grow.iter_mut().zip(x) {
                *gw += g * v;
            }
            for (d, &w) in dx.iter_mut().zip(&self.weight[row]) {
                *d += g * w;
            }
        }
        dx
    }
}

impl Parameters for Dense {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![&self.weight, &self.bias]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_input_through() {
        let d = Dense::identity(3);
        assert_eq!(d.forward(&[0.1, -2.0, 5.0]), vec![0.1, -2.0, 5.0]);
    }

    #[test]
    fn forward_matches_hand_computation() {
        let d = Dense {
            in_dim: 2,
            out_dim: 2,
            weight: vec![1.0, 2.0, 3.0, 4.0],
            bias: vec![0.5, -0.5],
        };
        assert_eq!(d.forward(&[1.0, 1.0]), vec![3.5, 6.5]);
        assert_eq!(d.param_count(), 6);
    }

    #[test]
    fn shape_errors() {
        let d = Dense::zeros(3, 2);
        assert!(matches!(d.try_forward(&[1.0]), Err(Error::ShapeMismatch(_))));
        let bad = Dense {
            bias: vec![0.0],
            ..Dense::zeros(3, 2)
        };
        assert!(bad.check_shape().is_err());
    }
}
