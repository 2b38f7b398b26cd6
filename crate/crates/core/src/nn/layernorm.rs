use serde::{Deserialize, Serialize};

use super::Parameters;

pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub width: usize,
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct LayerNormCache {
    normalized: Vec<f64>,
    inv_std: f64,
}

impl LayerNorm {
    /// Unit gain and zero bias.
    pub fn new(width: usize) -> Self {
        LayerNorm {
            width,
            gain: vec![1.0; width],
            bias: vec![0.0; width],
            eps: DEFAULT_EPS,
        }
    }

    pub fn zeros_like(&self) -> Self {
        LayerNorm {
            width: self.width,
            gain: vec![0.0; self.width],
            bias: vec![0.0; self.width],
            eps: self.eps,
        }
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, LayerNormCache) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv_std = 1.0 / (var + self.eps).sqrt();
        let normalized: Vec<f64> = x.iter().map(|v| (v - mean) * inv_std).collect();
        let y = normalized
            .iter()
            .zip(&self.gain)
            .zip(&self.bias)
            .map(|((h, g), b)| g * h + b)
            .collect();
        (
            y,
            LayerNormCache {
                normalized,
                inv_std,
            },
        )
    }

    pub fn backward(&self, cache: &LayerNormCache, dy: &[f64], grad: &mut LayerNorm) -> Vec<f64> {
        let n = dy.len() as f64;
        let dxhat: Vec<f64> = dy.iter().zip(&self.gain).map(|(d, g)| d * g).collect();
        for i in 0..dy.len() {
            grad.gain[i] += dy[i] * cache.normalized[i];
            grad.bias[i] += dy[i];
        }
        let sum_d: f64 = dxhat.iter().sum();
        let sum_dh: f64 = dxhat
            .iter()
            .zip(&cache.normalized)
            .map(|(d, h)| d * h)
            .sum();
        dxhat
            .iter()
            .zip(&cache.normalized)
            .map(|(d, h)| cache.inv_std / n * (n * d - sum_d - h * sum_dh))
            .collect()
    }
}

impl Parameters for LayerNorm {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![&self.gain, &self.bias]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.gain, &mut self.bias]
    }
}
