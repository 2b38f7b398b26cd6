//! Single LSTM cell.
//!
//! Gate pre-activations are `z = W [x; h] + b` with `W` of shape
//! `4H x (in + H)`, gate blocks ordered input, forget, candidate, output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fill_uniform, sigmoid, Parameters};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    pub input_dim: usize,
    pub hidden: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Everything one step's backward pass needs.
#[derive(Clone, Debug)]
pub struct LstmCache {
    concat: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

pub const FORGET_BIAS_INIT: f64 = 1.0;

impl LstmCell {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmCell {
            input_dim,
            hidden,
            weight: vec![0.0; 4 * hidden * (input_dim + hidden)],
            bias: vec![0.0; 4 * hidden],
        }
    }

    pub fn random<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut cell = LstmCell::zeros(input_dim, hidden);
        let fan_in = input_dim + hidden;
        fill_uniform(rng, &mut cell.weight, fan_in);
        fill_uniform(rng, &mut cell.bias, fan_in);
        cell.bias[hidden..2 * hidden].fill(FORGET_BIAS_INIT);
        cell
    }

    fn width(&self) -> usize {
        self.input_dim + self.hidden
    }

    pub fn forward(&self, x: &[f64], state: &LstmState) -> (LstmState, LstmCache) {
        let hd = self.hidden;
        let width = self.width();
        let mut concat = Vec::with_capacity(width);
        concat.extend_from_slice(x);
        concat.extend_from_slice(&state.h);

        let z: Vec<f64> = self
            .weight
            .chunks_exact(width)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(&concat).map(|(w, v)| w * v).sum::<f64>())
            .collect();

        let i: Vec<f64> = z[..hd].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[2 * hd..3 * hd].iter().map(|v| v.tanh()).collect();
        let o: Vec<f64> = z[3 * hd..].iter().map(|&v| sigmoid(v)).collect();

        let c: Vec<f64> = (0..hd).map(|j| f[j] * state.c[j] + i[j] * g[j]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hd).map(|j| o[j] * tanh_c[j]).collect();

        (
            LstmState { h, c },
            LstmCache {
                concat,
                c_prev: state.c.clone(),
                i,
                f,
                g,
                o,
                tanh_c,
            },
        )
    }

    /// Backward through one step.
    ///
    /// `dh` and `dc` are the gradients arriving at this step's outputs. Returns
    /// `(dx, dh_prev, dc_prev)` and accumulates parameter gradients in `grad`.
    pub fn backward(
        &self,
        cache: &LstmCache,
        dh: &[f64],
        dc: &[f64],
        grad: &mut LstmCell,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hd = self.hidden;
        let width = self.width();
        let mut dz = vec![0.0; 4 * hd];
        let mut dc_prev = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, g, o, tc) = (cache.i[j], cache.f[j], cache.g[j], cache.o[j], cache.tanh_c[j]);
            let d_o = dh[j] * tc;
            let d_c = dc[j] + dh[j] * o * (1.0 - tc * tc);
            let d_i = d_c * g;
            let d_g = d_c * i;
            let d_f = d_c * cache.c_prev[j];
            dc_prev[j] = d_c * f;
            dz[j] = d_i * i * (1.0 - i);
            dz[hd + j] = d_f * f * (1.0 - f);
            dz[2 * hd + j] = d_g * (1.0 - g * g);
            dz[3 * hd + j] = d_o * o * (1.0 - o);
        }

        let mut dconcat = vec![0.0; width];
        for (r, &d) in dz.iter().enumerate() {
            grad.bias[r] += d;
            if d == 0.0 {
                continue;
            }
            let span = r * width..(r + 1) * width;
            for (gw, &v) in grad.weight[span.clone()].iter_mut().zip(&cache.concat) {
                *gw += d * v;
            }
            for (dv, &w) in dconcat.iter_mut().zip(&self.weight[span]) {
                *dv += d * w;
            }
        }
        let dh_prev = dconcat.split_off(self.input_dim);
        (dconcat, dh_prev, dc_prev)
    }
}

impl Parameters for LstmCell {
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
    use crate::seeded_rng;

    #[test]
    fn parameter_count_formula() {
        let cell = LstmCell::zeros(64, 64);
        assert_eq!(cell.param_count(), 4 * ((64 + 64) * 64 + 64));
        assert_eq!(cell.param_count(), 33024);
    }

    #[test]
    fn zero_cell_keeps_zero_state() {
        // all-zero weights: gates sit at 0.5, candidate at 0, so c and h stay 0
        let cell = LstmCell::zeros(3, 2);
        let (next, _) = cell.forward(&[1.0, -1.0, 0.5], &LstmState::zeros(2));
        assert_eq!(next, LstmState::zeros(2));
    }

    #[test]
    fn forget_bias_initialized_to_one() {
        let cell = LstmCell::random(4, 3, &mut seeded_rng(1));
        assert_eq!(&cell.bias[3..6], &[1.0, 1.0, 1.0]);
        let bound = 1.0 / 7f64.sqrt();
        assert!(cell.weight.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn forward_is_repeatable() {
        let cell = LstmCell::random(4, 3, &mut seeded_rng(2));
        let s = LstmState {
            h: vec![0.1, -0.2, 0.3],
            c: vec![0.5, 0.0, -0.5],
        };
        let (a, _) = cell.forward(&[0.3, 0.1, -0.7, 0.2], &s);
        let (b, _) = cell.forward(&[0.3, 0.1, -0.7, 0.2], &s);
        assert_eq!(a, b);
    }
}
