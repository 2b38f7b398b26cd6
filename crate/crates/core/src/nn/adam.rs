use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments. Moment buffers are allocated lazily to
/// match the first parameter set they see.
#[derive(Clone, Debug, Default)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.param_slices();
        let mut params = params.param_slices_mut();
        if params.len() != grads.len()
            || params.iter().zip(&grads).any(|(p, g)| p.len() != g.len())
        {
            return Err(Error::ShapeMismatch("adam: params and grads differ".into()));
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != grads.len()
            || self.m.iter().zip(&grads).any(|(m, g)| m.len() != g.len())
        {
            return Err(Error::ShapeMismatch("adam: moment buffers differ".into()));
        }

        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);

        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Dense;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Dense {
            in_dim: 2,
            out_dim: 1,
            weight: vec![0.3, -0.4],
            bias: vec![0.1],
        };
        let before = p.clone();
        let g = Dense::zeros(2, 1);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut p, &g).unwrap();
        assert_eq!(p, before);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Dense::zeros(3, 1);
        let mut g = Dense::zeros(3, 1);
        g.weight = vec![2.5, -0.01, 40.0];
        g.bias = vec![1.0];
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut p, &g).unwrap();
        // m_hat = g, v_hat = g^2, so each coordinate moves -lr * g / (|g| + eps)
        for (w, gw) in p.weight.iter().zip(&g.weight) {
            let expected = -1e-3 * gw / (gw.abs() + 1e-8);
            assert!((w - expected).abs() < 1e-15);
            assert!((w.abs() - 1e-3).abs() < 1e-8);
        }
    }

    #[test]
    fn identical_runs_match() {
        let run = || {
            let mut p = Dense::identity(2);
            let mut adam = Adam::new(AdamConfig::default());
            for step in 0..10 {
                let mut g = Dense::zeros(2, 2);
                g.weight = vec![step as f64, 1.0, -0.5, 0.25 * step as f64];
                adam.step(&mut p, &g).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut adam = Adam::new(AdamConfig::default());
        let mut p = Dense::zeros(2, 1);
        adam.step(&mut p, &Dense::zeros(2, 1)).unwrap();
        let mut other = Dense::zeros(3, 1);
        assert!(matches!(
            adam.step(&mut other, &Dense::zeros(3, 1)),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
