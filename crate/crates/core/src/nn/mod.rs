//! Small differentiable blocks with hand-written backward passes.
//!
//! Everything is `f64` and row-major. Backward functions accumulate parameter
//! gradients into a same-shaped "gradient" instance of the block and return
//! the gradient with respect to the block's inputs.

mod adam;
mod dense;
pub mod gradcheck;
mod layernorm;
mod lstm;

pub use adam::{Adam, AdamConfig};
pub use dense::Dense;
pub use layernorm::{LayerNorm, LayerNormCache};
pub use lstm::{LstmCache, LstmCell, LstmState};

use rand::Rng;

/// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub(crate) fn fill_uniform<R: Rng>(rng: &mut R, out: &mut [f64], fan_in: usize) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    for v in out {
        *v = rng.random_range(-bound..=bound);
    }
}

/// Flat views over every trainable array of a block or model, always in the
/// same order.
pub trait Parameters {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn zero_params(&mut self) {
        for s in self.param_slices_mut() {
            s.fill(0.0);
        }
    }

    fn flat_params(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    fn set_flat_params(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for s in self.param_slices_mut() {
            let n = s.len();
            s.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, flat.len(), "flat parameter length");
    }

    fn sq_norm(&self) -> f64 {
        self.param_slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum()
    }

    fn scale_params(&mut self, factor: f64) {
        for s in self.param_slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// `self += other`, slice by slice.
    fn add_params(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (dst, src) in self.param_slices_mut().into_iter().zip(other.param_slices()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
    }

    fn all_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
