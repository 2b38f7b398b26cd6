//! Central finite-difference checks for the hand-written backward passes.
//!
//! Each block is reduced to a scalar by a fixed linear readout
//! `L = sum_j r_j * y_j`, so `dL/dy = r` seeds the analytic backward pass while
//! the numeric side only ever calls `forward`.

use super::{Dense, LayerNorm, LstmCell, LstmState, Parameters};

/// Gradients smaller than this are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate with the largest error, in the order the check visited it.
    pub worst_index: usize,
    pub checked: usize,
}

impl GradCheckReport {
    fn merge(self, other: GradCheckReport) -> GradCheckReport {
        if other.max_rel_error > self.max_rel_error {
            GradCheckReport {
                max_rel_error: other.max_rel_error,
                worst_index: self.checked + other.worst_index,
                checked: self.checked + other.checked,
            }
        } else {
            GradCheckReport {
                checked: self.checked + other.checked,
                ..self
            }
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares `analytic` against central differences of `f` around `x0`.
pub fn check<F: FnMut(&[f64]) -> f64>(
    x0: &[f64],
    analytic: &[f64],
    h: f64,
    mut f: F,
) -> GradCheckReport {
    assert_eq!(x0.len(), analytic.len());
    let mut x = x0.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        checked: x0.len(),
    };
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let up = f(&x);
        x[i] = orig - h;
        let down = f(&x);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
    }
    report
}

/// Deterministic readout weights in `[-1, 1]`.
pub fn readout(n: usize, salt: usize) -> Vec<f64> {
    (0..n)
        .map(|i| ((i * 7 + salt * 13 + 1) as f64 * 0.618_033_988_749).sin())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_dense(layer: &Dense, input: &[f64], h: f64) -> GradCheckReport {
    let r = readout(layer.out_dim, 0);
    let mut grad = Dense::zeros(layer.in_dim, layer.out_dim);
    let dx = layer.backward(input, &r, &mut grad);

    let params = check(&layer.flat_params(), &grad.flat_params(), h, |p| {
        let mut l = layer.clone();
        l.set_flat_params(p);
        dot(&l.forward(input), &r)
    });
    let inputs = check(input, &dx, h, |x| dot(&layer.forward(x), &r));
    params.merge(inputs)
}

pub fn check_layernorm(ln: &LayerNorm, input: &[f64], h: f64) -> GradCheckReport {
    let r = readout(ln.width, 1);
    let mut grad = ln.zeros_like();
    let (_, cache) = ln.forward(input);
    let dx = ln.backward(&cache, &r, &mut grad);

    let params = check(&ln.flat_params(), &grad.flat_params(), h, |p| {
        let mut l = ln.clone();
        l.set_flat_params(p);
        dot(&l.forward(input).0, &r)
    });
    let inputs = check(input, &dx, h, |x| dot(&ln.forward(x).0, &r));
    params.merge(inputs)
}

/// Unrolls the cell over `inputs` from a zero state. The readout touches every
/// hidden state and the final cell state.
fn lstm_loss(cell: &LstmCell, inputs: &[Vec<f64>]) -> f64 {
    let mut state = LstmState::zeros(cell.hidden);
    let mut loss = 0.0;
    for (t, x) in inputs.iter().enumerate() {
        state = cell.forward(x, &state).0;
        loss += dot(&state.h, &readout(cell.hidden, 10 + t));
    }
    loss + dot(&state.c, &readout(cell.hidden, 99))
}

pub fn check_lstm_unrolled(cell: &LstmCell, inputs: &[Vec<f64>], h: f64) -> GradCheckReport {
    let hd = cell.hidden;
    let mut caches = Vec::with_capacity(inputs.len());
    let mut state = LstmState::zeros(hd);
    for x in inputs {
        let (next, cache) = cell.forward(x, &state);
        caches.push(cache);
        state = next;
    }

    let mut grad = LstmCell::zeros(cell.input_dim, hd);
    let mut dx_all = vec![Vec::new(); inputs.len()];
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = readout(hd, 99);
    for t in (0..inputs.len()).rev() {
        let dh: Vec<f64> = readout(hd, 10 + t)
            .iter()
            .zip(&dh_next)
            .map(|(a, b)| a + b)
            .collect();
        let (dx, dh_prev, dc_prev) = cell.backward(&caches[t], &dh, &dc_next, &mut grad);
        dx_all[t] = dx;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }

    let params = check(&cell.flat_params(), &grad.flat_params(), h, |p| {
        let mut c = cell.clone();
        c.set_flat_params(p);
        lstm_loss(&c, inputs)
    });
    let width = cell.input_dim;
    let flat_inputs = inputs.concat();
    let input_report = check(&flat_inputs, &dx_all.concat(), h, |flat| {
        let xs: Vec<Vec<f64>> = flat.chunks(width).map(<[f64]>::to_vec).collect();
        lstm_loss(cell, &xs)
    });
    params.merge(input_report)
}
