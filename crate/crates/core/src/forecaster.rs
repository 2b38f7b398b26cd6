//! Recurrent forecaster over encoded state vectors.
//!
//! Architecture: input projection (k -> P), layer normalization (P), one LSTM
//! cell (P -> H), output projection (H -> k). During the observation window
//! the model consumes ground-truth states through the layer norm; afterwards
//! it feeds its own previous output back in and the layer norm is bypassed.
//!
//! For `observe_len = O` and `predict_len = F` the model runs `O + F - 1`
//! steps. Steps `0..O` read observed states `s_1..s_O` and predict
//! `s_2..s_{O+1}`; the remaining `F - 1` steps are autoregressive. Outputs
//! `O-1..` form the prediction window `s_{O+1}..s_{O+F}`.
//!
//! Training works in alpha-scaled space: inputs and targets are multiplied by
//! `alpha` and the loss is the plain mean squared error there, summed
//! uniformly over every step.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data;
use crate::error::{Error, Result};
use crate::metrics::{self, RolloutLoss};
use crate::nn::gradcheck::{self, GradCheckReport};
use crate::nn::{Adam, AdamConfig, Dense, LayerNorm, LayerNormCache, LstmCache, LstmCell, LstmState, Parameters};
use crate::seeded_rng;
use crate::set_to_cluster::encode_frame;
use crate::types::{Chunk, Codebook, Split, StateVector};

pub const DEFAULT_PROJECTION: usize = 64;
pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastModel {
    pub k: usize,
    pub input_projection: Dense,
    pub obs_norm: LayerNorm,
    pub cell: LstmCell,
    pub output_projection: Dense,
}

impl Parameters for ForecastModel {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.input_projection.param_slices();
        v.extend(self.obs_norm.param_slices());
        v.extend(self.cell.param_slices());
        v.extend(self.output_projection.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.input_projection.param_slices_mut();
        v.extend(self.obs_norm.param_slices_mut());
        v.extend(self.cell.param_slices_mut());
        v.extend(self.output_projection.param_slices_mut());
        v
    }
}

pub fn build_model(k: usize, seed: u64) -> Result<ForecastModel> {
    build_model_with(k, DEFAULT_PROJECTION, DEFAULT_HIDDEN, seed)
}

pub fn build_model_with(k: usize, projection: usize, hidden: usize, seed: u64) -> Result<ForecastModel> {
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    if projection < 1 || hidden < 1 {
        return Err(Error::InvalidConfig("projection and hidden widths must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    Ok(ForecastModel {
        k,
        input_projection: Dense::random(k, projection, &mut rng),
        obs_norm: LayerNorm::new(projection),
        cell: LstmCell::random(projection, hidden, &mut rng),
        output_projection: Dense::random(hidden, k, &mut rng),
    })
}

impl ForecastModel {
    pub fn projection(&self) -> usize {
        self.input_projection.out_dim
    }

    pub fn hidden(&self) -> usize {
        self.cell.hidden
    }

    pub fn zeros_like(&self) -> ForecastModel {
        ForecastModel {
            k: self.k,
            input_projection: Dense::zeros(self.k, self.projection()),
            obs_norm: self.obs_norm.zeros_like(),
            cell: LstmCell::zeros(self.projection(), self.hidden()),
            output_projection: Dense::zeros(self.hidden(), self.k),
        }
    }

    fn check_shapes(&self) -> Result<()> {
        let (k, p, h) = (self.k, self.projection(), self.hidden());
        self.input_projection.check_shape()?;
        self.output_projection.check_shape()?;
        let ok = self.input_projection.in_dim == k
            && self.obs_norm.width == p
            && self.obs_norm.gain.len() == p
            && self.obs_norm.bias.len() == p
            && self.cell.input_dim == p
            && self.cell.weight.len() == 4 * h * (p + h)
            && self.cell.bias.len() == 4 * h
            && self.output_projection.in_dim == h
            && self.output_projection.out_dim == k;
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "forecaster blocks inconsistent with k={k}, projection={p}, hidden={h}"
            )));
        }
        Ok(())
    }
}

/// How predictions relate to the loss scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Inputs, outputs and targets all live in alpha-scaled space.
    Scaled,
    /// Loss `(s - alpha * o)^2` on unscaled inputs and targets; the emitted
    /// prediction is `alpha * o`.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub lr: f64,
    pub batch_chunks: usize,
    pub epochs: usize,
    pub observe_len: usize,
    pub predict_len: usize,
    pub seed: u64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub loss_mode: LossMode,
    /// Stop after this many epochs without a validation improvement.
    #[serde(default)]
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 10.0,
            lr: 1e-3,
            batch_chunks: 16,
            epochs: 300,
            observe_len: 25,
            predict_len: 25,
            seed: 0,
            grad_clip: Some(5.0),
            loss_mode: LossMode::Scaled,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn chunk_len(&self) -> usize {
        self.observe_len + self.predict_len
    }

    /// Number of predicted states per chunk.
    pub fn steps(&self) -> usize {
        self.observe_len + self.predict_len - 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be > 0".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if self.observe_len < 1 || self.predict_len < 1 {
            return Err(Error::InvalidConfig("observe_len and predict_len must be >= 1".into()));
        }
        if self.batch_chunks < 1 {
            return Err(Error::InvalidConfig("batch_chunks must be >= 1".into()));
        }
        Ok(())
    }

    fn input_scale(&self) -> f64 {
        match self.loss_mode {
            LossMode::Scaled => self.alpha,
            LossMode::Literal => 1.0,
        }
    }

    fn output_mult(&self) -> f64 {
        match self.loss_mode {
            LossMode::Scaled => 1.0,
            LossMode::Literal => self.alpha,
        }
    }
}

struct StepCache {
    input: Vec<f64>,
    norm: Option<LayerNormCache>,
    lstm: LstmCache,
    h: Vec<f64>,
    /// Prediction in input space (what gets fed back).
    pred: Vec<f64>,
}

impl ForecastModel {
    /// Runs the full observe-then-predict unroll. `observed` must already be
    /// in input space.
    fn unroll(&self, observed: &[Vec<f64>], predict_len: usize, output_mult: f64) -> Vec<StepCache> {
        let steps = observed.len() + predict_len - 1;
        let mut caches: Vec<StepCache> = Vec::with_capacity(steps);
        let mut state = LstmState::zeros(self.hidden());
        for t in 0..steps {
            let (input, normalize) = match observed.get(t) {
                Some(x) => (x.clone(), true),
                None => (caches[t - 1].pred.clone(), false),
            };
            let projected = self.input_projection.forward(&input);
            let (cell_in, norm) = if normalize {
                let (y, cache) = self.obs_norm.forward(&projected);
                (y, Some(cache))
            } else {
                (projected, None)
            };
            let (next, lstm) = self.cell.forward(&cell_in, &state);
            let out = self.output_projection.forward(&next.h);
            let pred = out.iter().map(|v| v * output_mult).collect();
            caches.push(StepCache {
                input,
                norm,
                lstm,
                h: next.h.clone(),
                pred,
            });
            state = next;
        }
        caches
    }

    fn check_width(&self, states: &[StateVector]) -> Result<()> {
        match states.iter().find(|s| s.len() != self.k) {
            Some(s) => Err(Error::length("state width", self.k, s.len())),
            None => Ok(()),
        }
    }
}

/// Predicts `observe_len - 1 + horizon` states from the observed window.
/// Returned radii are unscaled and clamped at zero.
pub fn rollout(
    model: &ForecastModel,
    observed: &[StateVector],
    horizon: usize,
    alpha: f64,
) -> Result<Vec<StateVector>> {
    let cfg = TrainConfig {
        alpha,
        observe_len: observed.len(),
        predict_len: horizon,
        ..TrainConfig::default()
    };
    rollout_with(model, observed, &cfg)
}

pub fn rollout_with(
    model: &ForecastModel,
    observed: &[StateVector],
    cfg: &TrainConfig,
) -> Result<Vec<StateVector>> {
    Ok(rollout_raw(model, observed, cfg)?
        .into_iter()
        .map(|s| StateVector(s.0.into_iter().map(|v| v.max(0.0)).collect()))
        .collect())
}

/// Like [`rollout_with`] but without the non-negativity clamp.
pub fn rollout_raw(
    model: &ForecastModel,
    observed: &[StateVector],
    cfg: &TrainConfig,
) -> Result<Vec<StateVector>> {
    cfg.validate()?;
    if observed.len() != cfg.observe_len {
        return Err(Error::length("observed window", cfg.observe_len, observed.len()));
    }
    model.check_width(observed)?;
    let scale = cfg.input_scale();
    let inputs: Vec<Vec<f64>> = observed
        .iter()
        .map(|s| s.values().iter().map(|v| v * scale).collect())
        .collect();
    let steps = model.unroll(&inputs, cfg.predict_len, cfg.output_mult());
    Ok(steps
        .into_iter()
        .map(|c| StateVector(c.pred.into_iter().map(|v| v / scale).collect()))
        .collect())
}

fn check_chunk(model: &ForecastModel, chunk: &[StateVector], cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if chunk.len() != cfg.chunk_len() {
        return Err(Error::length("chunk", cfg.chunk_len(), chunk.len()));
    }
    model.check_width(chunk)
}

fn scaled(chunk: &[StateVector], scale: f64) -> Vec<Vec<f64>> {
    chunk
        .iter()
        .map(|s| s.values().iter().map(|v| v * scale).collect())
        .collect()
}

/// Training loss of one chunk: mean squared error in input space over every
/// predicted step and state entry.
pub fn chunk_loss(model: &ForecastModel, chunk: &[StateVector], cfg: &TrainConfig) -> Result<f64> {
    check_chunk(model, chunk, cfg)?;
    let targets = scaled(chunk, cfg.input_scale());
    let steps = model.unroll(&targets[..cfg.observe_len], cfg.predict_len, cfg.output_mult());
    Ok(loss_of(&steps, &targets[1..], model.k))
}

fn loss_of(steps: &[StepCache], targets: &[Vec<f64>], k: usize) -> f64 {
    let total: f64 = steps
        .iter()
        .zip(targets)
        .map(|(s, t)| s.pred.iter().zip(t).map(|(p, y)| (p - y).powi(2)).sum::<f64>())
        .sum();
    total / (steps.len() * k) as f64
}

/// Loss and its gradient by backpropagation through the whole unroll,
/// including the autoregressive feedback path.
pub fn chunk_loss_and_grad(
    model: &ForecastModel,
    chunk: &[StateVector],
    cfg: &TrainConfig,
) -> Result<(f64, ForecastModel)> {
    check_chunk(model, chunk, cfg)?;
    let targets = scaled(chunk, cfg.input_scale());
    let out_mult = cfg.output_mult();
    let steps = model.unroll(&targets[..cfg.observe_len], cfg.predict_len, out_mult);
    let targets = &targets[1..];
    let loss = loss_of(&steps, targets, model.k);

    let mut grad = model.zeros_like();
    let norm = 2.0 / (steps.len() * model.k) as f64;
    let hd = model.hidden();
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    // gradient w.r.t. this step's prediction arriving from the next step's input
    let mut feedback: Option<Vec<f64>> = None;

    for t in (0..steps.len()).rev() {
        let step = &steps[t];
        let mut dpred: Vec<f64> = step
            .pred
            .iter()
            .zip(&targets[t])
            .map(|(p, y)| norm * (p - y))
            .collect();
        if let Some(fb) = feedback.take() {
            dpred.iter_mut().zip(&fb).for_each(|(d, f)| *d += f);
        }
        let dout: Vec<f64> = dpred.iter().map(|d| d * out_mult).collect();
        let mut dh = model
            .output_projection
            .backward(&step.h, &dout, &mut grad.output_projection);
        dh.iter_mut().zip(&dh_next).for_each(|(a, b)| *a += b);
        let (dcell_in, dh_prev, dc_prev) =
            model.cell.backward(&step.lstm, &dh, &dc_next, &mut grad.cell);
        dh_next = dh_prev;
        dc_next = dc_prev;
        let dprojected = match &step.norm {
            Some(cache) => model.obs_norm.backward(cache, &dcell_in, &mut grad.obs_norm),
            None => dcell_in,
        };
        let dinput = model
            .input_projection
            .backward(&step.input, &dprojected, &mut grad.input_projection);
        if step.norm.is_none() {
            feedback = Some(dinput);
        }
    }
    Ok((loss, grad))
}

/// Finite-difference check of [`chunk_loss_and_grad`] over every parameter.
pub fn grad_check_model(
    model: &ForecastModel,
    chunk: &[StateVector],
    cfg: &TrainConfig,
    h: f64,
) -> Result<GradCheckReport> {
    let (_, grad) = chunk_loss_and_grad(model, chunk, cfg)?;
    let mut probe = model.clone();
    Ok(gradcheck::check(&model.flat_params(), &grad.flat_params(), h, |p| {
        probe.set_flat_params(p);
        chunk_loss(&probe, chunk, cfg).expect("shapes checked above")
    }))
}

/// A chunk of consecutive encoded frames.
#[derive(Clone, Debug, PartialEq)]
pub struct StateChunk {
    pub id: usize,
    pub split: Split,
    pub start_frame: i64,
    pub states: Vec<StateVector>,
}

impl StateChunk {
    pub fn encode(chunk: &Chunk, codebook: &Codebook) -> StateChunk {
        StateChunk {
            id: chunk.id,
            split: chunk.split,
            start_frame: chunk.start_frame(),
            states: chunk
                .frames
                .iter()
                .map(|f| encode_frame(f, codebook, codebook.min_radius))
                .collect(),
        }
    }
}

pub fn encode_chunks(chunks: &[Chunk], codebook: &Codebook) -> Vec<StateChunk> {
    chunks.iter().map(|c| StateChunk::encode(c, codebook)).collect()
}

/// Cuts a stream of `(frame index, state)` rows into chunks and tags them with
/// the same contiguous split that frame chunking uses.
pub fn chunk_states(
    rows: &[(i64, StateVector)],
    chunk_len: usize,
    ratios: (usize, usize, usize),
) -> Vec<StateChunk> {
    let indices: Vec<i64> = rows.iter().map(|r| r.0).collect();
    let windows = data::chunk_windows(&indices, chunk_len);
    let counts = data::split_counts(windows.len(), ratios);
    windows
        .into_iter()
        .enumerate()
        .map(|(id, w)| StateChunk {
            id,
            split: data::split_for(id, counts),
            start_frame: rows[w.start].0,
            states: rows[w].iter().map(|r| r.1.clone()).collect(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ChunkEval {
    /// Training objective on this chunk.
    pub loss: f64,
    pub rollout: RolloutLoss,
    /// Plain MSE over the observation-window predictions.
    pub observe_unscaled: f64,
    /// Plain MSE over the prediction window.
    pub predict_unscaled: f64,
}

pub fn evaluate_chunk(model: &ForecastModel, chunk: &[StateVector], cfg: &TrainConfig) -> Result<ChunkEval> {
    check_chunk(model, chunk, cfg)?;
    let loss = chunk_loss(model, chunk, cfg)?;
    let pred = rollout_with(model, &chunk[..cfg.observe_len], cfg)?;
    let rollout = metrics::rollout_mse(&pred, &chunk[1..], cfg.alpha)?;
    let split = cfg.observe_len - 1;
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(ChunkEval {
        loss,
        observe_unscaled: mean(&rollout.per_step_unscaled[..split]),
        predict_unscaled: mean(&rollout.per_step_unscaled[split..]),
        rollout,
    })
}

/// Prediction-window MSE of repeating the last observed state.
pub fn persistence_mse(chunk: &[StateVector], cfg: &TrainConfig) -> Result<f64> {
    if chunk.len() != cfg.chunk_len() {
        return Err(Error::length("chunk", cfg.chunk_len(), chunk.len()));
    }
    let last = &chunk[cfg.observe_len - 1];
    let forecast = metrics::persistence_forecast(last, cfg.predict_len);
    Ok(metrics::rollout_mse(&forecast, &chunk[cfg.observe_len..], 1.0)?.mean_unscaled)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Plain MSE over the prediction window of the validation chunks.
    pub val_predict_unscaled: f64,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Checkpoint with the lowest validation loss.
    pub model: ForecastModel,
    pub best_epoch: Option<usize>,
    /// Parameters right after the first epoch, kept for progress comparisons.
    pub first_epoch: Option<ForecastModel>,
    pub history: Vec<EpochLog>,
}

fn mean_eval(model: &ForecastModel, chunks: &[StateChunk], cfg: &TrainConfig) -> Result<(f64, f64)> {
    if chunks.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut loss = 0.0;
    let mut pred = 0.0;
    for c in chunks {
        let e = evaluate_chunk(model, &c.states, cfg)?;
        loss += e.loss;
        pred += e.predict_unscaled;
    }
    let n = chunks.len() as f64;
    Ok((loss / n, pred / n))
}

/// Adam over shuffled mini-batches of chunks, keeping the best validation
/// checkpoint. Validation falls back to the training loss when `val` is
/// empty.
pub fn train(
    model: ForecastModel,
    train: &[StateChunk],
    val: &[StateChunk],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.check_shapes()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for c in train.iter().chain(val) {
        check_chunk(&model, &c.states, cfg)?;
    }

    let mut rng = seeded_rng(cfg.seed);
    let mut adam = Adam::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });
    let mut current = model;
    let mut best = current.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = None;
    let mut first_epoch = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for batch in order.chunks(cfg.batch_chunks) {
            let mut grad = current.zeros_like();
            for &i in batch {
                let (loss, g) = chunk_loss_and_grad(&current, &train[i].states, cfg)?;
                train_loss += loss;
                grad.add_params(&g);
            }
            grad.scale_params(1.0 / batch.len() as f64);
            if let Some(max_norm) = cfg.grad_clip {
                let norm = grad.sq_norm().sqrt();
                if norm > max_norm {
                    grad.scale_params(max_norm / norm);
                }
            }
            adam.step(&mut current, &grad)?;
        }
        if !current.all_finite() {
            return Err(Error::NonFinite(format!("forecaster parameters at epoch {epoch}")));
        }
        train_loss /= train.len() as f64;

        let (val_loss, val_pred) = if val.is_empty() {
            (train_loss, f64::NAN)
        } else {
            mean_eval(&current, val, cfg)?
        };
        log::info!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        history.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            val_predict_unscaled: val_pred,
            lr: cfg.lr,
        });
        if epoch == 1 {
            first_epoch = Some(current.clone());
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            best = current.clone();
            best_epoch = Some(epoch);
        }
        if let (Some(p), Some(b)) = (cfg.patience, best_epoch) {
            if epoch - b >= p {
                log::info!("no validation improvement for {p} epochs, stopping at {epoch}");
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model: best,
        best_epoch,
        first_epoch,
        history,
    })
}

pub fn write_training_log<W: std::io::Write>(mut out: W, history: &[EpochLog]) -> std::io::Result<()> {
    writeln!(out, "epoch,train_loss,val_loss,lr")?;
    for e in history {
        writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.lr)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Model files

const MODEL_FORMAT: &str = "swarmcast-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    k: usize,
    projection: usize,
    hidden: usize,
    config: TrainConfig,
    input_projection: Dense,
    obs_norm: LayerNorm,
    cell: LstmCell,
    output_projection: Dense,
}

/// A model together with the settings needed to run it (alpha, window
/// lengths, loss mode).
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub model: ForecastModel,
    pub config: TrainConfig,
}

pub fn model_to_json(model: &ForecastModel, config: &TrainConfig) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        k: model.k,
        projection: model.projection(),
        hidden: model.hidden(),
        config: config.clone(),
        input_projection: model.input_projection.clone(),
        obs_norm: model.obs_norm.clone(),
        cell: model.cell.clone(),
        output_projection: model.output_projection.clone(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn model_from_json(text: &str, origin: &str) -> Result<SavedModel> {
    let corrupt = |reason: String| Error::CorruptFile {
        path: origin.to_string(),
        reason,
    };
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    if value.get("format").and_then(|v| v.as_str()) != Some(MODEL_FORMAT) {
        return Err(corrupt("missing or unexpected format tag".into()));
    }
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch {
            what: "model",
            expected: MODEL_VERSION,
            found: version,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    let model = ForecastModel {
        k: file.k,
        input_projection: file.input_projection,
        obs_norm: file.obs_norm,
        cell: file.cell,
        output_projection: file.output_projection,
    };
    model.check_shapes().map_err(|e| corrupt(e.to_string()))?;
    if model.projection() != file.projection || model.hidden() != file.hidden {
        return Err(corrupt("declared widths disagree with parameter shapes".into()));
    }
    if !model.all_finite() {
        return Err(corrupt("non-finite parameters".into()));
    }
    file.config.validate()?;
    Ok(SavedModel {
        model,
        config: file.config,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &ForecastModel, config: &TrainConfig) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model, config) + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text, &path.display().to_string())
}
