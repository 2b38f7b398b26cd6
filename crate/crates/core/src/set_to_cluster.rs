//! Winner-take-all set-to-cluster encoder and its Hebbian training.
//!
//! Every agent position activates exactly one neuron, the one whose weight
//! vector is nearest. The neuron's state is the distance to that agent,
//! clamped below by `min_radius`. Max-pooling the per-agent states over a frame
//! gives one radius per neuron, so a frame becomes a fixed-width vector whose
//! nonzero entries are the active clusters.
//!
//! Training uses the instar rule restricted to winners: each neuron moves
//! toward the agents it won, scaled by `eta / N` where `N` counts every agent
//! in the batch.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::types::{Cluster, ClusterConfig, Codebook, Frame, Point, StateVector};
use crate::seeded_rng;

pub const MIN_RADIUS: f64 = 0.01;

/// Predicted radii at or below this are treated as inactive when decoding.
pub const DEFAULT_DECODE_THRESHOLD: f64 = 0.005;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HebbianConfig {
    pub k: usize,
    pub learning_rate: f64,
    pub batch_frames: usize,
    pub epochs: usize,
    pub seed: u64,
    pub min_radius: f64,
}

impl Default for HebbianConfig {
    fn default() -> Self {
        HebbianConfig {
            k: 64,
            learning_rate: 1.0,
            batch_frames: 16,
            epochs: 20,
            seed: 0,
            min_radius: MIN_RADIUS,
        }
    }
}

impl HebbianConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidK(self.k));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if self.batch_frames < 1 {
            return Err(Error::InvalidConfig("batch_frames must be >= 1".into()));
        }
        if !(self.min_radius > 0.0) {
            return Err(Error::InvalidConfig("min_radius must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WinnerResult {
    pub neuron_index: usize,
    pub distance: f64,
}

/// Uniform `[0, 1)` initialization of `k` centroids.
pub fn init_codebook(k: usize, seed: u64) -> Result<Codebook> {
    init_codebook_with_radius(k, seed, MIN_RADIUS)
}

pub fn init_codebook_with_radius(k: usize, seed: u64, min_radius: f64) -> Result<Codebook> {
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    let mut rng = seeded_rng(seed);
    let weights = (0..k)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    Codebook::new(weights, min_radius)
}

#[inline]
fn sq_dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Nearest neuron to `x`; ties go to the lowest index.
pub fn winner(x: Point, codebook: &Codebook) -> WinnerResult {
    let mut best = 0;
    let mut best_sq = f64::INFINITY;
    for (j, w) in codebook.weights().iter().enumerate() {
        let d = sq_dist(&x, w);
        if d < best_sq {
            best_sq = d;
            best = j;
        }
    }
    WinnerResult {
        neuron_index: best,
        distance: best_sq.sqrt(),
    }
}

/// One-hot state of a single agent: the winner carries its clamped distance.
pub fn agent_state(x: Point, codebook: &Codebook, min_radius: f64) -> StateVector {
    let w = winner(x, codebook);
    let mut s = StateVector::zeros(codebook.k());
    s.0[w.neuron_index] = w.distance.max(min_radius);
    s
}

/// Max-pooled state vector of a frame. Empty frames give all zeros.
pub fn encode_frame(frame: &Frame, codebook: &Codebook, min_radius: f64) -> StateVector {
    let mut pooled = vec![0.0; codebook.k()];
    for &x in &frame.agents {
        let w = winner(x, codebook);
        let r = w.distance.max(min_radius);
        if r > pooled[w.neuron_index] {
            pooled[w.neuron_index] = r;
        }
    }
    StateVector(pooled)
}

/// Winner index of every agent in the frame, in agent order.
pub fn assign_frame(frame: &Frame, codebook: &Codebook) -> Vec<usize> {
    frame
        .agents
        .iter()
        .map(|&x| winner(x, codebook).neuron_index)
        .collect()
}

/// Applies one Hebbian step over the pooled agents of `frames`.
///
/// Neurons that win no agent keep their weights. Returns
/// [`Error::EmptyBatch`] without touching anything when the batch holds no
/// agents.
pub fn hebbian_update(frames: &[Frame], codebook: &Codebook, eta: f64) -> Result<Codebook> {
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig("learning rate must be > 0".into()));
    }
    let k = codebook.k();
    let mut residual = vec![[0.0f64; 2]; k];
    let mut n = 0usize;
    for frame in frames {
        for &x in &frame.agents {
            let j = winner(x, codebook).neuron_index;
            let w = codebook.weights()[j];
            residual[j][0] += x[0] - w[0];
            residual[j][1] += x[1] - w[1];
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let scale = eta / n as f64;
    let mut next = codebook.clone();
    for (w, r) in next.weights_mut().iter_mut().zip(&residual) {
        w[0] += scale * r[0];
        w[1] += scale * r[1];
    }
    Ok(next)
}

#[derive(Clone, Debug)]
pub struct TrainedCodebook {
    pub codebook: Codebook,
    /// Held-out average distance before training followed by one entry per
    /// completed epoch.
    pub history: Vec<f64>,
    /// Set when an update produced non-finite weights. Training stops at the
    /// last finite codebook.
    pub diverged: bool,
}

/// Trains a freshly initialized codebook over `frames` in dataset order.
///
/// `heldout` is used for the per-epoch average distance; when it has no
/// agents the training frames are used instead.
pub fn train_codebook(
    frames: &[Frame],
    heldout: &[Frame],
    config: &HebbianConfig,
) -> Result<TrainedCodebook> {
    config.validate()?;
    let init = init_codebook_with_radius(config.k, config.seed, config.min_radius)?;
    train_codebook_from(init, frames, heldout, config)
}

pub fn train_codebook_from(
    mut codebook: Codebook,
    frames: &[Frame],
    heldout: &[Frame],
    config: &HebbianConfig,
) -> Result<TrainedCodebook> {
    config.validate()?;
    if frames.iter().all(Frame::is_empty) {
        return Err(Error::NoAgents);
    }
    let eval_set = if heldout.iter().any(|f| !f.is_empty()) {
        heldout
    } else {
        frames
    };
    let mut history = vec![metrics::avg_distance(eval_set, &codebook)?];
    let mut diverged = false;

    'epochs: for epoch in 0..config.epochs {
        for batch in frames.chunks(config.batch_frames) {
            match hebbian_update(batch, &codebook, config.learning_rate) {
                Ok(next) => {
                    if next.weights().iter().flatten().any(|v| !v.is_finite()) {
                        log::warn!("codebook diverged during epoch {epoch}");
                        diverged = true;
                        break 'epochs;
                    }
                    codebook = next;
                }
                Err(Error::EmptyBatch) => continue,
                Err(e) => return Err(e),
            }
        }
        let d = metrics::avg_distance(eval_set, &codebook)?;
        if !d.is_finite() {
            diverged = true;
            break;
        }
        history.push(d);
    }
    Ok(TrainedCodebook {
        codebook,
        history,
        diverged,
    })
}

/// Reads the cluster configuration straight out of a state vector.
pub fn decode(
    state: &StateVector,
    codebook: &Codebook,
    threshold: f64,
    source_frame: i64,
) -> Result<ClusterConfig> {
    if state.len() != codebook.k() {
        return Err(Error::length("state vector", codebook.k(), state.len()));
    }
    let clusters = state
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(i, &v)| Cluster {
            neuron: i,
            centroid: codebook.weights()[i],
            radius: v.max(codebook.min_radius),
        })
        .collect();
    Ok(ClusterConfig {
        source_frame,
        clusters,
    })
}

const CODEBOOK_FORMAT: &str = "swarmcast-codebook";
const CODEBOOK_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    format: String,
    version: u32,
    k: usize,
    min_radius: f64,
    weights: Vec<Point>,
}

pub fn codebook_to_json(codebook: &Codebook) -> String {
    let file = CodebookFile {
        format: CODEBOOK_FORMAT.into(),
        version: CODEBOOK_VERSION,
        k: codebook.k(),
        min_radius: codebook.min_radius,
        weights: codebook.weights().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("codebook serializes")
}

pub fn codebook_from_json(text: &str, origin: &str) -> Result<Codebook> {
    let corrupt = |reason: String| Error::CorruptFile {
        path: origin.to_string(),
        reason,
    };
    let file: CodebookFile = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    if file.format != CODEBOOK_FORMAT {
        return Err(corrupt(format!("unexpected format tag {:?}", file.format)));
    }
    if file.version != CODEBOOK_VERSION {
        return Err(Error::VersionMismatch {
            what: "codebook",
            expected: CODEBOOK_VERSION,
            found: file.version,
        });
    }
    if file.k != file.weights.len() {
        return Err(corrupt(format!(
            "k={} but {} weight rows",
            file.k,
            file.weights.len()
        )));
    }
    Codebook::new(file.weights, file.min_radius)
}

pub fn save_codebook(codebook: &Codebook, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, codebook_to_json(codebook) + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    codebook_from_json(&text, &path.display().to_string())
}
