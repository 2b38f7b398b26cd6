//! Domain types shared by the clustering, forecasting, and evaluation code.
//!
//! Positions are stored as `[x, y]` pairs in normalized map units, so every
//! coordinate of a validated frame lies in `[0, 1]`. Agents carry no identity:
//! the order of the agent list has no meaning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D position in normalized map units.
pub type Point = [f64; 2];

/// Seconds between consecutive frames in the reference recordings.
pub const FRAME_INTERVAL_S: f64 = 0.2;

/// Frames per chunk used for forecaster training.
pub const DEFAULT_CHUNK_LEN: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: i64,
    pub time_s: f64,
    pub agents: Vec<Point>,
    /// Optional per-agent owner id. Carried through for report coloring only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub players: Vec<i64>,
}

impl Frame {
    pub fn new(index: i64, agents: Vec<Point>) -> Self {
        Frame {
            index,
            time_s: index as f64 * FRAME_INTERVAL_S,
            agents,
            players: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

/// Checks that every coordinate is finite and inside the unit square.
pub fn validate_frame(frame: Frame) -> Result<Frame> {
    for p in &frame.agents {
        for &v in p {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("frame {}", frame.index)));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::CoordinateOutOfRange {
                    frame: frame.index,
                    value: v,
                });
            }
        }
    }
    if !frame.players.is_empty() && frame.players.len() != frame.agents.len() {
        return Err(Error::length(
            "player ids",
            frame.agents.len(),
            frame.players.len(),
        ));
    }
    Ok(frame)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split {other:?}"))),
        }
    }
}

/// A window of consecutive frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Chunk {
    pub id: usize,
    pub split: Split,
    pub frames: Vec<Frame>,
}

impl Chunk {
    pub fn new(id: usize, split: Split, frames: Vec<Frame>, chunk_len: usize) -> Result<Self> {
        if frames.len() != chunk_len {
            return Err(Error::length("chunk", chunk_len, frames.len()));
        }
        if frames.windows(2).any(|w| w[1].index != w[0].index + 1) {
            return Err(Error::InvalidConfig(format!(
                "chunk {id}: frame indices are not consecutive"
            )));
        }
        Ok(Chunk { id, split, frames })
    }

    pub fn start_frame(&self) -> i64 {
        self.frames.first().map_or(0, |f| f.index)
    }
}

/// Cluster centroids; row `j` is the weight vector of neuron `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    weights: Vec<Point>,
    pub min_radius: f64,
}

impl Codebook {
    pub fn new(weights: Vec<Point>, min_radius: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidK(0));
        }
        if weights.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codebook weights".into()));
        }
        if !(min_radius > 0.0 && min_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "min_radius must be positive, got {min_radius}"
            )));
        }
        Ok(Codebook {
            weights,
            min_radius,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Point] {
        &self.weights
    }

    /// Trainable parameter count of the clustering layer (k rows of 2).
    pub fn param_count(&self) -> usize {
        2 * self.k()
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Point] {
        &mut self.weights
    }
}

/// Per-neuron cluster radii; zero means the neuron is inactive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(k: usize) -> Self {
        StateVector(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Indices whose value exceeds `threshold`.
    pub fn active(&self, threshold: f64) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > threshold)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub neuron: usize,
    pub centroid: Point,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub source_frame: i64,
    pub clusters: Vec<Cluster>,
}
