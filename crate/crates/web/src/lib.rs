//! Browser bindings for a small interactive clustering demo.
//!
//! The page owns one [`ClusterDemo`]: a synthetic scene plus a codebook. It
//! can step through frames, run Hebbian epochs over the scene and re-seed the
//! codebook. Geometry comes back as flat `f64` arrays so JS can draw straight
//! from them.

use swarmcast::data::{synth_scenario, SynthConfig};
use swarmcast::metrics::{avg_distance, silhouette};
use swarmcast::set_to_cluster::{
    assign_frame, decode, encode_frame, init_codebook, train_codebook_from, HebbianConfig,
    DEFAULT_DECODE_THRESHOLD,
};
use swarmcast::{Codebook, Frame};
use wasm_bindgen::prelude::*;

const SCENE_FRAMES: usize = 600;

#[wasm_bindgen]
pub struct ClusterDemo {
    frames: Vec<Frame>,
    cursor: usize,
    codebook: Codebook,
    epochs: usize,
    seed: u32,
}

fn scene(seed: u32) -> Result<Vec<Frame>, String> {
    let cfg = SynthConfig {
        frames: SCENE_FRAMES,
        seed: seed.into(),
        ..SynthConfig::default()
    };
    synth_scenario(&cfg).map_err(|e| e.to_string())
}

#[wasm_bindgen]
impl ClusterDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(k: usize, seed: u32) -> Result<ClusterDemo, String> {
        Ok(ClusterDemo {
            frames: scene(seed)?,
            cursor: 0,
            codebook: init_codebook(k, seed.into()).map_err(|e| e.to_string())?,
            epochs: 0,
            seed,
        })
    }

    /// Advances `n` frames, wrapping at the end of the scene. Returns the new
    /// frame index.
    pub fn step(&mut self, n: usize) -> usize {
        self.cursor = (self.cursor + n) % self.frames.len();
        self.cursor
    }

    pub fn frame_index(&self) -> usize {
        self.cursor
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn k(&self) -> usize {
        self.codebook.k()
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// Agent positions of the current frame as `[x0, y0, x1, y1, ...]`.
    pub fn agents(&self) -> Vec<f64> {
        self.frames[self.cursor].agents.iter().flatten().copied().collect()
    }

    /// Winning neuron of each agent in the current frame.
    pub fn labels(&self) -> Vec<u32> {
        assign_frame(&self.frames[self.cursor], &self.codebook)
            .into_iter()
            .map(|l| l as u32)
            .collect()
    }

    /// Clusters read from the current frame's state as `[x, y, r, ...]`.
    pub fn clusters(&self) -> Vec<f64> {
        let state = encode_frame(&self.frames[self.cursor], &self.codebook, self.codebook.min_radius);
        decode(&state, &self.codebook, DEFAULT_DECODE_THRESHOLD, self.cursor as i64)
            .map(|cfg| cfg.clusters.iter().flat_map(|c| [c.centroid[0], c.centroid[1], c.radius]).collect())
            .unwrap_or_default()
    }

    /// All neuron positions as `[x0, y0, ...]`.
    pub fn weights(&self) -> Vec<f64> {
        self.codebook.weights().iter().flatten().copied().collect()
    }

    /// One Hebbian pass over the whole scene with learning rate `eta`.
    /// Returns the mean agent-to-winner distance afterwards.
    pub fn train_epoch(&mut self, eta: f64) -> Result<f64, String> {
        let cfg = HebbianConfig {
            k: self.codebook.k(),
            learning_rate: eta,
            epochs: 1,
            seed: u64::from(self.seed) + self.epochs as u64,
            min_radius: self.codebook.min_radius,
            ..HebbianConfig::default()
        };
        let out = train_codebook_from(self.codebook.clone(), &self.frames, &self.frames, &cfg)
            .map_err(|e| e.to_string())?;
        self.codebook = out.codebook;
        self.epochs += 1;
        self.distance()
    }

    /// Mean agent-to-winner distance over the scene.
    pub fn distance(&self) -> Result<f64, String> {
        avg_distance(&self.frames, &self.codebook).map_err(|e| e.to_string())
    }

    /// Fresh random codebook with `k` neurons; the scene is kept.
    pub fn reset(&mut self, k: usize, seed: u32) -> Result<(), String> {
        self.codebook = init_codebook(k, seed.into()).map_err(|e| e.to_string())?;
        self.seed = seed;
        self.epochs = 0;
        Ok(())
    }

    /// Mean silhouette of the current frame under the winner labels, or NaN
    /// when fewer than two neurons win.
    pub fn silhouette(&self) -> f64 {
        let frame = &self.frames[self.cursor];
        silhouette(&frame.agents, &self.labels().iter().map(|&l| l as usize).collect::<Vec<_>>())
            .map_or(f64::NAN, |r| r.mean)
    }
}
