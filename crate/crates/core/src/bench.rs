//! Wall-clock comparison of the trained encoder against refitting Lloyd's
//! k-means on every frame.
//!
//! Encoding a frame is one pass of n×k distance evaluations. A per-frame
//! Lloyd refit costs that much per iteration, so its time also scales with
//! the iteration budget.

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kmeans::lloyd;
use crate::seeded_rng;
use crate::set_to_cluster::{encode_frame, init_codebook};
use crate::types::{Codebook, Frame};

#[derive(Clone, Debug, Serialize)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    /// Fixed Lloyd iteration budgets to time.
    pub lloyd_iters: Vec<usize>,
    pub frames: usize,
    /// Timing repeats; the median is reported.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ns: vec![100, 400],
            ks: vec![16, 32, 64, 128],
            lloyd_iters: vec![1, 5, 20],
            frames: 200,
            repeats: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub lloyd_iters: usize,
    pub encoder_ns_per_frame: f64,
    pub lloyd_ns_per_frame: f64,
}

pub fn random_frames(n: usize, frames: usize, seed: u64) -> Vec<Frame> {
    let mut rng = seeded_rng(seed);
    (0..frames)
        .map(|i| {
            let agents = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            Frame::new(i as i64, agents)
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Median per-frame encoding time in nanoseconds.
pub fn time_encoder(frames: &[Frame], codebook: &Codebook, repeats: usize) -> f64 {
    let runs = (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            for f in frames {
                black_box(encode_frame(black_box(f), codebook, codebook.min_radius));
            }
            start.elapsed().as_nanos() as f64 / frames.len().max(1) as f64
        })
        .collect();
    median(runs)
}

/// Median per-frame time of a Lloyd refit running exactly `iters` iterations.
pub fn time_lloyd(frames: &[Frame], init: &Codebook, iters: usize, repeats: usize) -> Result<f64> {
    let mut runs = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        for f in frames {
            // a negative tolerance never triggers the early stop
            black_box(lloyd(black_box(&f.agents), init.k(), init, iters, -1.0)?);
        }
        runs.push(start.elapsed().as_nanos() as f64 / frames.len().max(1) as f64);
    }
    Ok(median(runs))
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.ns.contains(&0) || cfg.frames == 0 {
        return Err(Error::InvalidConfig("bench needs n >= 1 and frames >= 1".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let frames = random_frames(n, cfg.frames, cfg.seed);
        for &k in &cfg.ks {
            let codebook = init_codebook(k, cfg.seed.wrapping_add(1))?;
            let enc = time_encoder(&frames, &codebook, cfg.repeats);
            for &iters in &cfg.lloyd_iters {
                let ll = time_lloyd(&frames, &codebook, iters, cfg.repeats)?;
                rows.push(BenchRow {
                    n,
                    k,
                    lloyd_iters: iters,
                    encoder_ns_per_frame: enc,
                    lloyd_ns_per_frame: ll,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(mut out: W, rows: &[BenchRow]) -> std::io::Result<()> {
    writeln!(out, "n,k,lloyd_iters,encoder_ns_per_frame,lloyd_ns_per_frame")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.1},{:.1}",
            r.n, r.k, r.lloyd_iters, r.encoder_ns_per_frame, r.lloyd_ns_per_frame
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_cover_the_grid() {
        let cfg = BenchConfig {
            ns: vec![10],
            ks: vec![2, 4],
            lloyd_iters: vec![1, 3],
            frames: 5,
            repeats: 1,
            seed: 0,
        };
        let rows = run_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.encoder_ns_per_frame > 0.0 && r.lloyd_ns_per_frame > 0.0));
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
