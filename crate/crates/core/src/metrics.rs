//! Evaluation metrics: centroid-agent distance, Silhouette, cluster counts,
//! and rollout error.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::set_to_cluster::winner;
use crate::types::{Codebook, Frame, Point, StateVector};

/// Mean distance from the agents of one frame to their nearest centroid.
/// `None` for an empty frame.
pub fn frame_distance(frame: &Frame, codebook: &Codebook) -> Option<f64> {
    if frame.agents.is_empty() {
        return None;
    }
    let total: f64 = frame
        .agents
        .iter()
        .map(|&x| winner(x, codebook).distance)
        .sum();
    Some(total / frame.agents.len() as f64)
}

/// Per-frame average distance, averaged again over the non-empty frames.
pub fn avg_distance(frames: &[Frame], codebook: &Codebook) -> Result<f64> {
    let (sum, count) = frames
        .iter()
        .filter_map(|f| frame_distance(f, codebook))
        .fold((0.0, 0usize), |(s, c), d| (s + d, c + 1));
    if count == 0 {
        return Err(Error::NoAgents);
    }
    Ok(sum / count as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct SilhouetteReport {
    pub per_point: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Silhouette score of a labeled point set.
///
/// Members of singleton clusters score 0. Labels may be any indices; only the
/// clusters that actually occur count.
pub fn silhouette(points: &[Point], labels: &[usize]) -> Result<SilhouetteReport> {
    if points.len() != labels.len() {
        return Err(Error::length("labels", points.len(), labels.len()));
    }
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; n_labels];
    for &l in labels {
        sizes[l] += 1;
    }
    let present = sizes.iter().filter(|&&s| s > 0).count();
    if present < 2 {
        return Err(Error::SingleCluster(present));
    }

    let mut sums = vec![0.0f64; n_labels];
    let per_point: Vec<f64> = points
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, &own))| {
            if sizes[own] == 1 {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for (j, (q, &l)) in points.iter().zip(labels).enumerate() {
                if j != i {
                    sums[l] += dist(p, q);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..n_labels)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();

    let n = per_point.len() as f64;
    let mean = per_point.iter().sum::<f64>() / n;
    let var = per_point.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(SilhouetteReport {
        per_point,
        mean,
        std: var.sqrt(),
    })
}

/// Number of entries strictly above `threshold`.
pub fn cluster_count(state: &StateVector, threshold: f64) -> usize {
    state.values().iter().filter(|&&v| v > threshold).count()
}

/// Intersection over union of two index sets. Two empty sets score 1.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    use std::collections::BTreeSet;
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct RolloutLoss {
    /// Per-step loss with both terms multiplied by alpha.
    pub per_step_scaled: Vec<f64>,
    /// Per-step plain MSE, comparable across alpha values.
    pub per_step_unscaled: Vec<f64>,
    pub mean_scaled: f64,
    pub mean_unscaled: f64,
}

pub fn rollout_mse(
    predicted: &[StateVector],
    truth: &[StateVector],
    alpha: f64,
) -> Result<RolloutLoss> {
    if predicted.len() != truth.len() {
        return Err(Error::length("rollout steps", truth.len(), predicted.len()));
    }
    let mut per_step_scaled = Vec::with_capacity(truth.len());
    let mut per_step_unscaled = Vec::with_capacity(truth.len());
    for (p, t) in predicted.iter().zip(truth) {
        if p.len() != t.len() {
            return Err(Error::length("state width", t.len(), p.len()));
        }
        let k = t.len().max(1) as f64;
        let (mut scaled, mut plain) = (0.0, 0.0);
        for (&s_hat, &s) in p.values().iter().zip(t.values()) {
            scaled += (alpha * s - alpha * s_hat).powi(2);
            plain += (s - s_hat).powi(2);
        }
        per_step_scaled.push(scaled / k);
        per_step_unscaled.push(plain / k);
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(RolloutLoss {
        mean_scaled: mean(&per_step_scaled),
        mean_unscaled: mean(&per_step_unscaled),
        per_step_scaled,
        per_step_unscaled,
    })
}

/// Repeats the last observed state over the horizon.
pub fn persistence_forecast(last_observed: &StateVector, horizon: usize) -> Vec<StateVector> {
    vec![last_observed.clone(); horizon]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub chunk_id: Option<usize>,
    pub frame_index: Option<i64>,
    pub metric: String,
    pub value: f64,
}

impl MetricRow {
    pub fn new(chunk_id: Option<usize>, frame_index: Option<i64>, metric: &str, value: f64) -> Self {
        MetricRow {
            chunk_id,
            frame_index,
            metric: metric.to_string(),
            value,
        }
    }
}

/// Writes `chunk_id,frame_index,metric,value` rows; missing ids are blank.
pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricRow]) -> std::io::Result<()> {
    writeln!(out, "chunk_id,frame_index,metric,value")?;
    for r in rows {
        let chunk = r.chunk_id.map(|c| c.to_string()).unwrap_or_default();
        let frame = r.frame_index.map(|f| f.to_string()).unwrap_or_default();
        writeln!(out, "{chunk},{frame},{},{}", r.metric, r.value)?;
    }
    Ok(())
}
