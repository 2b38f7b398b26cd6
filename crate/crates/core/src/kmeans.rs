//! Lloyd's k-means, kept as a reference for the Hebbian encoder.
//!
//! Empty clusters keep their previous centroid, which is the same rule the
//! Hebbian update applies to neurons that win nothing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{Codebook, Point};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct KMeansResult {
    pub centroids: Vec<Point>,
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub inertia: f64,
    /// Inertia measured at each assignment step.
    pub inertia_history: Vec<f64>,
}

/// Nearest centroid for every point, lowest index on ties.
pub fn assign(points: &[Point], centroids: &[Point]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = (0usize, f64::INFINITY);
            for (j, c) in centroids.iter().enumerate() {
                let dx = p[0] - c[0];
                let dy = p[1] - c[1];
                let d = dx * dx + dy * dy;
                if d < best.1 {
                    best = (j, d);
                }
            }
            best.0
        })
        .collect()
}

fn inertia(points: &[Point], centroids: &[Point], labels: &[usize]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let dx = p[0] - centroids[l][0];
            let dy = p[1] - centroids[l][1];
            dx * dx + dy * dy
        })
        .sum()
}

pub fn lloyd(
    points: &[Point],
    k: usize,
    init: &Codebook,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    if init.k() != k {
        return Err(Error::length("initial centroids", k, init.k()));
    }

    let mut centroids = init.weights().to_vec();
    let mut labels = assign(points, &centroids);
    let mut inertia_history = vec![inertia(points, &centroids, &labels)];
    let mut iterations = 0;

    while iterations < max_iter {
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            counts[l] += 1;
        }
        let mut shift = 0.0f64;
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let next = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            let dx = next[0] - centroids[j][0];
            let dy = next[1] - centroids[j][1];
            shift = shift.max((dx * dx + dy * dy).sqrt());
            centroids[j] = next;
        }
        iterations += 1;
        labels = assign(points, &centroids);
        inertia_history.push(inertia(points, &centroids, &labels));
        if shift < tol {
            break;
        }
    }

    Ok(KMeansResult {
        inertia: *inertia_history.last().expect("non-empty history"),
        centroids,
        labels,
        iterations,
        inertia_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set_to_cluster::MIN_RADIUS;
    use approx::assert_abs_diff_eq;

    fn cb(w: Vec<Point>) -> Codebook {
        Codebook::new(w, MIN_RADIUS).unwrap()
    }

    #[test]
    fn two_blobs_converge_to_their_means() {
        let a = [[0.09, 0.1], [0.11, 0.1], [0.1, 0.12]];
        let b = [[0.9, 0.88], [0.91, 0.9], [0.89, 0.92], [0.9, 0.9]];
        let points: Vec<Point> = a.iter().chain(b.iter()).copied().collect();
        let res = lloyd(&points, 2, &cb(vec![[0.3, 0.3], [0.6, 0.6]]), 100, DEFAULT_TOL).unwrap();
        let mean = |s: &[Point]| {
            [
                s.iter().map(|p| p[0]).sum::<f64>() / s.len() as f64,
                s.iter().map(|p| p[1]).sum::<f64>() / s.len() as f64,
            ]
        };
        let (ma, mb) = (mean(&a), mean(&b));
        assert_abs_diff_eq!(res.centroids[0][0], ma[0], epsilon = 1e-12);
        assert_abs_diff_eq!(res.centroids[0][1], ma[1], epsilon = 1e-12);
        assert_abs_diff_eq!(res.centroids[1][0], mb[0], epsilon = 1e-12);
        assert_abs_diff_eq!(res.centroids[1][1], mb[1], epsilon = 1e-12);
        assert_eq!(res.labels, vec![0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let points = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.9]];
        let one = lloyd(&points, 1, &cb(vec![[0.2, 0.2]]), 1, DEFAULT_TOL).unwrap();
        assert_eq!(one.iterations, 1);
        assert_abs_diff_eq!(one.centroids[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(one.centroids[0][1], 0.3, epsilon = 1e-15);
        let full = lloyd(&points, 1, &cb(vec![[0.2, 0.2]]), 50, DEFAULT_TOL).unwrap();
        assert_eq!(full.centroids, one.centroids);
        assert_eq!(full.iterations, 2);
    }

    #[test]
    fn identical_points_have_zero_inertia() {
        let points = vec![[0.5, 0.25]; 8];
        let res = lloyd(&points, 3, &cb(vec![[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]), 20, DEFAULT_TOL)
            .unwrap();
        assert_eq!(res.inertia, 0.0);
        // clusters 0 and 2 are empty and keep their seeds
        assert_eq!(res.centroids[0], [0.0, 0.0]);
        assert_eq!(res.centroids[2], [1.0, 1.0]);
    }

    #[test]
    fn assign_edge_cases() {
        assert!(assign(&[], &[[0.0, 0.0]]).is_empty());
        assert_eq!(assign(&[[0.3, 0.9], [0.1, 0.1]], &[[0.5, 0.5]]), vec![0, 0]);
        // tie goes to the lower index
        assert_eq!(assign(&[[0.5, 0.5]], &[[0.0, 0.5], [1.0, 0.5]]), vec![0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            lloyd(&[], 1, &cb(vec![[0.0, 0.0]]), 10, DEFAULT_TOL),
            Err(Error::NoPoints)
        ));
        assert!(matches!(
            lloyd(&[[0.1, 0.1]], 2, &cb(vec![[0.0, 0.0]]), 10, DEFAULT_TOL),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
