//! Lloyd's k-means with farthest-first seeding.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdaError};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub seed: u64,
    /// Inertia after each assignment step.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Clustering {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lower index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Greedy k-center seeding from a seeded random first point.
fn farthest_first(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed);
    let first = rng.gen_range(0..points.len());
    let mut centroids = vec![points[first].clone()];
    let mut min_d: Vec<f64> = points.par_iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let mut far = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[far] {
                far = i;
            }
        }
        let c = points[far].clone();
        min_d.par_iter_mut().zip(points.par_iter()).for_each(|(m, p)| {
            let d = sq_dist(p, &c);
            if d < *m {
                *m = d;
            }
        });
        centroids.push(c);
    }
    centroids
}

/// Clusters `points` into `k` groups.
///
/// An empty cluster is re-seeded at the point farthest from its current
/// centroid (among clusters with more than one member).
pub fn kmeans(points: &[Vec<f64>], params: KMeansParams) -> Result<Clustering> {
    let KMeansParams { k, seed, max_iter, tol } = params;
    if k == 0 {
        return Err(SdaError::Config("k-means needs k >= 1".into()));
    }
    if k > points.len() {
        return Err(SdaError::Data(format!("k-means: k = {k} exceeds {} points", points.len())));
    }
    let dim = points[0].len();
    let mut centroids = farthest_first(points, k, seed);
    let mut assignments = vec![0usize; points.len()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let near: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
        let mut dists = Vec::with_capacity(points.len());
        for (i, (c, d)) in near.into_iter().enumerate() {
            assignments[i] = c;
            dists.push(d);
        }
        reseed_empty(points, &mut assignments, &mut dists, &mut centroids);
        trace.push(dists.iter().sum());

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let n = counts[c] as f64;
            let new: Vec<f64> = sums[c].iter().map(|s| s / n).collect();
            shift = shift.max(sq_dist(&new, &centroids[c]).sqrt());
            centroids[c] = new;
        }
        if shift < tol {
            converged = true;
            break;
        }
    }

    // Final assignment against the final centroids.
    let near: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
    let mut dists = Vec::with_capacity(points.len());
    for (i, (c, d)) in near.into_iter().enumerate() {
        assignments[i] = c;
        dists.push(d);
    }
    reseed_empty(points, &mut assignments, &mut dists, &mut centroids);
    let inertia: f64 = dists.iter().sum();
    trace.push(inertia);

    Ok(Clustering {
        k,
        assignments,
        centroids,
        inertia,
        seed,
        inertia_trace: trace,
        iterations,
        converged,
    })
}

fn reseed_empty(points: &[Vec<f64>], assignments: &mut [usize], dists: &mut [f64], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far: Option<usize> = None;
        for i in 0..points.len() {
            if counts[assignments[i]] > 1 && far.map_or(true, |f| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        let Some(far) = far else { return };
        centroids[empty] = points[far].clone();
        assignments[far] = empty;
        dists[far] = 0.0;
    }
}
