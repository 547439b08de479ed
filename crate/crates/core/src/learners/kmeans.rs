use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{matrix_width, LearnerError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index of every training sample.
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each centroid update.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

fn inertia(x: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    x.iter()
        .zip(assignments)
        .map(|(r, &a)| sq_dist(r, &centroids[a]))
        .sum()
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x)
    }

    /// Number of training samples per cluster (may contain zeros).
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn inertia(&self, x: &[Vec<f64>]) -> f64 {
        inertia(x, &self.centroids, &self.assignments)
    }
}

/// Lloyd's algorithm.
///
/// Centroids start at `k` distinct samples drawn with a ChaCha8 stream
/// seeded by `seed`. A cluster that ends up empty takes over the sample
/// farthest from its current centroid. Iteration stops when assignments no
/// longer change or after `max_iters` updates.
pub fn fit_kmeans(x: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Result<KMeansModel> {
    matrix_width(x)?;
    if k == 0 {
        return Err(LearnerError::Parameter("k must be at least 1".into()));
    }
    if x.len() < k {
        return Err(LearnerError::Parameter(format!(
            "need at least k={k} samples, got {}",
            x.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, x.len(), k)
        .into_iter()
        .map(|i| x[i].clone())
        .collect();
    let mut assignments: Vec<usize> = x.iter().map(|r| nearest(&centroids, r)).collect();
    let mut inertia_history = Vec::new();

    for _ in 0..max_iters {
        reseed_empty(x, &centroids, &mut assignments, k);
        centroids = means(x, &assignments, k, &centroids);
        inertia_history.push(inertia(x, &centroids, &assignments));

        let next: Vec<usize> = x.iter().map(|r| nearest(&centroids, r)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }

    Ok(KMeansModel {
        centroids,
        assignments,
        inertia_history,
    })
}

fn reseed_empty(x: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize], k: usize) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        // Farthest sample whose cluster can spare it.
        let donor = (0..x.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&i, &j| {
                let di = sq_dist(&x[i], &centroids[assignments[i]]);
                let dj = sq_dist(&x[j], &centroids[assignments[j]]);
                di.total_cmp(&dj).then(j.cmp(&i))
            });
        if let Some(i) = donor {
            sizes[assignments[i]] -= 1;
            assignments[i] = empty;
            sizes[empty] = 1;
        }
    }
}

fn means(x: &[Vec<f64>], assignments: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (r, &a) in x.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(r) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(c, (s, n))| {
            if n == 0 {
                previous[c].clone()
            } else {
                s.into_iter().map(|v| v / n as f64).collect()
            }
        })
        .collect()
}
