use rand::Rng;

use super::svm::squared_distance;
use crate::error::{Error, Result};
use crate::rng::{seeded_stream, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            restarts: 10,
            max_iterations: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

pub fn kmeans(x: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_with(x, k, seed, KMeansOptions::default())
}

/// Best of `options.restarts` k-means++ initialized Lloyd runs.
pub fn kmeans_with(x: &[Vec<f64>], k: usize, seed: u64, options: KMeansOptions) -> Result<KMeansResult> {
    if k == 0 || k > x.len() {
        return Err(Error::InvalidInput(format!("cannot form {k} clusters from {} points", x.len())));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::ContractViolation("points have different dimensions".into()));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..options.restarts.max(1) {
        let mut rng = seeded_stream(seed, r as u64);
        let run = lloyd(x, plus_plus(x, k, &mut rng), options.max_iterations);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means++ seeding: each new centre is drawn with probability
/// proportional to the squared distance to the nearest chosen centre.
fn plus_plus(x: &[Vec<f64>], k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let mut centroids = vec![x[rng.random_range(0..x.len())].clone()];
    let mut nearest: Vec<f64> = x.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = x.len() - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..x.len())
        };
        centroids.push(x[pick].clone());
        for (n, p) in nearest.iter_mut().zip(x) {
            *n = n.min(squared_distance(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn assign(x: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    x.iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (c, m) in centroids.iter().enumerate() {
                let d = squared_distance(p, m);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn lloyd(x: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iterations: usize) -> KMeansResult {
    let k = centroids.len();
    let d = x[0].len();
    let (mut assignments, mut dist) = assign(x, &centroids);
    let mut history = Vec::new();
    for _ in 0..max_iterations {
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in x.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Move the point worst served by its centre into the empty cluster.
                let mut far = 0;
                for i in 1..x.len() {
                    if dist[i] > dist[far] {
                        far = i;
                    }
                }
                let old = assignments[far];
                counts[old] -= 1;
                for (s, v) in sums[old].iter_mut().zip(&x[far]) {
                    *s -= v;
                }
                assignments[far] = c;
                dist[far] = 0.0;
                counts[c] = 1;
                sums[c] = x[far].clone();
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let (next, next_dist) = assign(x, &centroids);
        history.push(next_dist.iter().sum());
        let settled = next == assignments;
        assignments = next;
        dist = next_dist;
        if settled {
            break;
        }
    }
    KMeansResult {
        inertia: dist.iter().sum(),
        centroids,
        assignments,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_clusters_on_a_line() {
        let r = kmeans(&points(&[0.0, 1.0, 9.0, 10.0]), 2, 0).unwrap();
        let mut c: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.5, 9.5]);
        assert_eq!(r.inertia, 1.0);
    }

    #[test]
    fn k_equals_n_and_k_one() {
        let x = points(&[3.0, -1.0, 7.5]);
        assert_eq!(kmeans(&x, 3, 1).unwrap().inertia, 0.0);
        let one = kmeans(&x, 1, 1).unwrap();
        assert!((one.centroids[0][0] - 9.5 / 3.0).abs() < 1e-12);
        assert!(kmeans(&x, 4, 1).is_err());
        assert!(kmeans(&x, 0, 1).is_err());
    }

    #[test]
    fn inertia_never_increases() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 1.3).sin() * 4.0, (i as f64 * 0.7).cos()]).collect();
        let r = kmeans(&x, 5, 9).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert_eq!(r.centroids.len(), 5);
    }

    #[test]
    fn duplicate_points_fill_every_cluster() {
        let x = points(&[1.0, 1.0, 1.0, 2.0]);
        let r = kmeans(&x, 3, 4).unwrap();
        assert_eq!(r.inertia, 0.0);
    }
}
