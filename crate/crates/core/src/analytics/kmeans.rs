use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

const MAX_ITER: usize = 300;
const TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares at convergence.
    pub wcss: f64,
    /// Objective after every assignment step, first to last.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
}

/// z-score each dimension; constant dimensions become zero.
pub fn standardize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(dim) = points.first().map(Vec::len) else {
        return Vec::new();
    };
    let n = points.len() as f64;
    let mut out = points.to_vec();
    for j in 0..dim {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let sd = (points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for p in &mut out {
            p[j] = if sd > 0.0 { (p[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn seed_centroids(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, 0, Stream::Analytics);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// Lloyd's k-means with k-means++ seeding from a seeded stream.
pub fn kmeans_cluster(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    if k < 1 {
        return Err(Error::domain("k must be >= 1"));
    }
    if k > points.len() {
        return Err(Error::domain(format!(
            "k = {k} exceeds {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::domain("points have inconsistent dimension"));
    }
    let mut centroids = seed_centroids(points, k, seed);
    let mut assignment = vec![0; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut wcss = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignment[i] = c;
            wcss += d;
        }
        history.push(wcss);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for j in 0..dim {
                sums[c][j] += p[j];
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            // an empty cluster keeps its previous centroid
            if counts[c] == 0 {
                continue;
            }
            let next: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift < TOL || iterations >= MAX_ITER {
            break;
        }
    }
    let wcss = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    Ok(KMeansResult {
        assignment,
        centroids,
        wcss,
        wcss_history: history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 9.0]];
        let r = kmeans_cluster(&pts, 1, 11).unwrap();
        assert_eq!(r.assignment, vec![0, 0, 0]);
        assert!((r.centroids[0][0] - 3.0).abs() < 1e-12);
        assert!((r.centroids[0][1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn separated_blobs_recovered_up_to_relabeling() {
        let mut rng = substream(99, 0, Stream::Analytics);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let centre = if i % 2 == 0 { -10.0 } else { 10.0 };
            pts.push(vec![
                centre + noise.sample(&mut rng),
                centre + noise.sample(&mut rng),
            ]);
            labels.push(i % 2);
        }
        let r = kmeans_cluster(&pts, 2, 5).unwrap();
        let direct = r.assignment.iter().zip(&labels).all(|(a, b)| a == b);
        let swapped = r.assignment.iter().zip(&labels).all(|(a, b)| *a == 1 - b);
        assert!(direct || swapped);
    }

    #[test]
    fn duplicated_points_share_assignment() {
        let base: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 5) as f64])
            .collect();
        let mut pts = base.clone();
        pts.extend(base.iter().cloned());
        let r = kmeans_cluster(&pts, 3, 1).unwrap();
        for i in 0..base.len() {
            assert_eq!(r.assignment[i], r.assignment[i + base.len()]);
        }
    }

    #[test]
    fn deterministic_and_rejects_large_k() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()])
            .collect();
        assert_eq!(
            kmeans_cluster(&pts, 4, 3).unwrap(),
            kmeans_cluster(&pts, 4, 3).unwrap()
        );
        assert!(kmeans_cluster(&pts, 31, 3).is_err());
        assert!(kmeans_cluster(&pts, 0, 3).is_err());
    }

    #[test]
    fn standardize_gives_unit_variance() {
        let pts = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let z = standardize(&pts);
        let var: f64 = z.iter().map(|p| p[0] * p[0]).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|p| p[1] == 0.0));
    }
}
