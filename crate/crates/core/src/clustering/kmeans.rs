use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClusterAssignment;
use crate::linalg::{squared_distance, Matrix};
use crate::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 300;
/// Independent k-means++ restarts; the lowest-inertia run wins.
pub const RESTARTS: usize = 10;

fn plus_plus_init(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut centers = Vec::with_capacity(k);
    centers.push(points.row(rng.random_range(0..n)).to_vec());
    let mut nearest: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (d, p) in nearest.iter_mut().zip(points.iter_rows()) {
            *d = d.min(squared_distance(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &Matrix, centers: &[Vec<f64>], labels: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, p) in points.iter_rows().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.iter().enumerate() {
            let d = squared_distance(p, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if labels[i] != best {
            labels[i] = best;
            changed = true;
        }
        inertia += best_d;
    }
    (changed, inertia)
}

/// Gives every empty cluster the point farthest from its own center, taken
/// from a cluster that can spare it. Needs `points.rows() >= k`.
fn fill_empty(points: &Matrix, k: usize, labels: &mut [usize], centers: &mut [Vec<f64>]) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..points.rows())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&i, &j| {
                let di = squared_distance(points.row(i), &centers[labels[i]]);
                let dj = squared_distance(points.row(j), &centers[labels[j]]);
                di.total_cmp(&dj).then(j.cmp(&i))
            })
            .expect("n >= k leaves a cluster with a spare point");
        counts[labels[far]] -= 1;
        labels[far] = c;
        counts[c] = 1;
        centers[c] = points.row(far).to_vec();
    }
}

fn update_centers(points: &Matrix, labels: &[usize], centers: &mut [Vec<f64>]) {
    let dim = points.cols();
    let k = centers.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter_rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for (dst, s) in centers[c].iter_mut().zip(&sums[c]) {
                *dst = s / counts[c] as f64;
            }
        }
    }
}

fn lloyd(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let mut centers = plus_plus_init(points, k, rng);
    let mut labels = vec![usize::MAX; points.rows()];
    let mut inertia = assign(points, &centers, &mut labels).1;
    for _ in 0..MAX_LLOYD_ITERATIONS {
        fill_empty(points, k, &mut labels, &mut centers);
        update_centers(points, &labels, &mut centers);
        let (changed, new_inertia) = assign(points, &centers, &mut labels);
        inertia = new_inertia;
        if !changed {
            break;
        }
    }
    fill_empty(points, k, &mut labels, &mut centers);
    (labels, inertia)
}

/// Seeded k-means: k-means++ initialization, Lloyd iterations to a fixpoint.
pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if points.rows() < k {
        return Err(Error::InvalidParameter(format!(
            "{} points cannot form {k} clusters",
            points.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..RESTARTS {
        let run = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| run.1 < *b) {
            best = Some(run);
        }
    }
    let (labels, _) = best.expect("at least one restart");
    Ok(ClusterAssignment { labels, k })
}

/// Sum of squared distances from each point to its cluster mean.
pub fn inertia(points: &Matrix, a: &ClusterAssignment) -> f64 {
    let dim = points.cols();
    let mut sums = vec![vec![0.0; dim]; a.k];
    let mut counts = vec![0usize; a.k];
    for (p, &l) in points.iter_rows().zip(&a.labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    points
        .iter_rows()
        .zip(&a.labels)
        .map(|(p, &l)| {
            let center: Vec<f64> = sums[l].iter().map(|s| s / counts[l] as f64).collect();
            squared_distance(p, &center)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_points() -> Matrix {
        Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.0], [10.0, 10.0], [10.1, 10.0]]).unwrap()
    }

    #[test]
    fn pairs_found_and_optimal_over_all_partitions() {
        let pts = four_points();
        let got = kmeans(&pts, 2, 0).unwrap();
        assert_eq!(got.labels[0], got.labels[1]);
        assert_eq!(got.labels[2], got.labels[3]);
        assert_ne!(got.labels[0], got.labels[2]);

        // Exhaustive oracle: every non-trivial 2-partition of 4 points.
        let got_cost = inertia(&pts, &got);
        for mask in 1u32..15 {
            let labels: Vec<usize> = (0..4).map(|i| ((mask >> i) & 1) as usize).collect();
            let cand = ClusterAssignment { labels, k: 2 };
            assert!(got_cost <= inertia(&pts, &cand) + 1e-12);
        }
    }

    #[test]
    fn k_equals_n() {
        let pts = four_points();
        let a = kmeans(&pts, 4, 3).unwrap();
        let mut l = a.labels.clone();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
        assert_eq!(inertia(&pts, &a), 0.0);
    }

    #[test]
    fn seeded() {
        let pts = Matrix::from_rows(&(0..30).map(|i| [(i % 7) as f64, (i / 7) as f64]).collect::<Vec<_>>()).unwrap();
        assert_eq!(kmeans(&pts, 3, 9).unwrap(), kmeans(&pts, 3, 9).unwrap());
    }

    #[test]
    fn too_few_points() {
        assert!(kmeans(&four_points(), 5, 0).is_err());
        assert!(kmeans(&four_points(), 0, 0).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = Matrix::from_rows(&[[1.0], [1.0], [1.0], [1.0]]).unwrap();
        let a = kmeans(&pts, 3, 0).unwrap();
        assert_eq!(a.sizes().iter().filter(|&&s| s > 0).count(), 3);
    }
}
