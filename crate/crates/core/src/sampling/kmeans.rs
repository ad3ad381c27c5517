use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, IndexSet};
use crate::rng;

/// Indices of the data points (rows of `points`) nearest to the centroids of
/// `iters` Lloyd iterations started from `s` seeded random points chosen by
/// k-means++.
///
/// A centroid whose cluster empties is moved to the point farthest from its
/// own centroid. Each centroid claims its nearest point not already claimed
/// by an earlier centroid.
pub fn kmeans_sample(points: &DenseMatrix, s: usize, iters: usize, seed: u64) -> Result<IndexSet> {
    let n = points.rows();
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("sample size {s} outside 1..={n}")));
    }
    // One point per column keeps distance evaluations contiguous.
    let x = points.as_nalgebra().transpose();
    let start = seed_points(&x, s, seed);
    let mut centroids = x.select_columns(&start);
    let mut assign = vec![usize::MAX; n];
    for _ in 0..iters {
        let mut changed = false;
        for (i, slot) in assign.iter_mut().enumerate() {
            let c = nearest(&centroids, &x, i);
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        update_centroids(&x, &assign, &mut centroids);
    }

    let mut claimed = vec![false; n];
    let mut chosen = Vec::with_capacity(s);
    for c in 0..s {
        let best = (0..n)
            .filter(|&i| !claimed[i])
            .min_by(|&a, &b| dist2(&x, a, &centroids, c).total_cmp(&dist2(&x, b, &centroids, c)))
            .expect("s <= n leaves a point");
        claimed[best] = true;
        chosen.push(best);
    }
    IndexSet::new(chosen, n)
}

/// k-means++ seeding: the first point uniformly, each further one with
/// probability proportional to its squared distance to the chosen set.
/// Falls back to a uniform draw among unchosen points once every point
/// coincides with a chosen one.
fn seed_points(x: &DMatrix<f64>, s: usize, seed: u64) -> Vec<usize> {
    let n = x.ncols();
    let mut rng = rng::seeded(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(x, i, x, chosen[0])).collect();
    while chosen.len() < s {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(&mut rng),
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(x, i, x, next));
        }
    }
    chosen
}

fn update_centroids(x: &DMatrix<f64>, assign: &[usize], centroids: &mut DMatrix<f64>) {
    let (d, k) = centroids.shape();
    let mut sums = DMatrix::<f64>::zeros(d, k);
    let mut counts = vec![0usize; k];
    for (i, &c) in assign.iter().enumerate() {
        let mut col = sums.column_mut(c);
        col += x.column(i);
        counts[c] += 1;
    }
    let spread: Vec<f64> = (0..x.ncols())
        .map(|i| dist2(x, i, centroids, assign[i]))
        .collect();
    let mut reseeded = vec![false; x.ncols()];
    for c in 0..k {
        if counts[c] > 0 {
            centroids.set_column(c, &(sums.column(c) / counts[c] as f64));
            continue;
        }
        let far = (0..x.ncols())
            .filter(|&i| !reseeded[i])
            .max_by(|&a, &b| spread[a].total_cmp(&spread[b]).then(b.cmp(&a)))
            .expect("at least one point");
        reseeded[far] = true;
        centroids.set_column(c, &x.column(far));
    }
}

fn nearest(centroids: &DMatrix<f64>, x: &DMatrix<f64>, i: usize) -> usize {
    (0..centroids.ncols())
        .min_by(|&a, &b| dist2(x, i, centroids, a).total_cmp(&dist2(x, i, centroids, b)))
        .expect("at least one centroid")
}

fn dist2(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    x.column(i)
        .iter()
        .zip(c.column(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planted(per: usize, centers: &[[f64; 2]], seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = per * centers.len();
        DenseMatrix::from_fn(n, 2, |i, j| centers[i / per][j] + rng.random_range(-0.5..0.5)).unwrap()
    }

    #[test]
    fn one_index_per_planted_cluster() {
        let centers = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0], [20.0, 20.0]];
        let pts = planted(25, &centers, 1);
        for seed in 0..10 {
            let sel = kmeans_sample(&pts, 4, 50, seed).unwrap();
            let mut clusters: Vec<usize> = sel.indices().iter().map(|i| i / 25).collect();
            clusters.sort_unstable();
            assert_eq!(clusters, vec![0, 1, 2, 3], "seed {seed}");
        }
    }

    #[test]
    fn full_sample_takes_every_point() {
        let pts = planted(3, &[[0.0, 0.0], [5.0, 5.0]], 2);
        let sel = kmeans_sample(&pts, 6, 10, 0).unwrap();
        let mut idx = sel.indices().to_vec();
        idx.sort_unstable();
        assert_eq!(idx, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn duplicate_points_are_deduplicated() {
        let pts = DenseMatrix::from_row_slice(4, 1, &[0.0, 0.0, 0.0, 0.0]).unwrap();
        let sel = kmeans_sample(&pts, 3, 5, 1).unwrap();
        assert_eq!(sel.len(), 3);
    }

    #[test]
    fn seed_determinism() {
        let pts = planted(10, &[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], 3);
        assert_eq!(
            kmeans_sample(&pts, 3, 20, 9).unwrap(),
            kmeans_sample(&pts, 3, 20, 9).unwrap()
        );
    }
}
