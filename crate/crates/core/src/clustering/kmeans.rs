use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Distance-weighted seeding: the first centroid is uniform, each next one is
/// drawn with probability proportional to the squared distance to the
/// nearest centroid chosen so far.
fn seed_centroids<R: Rng + ?Sized>(points: ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::<f64>::zeros((k, points.ncols()));
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.row_mut(0).assign(&points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if u < d {
                        break;
                    }
                    u -= d;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            // Every point coincides with a centroid: fall back to an unused index.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(pick)));
        }
    }
    centroids
}

fn assign(points: ArrayView2<f64>, centroids: &Array2<f64>, labels: &mut [usize]) {
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for c in 0..centroids.nrows() {
            let d = sq_dist(points.row(i), centroids.row(c));
            if d < best.0 {
                best = (d, c);
            }
        }
        *label = best.1;
    }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: ArrayView2<f64>, centroids: &mut Array2<f64>, labels: &mut [usize]) {
    let k = centroids.nrows();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_dist(points.row(a), centroids.row(labels[a]));
                let db = sq_dist(points.row(b), centroids.row(labels[b]));
                // Prefer the lower index on ties.
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("more points than clusters");
        labels[donor] = empty;
        centroids.row_mut(empty).assign(&points.row(donor));
    }
}

fn update_centroids(points: ArrayView2<f64>, labels: &[usize], centroids: &mut Array2<f64>) {
    centroids.fill(0.0);
    let mut counts = vec![0usize; centroids.nrows()];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut row = centroids.row_mut(l);
        row += &points.row(i);
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            centroids.row_mut(c).mapv_inplace(|x| x / n as f64);
        }
    }
}

fn objective(points: ArrayView2<f64>, labels: &[usize], centroids: &Array2<f64>) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points.row(i), centroids.row(l)))
        .sum()
}

/// Lloyd's k-means. Requires `1 <= k <= points.nrows()`; every cluster ends non-empty.
pub fn lloyd<R: Rng + ?Sized>(points: ArrayView2<f64>, k: usize, rng: &mut R) -> KMeansResult {
    let n = points.nrows();
    assert!(k >= 1 && k <= n, "k-means needs 1 <= k <= n (k = {k}, n = {n})");
    let mut centroids = seed_centroids(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut next = labels.clone();
        assign(points, &centroids, &mut next);
        repair_empty(points, &mut centroids, &mut next);
        let stable = next == labels;
        labels = next;
        update_centroids(points, &labels, &mut centroids);
        trace.push(objective(points, &labels, &centroids));
        if stable {
            break;
        }
    }
    KMeansResult {
        labels,
        centroids,
        objective: trace,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = Array2::from_shape_vec((4, 2), vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let res = lloyd(pts.view(), 4, &mut rng);
        let mut labels = res.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = Array2::from_elem((5, 2), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let res = lloyd(pts.view(), 3, &mut rng);
        for c in 0..3 {
            assert!(res.labels.contains(&c));
        }
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..10.0)).collect();
        let pts = Array2::from_shape_vec((40, 2), data).unwrap();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let res = lloyd(pts.view(), 4, &mut rng);
            assert!(res.objective.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", res.objective);
        }
    }
}
