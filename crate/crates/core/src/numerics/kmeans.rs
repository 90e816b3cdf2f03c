use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{squared_euclidean, ClusterResult, NumericsError};

/// Upper bound on Lloyd iterations per restart.
pub const MAX_ITERATIONS: usize = 300;
/// Number of k-means++ restarts; the lowest-sse run wins.
pub const RESTARTS: usize = 10;

/// Lloyd's k-means with k-means++ seeding, best of [`RESTARTS`] runs.
///
/// Every restart draws from one ChaCha8 stream seeded with `seed`, so the
/// result is a pure function of `(points, k, seed)`. Ties on sse keep the
/// earliest restart.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterResult, NumericsError> {
    if points.is_empty() {
        return Err(NumericsError::EmptyInput);
    }
    if k == 0 {
        return Err(NumericsError::InvalidArgument("k must be at least 1".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(NumericsError::InvalidArgument(
            "points have inconsistent dimensions".into(),
        ));
    }
    let distinct = count_distinct(points);
    if distinct < k {
        return Err(NumericsError::DegenerateClustering { distinct, k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusterResult> = None;
    for _ in 0..RESTARTS {
        let centers = plus_plus_init(points, k, &mut rng);
        let run = lloyd(points, centers);
        if best.as_ref().is_none_or(|b| run.sse < b.sse) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    let cmp = |a: &&Vec<f64>, b: &&Vec<f64>| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    sorted.sort_by(cmp);
    sorted.dedup_by(|a, b| cmp(&&**a, &&**b).is_eq());
    sorted.len()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| squared_euclidean(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        // fall back to the last positive-weight point if rounding overshoots
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            acc += d;
            if acc > target {
                pick = i;
                break;
            }
        }
        let c = points[pick].clone();
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(squared_euclidean(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<i32> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = squared_euclidean(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best as i32
        })
        .collect()
}

/// Cluster means; an emptied cluster keeps its previous center.
fn update(points: &[Vec<f64>], labels: &[i32], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &l) in points.iter().zip(labels) {
        let l = l as usize;
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, c), prev)| {
            if c == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

pub(crate) fn sse(points: &[Vec<f64>], labels: &[i32], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l >= 0)
        .map(|(p, &l)| squared_euclidean(p, &centers[l as usize]))
        .sum()
}

fn lloyd(points: &[Vec<f64>], initial: Vec<Vec<f64>>) -> ClusterResult {
    let mut labels = assign(points, &initial);
    let mut centers = initial;
    let mut prev_sse = sse(points, &labels, &centers);
    for _ in 0..MAX_ITERATIONS {
        centers = update(points, &labels, &centers);
        let next = assign(points, &centers);
        let current = sse(points, &next, &centers);
        debug_assert!(
            current <= prev_sse * (1.0 + 1e-12) + 1e-12,
            "sse increased: {prev_sse} -> {current}"
        );
        prev_sse = current;
        if next == labels {
            break;
        }
        labels = next;
    }
    let sse = sse(points, &labels, &centers);
    ClusterResult { labels, centers, sse }
}
