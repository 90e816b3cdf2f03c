use std::collections::VecDeque;

use super::geo::haversine_deg;
use super::{squared_euclidean, ClusterResult, NumericsError, NOISE};

/// Distance used by [`dbscan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    /// Points are `[latitude, longitude]` in degrees; distances in meters.
    Haversine,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => squared_euclidean(a, b).sqrt(),
            Metric::Haversine => haversine_deg(a[0], a[1], b[0], b[1]),
        }
    }

    /// Largest difference in the first coordinate two points within `eps` can have.
    fn first_axis_bound(&self, eps: f64) -> f64 {
        match self {
            Metric::Euclidean => eps,
            // great-circle distance is at least R * |dphi|
            Metric::Haversine => (eps / super::EARTH_RADIUS_M).to_degrees() * (1.0 + 1e-9),
        }
    }
}

/// Density-based clustering.
///
/// Points are visited in input order and clusters are numbered in the order
/// they are discovered. A border point reachable from several clusters joins
/// the first one that reaches it. Noise is labeled [`NOISE`].
///
/// Neighborhoods are exact; a sweep over the first coordinate only prunes
/// pairs that cannot be within `eps`.
pub fn dbscan(points: &[Vec<f64>], eps: f64, min_pts: usize, metric: Metric) -> Result<ClusterResult, NumericsError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(NumericsError::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if min_pts == 0 {
        return Err(NumericsError::InvalidArgument("min_pts must be at least 1".into()));
    }
    if points.is_empty() {
        return Ok(ClusterResult::empty());
    }
    if metric == Metric::Haversine && points.iter().any(|p| p.len() != 2) {
        return Err(NumericsError::InvalidArgument(
            "haversine points must be [lat, lon]".into(),
        ));
    }

    let index = SweepIndex::new(points, metric.first_axis_bound(eps));
    let near = Proximity::new(points, eps, metric);
    let neighbors = |i: usize| -> Vec<usize> {
        index
            .candidates(points, i)
            .filter(|&j| near.within(points, i, j))
            .collect()
    };

    const UNVISITED: i32 = -2;
    let mut labels = vec![UNVISITED; points.len()];
    let mut cluster = 0i32;
    let mut queue = VecDeque::new();
    for i in 0..points.len() {
        if labels[i] != UNVISITED {
            continue;
        }
        let seeds = neighbors(i);
        if seeds.len() < min_pts {
            labels[i] = NOISE;
            continue;
        }
        labels[i] = cluster;
        queue.extend(seeds);
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = cluster;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = cluster;
            let reach = neighbors(j);
            if reach.len() >= min_pts {
                queue.extend(reach);
            }
        }
        cluster += 1;
    }

    let centers = centers(points, &labels, cluster as usize);
    let sse = points
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l >= 0)
        .map(|(p, &l)| metric.distance(p, &centers[l as usize]).powi(2))
        .sum();
    Ok(ClusterResult { labels, centers, sse })
}

fn centers(points: &[Vec<f64>], labels: &[i32], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        if l < 0 {
            continue;
        }
        counts[l as usize] += 1;
        for (s, x) in sums[l as usize].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| s.into_iter().map(|v| v / c as f64).collect())
        .collect()
}

/// Exact `distance <= eps` test. For haversine, pairs are first compared by
/// chord length between unit vectors, which is monotone in great-circle
/// distance; only pairs near the threshold pay for the full formula.
struct Proximity {
    eps: f64,
    metric: Metric,
    unit: Vec<[f64; 3]>,
    /// Haversine term sin^2(eps / 2R) and the band around it that is re-checked.
    h_eps: f64,
    band: f64,
}

impl Proximity {
    fn new(points: &[Vec<f64>], eps: f64, metric: Metric) -> Self {
        let half_angle = eps / (2.0 * super::EARTH_RADIUS_M);
        let h_eps = if half_angle >= std::f64::consts::FRAC_PI_2 {
            f64::INFINITY
        } else {
            half_angle.sin().powi(2)
        };
        let unit = match metric {
            Metric::Euclidean => Vec::new(),
            Metric::Haversine => points
                .iter()
                .map(|p| {
                    let (phi, lambda) = (p[0].to_radians(), p[1].to_radians());
                    [phi.cos() * lambda.cos(), phi.cos() * lambda.sin(), phi.sin()]
                })
                .collect(),
        };
        Self {
            eps,
            metric,
            unit,
            h_eps,
            band: 1e-6 * h_eps + 1e-13 * h_eps.sqrt(),
        }
    }

    fn within(&self, points: &[Vec<f64>], i: usize, j: usize) -> bool {
        if self.metric == Metric::Haversine && self.h_eps.is_finite() {
            let (a, b) = (&self.unit[i], &self.unit[j]);
            let chord2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
            let h = chord2 / 4.0;
            if h < self.h_eps - self.band {
                return true;
            }
            if h > self.h_eps + self.band {
                return false;
            }
        }
        self.metric.distance(&points[i], &points[j]) <= self.eps
    }
}

/// Points ordered by their first coordinate.
struct SweepIndex {
    order: Vec<usize>,
    keys: Vec<f64>,
    rank: Vec<usize>,
    bound: f64,
}

impl SweepIndex {
    fn new(points: &[Vec<f64>], bound: f64) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
        let keys: Vec<f64> = order.iter().map(|&i| points[i][0]).collect();
        let mut rank = vec![0; points.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Self {
            order,
            keys,
            rank,
            bound,
        }
    }

    fn candidates<'a>(&'a self, points: &[Vec<f64>], i: usize) -> impl Iterator<Item = usize> + 'a {
        let x = points[i][0];
        let r = self.rank[i];
        let lo = self.keys[..r].partition_point(|&k| k < x - self.bound);
        let hi = r + self.keys[r..].partition_point(|&k| k <= x + self.bound);
        self.order[lo..hi].iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_d(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn chain_with_outlier() {
        let r = dbscan(&one_d(&[0.0, 0.5, 1.0, 10.0]), 1.0, 2, Metric::Euclidean).unwrap();
        assert_eq!(r.labels, vec![0, 0, 0, NOISE]);
        assert_eq!(r.num_clusters(), 1);
        assert!((r.centers[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let pts = vec![vec![3.0, 4.0]; 6];
        let r = dbscan(&pts, 0.1, 6, Metric::Euclidean).unwrap();
        assert_eq!(r.labels, vec![0; 6]);
        assert_eq!(r.sse, 0.0);
    }

    #[test]
    fn empty_input() {
        let r = dbscan(&[], 1.0, 3, Metric::Euclidean).unwrap();
        assert_eq!(r.num_clusters(), 0);
        assert!(r.labels.is_empty());
    }

    #[test]
    fn invalid_parameters() {
        assert!(dbscan(&one_d(&[0.0]), 0.0, 1, Metric::Euclidean).is_err());
        assert!(dbscan(&one_d(&[0.0]), 1.0, 0, Metric::Euclidean).is_err());
    }

    #[test]
    fn haversine_blobs_one_kilometer_apart() {
        let mut pts = Vec::new();
        for i in 0..6 {
            pts.push(vec![40.0 + i as f64 * 1e-5, -80.0]);
        }
        // ~1 km north
        for i in 0..6 {
            pts.push(vec![40.009 + i as f64 * 1e-5, -80.0]);
        }
        let r = dbscan(&pts, 30.0, 5, Metric::Haversine).unwrap();
        assert_eq!(r.num_clusters(), 2);
        assert!(r.labels[..6].iter().all(|&l| l == 0));
        assert!(r.labels[6..].iter().all(|&l| l == 1));
    }

    #[test]
    fn isolated_fixes_are_noise() {
        let pts = vec![vec![40.0, -80.0], vec![40.01, -80.0], vec![40.02, -80.0]];
        let r = dbscan(&pts, 30.0, 5, Metric::Haversine).unwrap();
        assert_eq!(r.labels, vec![NOISE; 3]);
    }

    proptest! {
        #[test]
        fn sweep_matches_full_scan(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..40),
            eps in 0.1f64..2.0,
        ) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|(a, b)| vec![a, b]).collect();
            let index = SweepIndex::new(&pts, eps);
            for i in 0..pts.len() {
                let mut fast: Vec<usize> = index
                    .candidates(&pts, i)
                    .filter(|&j| Metric::Euclidean.distance(&pts[i], &pts[j]) <= eps)
                    .collect();
                fast.sort();
                let slow: Vec<usize> = (0..pts.len())
                    .filter(|&j| Metric::Euclidean.distance(&pts[i], &pts[j]) <= eps)
                    .collect();
                prop_assert_eq!(fast, slow);
            }
        }

        #[test]
        fn chord_prefilter_is_exact(
            base in (-80.0f64..80.0, -179.0f64..179.0),
            offsets in proptest::collection::vec((-0.001f64..0.001, -0.001f64..0.001), 2..20),
            eps in 0.01f64..200.0,
        ) {
            let pts: Vec<Vec<f64>> = offsets.iter().map(|(a, b)| vec![base.0 + a, base.1 + b]).collect();
            let near = Proximity::new(&pts, eps, Metric::Haversine);
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    let d = Metric::Haversine.distance(&pts[i], &pts[j]);
                    prop_assert_eq!(near.within(&pts, i, j), d <= eps);
                    // thresholds placed exactly on and just below the pair distance
                    if d > 0.0 {
                        let on = Proximity::new(&pts, d, Metric::Haversine);
                        prop_assert!(on.within(&pts, i, j));
                        let below = Proximity::new(&pts, d * (1.0 - 1e-12), Metric::Haversine);
                        prop_assert_eq!(below.within(&pts, i, j), d <= d * (1.0 - 1e-12));
                    }
                }
            }
        }
    }
}
