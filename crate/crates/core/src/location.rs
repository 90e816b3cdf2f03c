//! Mobility features from GPS fixes.
//!
//! Fixes are first labeled moving or static from the speed implied by the
//! previous fix. Static fixes are clustered with DBSCAN (haversine meters)
//! into significant places, either once over the whole study (global scope)
//! or per time slice (local scope). Time is accounted per fix as the interval
//! to the next fix, capped at the gap limit and clipped to the slice.

use serde::{Deserialize, Serialize};

use crate::features::{FeatureKey, FeatureValues};
use crate::ingest::{LocationFix, Timestamped};
use crate::numerics::{
    dbscan, haversine_distance, lomb_scargle_psd, mean, pop_variance, ClusterResult, GeoPoint, Metric, Summary,
};
use crate::windowing::{assign_ranges, local_datetime, Epoch, TimeSlice};
use chrono::Timelike;
use chrono_tz::Tz;

const HOUR_S: f64 = 3600.0;
const MINUTE_MS: f64 = 60_000.0;
/// Floor added before taking logarithms of variances and spectral energy.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocationParams {
    pub eps_m: f64,
    pub min_pts: usize,
    pub speed_threshold_kmh: f64,
    pub gap_cap_s: f64,
}

impl Default for LocationParams {
    fn default() -> Self {
        Self {
            eps_m: 30.0,
            min_pts: 5,
            speed_threshold_kmh: 1.0,
            gap_cap_s: 300.0,
        }
    }
}

impl LocationParams {
    pub fn gap_cap_ms(&self) -> i64 {
        (self.gap_cap_s * 1000.0).round() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionState {
    Moving,
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotionSample {
    pub fix: LocationFixRepr,
    pub speed_kmh: f64,
    pub state: MotionState,
    /// Meters from the previous fix; 0 for the first fix and after a gap.
    pub step_m: f64,
    /// Whether the speed was measured against a preceding fix within the gap limit.
    pub measured: bool,
}

/// Serializable copy of a fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocationFixRepr {
    pub timestamp: i64,
    pub point: GeoPoint,
}

impl From<LocationFix> for LocationFixRepr {
    fn from(f: LocationFix) -> Self {
        Self {
            timestamp: f.timestamp,
            point: f.point,
        }
    }
}

impl Timestamped for MotionSample {
    fn timestamp(&self) -> i64 {
        self.fix.timestamp
    }
}

impl MotionSample {
    pub fn point(&self) -> GeoPoint {
        self.fix.point
    }

    pub fn is_static(&self) -> bool {
        self.state == MotionState::Static
    }
}

/// Speed-based moving/static labels. Fixes sharing a timestamp keep the
/// first; a pair further apart than the gap limit contributes no distance and
/// leaves the later fix static.
pub fn label_motion(fixes: &[LocationFix], params: &LocationParams) -> Vec<MotionSample> {
    let mut unique: Vec<LocationFix> = Vec::with_capacity(fixes.len());
    for f in fixes {
        if unique.last().is_none_or(|l| l.timestamp != f.timestamp) {
            unique.push(*f);
        }
    }
    let cap = params.gap_cap_ms();
    let mut samples: Vec<MotionSample> = unique
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut s = MotionSample {
                fix: (*f).into(),
                speed_kmh: 0.0,
                state: MotionState::Static,
                step_m: 0.0,
                measured: false,
            };
            if i > 0 {
                let prev = unique[i - 1];
                let dt = f.timestamp - prev.timestamp;
                if dt <= cap {
                    let d = haversine_distance(prev.point, f.point);
                    s.step_m = d;
                    s.speed_kmh = (d / 1000.0) / (dt as f64 / 3_600_000.0);
                    s.measured = true;
                    if s.speed_kmh > params.speed_threshold_kmh {
                        s.state = MotionState::Moving;
                    }
                }
            }
            s
        })
        .collect();
    if samples.len() >= 2 {
        samples[0].state = samples[1].state;
        samples[0].speed_kmh = samples[1].speed_kmh;
    }
    samples
}

/// Interval from each record to the next, capped at `cap_ms`; the last record gets 0.
pub fn capped_durations<T: Timestamped>(records: &[T], cap_ms: i64) -> Vec<i64> {
    let mut out: Vec<i64> = records
        .windows(2)
        .map(|w| (w[1].timestamp() - w[0].timestamp()).min(cap_ms))
        .collect();
    if !records.is_empty() {
        out.push(0);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceScope {
    Global,
    Local,
}

impl PlaceScope {
    pub fn name(&self) -> &'static str {
        match self {
            PlaceScope::Global => "global",
            PlaceScope::Local => "local",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificantPlaces {
    pub scope: PlaceScope,
    /// Cluster per input sample, -1 for insignificant.
    pub labels: Vec<i32>,
    pub centers: Vec<GeoPoint>,
    /// Dwell seconds per cluster.
    pub dwell_s: Vec<f64>,
}

impl SignificantPlaces {
    fn from_clusters(scope: PlaceScope, result: ClusterResult, durations_ms: &[i64]) -> Self {
        let mut dwell_s = vec![0.0; result.centers.len()];
        for (&l, &d) in result.labels.iter().zip(durations_ms) {
            if l >= 0 {
                dwell_s[l as usize] += d as f64 / 1000.0;
            }
        }
        Self {
            scope,
            centers: result
                .centers
                .iter()
                .map(|c| GeoPoint {
                    latitude: c[0],
                    longitude: c[1],
                })
                .collect(),
            labels: result.labels,
            dwell_s,
        }
    }
}

/// DBSCAN over static samples. `durations_ms[i]` is the time attributed to
/// `samples[i]`.
pub fn significant_places(
    samples: &[&MotionSample],
    durations_ms: &[i64],
    scope: PlaceScope,
    params: &LocationParams,
) -> SignificantPlaces {
    let points: Vec<Vec<f64>> = samples.iter().map(|s| s.point().as_vec()).collect();
    let result =
        dbscan(&points, params.eps_m, params.min_pts, Metric::Haversine).unwrap_or_else(|_| ClusterResult::empty());
    let result = if result.labels.len() == points.len() {
        result
    } else {
        ClusterResult {
            labels: vec![-1; points.len()],
            ..ClusterResult::empty()
        }
    };
    SignificantPlaces::from_clusters(scope, result, durations_ms)
}

/// Frequencies (cycles per second) for periods 23.5 h to 24.5 h.
pub fn circadian_band() -> Vec<f64> {
    const BINS: usize = 80;
    let lo = 1.0 / (24.5 * HOUR_S);
    let hi = 1.0 / (23.5 * HOUR_S);
    (0..BINS)
        .map(|i| lo + (hi - lo) * i as f64 / (BINS - 1) as f64)
        .collect()
}

/// Log of the mean Lomb-Scargle power of latitude plus longitude in the
/// 24-hour band. Needs at least 3 fixes spanning 24 hours.
pub fn circadian_movement(fixes: &[LocationFixRepr]) -> Option<f64> {
    if fixes.len() < 3 {
        return None;
    }
    let first = fixes.first()?.timestamp;
    let last = fixes.last()?.timestamp;
    if ((last - first) as f64) < 24.0 * HOUR_S * 1000.0 {
        return None;
    }
    let times: Vec<f64> = fixes.iter().map(|f| (f.timestamp - first) as f64 / 1000.0).collect();
    let lat: Vec<f64> = fixes.iter().map(|f| f.point.latitude).collect();
    let lon: Vec<f64> = fixes.iter().map(|f| f.point.longitude).collect();
    let band = circadian_band();
    let energy = |values: &[f64]| -> Option<f64> {
        let psd = lomb_scargle_psd(&times, values, &band).ok()?;
        mean(&psd)
    };
    Some((energy(&lat)? + energy(&lon)? + LOG_FLOOR).ln())
}

/// Location entropy over dwell shares and its normalization by ln(#places).
pub fn location_entropy(dwell: &[f64]) -> (f64, f64) {
    let positive: Vec<f64> = dwell.iter().copied().filter(|d| *d > 0.0).collect();
    let total: f64 = positive.iter().sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let entropy = -positive
        .iter()
        .map(|d| {
            let p = d / total;
            p * p.ln()
        })
        .sum::<f64>();
    let entropy = entropy.max(0.0);
    let normalized = if positive.len() < 2 {
        0.0
    } else {
        (entropy / (positive.len() as f64).ln()).min(1.0)
    };
    (entropy, normalized)
}

/// Dwell-weighted RMS distance (meters) of place centers from their weighted centroid.
pub fn radius_of_gyration(centers: &[GeoPoint], dwell: &[f64]) -> Option<f64> {
    let total: f64 = dwell.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let weights: Vec<f64> = dwell.iter().map(|d| d / total).collect();
    let centroid = GeoPoint {
        latitude: centers.iter().zip(&weights).map(|(c, w)| c.latitude * w).sum(),
        longitude: centers.iter().zip(&weights).map(|(c, w)| c.longitude * w).sum(),
    };
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    if positive <= 1 {
        return Some(0.0);
    }
    Some(
        centers
            .iter()
            .zip(&weights)
            .map(|(c, w)| w * haversine_distance(*c, centroid).powi(2))
            .sum::<f64>()
            .sqrt(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomeModel {
    pub center: GeoPoint,
}

/// Home = center of the night-time place with the most dwell.
pub fn infer_home(fixes: &[LocationFix], tz: Tz, params: &LocationParams) -> Option<HomeModel> {
    let night: Vec<LocationFix> = fixes
        .iter()
        .filter(|f| Epoch::of_hour(local_datetime(tz, f.timestamp).hour()) == Epoch::Night)
        .copied()
        .collect();
    let samples = label_motion(&night, params);
    let durations = capped_durations(&samples, params.gap_cap_ms());
    let (stat, dur): (Vec<&MotionSample>, Vec<i64>) = samples
        .iter()
        .zip(&durations)
        .filter(|(s, _)| s.is_static())
        .map(|(s, d)| (s, *d))
        .unzip();
    let places = significant_places(&stat, &dur, PlaceScope::Global, params);
    let best = (0..places.centers.len()).fold(None::<usize>, |best, c| match best {
        Some(b) if places.dwell_s[b] >= places.dwell_s[c] => Some(b),
        _ => Some(c),
    })?;
    Some(HomeModel {
        center: places.centers[best],
    })
}

/// Study-wide location state shared read-only by every slice.
#[derive(Debug, Clone)]
pub struct LocationContext {
    pub params: LocationParams,
    pub samples: Vec<MotionSample>,
    /// Capped (unclipped) time attributed to each sample, ms.
    pub durations: Vec<i64>,
    /// Global cluster per sample; moving samples carry -1.
    pub global_labels: Vec<i32>,
    pub global_centers: Vec<GeoPoint>,
    pub home: Option<HomeModel>,
}

impl LocationContext {
    pub fn new(fixes: &[LocationFix], tz: Tz, params: LocationParams) -> Self {
        let samples = label_motion(fixes, &params);
        let durations = capped_durations(&samples, params.gap_cap_ms());
        let static_idx: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].is_static()).collect();
        let stat: Vec<&MotionSample> = static_idx.iter().map(|&i| &samples[i]).collect();
        let dur: Vec<i64> = static_idx.iter().map(|&i| durations[i]).collect();
        let places = significant_places(&stat, &dur, PlaceScope::Global, &params);
        let mut global_labels = vec![-1; samples.len()];
        for (&i, &l) in static_idx.iter().zip(&places.labels) {
            global_labels[i] = l;
        }
        Self {
            home: infer_home(fixes, tz, &params),
            params,
            samples,
            durations,
            global_labels,
            global_centers: places.centers,
        }
    }
}

const PLAIN_STEMS: [&str; 9] = [
    "variance",
    "log_variance",
    "total_distance",
    "speed_mean",
    "speed_variance",
    "circadian_movement",
    "time_moving_pct",
    "home_time_10m",
    "home_time_100m",
];

const PLACE_STEMS: [&str; 10] = [
    "num_places",
    "transitions",
    "radius_of_gyration",
    "time_insignificant_pct",
    "stay_max",
    "stay_min",
    "stay_mean",
    "stay_std",
    "entropy",
    "normalized_entropy",
];

pub const TOP_PLACES: u8 = 3;

pub fn feature_keys() -> Vec<FeatureKey> {
    let mut keys: Vec<FeatureKey> = PLAIN_STEMS.iter().map(|s| FeatureKey::new(s)).collect();
    for scope in [PlaceScope::Global, PlaceScope::Local] {
        for stem in PLACE_STEMS {
            keys.push(FeatureKey::scoped(stem, scope.name()));
        }
        for rank in 1..=TOP_PLACES {
            keys.push(FeatureKey::ranked("dwell_top", scope.name(), rank));
        }
    }
    keys
}

/// A static sample of the slice: cluster, clipped dwell (ms), interval number.
struct StaticVisit {
    label: i32,
    dwell_ms: i64,
    chunk: usize,
}

fn place_features(out: &mut FeatureValues, scope: PlaceScope, visits: &[StaticVisit], centers: &[GeoPoint]) {
    let s = scope.name();
    let mut dwell = vec![0.0f64; centers.len()];
    let mut static_ms = 0i64;
    for v in visits {
        static_ms += v.dwell_ms;
        if v.label >= 0 {
            dwell[v.label as usize] += v.dwell_ms as f64;
        }
    }
    let present: Vec<usize> = (0..centers.len()).filter(|&c| dwell[c] > 0.0).collect();
    if present.is_empty() {
        for stem in PLACE_STEMS {
            out.set_scoped(stem, s, None);
        }
        for rank in 1..=TOP_PLACES {
            out.push(FeatureKey::ranked("dwell_top", s, rank), None);
        }
        return;
    }
    let present_dwell: Vec<f64> = present.iter().map(|&c| dwell[c]).collect();
    let present_centers: Vec<GeoPoint> = present.iter().map(|&c| centers[c]).collect();

    // noise samples are skipped; runs of one label within an interval are visits
    let mut transitions = 0usize;
    let mut stays: Vec<f64> = Vec::new();
    let mut prev: Option<(i32, usize)> = None;
    for v in visits.iter().filter(|v| v.label >= 0) {
        match prev {
            Some((l, c)) if c == v.chunk && l == v.label => {
                *stays.last_mut().expect("open stay") += v.dwell_ms as f64;
            }
            Some((_, c)) if c == v.chunk => {
                transitions += 1;
                stays.push(v.dwell_ms as f64);
            }
            _ => stays.push(v.dwell_ms as f64),
        }
        prev = Some((v.label, v.chunk));
    }
    let stays: Vec<f64> = stays.into_iter().filter(|d| *d > 0.0).map(|d| d / MINUTE_MS).collect();
    let stay = Summary::of(&stays);
    let (entropy, normalized) = location_entropy(&present_dwell);
    let noise_ms = static_ms as f64 - dwell.iter().sum::<f64>();

    out.set_scoped("num_places", s, Some(present.len() as f64));
    out.set_scoped("transitions", s, Some(transitions as f64));
    out.set_scoped(
        "radius_of_gyration",
        s,
        radius_of_gyration(&present_centers, &present_dwell),
    );
    out.set_scoped(
        "time_insignificant_pct",
        s,
        (static_ms > 0).then(|| 100.0 * noise_ms / static_ms as f64),
    );
    out.set_scoped("stay_max", s, stay.map(|x| x.max));
    out.set_scoped("stay_min", s, stay.map(|x| x.min));
    out.set_scoped("stay_mean", s, stay.map(|x| x.mean));
    out.set_scoped("stay_std", s, stay.map(|x| x.std));
    out.set_scoped("entropy", s, Some(entropy));
    out.set_scoped("normalized_entropy", s, Some(normalized));

    let mut ranked: Vec<usize> = (0..present.len()).collect();
    ranked.sort_by(|&a, &b| present_dwell[b].total_cmp(&present_dwell[a]).then(a.cmp(&b)));
    for rank in 1..=TOP_PLACES {
        let v = ranked
            .get(rank as usize - 1)
            .map_or(0.0, |&i| present_dwell[i] / MINUTE_MS);
        out.push(FeatureKey::ranked("dwell_top", s, rank), Some(v));
    }
}

/// All location features for one slice.
pub fn location_features(ctx: &LocationContext, slice: &TimeSlice) -> FeatureValues {
    let ranges = assign_ranges(&ctx.samples, slice);
    let indices: Vec<(usize, usize, i64)> = ranges
        .iter()
        .enumerate()
        .flat_map(|(chunk, (r, (_, end)))| r.clone().map(move |i| (i, chunk, *end)))
        .collect();
    if indices.is_empty() {
        return FeatureValues::all_missing(&feature_keys());
    }
    let samples = &ctx.samples;
    let clipped = |i: usize, end: i64| ctx.durations[i].min(end - samples[i].timestamp());
    let mut out = FeatureValues::new();

    let lat: Vec<f64> = indices.iter().map(|&(i, _, _)| samples[i].point().latitude).collect();
    let lon: Vec<f64> = indices.iter().map(|&(i, _, _)| samples[i].point().longitude).collect();
    let variance = pop_variance(&lat).zip(pop_variance(&lon)).map(|(a, b)| a + b);
    out.set("variance", variance);
    out.set("log_variance", variance.map(|v| (v + LOG_FLOOR).ln()));

    let distance: f64 = ranges
        .iter()
        .flat_map(|(r, _)| r.clone().skip(1))
        .map(|i| samples[i].step_m)
        .sum();
    out.set("total_distance", Some(distance));
    let speeds: Vec<f64> = indices
        .iter()
        .filter(|&&(i, _, _)| samples[i].measured)
        .map(|&(i, _, _)| samples[i].speed_kmh)
        .collect();
    out.set("speed_mean", mean(&speeds));
    out.set("speed_variance", pop_variance(&speeds));

    let fixes: Vec<LocationFixRepr> = indices.iter().map(|&(i, _, _)| samples[i].fix).collect();
    out.set("circadian_movement", circadian_movement(&fixes));

    let total_ms: i64 = indices.iter().map(|&(i, _, end)| clipped(i, end)).sum();
    let moving_ms: i64 = indices
        .iter()
        .filter(|&&(i, _, _)| !samples[i].is_static())
        .map(|&(i, _, end)| clipped(i, end))
        .sum();
    out.set(
        "time_moving_pct",
        (total_ms > 0).then(|| 100.0 * moving_ms as f64 / total_ms as f64),
    );

    let home_time = |radius: f64| {
        ctx.home.map(|home| {
            indices
                .iter()
                .filter(|&&(i, _, _)| haversine_distance(samples[i].point(), home.center) <= radius)
                .map(|&(i, _, end)| clipped(i, end) as f64)
                .sum::<f64>()
                / MINUTE_MS
        })
    };
    out.set("home_time_10m", home_time(10.0));
    out.set("home_time_100m", home_time(100.0));

    let statics: Vec<(usize, usize, i64)> = indices
        .iter()
        .copied()
        .filter(|&(i, _, _)| samples[i].is_static())
        .collect();
    let global: Vec<StaticVisit> = statics
        .iter()
        .map(|&(i, chunk, end)| StaticVisit {
            label: ctx.global_labels[i],
            dwell_ms: clipped(i, end),
            chunk,
        })
        .collect();
    place_features(&mut out, PlaceScope::Global, &global, &ctx.global_centers);

    let local_samples: Vec<&MotionSample> = statics.iter().map(|&(i, _, _)| &samples[i]).collect();
    let local_dwell: Vec<i64> = statics.iter().map(|&(i, _, end)| clipped(i, end)).collect();
    let local = significant_places(&local_samples, &local_dwell, PlaceScope::Local, &ctx.params);
    let local_visits: Vec<StaticVisit> = statics
        .iter()
        .zip(&local.labels)
        .zip(&local_dwell)
        .map(|((&(_, chunk, _), &label), &dwell_ms)| StaticVisit { label, dwell_ms, chunk })
        .collect();
    place_features(&mut out, PlaceScope::Local, &local_visits, &local.centers);
    out
}
