//! Campus-map place features and the study/social fusion durations.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureKey, FeatureValues};
use crate::ingest::{ConversationInference, ConversationLabel, LocationFix, StepBin, Timestamped};
use crate::numerics::{GeoPoint, Summary};
use crate::screen::{BoutKind, InteractionBout};
use crate::windowing::{assign_ranges, TimeSlice};

const MINUTE_MS: i64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceType {
    GreekSocial,
    GreekAll,
    StudentApartment,
    ResidentialHall,
    Athletic,
    GreenSpace,
    Academic,
    OffCampus,
}

impl PlaceType {
    pub const ALL: [PlaceType; 8] = [
        PlaceType::GreekSocial,
        PlaceType::GreekAll,
        PlaceType::StudentApartment,
        PlaceType::ResidentialHall,
        PlaceType::Athletic,
        PlaceType::GreenSpace,
        PlaceType::Academic,
        PlaceType::OffCampus,
    ];

    /// Housing and green spaces, where social time is measured.
    pub const SOCIAL: [PlaceType; 5] = [
        PlaceType::GreekSocial,
        PlaceType::GreekAll,
        PlaceType::StudentApartment,
        PlaceType::ResidentialHall,
        PlaceType::GreenSpace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlaceType::GreekSocial => "greek_social",
            PlaceType::GreekAll => "greek_all",
            PlaceType::StudentApartment => "student_apartment",
            PlaceType::ResidentialHall => "residential_hall",
            PlaceType::Athletic => "athletic",
            PlaceType::GreenSpace => "green_space",
            PlaceType::Academic => "academic",
            PlaceType::OffCampus => "off_campus",
        }
    }

    pub fn is_social(&self) -> bool {
        Self::SOCIAL.contains(self)
    }
}

impl fmt::Display for PlaceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlaceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PlaceType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown place type `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum PlaceMapError {
    #[error("cannot read place map {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed place map: {0}")]
    Json(#[from] serde_json::Error),
    #[error("place {index}: {message}")]
    Invalid { index: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlace {
    #[serde(rename = "type")]
    kind: PlaceType,
    polygon: Vec<[f64; 2]>,
}

/// A polygon projected to a local equirectangular plane (x = lon·cos φ0, y = lat).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub kind: PlaceType,
    pub vertices: Vec<GeoPoint>,
    cos_ref: f64,
    projected: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(kind: PlaceType, vertices: Vec<GeoPoint>) -> Result<Self, String> {
        if vertices.len() < 3 {
            return Err(format!("polygon needs at least 3 vertices, got {}", vertices.len()));
        }
        let lat0 = vertices.iter().map(|v| v.latitude).sum::<f64>() / vertices.len() as f64;
        let cos_ref = lat0.to_radians().cos();
        let projected = vertices.iter().map(|v| (v.longitude * cos_ref, v.latitude)).collect();
        Ok(Self {
            kind,
            vertices,
            cos_ref,
            projected,
        })
    }

    /// Ray casting; points on an edge or vertex count as inside.
    pub fn contains(&self, p: GeoPoint) -> bool {
        let (x, y) = (p.longitude * self.cos_ref, p.latitude);
        let n = self.projected.len();
        let mut inside = false;
        for i in 0..n {
            let (x1, y1) = self.projected[i];
            let (x2, y2) = self.projected[(i + 1) % n];
            if on_segment((x, y), (x1, y1), (x2, y2)) {
                return true;
            }
            if (y1 > y) != (y2 > y) {
                let cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
                if x < cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let scale = (b.0 - a.0).abs().max((b.1 - a.1).abs()).max(f64::MIN_POSITIVE);
    if cross.abs() > 1e-12 * scale {
        return false;
    }
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlaceMap {
    pub polygons: Vec<Polygon>,
}

impl PlaceMap {
    pub fn from_json(text: &str) -> Result<Self, PlaceMapError> {
        let raw: Vec<RawPlace> = serde_json::from_str(text)?;
        let polygons = raw
            .into_iter()
            .enumerate()
            .map(|(index, place)| {
                let vertices = place
                    .polygon
                    .iter()
                    .map(|[lat, lon]| GeoPoint::new(*lat, *lon).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()
                    .and_then(|v| Polygon::new(place.kind, v));
                vertices.map_err(|message| PlaceMapError::Invalid { index, message })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { polygons })
    }

    pub fn load(path: &Path) -> Result<Self, PlaceMapError> {
        let text = std::fs::read_to_string(path).map_err(|source| PlaceMapError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Type of the first polygon containing `p`, else off campus.
    pub fn point_in_place(&self, p: GeoPoint) -> PlaceType {
        self.polygons
            .iter()
            .find(|poly| poly.contains(p))
            .map_or(PlaceType::OffCampus, |poly| poly.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TypedFix {
    pub timestamp: i64,
    pub place: PlaceType,
}

impl Timestamped for TypedFix {
    fn timestamp(&self) -> i64 {
        self.timestamp
    }
}

/// Types every fix; fixes sharing a timestamp keep the first.
pub fn type_fixes(fixes: &[LocationFix], map: &PlaceMap) -> Vec<TypedFix> {
    let mut out: Vec<TypedFix> = Vec::with_capacity(fixes.len());
    for f in fixes {
        if out.last().is_none_or(|l| l.timestamp != f.timestamp) {
            out.push(TypedFix {
                timestamp: f.timestamp,
                place: map.point_in_place(f.point),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlaceBout {
    pub place: PlaceType,
    pub start: i64,
    pub end: i64,
}

impl PlaceBout {
    pub fn duration_ms(&self) -> i64 {
        self.end - self.start
    }

    pub fn minutes(&self) -> f64 {
        self.duration_ms() as f64 / MINUTE_MS as f64
    }
}

/// Bouts and type changes of the fixes inside a slice.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlaceTimeline {
    pub bouts: Vec<PlaceBout>,
    pub transitions: usize,
}

/// Each fix holds its place until the next fix, for at most `cap_ms` and
/// never past the end of its slice interval. A bout ends at a type change,
/// a gap over `cap_ms`, or an interval boundary; zero-length bouts vanish.
pub fn place_timeline(fixes: &[TypedFix], slice: &TimeSlice, cap_ms: i64) -> PlaceTimeline {
    let mut timeline = PlaceTimeline::default();
    for (range, (_, end)) in assign_ranges(fixes, slice) {
        let first = range.start;
        let chunk = &fixes[range];
        let mut open: Option<PlaceBout> = None;
        for (i, f) in chunk.iter().enumerate() {
            let held = fixes
                .get(first + i + 1)
                .map_or(0, |n| (n.timestamp - f.timestamp).min(cap_ms))
                .min(end - f.timestamp);
            if chunk.get(i + 1).is_some_and(|n| n.place != f.place) {
                timeline.transitions += 1;
            }
            match open.as_mut() {
                Some(b) if b.place == f.place && b.end == f.timestamp => b.end = f.timestamp + held,
                _ => {
                    if let Some(b) = open.take() {
                        timeline.bouts.push(b);
                    }
                    open = Some(PlaceBout {
                        place: f.place,
                        start: f.timestamp,
                        end: f.timestamp + held,
                    });
                }
            }
        }
        timeline.bouts.extend(open);
    }
    timeline.bouts.retain(|b| b.duration_ms() > 0);
    timeline
}

const TYPE_STEMS: [&str; 10] = [
    "dwell",
    "dwell_pct",
    "bouts",
    "bouts_10",
    "bouts_20",
    "bouts_30",
    "bout_min",
    "bout_max",
    "bout_mean",
    "bout_std",
];

pub fn feature_keys() -> Vec<FeatureKey> {
    let mut keys = Vec::new();
    for t in PlaceType::ALL {
        for stem in TYPE_STEMS {
            keys.push(FeatureKey::scoped(stem, t.name()));
        }
    }
    keys.push(FeatureKey::new("transitions"));
    keys.push(FeatureKey::new("study_duration"));
    keys.push(FeatureKey::new("social_duration"));
    keys
}

/// Per-type dwell and bout statistics plus the transition count. Lengths in minutes.
pub fn place_features(timeline: &PlaceTimeline) -> FeatureValues {
    let mut out = FeatureValues::new();
    let total_ms: i64 = timeline.bouts.iter().map(|b| b.duration_ms()).sum();
    for t in PlaceType::ALL {
        let s = t.name();
        let lengths: Vec<f64> = timeline
            .bouts
            .iter()
            .filter(|b| b.place == t)
            .map(|b| b.minutes())
            .collect();
        let dwell_ms: i64 = timeline
            .bouts
            .iter()
            .filter(|b| b.place == t)
            .map(|b| b.duration_ms())
            .sum();
        let at_least = |minutes: i64| {
            timeline
                .bouts
                .iter()
                .filter(|b| b.place == t && b.duration_ms() >= minutes * MINUTE_MS)
                .count() as f64
        };
        let stats = Summary::of(&lengths);
        out.set_scoped("dwell", s, Some(dwell_ms as f64 / MINUTE_MS as f64));
        out.set_scoped(
            "dwell_pct",
            s,
            (total_ms > 0).then(|| 100.0 * dwell_ms as f64 / total_ms as f64),
        );
        out.set_scoped("bouts", s, Some(lengths.len() as f64));
        out.set_scoped("bouts_10", s, Some(at_least(10)));
        out.set_scoped("bouts_20", s, Some(at_least(20)));
        out.set_scoped("bouts_30", s, Some(at_least(30)));
        out.set_scoped("bout_min", s, stats.map(|x| x.min));
        out.set_scoped("bout_max", s, stats.map(|x| x.max));
        out.set_scoped("bout_mean", s, stats.map(|x| x.mean));
        out.set_scoped("bout_std", s, stats.map(|x| x.std));
    }
    out.set("transitions", Some(timeline.transitions as f64));
    out
}

pub const STUDY_MIN_MINUTES: i64 = 30;
pub const STUDY_MAX_STEPS: u32 = 10;
pub const SOCIAL_MIN_MINUTES: i64 = 20;
/// Voice-or-noise share, as numerator/denominator, needed for a social bout.
pub const SOCIAL_VOICE_SHARE: (usize, usize) = (4, 5);

/// Minutes in academic bouts of at least 30 minutes with every overlapping
/// step bin under 10 steps and no overlapping interaction bout. Missing when
/// either stream is absent.
pub fn study_duration(
    timeline: &PlaceTimeline,
    steps: Option<&[StepBin]>,
    screen: Option<&[InteractionBout]>,
) -> Option<f64> {
    let (steps, screen) = (steps?, screen?);
    let ms: i64 = timeline
        .bouts
        .iter()
        .filter(|b| b.place == PlaceType::Academic && b.duration_ms() >= STUDY_MIN_MINUTES * MINUTE_MS)
        .filter(|b| {
            let lo = steps.partition_point(|s| s.end() <= b.start);
            steps[lo..]
                .iter()
                .take_while(|s| s.start < b.end)
                .all(|s| s.steps < STUDY_MAX_STEPS)
        })
        .filter(|b| {
            !screen
                .iter()
                .take_while(|i| i.start < b.end)
                .any(|i| i.kind == BoutKind::Interaction && i.overlaps(b.start, b.end))
        })
        .map(|b| b.duration_ms())
        .sum();
    Some(ms as f64 / MINUTE_MS as f64)
}

/// Minutes in housing or green-space bouts of at least 20 minutes where at
/// least 80% of the conversation inferences are voice or noise. A bout with
/// no inferences does not qualify. Missing when the stream is absent.
pub fn social_duration(timeline: &PlaceTimeline, conversation: Option<&[ConversationInference]>) -> Option<f64> {
    let conversation = conversation?;
    let (num, den) = SOCIAL_VOICE_SHARE;
    let ms: i64 = timeline
        .bouts
        .iter()
        .filter(|b| b.place.is_social() && b.duration_ms() >= SOCIAL_MIN_MINUTES * MINUTE_MS)
        .filter(|b| {
            let lo = conversation.partition_point(|c| c.timestamp < b.start);
            let hi = conversation.partition_point(|c| c.timestamp < b.end);
            let inside = &conversation[lo..hi];
            let vocal = inside
                .iter()
                .filter(|c| matches!(c.label, ConversationLabel::Voice | ConversationLabel::Noise))
                .count();
            !inside.is_empty() && vocal * den >= inside.len() * num
        })
        .map(|b| b.duration_ms())
        .sum();
    Some(ms as f64 / MINUTE_MS as f64)
}
