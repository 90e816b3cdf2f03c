//! Phone-usage features from screen status transitions.
//!
//! An interaction bout runs from `unlock` to the next `off` or `lock`; an
//! unlocked bout runs from `unlock` to the next `lock`. `on` events never
//! open or close a bout.

use serde::Serialize;

use crate::features::{FeatureKey, FeatureValues};
use crate::ingest::{ScreenEvent, ScreenStatus};
use crate::numerics::Summary;
use crate::windowing::TimeSlice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoutKind {
    Interaction,
    Unlocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InteractionBout {
    pub start: i64,
    pub end: i64,
    pub kind: BoutKind,
    /// Still open at the last event; closed there.
    pub unterminated: bool,
}

impl InteractionBout {
    pub fn duration_ms(&self) -> i64 {
        self.end - self.start
    }

    pub fn overlaps(&self, start: i64, end: i64) -> bool {
        self.start < end && self.end > start
    }
}

/// Maximal interaction and unlocked bouts, ordered by start then kind.
pub fn extract_bouts(events: &[ScreenEvent]) -> Vec<InteractionBout> {
    let mut bouts = Vec::new();
    let mut interacting: Option<i64> = None;
    let mut unlocked: Option<i64> = None;
    let close = |bouts: &mut Vec<InteractionBout>, start: i64, end: i64, kind, unterminated| {
        if end > start {
            bouts.push(InteractionBout {
                start,
                end,
                kind,
                unterminated,
            });
        }
    };
    for e in events {
        match e.status {
            ScreenStatus::Unlock => {
                interacting.get_or_insert(e.timestamp);
                unlocked.get_or_insert(e.timestamp);
            }
            ScreenStatus::Off => {
                if let Some(s) = interacting.take() {
                    close(&mut bouts, s, e.timestamp, BoutKind::Interaction, false);
                }
            }
            ScreenStatus::Lock => {
                if let Some(s) = interacting.take() {
                    close(&mut bouts, s, e.timestamp, BoutKind::Interaction, false);
                }
                if let Some(s) = unlocked.take() {
                    close(&mut bouts, s, e.timestamp, BoutKind::Unlocked, false);
                }
            }
            ScreenStatus::On => {}
        }
    }
    if let Some(last) = events.last().map(|e| e.timestamp) {
        if let Some(s) = interacting {
            close(&mut bouts, s, last, BoutKind::Interaction, true);
        }
        if let Some(s) = unlocked {
            close(&mut bouts, s, last, BoutKind::Unlocked, true);
        }
    }
    bouts.sort_by_key(|b| (b.start, b.kind));
    bouts
}

const HOUR_STEMS: [(&str, ScreenStatus, bool); 5] = [
    ("first_unlock_hour", ScreenStatus::Unlock, true),
    ("first_on_hour", ScreenStatus::On, true),
    ("last_unlock_hour", ScreenStatus::Unlock, false),
    ("last_lock_hour", ScreenStatus::Lock, false),
    ("last_on_hour", ScreenStatus::On, false),
];

const BOUT_STATS: [&str; 4] = ["max", "min", "mean", "std"];

pub fn feature_keys() -> Vec<FeatureKey> {
    let mut keys = vec![
        FeatureKey::new("unlocks_per_minute"),
        FeatureKey::new("interaction_time"),
        FeatureKey::new("unlocked_time"),
    ];
    keys.extend(HOUR_STEMS.iter().map(|(s, _, _)| FeatureKey::new(s)));
    for kind in ["interaction", "unlocked"] {
        for stat in BOUT_STATS {
            keys.push(FeatureKey::new(&format!("{kind}_bout_{stat}")));
        }
    }
    keys
}

/// Usage features for one slice. `events` are the slice's screen events;
/// `bouts` come from [`extract_bouts`] over the whole stream and are clipped
/// to the slice. Durations are minutes, hours are local fractional hours.
pub fn usage_features(events: &[&ScreenEvent], bouts: &[InteractionBout], slice: &TimeSlice) -> FeatureValues {
    if events.is_empty() {
        return FeatureValues::all_missing(&feature_keys());
    }
    let mut out = FeatureValues::new();
    let minutes = slice.span_ms() as f64 / 60_000.0;
    let unlocks = events.iter().filter(|e| e.status == ScreenStatus::Unlock).count();
    out.set("unlocks_per_minute", (minutes > 0.0).then(|| unlocks as f64 / minutes));

    let clipped = |kind: BoutKind| -> Vec<f64> {
        bouts
            .iter()
            .filter(|b| b.kind == kind && b.overlaps(slice.start(), slice.end()))
            .map(|b| slice.overlap_ms(b.start, b.end) as f64 / 60_000.0)
            .filter(|m| *m > 0.0)
            .collect()
    };
    let interaction = clipped(BoutKind::Interaction);
    let unlocked = clipped(BoutKind::Unlocked);
    out.set("interaction_time", Some(interaction.iter().sum()));
    out.set("unlocked_time", Some(unlocked.iter().sum()));

    for (stem, status, first) in HOUR_STEMS {
        let mut matching = events.iter().filter(|e| e.status == status);
        let hit = if first { matching.next() } else { matching.next_back() };
        out.set(stem, hit.map(|e| slice.local_hour(e.timestamp)));
    }

    for (kind, lengths) in [("interaction", &interaction), ("unlocked", &unlocked)] {
        let s = Summary::of(lengths);
        out.set(&format!("{kind}_bout_max"), s.map(|s| s.max));
        out.set(&format!("{kind}_bout_min"), s.map(|s| s.min));
        out.set(&format!("{kind}_bout_mean"), s.map(|s| s.mean));
        out.set(&format!("{kind}_bout_std"), s.map(|s| s.std));
    }
    out
}
