//! Sleep and step features from Fitbit minute / 5-minute records.
//!
//! Step bins with fewer than 10 steps are sedentary and bins with more than
//! 10 are active; a bin of exactly 10 keeps the current bout's kind (and
//! starts a sedentary bout when there is none). A missing bin ends the bout.

use serde::Serialize;

use crate::features::{FeatureKey, FeatureValues};
use crate::ingest::{SleepMinute, SleepState, StepBin, STEP_BIN_MS};
use crate::numerics::Summary;

const MINUTE_MS: i64 = 60_000;
pub const SEDENTARY_BELOW: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SleepBout {
    pub state: SleepState,
    /// UTC ms of the first minute.
    pub start: i64,
    /// UTC ms just past the last minute.
    pub end: i64,
    pub length: usize,
}

/// Maximal runs of one known state over consecutive minutes. `unknown`
/// samples and missing minutes end a run.
pub fn sleep_bouts<'a, I>(minutes: I) -> Vec<SleepBout>
where
    I: IntoIterator<Item = &'a SleepMinute>,
{
    let mut bouts: Vec<SleepBout> = Vec::new();
    let mut prev: Option<&SleepMinute> = None;
    for m in minutes {
        let continues = prev.is_some_and(|p| p.state == m.state && m.timestamp - p.timestamp == MINUTE_MS);
        if m.state != SleepState::Unknown {
            if continues {
                let b = bouts.last_mut().expect("open bout");
                b.end = m.timestamp + MINUTE_MS;
                b.length += 1;
            } else {
                bouts.push(SleepBout {
                    state: m.state,
                    start: m.timestamp,
                    end: m.timestamp + MINUTE_MS,
                    length: 1,
                });
            }
        }
        prev = Some(m);
    }
    bouts
}

const SLEEP_STATES: [SleepState; 3] = [SleepState::Asleep, SleepState::Restless, SleepState::Awake];
const SLEEP_BOUT_STEMS: [&str; 9] = [
    "bout_count",
    "bout_sum",
    "bout_mean",
    "bout_max",
    "bout_min",
    "longest_bout_start",
    "longest_bout_end",
    "shortest_bout_start",
    "shortest_bout_end",
];

pub fn sleep_feature_keys() -> Vec<FeatureKey> {
    let mut keys: Vec<FeatureKey> = SleepState::ALL
        .iter()
        .map(|s| FeatureKey::new(&format!("{s}_count")))
        .collect();
    keys.push(FeatureKey::new("efficiency_weak"));
    keys.push(FeatureKey::new("efficiency_strong"));
    for state in SLEEP_STATES {
        for stem in SLEEP_BOUT_STEMS {
            keys.push(FeatureKey::scoped(stem, state.as_str()));
        }
    }
    keys
}

/// Sleep features over the minutes of one slice (sorted).
pub fn sleep_features(minutes: &[&SleepMinute]) -> FeatureValues {
    let count = |s: SleepState| minutes.iter().filter(|m| m.state == s).count() as f64;
    let (asleep, restless, awake) = (
        count(SleepState::Asleep),
        count(SleepState::Restless),
        count(SleepState::Awake),
    );
    let mut out = FeatureValues::new();
    for state in SleepState::ALL {
        out.set(&format!("{state}_count"), Some(count(*state)));
    }
    let denominator = asleep + restless + awake;
    out.set(
        "efficiency_weak",
        (denominator > 0.0).then(|| (asleep + restless) / denominator),
    );
    out.set("efficiency_strong", (denominator > 0.0).then(|| asleep / denominator));

    let bouts = sleep_bouts(minutes.iter().copied());
    for state in SLEEP_STATES {
        let scope = state.as_str();
        let of_state: Vec<&SleepBout> = bouts.iter().filter(|b| b.state == state).collect();
        let lengths: Vec<f64> = of_state.iter().map(|b| b.length as f64).collect();
        let s = Summary::of(&lengths);
        out.set_scoped("bout_count", scope, Some(of_state.len() as f64));
        out.set_scoped("bout_sum", scope, Some(lengths.iter().sum()));
        out.set_scoped("bout_mean", scope, s.map(|s| s.mean));
        out.set_scoped("bout_max", scope, s.map(|s| s.max));
        out.set_scoped("bout_min", scope, s.map(|s| s.min));
        // earliest start wins ties; bouts are already in start order
        let longest = of_state.iter().fold(None::<&&SleepBout>, |best, b| match best {
            Some(x) if x.length >= b.length => Some(x),
            _ => Some(b),
        });
        let shortest = of_state.iter().fold(None::<&&SleepBout>, |best, b| match best {
            Some(x) if x.length <= b.length => Some(x),
            _ => Some(b),
        });
        out.set_scoped("longest_bout_start", scope, longest.map(|b| b.start as f64));
        out.set_scoped("longest_bout_end", scope, longest.map(|b| b.end as f64));
        out.set_scoped("shortest_bout_start", scope, shortest.map(|b| b.start as f64));
        out.set_scoped("shortest_bout_end", scope, shortest.map(|b| b.end as f64));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    Active,
    Sedentary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ActivityBout {
    pub kind: ActivityKind,
    pub start: i64,
    pub end: i64,
    pub bins: usize,
    pub steps: u64,
}

impl ActivityBout {
    pub fn minutes(&self) -> f64 {
        (self.bins as i64 * STEP_BIN_MS) as f64 / MINUTE_MS as f64
    }
}

/// Split sorted 5-minute bins into alternating active / sedentary bouts.
pub fn segment_activity<'a, I>(bins: I) -> Vec<ActivityBout>
where
    I: IntoIterator<Item = &'a StepBin>,
{
    let mut bouts: Vec<ActivityBout> = Vec::new();
    let mut last_start: Option<i64> = None;
    for bin in bins {
        let contiguous = last_start.is_some_and(|s| bin.start - s <= STEP_BIN_MS);
        let current = bouts.last().filter(|_| contiguous).map(|b| b.kind);
        let kind = if bin.steps > SEDENTARY_BELOW {
            ActivityKind::Active
        } else if bin.steps < SEDENTARY_BELOW {
            ActivityKind::Sedentary
        } else {
            current.unwrap_or(ActivityKind::Sedentary)
        };
        if current == Some(kind) {
            let b = bouts.last_mut().expect("open bout");
            b.end = bin.end();
            b.bins += 1;
            b.steps += bin.steps as u64;
        } else {
            bouts.push(ActivityBout {
                kind,
                start: bin.start,
                end: bin.end(),
                bins: 1,
                steps: bin.steps as u64,
            });
        }
        last_start = Some(bin.start);
    }
    bouts
}

const STEP_STEMS: [&str; 13] = [
    "total_steps",
    "max_steps_5min",
    "active_bouts",
    "sedentary_bouts",
    "active_bout_max",
    "active_bout_min",
    "active_bout_mean",
    "sedentary_bout_max",
    "sedentary_bout_min",
    "sedentary_bout_mean",
    "active_bout_steps_max",
    "active_bout_steps_min",
    "active_bout_steps_mean",
];

pub fn steps_feature_keys() -> Vec<FeatureKey> {
    STEP_STEMS.iter().map(|s| FeatureKey::new(s)).collect()
}

/// Step features over the bins of one slice. Bout lengths are minutes.
pub fn steps_features(bins: &[&StepBin]) -> FeatureValues {
    if bins.is_empty() {
        return FeatureValues::all_missing(&steps_feature_keys());
    }
    let mut out = FeatureValues::new();
    out.set("total_steps", Some(bins.iter().map(|b| b.steps as f64).sum()));
    out.set("max_steps_5min", bins.iter().map(|b| b.steps).max().map(f64::from));
    let bouts = segment_activity(bins.iter().copied());
    let of = |kind| bouts.iter().filter(move |b: &&ActivityBout| b.kind == kind);
    let active: Vec<f64> = of(ActivityKind::Active).map(|b| b.minutes()).collect();
    let sedentary: Vec<f64> = of(ActivityKind::Sedentary).map(|b| b.minutes()).collect();
    let active_steps: Vec<f64> = of(ActivityKind::Active).map(|b| b.steps as f64).collect();
    out.set("active_bouts", Some(active.len() as f64));
    out.set("sedentary_bouts", Some(sedentary.len() as f64));
    for (prefix, values) in [
        ("active_bout", &active),
        ("sedentary_bout", &sedentary),
        ("active_bout_steps", &active_steps),
    ] {
        let s = Summary::of(values);
        out.set(&format!("{prefix}_max"), s.map(|s| s.max));
        out.set(&format!("{prefix}_min"), s.map(|s| s.min));
        out.set(&format!("{prefix}_mean"), s.map(|s| s.mean));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::assert_keys_match;

    fn minutes(states: &[SleepState]) -> Vec<SleepMinute> {
        states
            .iter()
            .enumerate()
            .map(|(i, &state)| SleepMinute {
                timestamp: i as i64 * MINUTE_MS,
                state,
            })
            .collect()
    }

    fn bins(steps: &[u32]) -> Vec<StepBin> {
        steps
            .iter()
            .enumerate()
            .map(|(i, &steps)| StepBin {
                start: i as i64 * STEP_BIN_MS,
                steps,
            })
            .collect()
    }

    #[test]
    fn efficiencies() {
        let mut states = vec![SleepState::Asleep; 400];
        states.extend(vec![SleepState::Restless; 30]);
        states.extend(vec![SleepState::Awake; 20]);
        let m = minutes(&states);
        let refs: Vec<&SleepMinute> = m.iter().collect();
        let f = sleep_features(&refs);
        assert_keys_match(&f, &sleep_feature_keys());
        assert!((f.get("efficiency_weak", None).unwrap() - 430.0 / 450.0).abs() < 1e-12);
        assert!((f.get("efficiency_strong", None).unwrap() - 400.0 / 450.0).abs() < 1e-12);
        assert!((430.0f64 / 450.0 - 0.9556).abs() < 1e-4);
    }

    #[test]
    fn all_unknown_has_counts_only() {
        let m = minutes(&[SleepState::Unknown; 30]);
        let refs: Vec<&SleepMinute> = m.iter().collect();
        let f = sleep_features(&refs);
        assert_eq!(f.get("unknown_count", None), Some(30.0));
        assert_eq!(f.get("efficiency_weak", None), None);
        assert_eq!(f.get("bout_count", Some("asleep")), Some(0.0));
        assert_eq!(f.get("bout_max", Some("asleep")), None);
    }

    #[test]
    fn single_run() {
        let m = minutes(&[SleepState::Asleep; 90]);
        let refs: Vec<&SleepMinute> = m.iter().collect();
        let f = sleep_features(&refs);
        let g = |s| f.get(s, Some("asleep")).unwrap();
        assert_eq!(g("bout_count"), 1.0);
        assert_eq!(g("longest_bout_start"), g("shortest_bout_start"));
        assert_eq!(g("longest_bout_start"), 0.0);
        assert_eq!(g("longest_bout_end"), 90.0 * MINUTE_MS as f64);
    }

    #[test]
    fn missing_minute_splits_runs() {
        let mut m = minutes(&[SleepState::Asleep; 5]);
        m.remove(2);
        let bouts = sleep_bouts(&m);
        assert_eq!(bouts.iter().map(|b| b.length).collect::<Vec<_>>(), vec![2, 2]);
    }

    #[test]
    fn segmentation_example() {
        let b = bins(&[0, 3, 120, 250, 7, 0]);
        let bouts = segment_activity(&b);
        let shape: Vec<(ActivityKind, usize)> = bouts.iter().map(|b| (b.kind, b.bins)).collect();
        assert_eq!(
            shape,
            vec![
                (ActivityKind::Sedentary, 2),
                (ActivityKind::Active, 2),
                (ActivityKind::Sedentary, 2)
            ]
        );
        let refs: Vec<&StepBin> = b.iter().collect();
        let f = steps_features(&refs);
        assert_keys_match(&f, &steps_feature_keys());
        assert_eq!(f.get("total_steps", None), Some(380.0));
        assert_eq!(f.get("max_steps_5min", None), Some(250.0));
        assert_eq!(f.get("active_bout_steps_max", None), Some(370.0));
        assert_eq!(f.get("sedentary_bout_mean", None), Some(10.0));
    }

    #[test]
    fn all_zero_is_one_sedentary_bout() {
        let b = bins(&[0; 12]);
        let refs: Vec<&StepBin> = b.iter().collect();
        let f = steps_features(&refs);
        assert_eq!(f.get("sedentary_bouts", None), Some(1.0));
        assert_eq!(f.get("active_bouts", None), Some(0.0));
        assert_eq!(f.get("active_bout_max", None), None);
    }

    #[test]
    fn exactly_ten_keeps_the_current_kind() {
        assert_eq!(segment_activity(&bins(&[10]))[0].kind, ActivityKind::Sedentary);
        let shape: Vec<_> = segment_activity(&bins(&[50, 10, 3]))
            .iter()
            .map(|b| (b.kind, b.bins))
            .collect();
        assert_eq!(shape, vec![(ActivityKind::Active, 2), (ActivityKind::Sedentary, 1)]);
    }

    #[test]
    fn gaps_end_bouts() {
        let mut b = bins(&[0, 0, 0]);
        b[2].start += STEP_BIN_MS;
        assert_eq!(segment_activity(&b).len(), 2);
    }

    #[test]
    fn empty_steps_are_missing() {
        assert!(steps_features(&[]).into_iter().all(|(_, v)| v.is_none()));
    }
}
