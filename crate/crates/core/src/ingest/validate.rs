use std::collections::{BTreeMap, BTreeSet};

use chrono::DateTime;
use serde::Serialize;

use super::{ParticipantData, SensorKind, STEP_BIN_MS};

const MINUTE: i64 = 60_000;
const HOUR: i64 = 60 * MINUTE;

/// Lower edges of the inter-record gap histogram buckets.
const GAP_EDGES: [(i64, &str); 8] = [
    (0, "<1m"),
    (MINUTE, "1m-5m"),
    (5 * MINUTE, "5m-30m"),
    (30 * MINUTE, "30m-1h"),
    (HOUR, "1h-2h"),
    (2 * HOUR, "2h-6h"),
    (6 * HOUR, "6h-24h"),
    (24 * HOUR, ">=24h"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapBucket {
    pub label: &'static str,
    pub min_ms: i64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorCoverage {
    pub present: bool,
    pub records: usize,
    pub rejected: usize,
    pub first_timestamp: Option<i64>,
    pub last_timestamp: Option<i64>,
    pub gap_histogram: Vec<GapBucket>,
    /// UTC date -> fraction of that day's sampling periods with at least one record.
    pub daily_coverage: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub participant: String,
    pub sensors: BTreeMap<SensorKind, SensorCoverage>,
    pub schema_violations: usize,
}

fn sampling_period(kind: SensorKind) -> i64 {
    match kind {
        SensorKind::Steps => STEP_BIN_MS,
        _ => MINUTE,
    }
}

fn coverage(kind: SensorKind, timestamps: Option<Vec<i64>>, rejected: usize) -> SensorCoverage {
    let mut gap_histogram: Vec<GapBucket> = GAP_EDGES
        .iter()
        .map(|&(min_ms, label)| GapBucket {
            label,
            min_ms,
            count: 0,
        })
        .collect();
    let Some(ts) = timestamps else {
        return SensorCoverage {
            present: false,
            records: 0,
            rejected,
            first_timestamp: None,
            last_timestamp: None,
            gap_histogram,
            daily_coverage: BTreeMap::new(),
        };
    };
    for w in ts.windows(2) {
        let gap = w[1] - w[0];
        let bucket = GAP_EDGES.iter().rposition(|&(edge, _)| gap >= edge).unwrap_or(0);
        gap_histogram[bucket].count += 1;
    }
    let period = sampling_period(kind);
    let per_day = (24 * HOUR / period) as f64;
    let mut periods: BTreeMap<i64, BTreeSet<i64>> = BTreeMap::new();
    for &t in &ts {
        let day = t.div_euclid(24 * HOUR);
        periods.entry(day).or_default().insert(t.div_euclid(period));
    }
    let daily_coverage = periods
        .into_iter()
        .filter_map(|(day, set)| {
            let date = DateTime::from_timestamp_millis(day * 24 * HOUR)?.date_naive();
            Some((date.to_string(), set.len() as f64 / per_day))
        })
        .collect();
    SensorCoverage {
        present: true,
        records: ts.len(),
        rejected,
        first_timestamp: ts.first().copied(),
        last_timestamp: ts.last().copied(),
        gap_histogram,
        daily_coverage,
    }
}

/// Per-sensor coverage and schema-violation summary. Always succeeds.
pub fn validate_dataset(data: &ParticipantData) -> ValidationReport {
    let mut sensors = BTreeMap::new();
    for kind in SensorKind::ALL {
        let rejected = data.issues.get(&kind).map_or(0, Vec::len);
        let cov = if kind == SensorKind::Contacts {
            let mut c = coverage(kind, None, rejected);
            c.present = data.contacts.is_some();
            c.records = data.contacts.as_ref().map_or(0, |d| d.len());
            c
        } else {
            coverage(kind, data.timestamps(kind), rejected)
        };
        sensors.insert(kind, cov);
    }
    ValidationReport {
        participant: data.id.clone(),
        schema_violations: data.issues.values().map(Vec::len).sum(),
        sensors,
    }
}
