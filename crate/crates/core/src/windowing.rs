//! Temporal slicing: epochs of the day crossed with calendar granularities.
//!
//! Epoch boundaries are civil clock times in the participant's timezone,
//! mapped to UTC per day, so DST days are 23 or 25 hours long. All intervals
//! are half-open `[start, end)` in UTC epoch milliseconds. The night epoch
//! (00:00-06:00) belongs to the calendar day it starts on.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::{Datelike, Duration, LocalResult, NaiveDate, NaiveDateTime, TimeZone, Timelike};
use chrono_tz::Tz;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::Timestamped;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid study config: {0}")]
    Invalid(String),
    #[error("unknown timezone `{0}`")]
    Timezone(String),
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Epoch {
    Morning,
    Afternoon,
    Evening,
    Night,
    AllDay,
}

impl Epoch {
    pub const ALL: [Epoch; 5] = [
        Epoch::Morning,
        Epoch::Afternoon,
        Epoch::Evening,
        Epoch::Night,
        Epoch::AllDay,
    ];

    /// The four epochs that tile a day.
    pub const PARTS: [Epoch; 4] = [Epoch::Night, Epoch::Morning, Epoch::Afternoon, Epoch::Evening];

    pub fn name(&self) -> &'static str {
        match self {
            Epoch::Morning => "morning",
            Epoch::Afternoon => "afternoon",
            Epoch::Evening => "evening",
            Epoch::Night => "night",
            Epoch::AllDay => "all_day",
        }
    }

    /// Local clock hours `[start, end)`; 24 means the next midnight.
    pub fn hours(&self) -> (u32, u32) {
        match self {
            Epoch::Morning => (6, 12),
            Epoch::Afternoon => (12, 18),
            Epoch::Evening => (18, 24),
            Epoch::Night => (0, 6),
            Epoch::AllDay => (0, 24),
        }
    }

    /// Epoch (other than all-day) a local clock hour falls in.
    pub fn of_hour(hour: u32) -> Epoch {
        match hour {
            0..=5 => Epoch::Night,
            6..=11 => Epoch::Morning,
            12..=17 => Epoch::Afternoon,
            _ => Epoch::Evening,
        }
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Epoch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Epoch::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown epoch `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Daily,
    Weekly,
    Weekdays,
    Weekends,
    /// Two slices: before and from the half-term split date.
    HalfTerm,
    FullTerm,
}

impl Granularity {
    pub const ALL: [Granularity; 6] = [
        Granularity::Daily,
        Granularity::Weekly,
        Granularity::Weekdays,
        Granularity::Weekends,
        Granularity::HalfTerm,
        Granularity::FullTerm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Granularity::Daily => "daily",
            Granularity::Weekly => "weekly",
            Granularity::Weekdays => "weekdays",
            Granularity::Weekends => "weekends",
            Granularity::HalfTerm => "half_term",
            Granularity::FullTerm => "full_term",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Granularity::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown granularity `{s}`"))
    }
}

/// Study calendar. `end` is inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub timezone: Tz,
    pub half_term_split: NaiveDate,
    pub weeks_n: usize,
    pub weeks_m: usize,
}

impl StudyConfig {
    /// Build a config, filling defaults: split at the middle day, `n` from the
    /// number of ISO weeks the study touches, `m = ceil(n / 2)`.
    pub fn new(
        start: NaiveDate,
        end: NaiveDate,
        timezone: Tz,
        half_term_split: Option<NaiveDate>,
        weeks_n: Option<usize>,
        weeks_m: Option<usize>,
    ) -> Result<Self, ConfigError> {
        if start >= end {
            return Err(ConfigError::Invalid(format!("start {start} must be before end {end}")));
        }
        let days = (end - start).num_days() + 1;
        let split = half_term_split.unwrap_or(start + Duration::days(days / 2));
        if !(start < split && split < end) {
            return Err(ConfigError::Invalid(format!(
                "half-term split {split} must lie strictly between {start} and {end}"
            )));
        }
        let span_weeks = ((end - week_one_monday(start)).num_days() / 7 + 1) as usize;
        let n = weeks_n.unwrap_or(span_weeks);
        if n == 0 || n > span_weeks {
            return Err(ConfigError::Invalid(format!(
                "weeks_n = {n} but the study spans {span_weeks} weeks"
            )));
        }
        let m = weeks_m.unwrap_or(n.div_ceil(2));
        let m_ok = if n >= 3 { 1 < m && m < n } else { 1 <= m && m <= n };
        if !m_ok {
            return Err(ConfigError::Invalid(format!(
                "weeks_m = {m} must satisfy 1 < m < n (n = {n})"
            )));
        }
        Ok(Self {
            start,
            end,
            timezone,
            half_term_split: split,
            weeks_n: n,
            weeks_m: m,
        })
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take_while(move |d| *d <= self.end)
    }

    /// Monday of study week 1.
    pub fn week_one(&self) -> NaiveDate {
        week_one_monday(self.start)
    }

    /// 1-based study week of a local date.
    pub fn week_of(&self, date: NaiveDate) -> usize {
        ((date - self.week_one()).num_days().div_euclid(7) + 1) as usize
    }

    pub fn local_hour(&self, ts: i64) -> f64 {
        local_fractional_hour(self.timezone, ts)
    }
}

fn week_one_monday(start: NaiveDate) -> NaiveDate {
    start - Duration::days(start.weekday().num_days_from_monday() as i64)
}

/// UTC milliseconds of a local civil time. Nonexistent local times (DST gap)
/// move forward to the first valid minute; ambiguous ones take the earlier
/// instant.
pub fn local_to_utc_ms(tz: Tz, local: NaiveDateTime) -> i64 {
    let mut t = local;
    for _ in 0..=24 * 60 {
        match tz.from_local_datetime(&t) {
            LocalResult::Single(dt) => return dt.timestamp_millis(),
            LocalResult::Ambiguous(a, _) => return a.timestamp_millis(),
            LocalResult::None => t += Duration::minutes(1),
        }
    }
    unreachable!("no valid local time within a day of {local}")
}

pub fn local_datetime(tz: Tz, ts: i64) -> NaiveDateTime {
    let utc = chrono::DateTime::from_timestamp_millis(ts).expect("timestamp in range");
    utc.with_timezone(&tz).naive_local()
}

/// Local time of day as fractional hours in `[0, 24)`.
pub fn local_fractional_hour(tz: Tz, ts: i64) -> f64 {
    let t = local_datetime(tz, ts);
    t.hour() as f64 + t.minute() as f64 / 60.0 + (t.second() as f64 + t.nanosecond() as f64 * 1e-9) / 3600.0
}

/// UTC bounds of `epoch` on local date `day`.
pub fn epoch_bounds(tz: Tz, day: NaiveDate, epoch: Epoch) -> (i64, i64) {
    let (h0, h1) = epoch.hours();
    let at = |h: u32| {
        let (d, h) = if h == 24 {
            (day + Duration::days(1), 0)
        } else {
            (day, h)
        };
        local_to_utc_ms(tz, d.and_hms_opt(h, 0, 0).expect("valid hour"))
    };
    (at(h0), at(h1))
}

/// A concrete window: one epoch within one granularity unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSlice {
    pub epoch: Epoch,
    pub granularity: Granularity,
    /// 1-based ordinal among slices of the same epoch and granularity.
    pub index: usize,
    /// Stable identifier: a date, `weekNN`, `first`/`second` or `all`.
    pub label: String,
    /// Disjoint, ascending, half-open UTC intervals.
    pub bounds: Vec<(i64, i64)>,
    #[serde(skip)]
    pub timezone: Tz,
}

impl TimeSlice {
    pub fn contains(&self, ts: i64) -> bool {
        self.interval_of(ts).is_some()
    }

    pub fn interval_of(&self, ts: i64) -> Option<(i64, i64)> {
        let i = self.bounds.partition_point(|&(_, end)| end <= ts);
        self.bounds.get(i).copied().filter(|&(s, _)| s <= ts)
    }

    pub fn span_ms(&self) -> i64 {
        self.bounds.iter().map(|(s, e)| e - s).sum()
    }

    pub fn start(&self) -> i64 {
        self.bounds.first().map_or(0, |b| b.0)
    }

    pub fn end(&self) -> i64 {
        self.bounds.last().map_or(0, |b| b.1)
    }

    /// Length of the overlap of `[start, end)` with this slice.
    pub fn overlap_ms(&self, start: i64, end: i64) -> i64 {
        self.bounds
            .iter()
            .map(|&(s, e)| (end.min(e) - start.max(s)).max(0))
            .sum()
    }

    pub fn local_hour(&self, ts: i64) -> f64 {
        local_fractional_hour(self.timezone, ts)
    }
}

fn merge_adjacent(mut bounds: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    bounds.sort();
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(bounds.len());
    for (s, e) in bounds {
        if s >= e {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.1 >= s => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Materialize every epoch x granularity slice, ordered by (epoch, granularity, index).
pub fn build_slices(config: &StudyConfig) -> Vec<TimeSlice> {
    let days: Vec<NaiveDate> = config.days().collect();
    // (granularity, label, days) groups shared by every epoch
    let mut groups: Vec<(Granularity, String, Vec<NaiveDate>)> = Vec::new();
    for d in &days {
        groups.push((Granularity::Daily, d.to_string(), vec![*d]));
    }
    let is_weekend = |d: &NaiveDate| d.weekday().num_days_from_monday() >= 5;
    for (granularity, keep) in [
        (
            Granularity::Weekly,
            &(|_: &NaiveDate| true) as &dyn Fn(&NaiveDate) -> bool,
        ),
        (Granularity::Weekdays, &|d: &NaiveDate| !is_weekend(d)),
        (Granularity::Weekends, &|d: &NaiveDate| is_weekend(d)),
    ] {
        for week in 1..=config.weeks_n {
            let members: Vec<NaiveDate> = days
                .iter()
                .copied()
                .filter(|d| config.week_of(*d) == week && keep(d))
                .collect();
            if !members.is_empty() {
                groups.push((granularity, format!("week{week:02}"), members));
            }
        }
    }
    let (first, second): (Vec<NaiveDate>, Vec<NaiveDate>) = days.iter().partition(|d| **d < config.half_term_split);
    groups.push((Granularity::HalfTerm, "first".into(), first));
    groups.push((Granularity::HalfTerm, "second".into(), second));
    groups.push((Granularity::FullTerm, "all".into(), days.clone()));

    let mut slices = Vec::new();
    for epoch in Epoch::ALL {
        for granularity in Granularity::ALL {
            for (index, (_, label, members)) in (1..).zip(groups.iter().filter(|g| g.0 == granularity)) {
                let bounds = merge_adjacent(
                    members
                        .iter()
                        .map(|d| epoch_bounds(config.timezone, *d, epoch))
                        .collect(),
                );
                slices.push(TimeSlice {
                    epoch,
                    granularity,
                    index,
                    label: label.clone(),
                    bounds,
                    timezone: config.timezone,
                });
            }
        }
    }
    slices
}

/// Index ranges of `records` inside each of the slice's intervals, paired
/// with that interval. `records` must be sorted by timestamp.
pub fn assign_ranges<T: Timestamped>(records: &[T], slice: &TimeSlice) -> Vec<(Range<usize>, (i64, i64))> {
    slice
        .bounds
        .iter()
        .map(|&(s, e)| {
            let lo = records.partition_point(|r| r.timestamp() < s);
            let hi = records.partition_point(|r| r.timestamp() < e).max(lo);
            (lo..hi, (s, e))
        })
        .collect()
}

/// Records inside each of the slice's intervals, as contiguous sub-slices.
pub fn assign_chunks<'a, T: Timestamped>(records: &'a [T], slice: &TimeSlice) -> Vec<&'a [T]> {
    assign_ranges(records, slice)
        .into_iter()
        .map(|(r, _)| &records[r])
        .collect()
}

/// Records whose timestamp falls in the slice, in their original order.
pub fn assign<'a, T: Timestamped>(records: &'a [T], slice: &TimeSlice) -> Vec<&'a T> {
    assign_chunks(records, slice).into_iter().flatten().collect()
}
