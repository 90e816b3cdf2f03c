use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{SensorKind, SensorRecord, Timestamped};
use crate::numerics::GeoPoint;

/// Width of a Fitbit step bin.
pub const STEP_BIN_MS: i64 = 5 * 60_000;

fn parse_ts(s: &str) -> Result<i64, String> {
    s.parse::<i64>()
        .map_err(|_| format!("timestamp `{s}` is not an integer"))
}

fn parse_f64(name: &str, s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{name} `{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} `{s}` is not finite"))
    }
}

macro_rules! closed_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(concat!("unknown ", stringify!($name), " `{}`"), other)),
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

closed_enum!(CallDirection {
    Incoming => "incoming",
    Outgoing => "outgoing",
    Missed => "missed",
});

closed_enum!(ScreenStatus {
    On => "on",
    Off => "off",
    Lock => "lock",
    Unlock => "unlock",
});

closed_enum!(SleepState {
    Asleep => "asleep",
    Restless => "restless",
    Awake => "awake",
    Unknown => "unknown",
});

closed_enum!(ConversationLabel {
    Voice => "voice",
    Noise => "noise",
    Silence => "silence",
    Unknown => "unknown",
});

closed_enum!(ContactCategory {
    Family => "family",
    FriendOffCampus => "friend_off_campus",
    FriendOnCampus => "friend_on_campus",
    Other => "other",
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BluetoothScan {
    pub timestamp: i64,
    pub address: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub timestamp: i64,
    pub correspondent: String,
    pub direction: CallDirection,
    /// Talk time in seconds; always 0 for missed calls.
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationFix {
    pub timestamp: i64,
    pub point: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScreenEvent {
    pub timestamp: i64,
    pub status: ScreenStatus,
}

/// One Fitbit sleep-state sample, aligned to the start of its minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SleepMinute {
    pub timestamp: i64,
    pub state: SleepState,
}

/// Step count over `[start, start + 5 min)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepBin {
    pub start: i64,
    pub steps: u32,
}

impl StepBin {
    pub fn end(&self) -> i64 {
        self.start + STEP_BIN_MS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConversationInference {
    pub timestamp: i64,
    pub label: ConversationLabel,
}

/// Correspondent id to social category. Unknown ids are [`ContactCategory::Other`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContactDirectory(BTreeMap<String, ContactCategory>);

impl ContactDirectory {
    pub fn insert(&mut self, id: String, category: ContactCategory) {
        self.0.insert(id, category);
    }

    pub fn category(&self, id: &str) -> ContactCategory {
        self.0.get(id).copied().unwrap_or(ContactCategory::Other)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, ContactCategory)> for ContactDirectory {
    fn from_iter<I: IntoIterator<Item = (String, ContactCategory)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

macro_rules! timestamped {
    ($($t:ty => $field:ident),+) => {
        $(impl Timestamped for $t {
            fn timestamp(&self) -> i64 {
                self.$field
            }
        })+
    };
}

timestamped!(
    BluetoothScan => timestamp,
    CallRecord => timestamp,
    LocationFix => timestamp,
    ScreenEvent => timestamp,
    SleepMinute => timestamp,
    StepBin => start,
    ConversationInference => timestamp
);

impl SensorRecord for BluetoothScan {
    const KIND: SensorKind = SensorKind::Bluetooth;

    fn parse(f: &csv::StringRecord) -> Result<Self, String> {
        let address = f[1].to_string();
        if address.is_empty() {
            return Err("empty address".into());
        }
        Ok(Self {
            timestamp: parse_ts(&f[0])?,
            address,
        })
    }
}

impl SensorRecord for CallRecord {
    const KIND: SensorKind = SensorKind::Calls;

    fn parse(f: &csv::StringRecord) -> Result<Self, String> {
        let direction: CallDirection = f[2].parse()?;
        let duration_s = parse_f64("duration_s", &f[3])?;
        if duration_s < 0.0 {
            return Err(format!("negative duration {duration_s}"));
        }
        Ok(Self {
            timestamp: parse_ts(&f[0])?,
            correspondent: f[1].to_string(),
            direction,
            duration_s: if direction == CallDirection::Missed {
                0.0
            } else {
                duration_s
            },
        })
    }
}

impl SensorRecord for LocationFix {
    const KIND: SensorKind = SensorKind::Location;

    fn parse(f: &csv::StringRecord) -> Result<Self, String> {
        let lat = parse_f64("lat", &f[1])?;
        let lon = parse_f64("lon", &f[2])?;
        let point = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
        Ok(Self {
            timestamp: parse_ts(&f[0])?,
            point,
        })
    }
}

impl SensorRecord for ScreenEvent {
    const KIND: SensorKind = SensorKind::Screen;

    fn parse(f: &csv::StringRecord) -> Result<Self, String> {
        Ok(Self {
            timestamp: parse_ts(&f[0])?,
            status: f[1].parse()?,
        })
    }
}

impl SensorRecord for SleepMinute {
    const KIND: SensorKind = SensorKind::Sleep;

    fn parse(f: &csv::StringRecord) -> Result<Self, String> {
        let ts = parse_ts(&f[0])?;
        Ok(Self {
            timestamp: ts.div_euclid(60_000) * 60_000,
            state: f[1].parse()?,
        })
    }

    fn conflicts_with(&self, earlier: &Self) -> Option<String> {
        (earlier.state != self.state).then(|| format!("minute {} already has state {}", self.timestamp, earlier.state))
    }
}

impl SensorRecord for StepBin {
    const KIND: SensorKind = SensorKind::Steps;

    fn parse(f: &csv::StringRecord) -> Result<Self, String> {
        let start = parse_ts(&f[0])?;
        let steps = f[1]
            .parse::<u32>()
            .map_err(|_| format!("steps `{}` is not a non-negative integer", &f[1]))?;
        Ok(Self {
            start: start.div_euclid(STEP_BIN_MS) * STEP_BIN_MS,
            steps,
        })
    }

    fn conflicts_with(&self, earlier: &Self) -> Option<String> {
        (earlier.steps != self.steps).then(|| format!("bin starting {} overlaps an earlier bin", self.start))
    }
}

impl SensorRecord for ConversationInference {
    const KIND: SensorKind = SensorKind::Conversation;

    fn parse(f: &csv::StringRecord) -> Result<Self, String> {
        Ok(Self {
            timestamp: parse_ts(&f[0])?,
            label: f[1].parse()?,
        })
    }
}
