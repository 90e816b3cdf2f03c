//! Run configuration file (TOML).

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::Deserialize;

use crate::location::LocationParams;
use crate::windowing::{ConfigError, StudyConfig};

/// A date written either as a TOML date or as a `YYYY-MM-DD` string.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DateField {
    Toml(toml::value::Datetime),
    Text(String),
}

impl DateField {
    fn parse(&self, field: &str) -> Result<NaiveDate, ConfigError> {
        let text = match self {
            DateField::Toml(d) => d.to_string(),
            DateField::Text(s) => s.clone(),
        };
        NaiveDate::parse_from_str(&text, "%Y-%m-%d")
            .map_err(|_| ConfigError::Invalid(format!("{field} `{text}` is not a YYYY-MM-DD date")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlaces {
    map: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    start: DateField,
    end: DateField,
    timezone: String,
    half_term_split: Option<DateField>,
    weeks_n: Option<usize>,
    weeks_m: Option<usize>,
    #[serde(default)]
    location: LocationParams,
    places: Option<RawPlaces>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub study: StudyConfig,
    pub location: LocationParams,
    /// Place map, resolved against the config file's directory.
    pub place_map: Option<PathBuf>,
}

impl RunConfig {
    /// `base` resolves a relative place-map path.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        let timezone: Tz = raw
            .timezone
            .parse()
            .map_err(|_| ConfigError::Timezone(raw.timezone.clone()))?;
        let split = raw
            .half_term_split
            .as_ref()
            .map(|d| d.parse("half_term_split"))
            .transpose()?;
        let study = StudyConfig::new(
            raw.start.parse("start")?,
            raw.end.parse("end")?,
            timezone,
            split,
            raw.weeks_n,
            raw.weeks_m,
        )?;
        let loc = raw.location;
        if !(loc.eps_m > 0.0 && loc.eps_m.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "location.eps_m = {} must be positive",
                loc.eps_m
            )));
        }
        if loc.min_pts == 0 {
            return Err(ConfigError::Invalid("location.min_pts must be at least 1".into()));
        }
        if !(loc.speed_threshold_kmh >= 0.0 && loc.speed_threshold_kmh.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "location.speed_threshold_kmh = {} must be non-negative",
                loc.speed_threshold_kmh
            )));
        }
        if !(loc.gap_cap_s > 0.0 && loc.gap_cap_s.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "location.gap_cap_s = {} must be positive",
                loc.gap_cap_s
            )));
        }
        Ok(Self {
            study,
            location: loc,
            place_map: raw.places.map(|p| base.join(p.map)),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }
}
