//! Feature names and the catalog of every name a run can emit.
//!
//! Grammar: `<sensor>:<stem>[:<scope>]:<epoch>:<granularity>[:<index>]`,
//! with change features appending `:change:<field>` to a weekly name.

use std::fmt;
use std::str::FromStr;

use crate::features::{FeatureKey, FeatureSensor};
use crate::windowing::{Epoch, Granularity};
use crate::{bluetooth, calls, change, fitbit, location, places, screen};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureName {
    pub sensor: FeatureSensor,
    pub key: FeatureKey,
    pub epoch: Epoch,
    pub granularity: Granularity,
    /// Change field when this names a change feature.
    pub change: Option<&'static str>,
}

impl FeatureName {
    pub fn new(sensor: FeatureSensor, key: FeatureKey, epoch: Epoch, granularity: Granularity) -> Self {
        Self {
            sensor,
            key,
            epoch,
            granularity,
            change: None,
        }
    }

    pub fn with_change(&self, field: &'static str) -> Self {
        Self {
            change: Some(field),
            ..self.clone()
        }
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sensor, self.key.stem)?;
        if let Some(scope) = &self.key.scope {
            write!(f, ":{scope}")?;
        }
        write!(f, ":{}:{}", self.epoch, self.granularity)?;
        if let Some(i) = self.key.index {
            write!(f, ":{i}")?;
        }
        if let Some(field) = self.change {
            write!(f, ":change:{field}")?;
        }
        Ok(())
    }
}

impl FromStr for FeatureName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("malformed feature name `{s}`");
        let mut parts: Vec<&str> = s.split(':').collect();
        let mut change_field = None;
        if parts.len() >= 2 && parts[parts.len() - 2] == "change" {
            let field = parts.pop().ok_or_else(bad)?;
            parts.pop();
            change_field = Some(
                change::FIELDS
                    .into_iter()
                    .find(|f| *f == field)
                    .ok_or_else(|| format!("unknown change field `{field}`"))?,
            );
        }
        let index = match parts.last().map(|p| p.parse::<u8>()) {
            Some(Ok(i)) => {
                parts.pop();
                Some(i)
            }
            _ => None,
        };
        let (sensor, stem, scope, epoch, granularity) = match parts.as_slice() {
            [sensor, stem, epoch, gran] => (sensor, stem, None, epoch, gran),
            [sensor, stem, scope, epoch, gran] => (sensor, stem, Some(scope.to_string()), epoch, gran),
            _ => return Err(bad()),
        };
        if stem.is_empty() || scope.as_deref() == Some("") || (index.is_some() && scope.is_none()) {
            return Err(bad());
        }
        Ok(Self {
            sensor: sensor.parse()?,
            key: FeatureKey {
                stem: stem.to_string(),
                scope,
                index,
            },
            epoch: epoch.parse()?,
            granularity: granularity.parse()?,
            change: change_field,
        })
    }
}

/// Keys a feature family emits for every slice.
pub fn sensor_keys(sensor: FeatureSensor) -> Vec<FeatureKey> {
    match sensor {
        FeatureSensor::Bluetooth => bluetooth::feature_keys(),
        FeatureSensor::Calls => calls::feature_keys(),
        FeatureSensor::Location => location::feature_keys(),
        FeatureSensor::Places => places::feature_keys(),
        FeatureSensor::Screen => screen::feature_keys(),
        FeatureSensor::Sleep => fitbit::sleep_feature_keys(),
        FeatureSensor::Steps => fitbit::steps_feature_keys(),
    }
}

/// Which families, epochs and granularities a run covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub sensors: Vec<FeatureSensor>,
    pub epochs: Vec<Epoch>,
    pub granularities: Vec<Granularity>,
}

impl Default for Selection {
    fn default() -> Self {
        Self {
            sensors: FeatureSensor::ALL.to_vec(),
            epochs: Epoch::ALL.to_vec(),
            granularities: Granularity::ALL.to_vec(),
        }
    }
}

impl Selection {
    pub fn includes(&self, sensor: FeatureSensor, epoch: Epoch, granularity: Granularity) -> bool {
        self.sensors.contains(&sensor) && self.epochs.contains(&epoch) && self.granularities.contains(&granularity)
    }
}

/// Every selected name, change features included, sorted by rendered text.
pub fn enumerate_catalog(selection: &Selection) -> Vec<String> {
    let mut names = Vec::new();
    for sensor in FeatureSensor::ALL {
        if !selection.sensors.contains(&sensor) {
            continue;
        }
        let keys = sensor_keys(sensor);
        for epoch in Epoch::ALL.into_iter().filter(|e| selection.epochs.contains(e)) {
            for gran in Granularity::ALL
                .into_iter()
                .filter(|g| selection.granularities.contains(g))
            {
                for key in &keys {
                    let name = FeatureName::new(sensor, key.clone(), epoch, gran);
                    if gran == Granularity::Weekly {
                        names.extend(change::FIELDS.iter().map(|f| name.with_change(f).to_string()));
                    }
                    names.push(name.to_string());
                }
            }
        }
    }
    names.sort();
    names
}
