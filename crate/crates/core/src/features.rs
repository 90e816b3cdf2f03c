//! Feature keys and the per-slice value maps every feature module returns.

use std::fmt;

use serde::Serialize;

/// The feature families, i.e. the first component of a feature name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSensor {
    Bluetooth,
    Calls,
    Location,
    Places,
    Screen,
    Sleep,
    Steps,
}

impl FeatureSensor {
    pub const ALL: [FeatureSensor; 7] = [
        FeatureSensor::Bluetooth,
        FeatureSensor::Calls,
        FeatureSensor::Location,
        FeatureSensor::Places,
        FeatureSensor::Screen,
        FeatureSensor::Sleep,
        FeatureSensor::Steps,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureSensor::Bluetooth => "bluetooth",
            FeatureSensor::Calls => "calls",
            FeatureSensor::Location => "location",
            FeatureSensor::Places => "places",
            FeatureSensor::Screen => "screen",
            FeatureSensor::Sleep => "sleep",
            FeatureSensor::Steps => "steps",
        }
    }
}

impl fmt::Display for FeatureSensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FeatureSensor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FeatureSensor::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown sensor `{s}`"))
    }
}

/// Stem, optional scope and optional rank of a feature, independent of the slice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureKey {
    pub stem: String,
    pub scope: Option<String>,
    pub index: Option<u8>,
}

impl FeatureKey {
    pub fn new(stem: &str) -> Self {
        Self {
            stem: stem.to_string(),
            scope: None,
            index: None,
        }
    }

    pub fn scoped(stem: &str, scope: &str) -> Self {
        Self {
            stem: stem.to_string(),
            scope: Some(scope.to_string()),
            index: None,
        }
    }

    pub fn ranked(stem: &str, scope: &str, index: u8) -> Self {
        Self {
            stem: stem.to_string(),
            scope: Some(scope.to_string()),
            index: Some(index),
        }
    }
}

/// Ordered feature values for one slice; `None` is MISSING (no data).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureValues(Vec<(FeatureKey, Option<f64>)>);

impl FeatureValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Non-finite values are stored as missing.
    pub fn push(&mut self, key: FeatureKey, value: Option<f64>) {
        self.0.push((key, value.filter(|v| v.is_finite())));
    }

    pub fn set(&mut self, stem: &str, value: Option<f64>) {
        self.push(FeatureKey::new(stem), value);
    }

    pub fn set_scoped(&mut self, stem: &str, scope: &str, value: Option<f64>) {
        self.push(FeatureKey::scoped(stem, scope), value);
    }

    pub fn get(&self, stem: &str, scope: Option<&str>) -> Option<f64> {
        self.0
            .iter()
            .find(|(k, _)| k.stem == stem && k.scope.as_deref() == scope && k.index.is_none())
            .and_then(|(_, v)| *v)
    }

    pub fn get_key(&self, key: &FeatureKey) -> Option<Option<f64>> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &FeatureKey> {
        self.0.iter().map(|(k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extend(&mut self, other: FeatureValues) {
        self.0.extend(other.0);
    }

    pub fn into_inner(self) -> Vec<(FeatureKey, Option<f64>)> {
        self.0
    }

    /// Every key set to missing.
    pub fn all_missing(keys: &[FeatureKey]) -> Self {
        Self(keys.iter().map(|k| (k.clone(), None)).collect())
    }
}

impl IntoIterator for FeatureValues {
    type Item = (FeatureKey, Option<f64>);
    type IntoIter = std::vec::IntoIter<(FeatureKey, Option<f64>)>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

#[cfg(test)]
pub(crate) fn assert_keys_match(values: &FeatureValues, expected: &[FeatureKey]) {
    let got: Vec<&FeatureKey> = values.keys().collect();
    let want: Vec<&FeatureKey> = expected.iter().collect();
    assert_eq!(got, want, "emitted keys differ from the declared catalog keys");
}
