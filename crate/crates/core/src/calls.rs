//! Communication features from call logs.
//!
//! Calls are assigned wholly to the slice containing their start. Unknown
//! correspondents fall into the internal `other` category, which only the
//! `everyone` aggregates include.

use std::collections::BTreeSet;

use crate::features::{FeatureKey, FeatureValues};
use crate::ingest::{CallDirection, CallRecord, ContactCategory, ContactDirectory};

pub const CATEGORIES: [&str; 4] = ["everyone", "family", "friend_off_campus", "friend_on_campus"];

fn in_category(scope: &str, category: ContactCategory) -> bool {
    scope == "everyone" || category.as_str() == scope
}

pub fn feature_keys() -> Vec<FeatureKey> {
    let mut keys = Vec::new();
    for dir in CallDirection::ALL {
        for scope in CATEGORIES {
            keys.push(FeatureKey::scoped(&format!("{dir}_count"), scope));
            keys.push(FeatureKey::scoped(&format!("{dir}_duration"), scope));
        }
    }
    for scope in CATEGORIES {
        keys.push(FeatureKey::scoped("correspondents", scope));
    }
    keys
}

/// Counts and talk time (seconds) per direction and category, plus distinct
/// correspondents per category.
pub fn call_features<'a, I>(calls: I, directory: &ContactDirectory) -> FeatureValues
where
    I: IntoIterator<Item = &'a CallRecord>,
{
    let calls: Vec<(&CallRecord, ContactCategory)> = calls
        .into_iter()
        .map(|c| (c, directory.category(&c.correspondent)))
        .collect();
    let mut out = FeatureValues::new();
    for dir in CallDirection::ALL {
        for scope in CATEGORIES {
            let matching = calls
                .iter()
                .filter(|(c, cat)| c.direction == *dir && in_category(scope, *cat));
            let (count, duration) = matching.fold((0usize, 0.0), |(n, d), (c, _)| (n + 1, d + c.duration_s));
            out.set_scoped(&format!("{dir}_count"), scope, Some(count as f64));
            out.set_scoped(&format!("{dir}_duration"), scope, Some(duration));
        }
    }
    for scope in CATEGORIES {
        let people: BTreeSet<&str> = calls
            .iter()
            .filter(|(_, cat)| in_category(scope, *cat))
            .map(|(c, _)| c.correspondent.as_str())
            .collect();
        out.set_scoped("correspondents", scope, Some(people.len() as f64));
    }
    out
}
