//! Device ownership clustering and scan-count features.
//!
//! Every scanned address gets a usage profile over the whole study: the
//! number of local days it was seen and its average scans per seen day. Both
//! are z-normalized and summed into a score, and 1-D k-means with K=2 and K=3
//! splits the addresses into self / (related) / others by descending score.
//! K=2 is kept only when its sse is strictly smaller than K=3's.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono_tz::Tz;
use serde::Serialize;

use crate::features::{FeatureKey, FeatureValues};
use crate::ingest::BluetoothScan;
use crate::numerics::{kmeans, zscore, Summary};
use crate::windowing::local_datetime;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceUsageProfile {
    pub address: String,
    pub days_seen: u32,
    pub total_count: u64,
    pub avg_frequency: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ownership {
    #[serde(rename = "self")]
    Own,
    Related,
    Others,
}

impl Ownership {
    pub fn name(&self) -> &'static str {
        match self {
            Ownership::Own => "self",
            Ownership::Related => "related",
            Ownership::Others => "others",
        }
    }
}

impl fmt::Display for Ownership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceOwnership {
    pub labels: BTreeMap<String, Ownership>,
    pub chosen_k: usize,
    pub profiles: Vec<DeviceUsageProfile>,
}

impl DeviceOwnership {
    pub fn label(&self, address: &str) -> Ownership {
        self.labels.get(address).copied().unwrap_or(Ownership::Others)
    }
}

/// Per-address usage profiles, sorted by address.
pub fn device_profiles(scans: &[BluetoothScan], tz: Tz) -> Vec<DeviceUsageProfile> {
    let mut days: HashMap<&str, BTreeSet<chrono::NaiveDate>> = HashMap::new();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in scans {
        days.entry(&s.address)
            .or_default()
            .insert(local_datetime(tz, s.timestamp).date());
        *counts.entry(&s.address).or_default() += 1;
    }
    let mut addresses: Vec<&str> = counts.keys().copied().collect();
    addresses.sort_unstable();
    let days_seen: Vec<f64> = addresses.iter().map(|a| days[a].len() as f64).collect();
    let avg: Vec<f64> = addresses
        .iter()
        .zip(&days_seen)
        .map(|(a, d)| counts[a] as f64 / d)
        .collect();
    let (zd, za) = match (zscore(&days_seen), zscore(&avg)) {
        (Ok(zd), Ok(za)) => (zd, za),
        _ => return Vec::new(),
    };
    addresses
        .iter()
        .enumerate()
        .map(|(i, a)| DeviceUsageProfile {
            address: a.to_string(),
            days_seen: days_seen[i] as u32,
            total_count: counts[a],
            avg_frequency: avg[i],
            score: zd[i] + za[i],
        })
        .collect()
}

/// Label every scanned address as self, related or others.
pub fn cluster_devices(scans: &[BluetoothScan], tz: Tz, seed: u64) -> DeviceOwnership {
    let profiles = device_profiles(scans, tz);
    let all_self = |profiles: Vec<DeviceUsageProfile>| DeviceOwnership {
        labels: profiles.iter().map(|p| (p.address.clone(), Ownership::Own)).collect(),
        chosen_k: 2,
        profiles,
    };

    // order points by score so the result depends only on the score multiset
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&a, &b| {
        profiles[a]
            .score
            .total_cmp(&profiles[b].score)
            .then_with(|| profiles[a].address.cmp(&profiles[b].address))
    });
    let points: Vec<Vec<f64>> = order.iter().map(|&i| vec![profiles[i].score]).collect();

    let two = match kmeans(&points, 2, seed) {
        Ok(r) => r,
        Err(_) => return all_self(profiles),
    };
    let three = kmeans(&points, 3, seed).ok();
    let chosen = match three {
        Some(three) if two.sse.partial_cmp(&three.sse) != Some(std::cmp::Ordering::Less) => three,
        _ => two,
    };
    let k = chosen.centers.len();

    // rank clusters by descending center score
    let mut ranked: Vec<usize> = (0..k).collect();
    ranked.sort_by(|&a, &b| chosen.centers[b][0].total_cmp(&chosen.centers[a][0]).then(a.cmp(&b)));
    let mut class_of = vec![Ownership::Others; k];
    for (rank, &cluster) in ranked.iter().enumerate() {
        class_of[cluster] = match rank {
            0 => Ownership::Own,
            r if r + 1 == k => Ownership::Others,
            _ => Ownership::Related,
        };
    }
    let labels = order
        .iter()
        .zip(&chosen.labels)
        .map(|(&i, &l)| (profiles[i].address.clone(), class_of[l as usize]))
        .collect();
    DeviceOwnership {
        labels,
        chosen_k: k,
        profiles,
    }
}

pub const SCOPES: [&str; 4] = ["all", "self", "related", "others"];
const STEMS: [&str; 6] = [
    "unique_devices",
    "most_frequent_scans",
    "least_frequent_scans",
    "scans_sum",
    "scans_mean",
    "scans_std",
];

pub fn feature_keys() -> Vec<FeatureKey> {
    SCOPES
        .iter()
        .flat_map(|scope| STEMS.iter().map(move |stem| FeatureKey::scoped(stem, scope)))
        .collect()
}

/// Scan-count features per ownership scope over the scans of one slice.
pub fn bluetooth_features<'a, I>(scans: I, ownership: &DeviceOwnership) -> FeatureValues
where
    I: IntoIterator<Item = &'a BluetoothScan>,
{
    let mut per_device: BTreeMap<&str, u64> = BTreeMap::new();
    for s in scans {
        *per_device.entry(s.address.as_str()).or_default() += 1;
    }
    let mut out = FeatureValues::new();
    for scope in SCOPES {
        let counts: Vec<f64> = per_device
            .iter()
            .filter(|(a, _)| scope == "all" || ownership.label(a).name() == scope)
            .map(|(_, &c)| c as f64)
            .collect();
        let summary = Summary::of(&counts);
        out.set_scoped("unique_devices", scope, summary.map(|s| s.count as f64));
        out.set_scoped("most_frequent_scans", scope, summary.map(|s| s.max));
        out.set_scoped("least_frequent_scans", scope, summary.map(|s| s.min));
        out.set_scoped("scans_sum", scope, summary.map(|s| s.sum));
        out.set_scoped("scans_mean", scope, summary.map(|s| s.mean));
        out.set_scoped("scans_std", scope, summary.map(|s| s.std));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::assert_keys_match;

    const DAY: i64 = 86_400_000;

    fn scans(address: &str, per_day: usize, days: i64) -> Vec<BluetoothScan> {
        (0..days)
            .flat_map(|d| {
                (0..per_day).map(move |i| BluetoothScan {
                    timestamp: d * DAY + 3_600_000 + i as i64 * 60_000,
                    address: address.to_string(),
                })
            })
            .collect()
    }

    fn three_devices() -> Vec<BluetoothScan> {
        let mut v = scans("A", 100, 14);
        v.extend(scans("B", 10, 7));
        v.extend(scans("C", 1, 1));
        v.sort_by_key(|s| s.timestamp);
        v
    }

    #[test]
    fn profiles_count_days_and_frequency() {
        let p = device_profiles(&three_devices(), Tz::UTC);
        let got: Vec<(u32, u64, f64)> = p
            .iter()
            .map(|p| (p.days_seen, p.total_count, p.avg_frequency))
            .collect();
        assert_eq!(got, vec![(14, 1400, 100.0), (7, 70, 10.0), (1, 1, 1.0)]);
        assert!(p[0].score > p[1].score && p[1].score > p[2].score);
    }

    #[test]
    fn three_device_fixture() {
        let o = cluster_devices(&three_devices(), Tz::UTC, 42);
        assert_eq!(o.chosen_k, 3);
        assert_eq!(o.label("A"), Ownership::Own);
        assert_eq!(o.label("B"), Ownership::Related);
        assert_eq!(o.label("C"), Ownership::Others);
    }

    #[test]
    fn single_address_is_self() {
        let o = cluster_devices(&scans("A", 3, 2), Tz::UTC, 1);
        assert_eq!(o.chosen_k, 2);
        assert_eq!(o.label("A"), Ownership::Own);
    }

    #[test]
    fn identical_behavior_is_degenerate() {
        let mut v = scans("A", 5, 3);
        v.extend(scans("B", 5, 3));
        let o = cluster_devices(&v, Tz::UTC, 1);
        assert_eq!(o.chosen_k, 2);
        assert!(o.profiles.iter().all(|p| p.score == 0.0));
        assert_eq!(o.label("A"), Ownership::Own);
        assert_eq!(o.label("B"), Ownership::Own);
    }

    #[test]
    fn two_distinct_scores_use_k2() {
        let mut v = scans("A", 50, 5);
        v.extend(scans("B", 1, 1));
        let o = cluster_devices(&v, Tz::UTC, 9);
        assert_eq!(o.chosen_k, 2);
        assert_eq!(o.label("A"), Ownership::Own);
        assert_eq!(o.label("B"), Ownership::Others);
    }

    #[test]
    fn single_device_features() {
        let v = scans("A", 5, 1);
        let o = cluster_devices(&v, Tz::UTC, 1);
        let f = bluetooth_features(&v, &o);
        assert_keys_match(&f, &feature_keys());
        for (stem, want) in [
            ("unique_devices", 1.0),
            ("most_frequent_scans", 5.0),
            ("least_frequent_scans", 5.0),
            ("scans_sum", 5.0),
            ("scans_mean", 5.0),
            ("scans_std", 0.0),
        ] {
            assert_eq!(f.get(stem, Some("all")), Some(want), "{stem}");
        }
        assert_eq!(f.get("scans_sum", Some("related")), None);
    }

    #[test]
    fn two_device_counts() {
        let mut v = scans("A", 3, 1);
        v.extend(scans("B", 7, 1));
        let o = DeviceOwnership {
            labels: [("A".to_string(), Ownership::Others), ("B".to_string(), Ownership::Own)]
                .into_iter()
                .collect(),
            chosen_k: 2,
            profiles: Vec::new(),
        };
        let f = bluetooth_features(&v, &o);
        assert_eq!(f.get("most_frequent_scans", Some("all")), Some(7.0));
        assert_eq!(f.get("least_frequent_scans", Some("all")), Some(3.0));
        assert_eq!(f.get("scans_sum", Some("all")), Some(10.0));
        assert_eq!(f.get("scans_mean", Some("all")), Some(5.0));
        assert_eq!(f.get("scans_std", Some("all")), Some(2.0));
        assert_eq!(f.get("unique_devices", Some("self")), Some(1.0));
        // chosen_k = 2 leaves the related scope empty
        assert!(SCOPES.len() == 4 && STEMS.iter().all(|s| f.get(s, Some("related")).is_none()));
    }
}
