//! End-to-end extraction: ingest, per-slice features, change features, output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bluetooth::{bluetooth_features, cluster_devices, DeviceOwnership};
use crate::calls::call_features;
use crate::catalog::{sensor_keys, FeatureName, Selection};
use crate::change::{change_features, FIELDS};
use crate::config::RunConfig;
use crate::features::{FeatureSensor, FeatureValues};
use crate::fitbit::{sleep_features, steps_features};
use crate::ingest::{
    load_participant, validate_dataset, ContactDirectory, IngestError, ParticipantData, ValidationReport,
};
use crate::location::{location_features, LocationContext};
use crate::output::{write_matrix, FeatureRow, Format, OutputError};
use crate::places::{
    place_features, place_timeline, social_duration, study_duration, type_fixes, PlaceMap, PlaceMapError, TypedFix,
};
use crate::screen::{extract_bouts, usage_features, InteractionBout};
use crate::windowing::{assign, build_slices, ConfigError, Granularity, TimeSlice};

pub const DEFAULT_SEED: u64 = 42;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Slice label of change-feature rows.
pub const CHANGE_SLICE: &str = "all";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    PlaceMap(#[from] PlaceMapError),
    #[error("input directory {path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub input: PathBuf,
    pub output: PathBuf,
    pub format: Format,
    pub selection: Selection,
    /// Restrict to these participant ids; all subdirectories when `None`.
    pub participants: Option<Vec<String>>,
    pub seed: u64,
    pub jobs: usize,
}

impl RunOptions {
    pub fn new(config: PathBuf, input: PathBuf, output: PathBuf) -> Self {
        Self {
            config,
            input,
            output,
            format: Format::Csv,
            selection: Selection::default(),
            participants: None,
            seed: DEFAULT_SEED,
            jobs: 1,
        }
    }
}

/// Read-only inputs shared by every participant.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub config: RunConfig,
    pub place_map: Option<PlaceMap>,
    pub selection: Selection,
    pub seed: u64,
    slices: Vec<TimeSlice>,
}

impl Extraction {
    pub fn new(config: RunConfig, place_map: Option<PlaceMap>, selection: Selection, seed: u64) -> Self {
        let slices = build_slices(&config.study)
            .into_iter()
            .filter(|s| selection.epochs.contains(&s.epoch) && selection.granularities.contains(&s.granularity))
            .collect();
        Self {
            config,
            place_map,
            selection,
            seed,
            slices,
        }
    }

    pub fn slices(&self) -> &[TimeSlice] {
        &self.slices
    }

    fn wants(&self, sensor: FeatureSensor) -> bool {
        self.selection.sensors.contains(&sensor)
    }

    /// Feature rows of one participant, slice features then change features.
    pub fn participant_rows(&self, data: &ParticipantData) -> Vec<FeatureRow> {
        let prepared = Prepared::new(self, data);
        let per_slice: Vec<Vec<(FeatureSensor, FeatureValues)>> = self
            .slices
            .par_iter()
            .map(|slice| {
                FeatureSensor::ALL
                    .into_iter()
                    .filter(|s| self.wants(*s))
                    .map(|s| (s, prepared.features(s, slice)))
                    .collect()
            })
            .collect();

        let mut rows = Vec::new();
        // weekly values per feature name, indexed by week
        let mut weekly: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
        let n = self.config.study.weeks_n;
        for (slice, sensors) in self.slices.iter().zip(per_slice) {
            for (sensor, values) in sensors {
                debug_assert_eq!(values.keys().cloned().collect::<Vec<_>>(), sensor_keys(sensor));
                for (key, value) in values {
                    let name = FeatureName::new(sensor, key, slice.epoch, slice.granularity).to_string();
                    if slice.granularity == Granularity::Weekly {
                        weekly.entry(name.clone()).or_insert_with(|| vec![None; n])[slice.index - 1] = value;
                    }
                    rows.push(FeatureRow {
                        participant: data.id.clone(),
                        feature: name,
                        slice: slice.label.clone(),
                        value,
                    });
                }
            }
        }
        for (name, series) in weekly {
            let change = change_features(&series, self.config.study.weeks_m);
            for (field, value) in FIELDS.iter().zip(change.values()) {
                rows.push(FeatureRow {
                    participant: data.id.clone(),
                    feature: format!("{name}:change:{field}"),
                    slice: CHANGE_SLICE.to_string(),
                    value,
                });
            }
        }
        rows
    }
}

/// Study-wide state of one participant, computed before slicing.
struct Prepared<'a> {
    data: &'a ParticipantData,
    ownership: Option<DeviceOwnership>,
    contacts: ContactDirectory,
    location: Option<LocationContext>,
    typed: Option<Vec<TypedFix>>,
    screen_bouts: Option<Vec<InteractionBout>>,
    cap_ms: i64,
}

impl<'a> Prepared<'a> {
    fn new(run: &Extraction, data: &'a ParticipantData) -> Self {
        let tz = run.config.study.timezone;
        let params = run.config.location;
        let ownership = run
            .wants(FeatureSensor::Bluetooth)
            .then(|| {
                data.bluetooth
                    .as_ref()
                    .map(|scans| cluster_devices(scans, tz, run.seed))
            })
            .flatten();
        let location = run
            .wants(FeatureSensor::Location)
            .then(|| {
                data.location
                    .as_ref()
                    .map(|fixes| LocationContext::new(fixes, tz, params))
            })
            .flatten();
        let typed = match (&run.place_map, &data.location) {
            (Some(map), Some(fixes)) if run.wants(FeatureSensor::Places) => Some(type_fixes(fixes, map)),
            _ => None,
        };
        Self {
            data,
            ownership,
            contacts: data.contacts.clone().unwrap_or_default(),
            location,
            typed,
            screen_bouts: data.screen.as_ref().map(|events| extract_bouts(events)),
            cap_ms: params.gap_cap_ms(),
        }
    }

    fn features(&self, sensor: FeatureSensor, slice: &TimeSlice) -> FeatureValues {
        let d = self.data;
        let computed = match sensor {
            FeatureSensor::Bluetooth => d
                .bluetooth
                .as_ref()
                .zip(self.ownership.as_ref())
                .map(|(scans, own)| bluetooth_features(assign(scans, slice), own)),
            FeatureSensor::Calls => d
                .calls
                .as_ref()
                .map(|calls| call_features(assign(calls, slice), &self.contacts)),
            FeatureSensor::Location => self.location.as_ref().map(|ctx| location_features(ctx, slice)),
            FeatureSensor::Places => self.typed.as_ref().map(|typed| {
                let timeline = place_timeline(typed, slice, self.cap_ms);
                let mut values = place_features(&timeline);
                values.set(
                    "study_duration",
                    study_duration(&timeline, d.steps.as_deref(), self.screen_bouts.as_deref()),
                );
                values.set("social_duration", social_duration(&timeline, d.conversation.as_deref()));
                values
            }),
            FeatureSensor::Screen => d
                .screen
                .as_ref()
                .zip(self.screen_bouts.as_ref())
                .map(|(events, bouts)| usage_features(&assign(events, slice), bouts, slice)),
            FeatureSensor::Sleep => d.sleep.as_ref().map(|m| sleep_features(&assign(m, slice))),
            FeatureSensor::Steps => d.steps.as_ref().map(|b| steps_features(&assign(b, slice))),
        };
        computed.unwrap_or_else(|| FeatureValues::all_missing(&sensor_keys(sensor)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParticipantReport {
    pub id: String,
    pub status: ParticipantStatus,
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub format: &'static str,
    pub sensors: Vec<String>,
    pub epochs: Vec<String>,
    pub granularities: Vec<String>,
    pub inputs: Vec<InputFile>,
    pub participants: Vec<ParticipantSummary>,
    pub rows: usize,
    pub matrix_sha256: String,
    /// Wall-clock time of the run; the only field that varies between identical runs.
    pub generated_at: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParticipantSummary {
    pub id: String,
    pub status: ParticipantStatus,
    pub rows: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub participants: Vec<ParticipantReport>,
    pub rows: usize,
    pub report_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl RunOutcome {
    pub fn failed(&self) -> usize {
        self.participants
            .iter()
            .filter(|p| p.status == ParticipantStatus::Failed)
            .count()
    }
}

fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn report_path(output: &Path) -> PathBuf {
    sidecar(output, ".report.json")
}

pub fn manifest_path(output: &Path) -> PathBuf {
    sidecar(output, ".manifest.json")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|e| PipelineError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let err = |source| PipelineError::Write {
        path: path.display().to_string(),
        source,
    };
    let tmp = sidecar(path, ".tmp");
    let mut f = std::fs::File::create(&tmp).map_err(err)?;
    f.write_all(bytes).map_err(err)?;
    f.sync_all().map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}

/// Participant ids: subdirectory names, sorted.
pub fn discover_participants(input: &Path) -> Result<Vec<String>, PipelineError> {
    let entries = std::fs::read_dir(input).map_err(|e| PipelineError::Input {
        path: input.display().to_string(),
        message: e.to_string(),
    })?;
    let mut ids: Vec<String> = entries
        .filter_map(Result::ok)
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str().map(str::to_string))
        .collect();
    ids.sort();
    Ok(ids)
}

/// Files of a participant directory with sizes and digests, sorted by path.
fn inventory(input: &Path, id: &str) -> Vec<InputFile> {
    let Ok(entries) = std::fs::read_dir(input.join(id)) else {
        return Vec::new();
    };
    let mut files: Vec<InputFile> = entries
        .filter_map(Result::ok)
        .filter(|e| e.path().is_file())
        .filter_map(|e| {
            let bytes = std::fs::read(e.path()).ok()?;
            Some(InputFile {
                path: format!("{id}/{}", e.file_name().to_string_lossy()),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect();
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files
}

fn load(input: &Path, id: &str) -> Result<ParticipantData, IngestError> {
    load_participant(&input.join(id), id)
}

/// Runs the whole extraction and writes the matrix, report and manifest.
pub fn run(opts: &RunOptions) -> Result<RunOutcome, PipelineError> {
    let config_bytes = read_bytes(&opts.config)?;
    let config = RunConfig::load(&opts.config)?;
    let (place_map, map_file) = match &config.place_map {
        Some(path) => {
            let bytes = read_bytes(path)?;
            let file = InputFile {
                path: path
                    .file_name()
                    .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            };
            (Some(PlaceMap::load(path)?), Some(file))
        }
        None => (None, None),
    };
    if !opts.input.is_dir() {
        return Err(PipelineError::Input {
            path: opts.input.display().to_string(),
            message: "not a directory".into(),
        });
    }
    let mut ids = discover_participants(&opts.input)?;
    if let Some(wanted) = &opts.participants {
        let mut wanted = wanted.clone();
        wanted.sort();
        wanted.dedup();
        ids = wanted;
    }

    let extraction = Extraction::new(config, place_map, opts.selection.clone(), opts.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut inputs: Vec<InputFile> = map_file.into_iter().collect();
    for id in &ids {
        log::info!("participant {id}");
        inputs.extend(inventory(&opts.input, id));
        match load(&opts.input, id) {
            Ok(data) => {
                let mut these = pool.install(|| extraction.participant_rows(&data));
                reports.push(ParticipantReport {
                    id: id.clone(),
                    status: ParticipantStatus::Ok,
                    rows: these.len(),
                    error: None,
                    validation: Some(validate_dataset(&data)),
                });
                rows.append(&mut these);
            }
            Err(e) => {
                log::error!("participant {id}: {e}");
                reports.push(ParticipantReport {
                    id: id.clone(),
                    status: ParticipantStatus::Failed,
                    rows: 0,
                    error: Some(e.to_string()),
                    validation: None,
                });
            }
        }
    }

    write_matrix(&rows, &opts.output, opts.format)?;
    let matrix = read_bytes(&opts.output)?;

    let report = report_path(&opts.output);
    let report_json = serde_json::to_vec_pretty(&reports).expect("report serializes");
    write_atomic(&report, &report_json)?;

    let names = |v: Vec<&'static str>| v.into_iter().map(str::to_string).collect::<Vec<_>>();
    let manifest = RunManifest {
        tool: "sensefeat",
        version: VERSION,
        config_sha256: sha256_hex(&config_bytes),
        seed: opts.seed,
        format: match opts.format {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        },
        sensors: names(opts.selection.sensors.iter().map(|s| s.name()).collect()),
        epochs: names(opts.selection.epochs.iter().map(|e| e.name()).collect()),
        granularities: names(opts.selection.granularities.iter().map(|g| g.name()).collect()),
        inputs,
        participants: reports
            .iter()
            .map(|r| ParticipantSummary {
                id: r.id.clone(),
                status: r.status.clone(),
                rows: r.rows,
            })
            .collect(),
        rows: rows.len(),
        matrix_sha256: sha256_hex(&matrix),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let manifest_file = manifest_path(&opts.output);
    let manifest_json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&manifest_file, &manifest_json)?;

    Ok(RunOutcome {
        participants: reports,
        rows: rows.len(),
        report_path: report,
        manifest_path: manifest_file,
    })
}
