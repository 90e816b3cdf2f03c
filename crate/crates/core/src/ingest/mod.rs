//! Typed, validated, time-ordered sensor streams.
//!
//! Each sensor lives in its own CSV file with a fixed header. Loading parses
//! every row, rejects malformed or out-of-range rows (recording the line
//! number), sorts by timestamp and drops exact duplicates.

mod records;
mod validate;

pub use records::{
    BluetoothScan, CallDirection, CallRecord, ContactCategory, ContactDirectory, ConversationInference,
    ConversationLabel, LocationFix, ScreenEvent, ScreenStatus, SleepMinute, SleepState, StepBin, STEP_BIN_MS,
};
pub use validate::{validate_dataset, GapBucket, SensorCoverage, ValidationReport};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Anything carrying a UTC epoch-millisecond timestamp.
pub trait Timestamped {
    fn timestamp(&self) -> i64;
}

/// The sensor channels this crate reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Bluetooth,
    Calls,
    Location,
    Screen,
    Sleep,
    Steps,
    Conversation,
    Contacts,
}

impl SensorKind {
    pub const ALL: [SensorKind; 8] = [
        SensorKind::Bluetooth,
        SensorKind::Calls,
        SensorKind::Location,
        SensorKind::Screen,
        SensorKind::Sleep,
        SensorKind::Steps,
        SensorKind::Conversation,
        SensorKind::Contacts,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SensorKind::Bluetooth => "bluetooth",
            SensorKind::Calls => "calls",
            SensorKind::Location => "location",
            SensorKind::Screen => "screen",
            SensorKind::Sleep => "sleep",
            SensorKind::Steps => "steps",
            SensorKind::Conversation => "conversation",
            SensorKind::Contacts => "contacts",
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name())
    }

    pub fn header(&self) -> &'static [&'static str] {
        match self {
            SensorKind::Bluetooth => &["timestamp", "address"],
            SensorKind::Calls => &["timestamp", "correspondent", "direction", "duration_s"],
            SensorKind::Location => &["timestamp", "lat", "lon"],
            SensorKind::Screen => &["timestamp", "status"],
            SensorKind::Sleep => &["timestamp", "state"],
            SensorKind::Steps => &["start_timestamp", "steps"],
            SensorKind::Conversation => &["timestamp", "label"],
            SensorKind::Contacts => &["correspondent", "category"],
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A row that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

/// A loaded stream plus the rows that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub issues: Vec<RowIssue>,
}

impl<T> Loaded<T> {
    pub fn rejected(&self) -> usize {
        self.issues.len()
    }
}

/// A record type with a CSV schema.
pub trait SensorRecord: Timestamped + Clone + PartialEq + Sized {
    const KIND: SensorKind;

    fn parse(fields: &csv::StringRecord) -> Result<Self, String>;

    /// Checks that depend on the records already accepted (e.g. overlapping bins).
    fn conflicts_with(&self, _earlier: &Self) -> Option<String> {
        None
    }
}

fn open_checked(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader
        .headers()
        .map_err(|source| IngestError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let matches = found.len() == header.len() && found.iter().zip(header).all(|(a, b)| a == *b);
    if !matches {
        return Err(IngestError::Header {
            path: path.to_path_buf(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(reader)
}

fn read_rows<F>(path: &Path, header: &[&str], mut on_row: F) -> Result<Vec<RowIssue>, IngestError>
where
    F: FnMut(&csv::StringRecord) -> Result<(), String>,
{
    let mut reader = open_checked(path, header)?;
    let mut issues = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line());
                if record.len() == 1 && record[0].is_empty() {
                    continue;
                }
                let result = if record.len() != header.len() {
                    Err(format!("expected {} fields, found {}", header.len(), record.len()))
                } else {
                    on_row(&record)
                };
                if let Err(message) = result {
                    issues.push(RowIssue { line, message });
                }
            }
            Err(e) => {
                // invalid UTF-8 and similar per-row decoding failures
                let line = e.position().map_or(line, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(IngestError::Csv {
                        path: path.to_path_buf(),
                        source: e,
                    });
                }
                issues.push(RowIssue {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(issues)
}

/// Load one sensor file: parse, reject bad rows, sort stably by timestamp and
/// drop exact duplicates.
pub fn load_stream<T: SensorRecord>(path: &Path) -> Result<Loaded<T>, IngestError> {
    let mut parsed: Vec<(u64, T)> = Vec::new();
    let mut issues = read_rows(path, T::KIND.header(), |row| {
        let line = row.position().map_or(0, |p| p.line());
        T::parse(row).map(|r| parsed.push((line, r)))
    })?;
    parsed.sort_by_key(|(_, r)| r.timestamp());

    let mut records: Vec<T> = Vec::with_capacity(parsed.len());
    let mut run_start = 0;
    for (line, r) in parsed {
        if records.last().is_none_or(|last| last.timestamp() != r.timestamp()) {
            run_start = records.len();
        }
        let same_time = &records[run_start..];
        if same_time.contains(&r) {
            continue;
        }
        if let Some(message) = same_time.iter().find_map(|e| r.conflicts_with(e)) {
            issues.push(RowIssue { line, message });
            continue;
        }
        records.push(r);
    }
    issues.sort_by_key(|i| i.line);
    Ok(Loaded { records, issues })
}

/// Load `contacts.csv`. Later rows override earlier ones for the same id.
pub fn load_contacts(path: &Path) -> Result<Loaded<ContactDirectory>, IngestError> {
    let mut directory = ContactDirectory::default();
    let issues = read_rows(path, SensorKind::Contacts.header(), |row| {
        let id = row[0].to_string();
        if id.is_empty() {
            return Err("empty correspondent id".into());
        }
        let category: ContactCategory = row[1].parse()?;
        directory.insert(id, category);
        Ok(())
    })?;
    Ok(Loaded {
        records: vec![directory],
        issues,
    })
}

/// All streams for one participant. A `None` stream means the file was absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticipantData {
    pub id: String,
    pub bluetooth: Option<Vec<BluetoothScan>>,
    pub calls: Option<Vec<CallRecord>>,
    pub location: Option<Vec<LocationFix>>,
    pub screen: Option<Vec<ScreenEvent>>,
    pub sleep: Option<Vec<SleepMinute>>,
    pub steps: Option<Vec<StepBin>>,
    pub conversation: Option<Vec<ConversationInference>>,
    pub contacts: Option<ContactDirectory>,
    /// Rejected rows per sensor file.
    pub issues: BTreeMap<SensorKind, Vec<RowIssue>>,
}

impl ParticipantData {
    pub fn has(&self, kind: SensorKind) -> bool {
        match kind {
            SensorKind::Bluetooth => self.bluetooth.is_some(),
            SensorKind::Calls => self.calls.is_some(),
            SensorKind::Location => self.location.is_some(),
            SensorKind::Screen => self.screen.is_some(),
            SensorKind::Sleep => self.sleep.is_some(),
            SensorKind::Steps => self.steps.is_some(),
            SensorKind::Conversation => self.conversation.is_some(),
            SensorKind::Contacts => self.contacts.is_some(),
        }
    }

    /// Timestamps of a stream, if present.
    pub fn timestamps(&self, kind: SensorKind) -> Option<Vec<i64>> {
        fn ts<T: Timestamped>(v: &Option<Vec<T>>) -> Option<Vec<i64>> {
            v.as_ref().map(|v| v.iter().map(|r| r.timestamp()).collect())
        }
        match kind {
            SensorKind::Bluetooth => ts(&self.bluetooth),
            SensorKind::Calls => ts(&self.calls),
            SensorKind::Location => ts(&self.location),
            SensorKind::Screen => ts(&self.screen),
            SensorKind::Sleep => ts(&self.sleep),
            SensorKind::Steps => ts(&self.steps),
            SensorKind::Conversation => ts(&self.conversation),
            SensorKind::Contacts => None,
        }
    }
}

fn load_optional<T: SensorRecord>(
    dir: &Path,
    issues: &mut BTreeMap<SensorKind, Vec<RowIssue>>,
) -> Result<Option<Vec<T>>, IngestError> {
    let path = dir.join(T::KIND.file_name());
    if !path.exists() {
        return Ok(None);
    }
    let loaded = load_stream::<T>(&path)?;
    if !loaded.issues.is_empty() {
        log::warn!("{}: skipped {} malformed rows", path.display(), loaded.rejected());
        issues.insert(T::KIND, loaded.issues);
    }
    Ok(Some(loaded.records))
}

/// Load every `<sensor>.csv` present in a participant directory.
pub fn load_participant(dir: &Path, id: &str) -> Result<ParticipantData, IngestError> {
    if !dir.is_dir() {
        return Err(IngestError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let mut issues = BTreeMap::new();
    let contacts_path = dir.join(SensorKind::Contacts.file_name());
    let contacts = if contacts_path.exists() {
        let mut loaded = load_contacts(&contacts_path)?;
        if !loaded.issues.is_empty() {
            issues.insert(SensorKind::Contacts, std::mem::take(&mut loaded.issues));
        }
        loaded.records.pop()
    } else {
        None
    };
    Ok(ParticipantData {
        id: id.to_string(),
        bluetooth: load_optional(dir, &mut issues)?,
        calls: load_optional(dir, &mut issues)?,
        location: load_optional(dir, &mut issues)?,
        screen: load_optional(dir, &mut issues)?,
        sleep: load_optional(dir, &mut issues)?,
        steps: load_optional(dir, &mut issues)?,
        conversation: load_optional(dir, &mut issues)?,
        contacts,
        issues,
    })
}
