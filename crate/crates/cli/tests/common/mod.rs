//! Synthetic study used by the end-to-end tests: two participants, fourteen
//! days across a DST change, every sensor, and a small campus map.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, TimeZone};
use chrono_tz::Tz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TZ: Tz = chrono_tz::America::New_York;
pub const START: (i32, u32, u32) = (2024, 3, 4);
pub const DAYS: u32 = 14;
pub const PARTICIPANTS: [&str; 2] = ["p01", "p02"];

const HOME: (f64, f64) = (40.4450, -79.9450);
const ACADEMIC: (f64, f64) = (40.4420, -79.9420);
const GREEN: (f64, f64) = (40.4435, -79.9400);
const GREEK: (f64, f64) = (40.4460, -79.9400);
const TOWN: (f64, f64) = (40.4600, -79.9250);
const HALF: f64 = 0.0006;

pub struct Fixture {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub input: PathBuf,
}

fn square(kind: &str, c: (f64, f64)) -> String {
    let (a, b, x, y) = (c.0 - HALF, c.1 - HALF, c.0 + HALF, c.1 + HALF);
    format!(r#"{{"type":"{kind}","polygon":[[{a},{b}],[{a},{y}],[{x},{y}],[{x},{b}]]}}"#)
}

/// What the participant does at a local minute of the day.
#[derive(Clone, Copy, PartialEq)]
enum Doing {
    Stay((f64, f64)),
    Walk((f64, f64), (f64, f64), f64),
}

fn schedule(minute: u32, weekday: u32, who: usize) -> Doing {
    let weekend = weekday >= 5;
    let shift = who as u32 * 20;
    let walk = |from, to, start: u32, len: u32| Doing::Walk(from, to, (minute - start) as f64 / len as f64);
    match minute {
        m if m < 480 + shift => Doing::Stay(HOME),
        _ if weekend => match minute {
            m if m < 840 => Doing::Stay(HOME),
            m if m < 860 => walk(HOME, GREEN, 840, 20),
            m if m < 960 => Doing::Stay(GREEN),
            m if m < 980 => walk(GREEN, HOME, 960, 20),
            _ => Doing::Stay(HOME),
        },
        m if m < 500 + shift => walk(HOME, ACADEMIC, 480 + shift, 20),
        m if m < 720 => Doing::Stay(ACADEMIC),
        m if m < 735 => walk(ACADEMIC, GREEN, 720, 15),
        m if m < 790 => Doing::Stay(GREEN),
        m if m < 805 => walk(GREEN, ACADEMIC, 790, 15),
        m if m < 1020 => Doing::Stay(ACADEMIC),
        m if m < 1050 => walk(ACADEMIC, TOWN, 1020, 30),
        m if m < 1110 => Doing::Stay(TOWN),
        m if m < 1140 => walk(TOWN, if weekday == 4 { GREEK } else { HOME }, 1080 + 30, 30),
        _ if weekday == 4 && minute < 1320 => Doing::Stay(GREEK),
        _ => Doing::Stay(HOME),
    }
}

fn position(d: Doing) -> (f64, f64) {
    match d {
        Doing::Stay(p) => p,
        Doing::Walk(a, b, f) => (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f),
    }
}

/// Writes the dataset under `dir` and returns its paths.
pub fn write_fixture(dir: &Path) -> Fixture {
    let input = dir.join("input");
    fs::create_dir_all(&input).unwrap();
    let start = NaiveDate::from_ymd_opt(START.0, START.1, START.2).unwrap();
    let end = start + chrono::Duration::days(DAYS as i64 - 1);
    let map = format!(
        "[{},{},{},{}]\n",
        square("residential_hall", HOME),
        square("academic", ACADEMIC),
        square("green_space", GREEN),
        square("greek_social", GREEK)
    );
    fs::write(dir.join("campus.json"), map).unwrap();
    let config = dir.join("study.toml");
    fs::write(
        &config,
        format!("start = {start}\nend = {end}\ntimezone = \"{TZ}\"\n\n[places]\nmap = \"campus.json\"\n"),
    )
    .unwrap();
    for (who, id) in PARTICIPANTS.iter().enumerate() {
        write_participant(&input.join(id), who, start);
    }
    Fixture {
        dir: dir.to_path_buf(),
        config,
        input,
    }
}

#[derive(Default)]
struct Files {
    bluetooth: String,
    calls: String,
    location: String,
    screen: String,
    sleep: String,
    steps: String,
    conversation: String,
}

fn write_participant(dir: &Path, who: usize, start: NaiveDate) {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + who as u64);
    let mut f = Files {
        bluetooth: "timestamp,address\n".into(),
        calls: "timestamp,correspondent,direction,duration_s\n".into(),
        location: "timestamp,lat,lon\n".into(),
        screen: "timestamp,status\n".into(),
        sleep: "timestamp,state\n".into(),
        steps: "start_timestamp,steps\n".into(),
        conversation: "timestamp,label\n".into(),
    };
    let own = format!("aa:00:00:00:00:0{who}");
    let mut step_acc: Option<(i64, u32)> = None;
    let mut screen_until = i64::MIN;
    for day in 0..DAYS {
        let date = start + chrono::Duration::days(day as i64);
        let weekday = date.weekday().num_days_from_monday();
        for minute in 0..24 * 60 {
            let local = date.and_hms_opt(minute / 60, minute % 60, 0).unwrap();
            let Some(at) = TZ.from_local_datetime(&local).earliest() else {
                continue; // skipped by the DST change
            };
            let ts = at.timestamp_millis();
            let doing = schedule(minute, weekday, who);
            let (lat, lon) = position(doing);
            let walking = matches!(doing, Doing::Walk(..));

            if minute % 5 == 0 && rng.gen_bool(0.97) {
                let j = || 0.00001;
                let (dlat, dlon) = (rng.gen_range(-1.0..1.0) * j(), rng.gen_range(-1.0..1.0) * j());
                writeln!(f.location, "{ts},{:.7},{:.7}", lat + dlat, lon + dlon).unwrap();
            }

            // steps accumulate into 5-minute bins aligned to UTC
            let bin = ts.div_euclid(300_000) * 300_000;
            let steps = if walking {
                rng.gen_range(80..120)
            } else if rng.gen_bool(0.05) {
                rng.gen_range(1..6)
            } else {
                0
            };
            match step_acc.as_mut() {
                Some((b, n)) if *b == bin => *n += steps,
                _ => {
                    if let Some((b, n)) = step_acc.take() {
                        writeln!(f.steps, "{b},{n}").unwrap();
                    }
                    step_acc = Some((bin, steps));
                }
            }

            let asleep_window = (30 + who as u32 * 15..450).contains(&minute);
            if asleep_window {
                let state = match rng.gen_range(0..100) {
                    0..=84 => "asleep",
                    85..=94 => "restless",
                    95..=98 => "awake",
                    _ => "unknown",
                };
                writeln!(f.sleep, "{ts},{state}").unwrap();
            }

            if !asleep_window && ts > screen_until && rng.gen_bool(0.02) {
                let len = rng.gen_range(1..8) as i64 * 60_000;
                writeln!(f.screen, "{},on", ts).unwrap();
                writeln!(f.screen, "{},unlock", ts + 5_000).unwrap();
                writeln!(f.screen, "{},off", ts + len).unwrap();
                writeln!(f.screen, "{},lock", ts + len + 30_000).unwrap();
                screen_until = ts + len + 60_000;
            }

            if minute % 10 == 0 {
                writeln!(f.bluetooth, "{ts},{own}").unwrap();
            }
            if doing == Doing::Stay(HOME) && minute % 30 == 7 && day % 2 == 0 {
                writeln!(f.bluetooth, "{ts},bb:00:00:00:00:0{who}").unwrap();
            }
            if rng.gen_bool(0.002) {
                writeln!(f.bluetooth, "{ts},cc:00:00:00:{:02x}:{:02x}", day, minute % 256).unwrap();
            }

            if !asleep_window && rng.gen_bool(0.003) {
                let who_called = ["mom", "sam", "alex", "pat", "unknown-1"][rng.gen_range(0..5)];
                let dir = ["incoming", "outgoing", "missed"][rng.gen_range(0..3)];
                let dur = if dir == "missed" { 0 } else { rng.gen_range(10..900) };
                writeln!(f.calls, "{ts},{who_called},{dir},{dur}").unwrap();
            }

            if minute % 3 == 0 {
                let social = matches!(doing, Doing::Stay(p) if p == GREEN || p == GREEK);
                let label = match (social, rng.gen_range(0..100)) {
                    (true, 0..=89) | (false, 0..=9) => "voice",
                    (_, 90..=94) | (false, 10..=29) => "noise",
                    (_, 95..=97) | (false, 30..=89) => "silence",
                    _ => "unknown",
                };
                writeln!(f.conversation, "{ts},{label}").unwrap();
            }
        }
    }
    if let Some((b, n)) = step_acc {
        writeln!(f.steps, "{b},{n}").unwrap();
    }
    for (name, body) in [
        ("bluetooth", &f.bluetooth),
        ("calls", &f.calls),
        ("location", &f.location),
        ("screen", &f.screen),
        ("sleep", &f.sleep),
        ("steps", &f.steps),
        ("conversation", &f.conversation),
    ] {
        fs::write(dir.join(format!("{name}.csv")), body).unwrap();
    }
    fs::write(
        dir.join("contacts.csv"),
        "correspondent,category\nmom,family\nsam,friend_on_campus\nalex,friend_off_campus\npat,other\n",
    )
    .unwrap();
}

pub fn sensefeat() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_sensefeat"))
}
