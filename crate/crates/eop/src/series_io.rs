//! Persisted series format.
//!
//! Both price and return series are stored as CSV with a commented header:
//!
//! ```text
//! # eop-series v1 prices
//! # minutes_per_day=510
//! # sessions=0;510;1020
//! timestamp,price
//! 2005-08-01T08:00,5500.3
//! ```
//!
//! ```text
//! # eop-series v1 returns
//! # step_minutes=1
//! # mean_removed=1.2e-7
//! # outliers_neutralized=2
//! # source_start=2005-08-01T08:00
//! # source_end=2005-08-19T16:29
//! # drift_window_minutes=2550
//! # drift_per_minute=3.1e-7
//! # global_mean_fallback=false
//! value
//! -0.00012
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! read-back reproduces the in-memory series bit for bit. All writes go
//! through a temp-file-and-rename so interrupted runs never leave partial
//! output behind.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::marketdata::{self, DriftEstimate, PriceRecord, PriceSeries, ReturnSeries};

const MAGIC: &str = "# eop-series v1";
const TS_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Error)]
pub enum SeriesIoError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not an eop series file (bad or missing version header)")]
    BadMagic { path: String },
    #[error("{path}: expected a {expected} series, found {found}")]
    WrongKind { path: String, expected: String, found: String },
    #[error("{path} line {line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error(transparent)]
    MarketData(#[from] marketdata::MarketDataError),
}

/// What a series file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Prices,
    Returns,
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeriesKind::Prices => write!(f, "prices"),
            SeriesKind::Returns => write!(f, "returns"),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> SeriesIoError {
    SeriesIoError::Io { path: path.display().to_string(), source }
}

/// Writes bytes to `path` atomically: a sibling temp file is written in full
/// and then renamed over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), SeriesIoError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp_path, bytes).map_err(|e| io_err(&tmp_path, e))?;
    std::fs::rename(&tmp_path, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Peeks at the version header to learn what a file holds.
pub fn read_kind(path: &Path) -> Result<SeriesKind, SeriesIoError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| io_err(path, e))?;
    parse_magic(path, first.trim_end())
}

fn parse_magic(path: &Path, line: &str) -> Result<SeriesKind, SeriesIoError> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| SeriesIoError::BadMagic { path: path.display().to_string() })?;
    match rest.trim() {
        "prices" => Ok(SeriesKind::Prices),
        "returns" => Ok(SeriesKind::Returns),
        _ => Err(SeriesIoError::BadMagic { path: path.display().to_string() }),
    }
}

pub fn write_prices(series: &PriceSeries, path: &Path) -> Result<(), SeriesIoError> {
    let mut out = String::with_capacity(series.records.len() * 28 + 256);
    let _ = writeln!(out, "{MAGIC} prices");
    let _ = writeln!(out, "# minutes_per_day={}", series.minutes_per_day);
    let sessions: Vec<String> =
        series.session_boundaries.iter().map(|b| b.to_string()).collect();
    let _ = writeln!(out, "# sessions={}", sessions.join(";"));
    out.push_str("timestamp,price\n");
    for rec in &series.records {
        let _ = writeln!(out, "{},{}", rec.timestamp.format(TS_FORMAT), rec.price);
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_returns(series: &ReturnSeries, path: &Path) -> Result<(), SeriesIoError> {
    let mut out = String::with_capacity(series.values.len() * 24 + 256);
    let _ = writeln!(out, "{MAGIC} returns");
    let _ = writeln!(out, "# step_minutes={}", series.step_minutes);
    let _ = writeln!(out, "# mean_removed={}", series.mean_removed);
    let _ = writeln!(out, "# outliers_neutralized={}", series.outliers_neutralized);
    if let Some((start, end)) = series.source_span {
        let _ = writeln!(out, "# source_start={}", start.format(TS_FORMAT));
        let _ = writeln!(out, "# source_end={}", end.format(TS_FORMAT));
    }
    if let Some(drift) = series.drift {
        let _ = writeln!(out, "# drift_window_minutes={}", drift.window_minutes);
        let _ = writeln!(out, "# drift_per_minute={}", drift.per_minute_drift);
    }
    let _ = writeln!(out, "# global_mean_fallback={}", series.global_mean_fallback);
    out.push_str("value\n");
    for v in &series.values {
        let _ = writeln!(out, "{v}");
    }
    atomic_write(path, out.as_bytes())
}

struct HeaderLines {
    kind: SeriesKind,
    meta: Vec<(String, String)>,
    /// 1-based line number of the CSV header row.
    body_start: usize,
    lines: Vec<String>,
}

fn read_header(path: &Path) -> Result<HeaderLines, SeriesIoError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut content = String::new();
    BufReader::new(file).read_to_string(&mut content).map_err(|e| io_err(path, e))?;
    let lines: Vec<String> = content.lines().map(|l| l.to_string()).collect();
    if lines.is_empty() {
        return Err(SeriesIoError::BadMagic { path: path.display().to_string() });
    }
    let kind = parse_magic(path, &lines[0])?;
    let mut meta = Vec::new();
    let mut body_start = lines.len();
    for (i, line) in lines.iter().enumerate().skip(1) {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            body_start = i;
            break;
        }
    }
    Ok(HeaderLines { kind, meta, body_start, lines })
}

fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> SeriesIoError {
    SeriesIoError::Malformed {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

pub fn read_prices(path: &Path) -> Result<PriceSeries, SeriesIoError> {
    let header = read_header(path)?;
    if header.kind != SeriesKind::Prices {
        return Err(SeriesIoError::WrongKind {
            path: path.display().to_string(),
            expected: "prices".into(),
            found: header.kind.to_string(),
        });
    }
    let minutes_per_day = meta_value(&header.meta, "minutes_per_day")
        .and_then(|v| v.parse().ok())
        .unwrap_or(marketdata::DEFAULT_MINUTES_PER_DAY);

    let mut records = Vec::new();
    for (i, line) in header.lines.iter().enumerate().skip(header.body_start + 1) {
        if line.is_empty() {
            continue;
        }
        let (ts_raw, price_raw) = line
            .split_once(',')
            .ok_or_else(|| malformed(path, i + 1, "expected `timestamp,price`"))?;
        let timestamp = NaiveDateTime::parse_from_str(ts_raw, TS_FORMAT)
            .map_err(|_| malformed(path, i + 1, format!("bad timestamp {ts_raw:?}")))?;
        let price: f64 = price_raw
            .parse()
            .map_err(|_| malformed(path, i + 1, format!("bad price {price_raw:?}")))?;
        records.push(PriceRecord { timestamp, price });
    }
    Ok(PriceSeries::from_records(records, minutes_per_day)?)
}

pub fn read_returns(path: &Path) -> Result<ReturnSeries, SeriesIoError> {
    let header = read_header(path)?;
    if header.kind != SeriesKind::Returns {
        return Err(SeriesIoError::WrongKind {
            path: path.display().to_string(),
            expected: "returns".into(),
            found: header.kind.to_string(),
        });
    }
    let parse_ts = |key: &str| {
        meta_value(&header.meta, key)
            .and_then(|v| NaiveDateTime::parse_from_str(v, TS_FORMAT).ok())
    };
    let source_span = match (parse_ts("source_start"), parse_ts("source_end")) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };
    let drift = match (
        meta_value(&header.meta, "drift_window_minutes").and_then(|v| v.parse().ok()),
        meta_value(&header.meta, "drift_per_minute").and_then(|v| v.parse().ok()),
    ) {
        (Some(window_minutes), Some(per_minute_drift)) => {
            Some(DriftEstimate { window_minutes, per_minute_drift })
        }
        _ => None,
    };

    let mut values = Vec::with_capacity(header.lines.len().saturating_sub(header.body_start));
    for (i, line) in header.lines.iter().enumerate().skip(header.body_start + 1) {
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| malformed(path, i + 1, format!("bad value {line:?}")))?;
        if !v.is_finite() {
            return Err(malformed(path, i + 1, format!("non-finite value {line:?}")));
        }
        values.push(v);
    }
    Ok(ReturnSeries {
        values,
        step_minutes: meta_value(&header.meta, "step_minutes")
            .and_then(|v| v.parse().ok())
            .unwrap_or(1),
        mean_removed: meta_value(&header.meta, "mean_removed")
            .and_then(|v| v.parse().ok())
            .unwrap_or(0.0),
        outliers_neutralized: meta_value(&header.meta, "outliers_neutralized")
            .and_then(|v| v.parse().ok())
            .unwrap_or(0),
        source_span,
        drift,
        global_mean_fallback: meta_value(&header.meta, "global_mean_fallback")
            .map(|v| v == "true")
            .unwrap_or(false),
    })
}
