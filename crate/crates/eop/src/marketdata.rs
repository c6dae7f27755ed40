//! Minute-level market data: CSV ingestion, session stitching, gap filling,
//! log-returns, outlier neutralization and drift removal.
//!
//! The output of this module is a [`ReturnSeries`]: a zero-mean sequence of
//! per-minute detrended log-returns, the raw material for both the wavelet
//! filter and the pricing ensemble. Sessions (trading days) are concatenated
//! back to back; no synthetic overnight rows are ever inserted.

use std::fmt;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use thiserror::Error;

use crate::numeric;

/// Minutes in one trading session.
pub const DEFAULT_MINUTES_PER_DAY: u32 = 510;
/// Outlier threshold in units of the global standard deviation.
pub const DEFAULT_OUTLIER_SIGMA: f64 = 10.0;
/// One trading week (5 sessions) of minutes, the drift-estimation window.
pub const DEFAULT_DRIFT_WINDOW_MINUTES: usize = 2550;

const MAX_PURIFY_PASSES: usize = 10;
/// Re-centering target: |mean| <= RECENTER_TOL * stddev.
const RECENTER_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("input has no header row")]
    MissingHeader,
    #[error("column {0:?} not found in header")]
    ColumnNotFound(String),
    #[error("line {line}: cannot parse timestamp {value:?}")]
    BadTimestamp { line: u64, value: String },
    #[error("line {line}: cannot parse price {value:?}")]
    BadPrice { line: u64, value: String },
    #[error("line {line}: non-positive price {value}")]
    NonPositivePrice { line: u64, value: f64 },
    #[error("line {line}: duplicate timestamp {timestamp}")]
    DuplicateTimestamp { line: u64, timestamp: NaiveDateTime },
    #[error("line {line}: timestamp {timestamp} is not increasing")]
    NonMonotonicTimestamp { line: u64, timestamp: NaiveDateTime },
    #[error("price series is empty")]
    EmptySeries,
    #[error("need at least {need} records, have {have}")]
    TooShort { need: usize, have: usize },
    #[error("returns input is empty")]
    EmptyReturns,
    #[error("outlier threshold must be positive, got {0}")]
    InvalidOutlierSigma(f64),
    #[error("drift window must be at least 2 minutes, got {0}")]
    InvalidDriftWindow(usize),
}

/// One minute-resolution observation of the index level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceRecord {
    pub timestamp: NaiveDateTime,
    pub price: f64,
}

/// A stitched sequence of trading sessions.
///
/// `session_boundaries` holds the start index of every session, beginning
/// with 0; a session is the run of records sharing a calendar date.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    pub records: Vec<PriceRecord>,
    pub session_boundaries: Vec<usize>,
    pub minutes_per_day: u32,
}

impl PriceSeries {
    /// Validates ordering and positivity, detects session boundaries.
    pub fn from_records(
        records: Vec<PriceRecord>,
        minutes_per_day: u32,
    ) -> Result<Self, MarketDataError> {
        if records.is_empty() {
            return Err(MarketDataError::EmptySeries);
        }
        for (i, rec) in records.iter().enumerate() {
            let line = i as u64 + 2; // header + 1-based
            if rec.price <= 0.0 || !rec.price.is_finite() {
                return Err(MarketDataError::NonPositivePrice { line, value: rec.price });
            }
            if i > 0 {
                let prev = &records[i - 1];
                if rec.timestamp == prev.timestamp {
                    return Err(MarketDataError::DuplicateTimestamp {
                        line,
                        timestamp: rec.timestamp,
                    });
                }
                if rec.timestamp < prev.timestamp {
                    return Err(MarketDataError::NonMonotonicTimestamp {
                        line,
                        timestamp: rec.timestamp,
                    });
                }
            }
        }
        let session_boundaries = detect_sessions(&records);
        Ok(Self { records, session_boundaries, minutes_per_day })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Slices of `records`, one per trading session.
    pub fn sessions(&self) -> impl Iterator<Item = &[PriceRecord]> {
        let n = self.records.len();
        let bounds = &self.session_boundaries;
        bounds.iter().enumerate().map(move |(i, &start)| {
            let end = bounds.get(i + 1).copied().unwrap_or(n);
            &self.records[start..end]
        })
    }

    pub fn source_span(&self) -> Option<(NaiveDateTime, NaiveDateTime)> {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => Some((a.timestamp, b.timestamp)),
            _ => None,
        }
    }
}

fn detect_sessions(records: &[PriceRecord]) -> Vec<usize> {
    let mut bounds = Vec::new();
    let mut prev_date: Option<NaiveDate> = None;
    for (i, rec) in records.iter().enumerate() {
        let date = rec.timestamp.date();
        if prev_date != Some(date) {
            bounds.push(i);
            prev_date = Some(date);
        }
    }
    bounds
}

/// Column mapping for raw CSV input.
#[derive(Debug, Clone)]
pub struct CsvFormat {
    pub timestamp_column: String,
    pub price_column: String,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self { timestamp_column: "timestamp".into(), price_column: "price".into() }
    }
}

const TIMESTAMP_FORMATS: [&str; 4] =
    ["%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d %H:%M:%S"];

pub(crate) fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    for fmt in TIMESTAMP_FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(s, fmt) {
            // minute resolution: truncate any seconds
            return Some(ts - Duration::seconds(ts.and_utc().timestamp() % 60));
        }
    }
    None
}

/// Reads `(timestamp, price)` rows into a [`PriceSeries`].
///
/// Rows must already be in chronological order: duplicates and backward
/// timestamps are rejected with the offending line number. Session
/// boundaries fall wherever the calendar date changes.
pub fn ingest_csv(path: &Path, format: &CsvFormat) -> Result<PriceSeries, MarketDataError> {
    let file = std::fs::File::open(path).map_err(|source| MarketDataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(MarketDataError::MissingHeader);
    }
    let ts_idx = headers
        .iter()
        .position(|h| h == format.timestamp_column)
        .ok_or_else(|| MarketDataError::ColumnNotFound(format.timestamp_column.clone()))?;
    let price_idx = headers
        .iter()
        .position(|h| h == format.price_column)
        .ok_or_else(|| MarketDataError::ColumnNotFound(format.price_column.clone()))?;

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let ts_raw = record.get(ts_idx).unwrap_or("");
        let timestamp = parse_timestamp(ts_raw)
            .ok_or_else(|| MarketDataError::BadTimestamp { line, value: ts_raw.to_string() })?;
        let price_raw = record.get(price_idx).unwrap_or("");
        let price: f64 = price_raw
            .parse()
            .map_err(|_| MarketDataError::BadPrice { line, value: price_raw.to_string() })?;
        if price <= 0.0 || !price.is_finite() {
            return Err(MarketDataError::NonPositivePrice { line, value: price });
        }
        if let Some(prev) = records.last() {
            let prev: &PriceRecord = prev;
            if timestamp == prev.timestamp {
                return Err(MarketDataError::DuplicateTimestamp { line, timestamp });
            }
            if timestamp < prev.timestamp {
                return Err(MarketDataError::NonMonotonicTimestamp { line, timestamp });
            }
        }
        records.push(PriceRecord { timestamp, price });
    }
    PriceSeries::from_records(records, DEFAULT_MINUTES_PER_DAY)
}

/// Forward-fills missing minutes inside each session.
///
/// A missing minute repeats the last observed price, so the filled slot
/// contributes a zero log-return. Overnight gaps are left alone: sessions
/// stay concatenated back to back.
pub fn fill_gaps(series: &PriceSeries) -> PriceSeries {
    let mut records = Vec::with_capacity(series.records.len());
    for session in series.sessions() {
        for (i, rec) in session.iter().enumerate() {
            if i > 0 {
                let prev = &session[i - 1];
                let mut t = prev.timestamp + Duration::minutes(1);
                while t < rec.timestamp {
                    records.push(PriceRecord { timestamp: t, price: prev.price });
                    t += Duration::minutes(1);
                }
            }
            records.push(*rec);
        }
    }
    PriceSeries::from_records(records, series.minutes_per_day)
        .expect("gap filling preserves ordering")
}

/// Per-minute log-returns `ln(p[n+1] / p[n])`, length `len - 1`.
pub fn log_returns(series: &PriceSeries) -> Result<Vec<f64>, MarketDataError> {
    if series.len() < 2 {
        return Err(MarketDataError::TooShort { need: 2, have: series.len() });
    }
    Ok(series
        .records
        .windows(2)
        .map(|w| (w[1].price / w[0].price).ln())
        .collect())
}

/// Neutralizes returns beyond `outlier_sigma` global standard deviations.
///
/// Flagged elements are set to zero (deletion would break the regular minute
/// grid). The standard deviation is recomputed and the pass repeated until no
/// new element is flagged, capped at 10 passes. Returns the purified series
/// and the number of elements neutralized. Degenerate input (zero standard
/// deviation) is returned unchanged.
pub fn purify(
    returns: &[f64],
    outlier_sigma: f64,
) -> Result<(Vec<f64>, usize), MarketDataError> {
    if returns.is_empty() {
        return Err(MarketDataError::EmptyReturns);
    }
    if outlier_sigma <= 0.0 || outlier_sigma.is_nan() {
        return Err(MarketDataError::InvalidOutlierSigma(outlier_sigma));
    }
    let mut values = returns.to_vec();
    let mut neutralized = 0usize;
    for _ in 0..MAX_PURIFY_PASSES {
        let sigma = numeric::std_dev(&values);
        if sigma <= 0.0 {
            break;
        }
        let threshold = outlier_sigma * sigma;
        let mut flagged = 0usize;
        for v in values.iter_mut() {
            if v.abs() > threshold {
                *v = 0.0;
                flagged += 1;
            }
        }
        neutralized += flagged;
        if flagged == 0 {
            break;
        }
    }
    Ok((values, neutralized))
}

/// Trailing drift over the last full `window_minutes` of a return series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    pub window_minutes: usize,
    pub per_minute_drift: f64,
}

/// Mean per-minute return over the trailing `window_minutes` elements
/// (the whole series if it is shorter than the window).
pub fn estimate_drift(
    returns: &[f64],
    window_minutes: usize,
) -> Result<DriftEstimate, MarketDataError> {
    if returns.is_empty() {
        return Err(MarketDataError::EmptyReturns);
    }
    if window_minutes < 2 {
        return Err(MarketDataError::InvalidDriftWindow(window_minutes));
    }
    let tail = &returns[returns.len().saturating_sub(window_minutes)..];
    Ok(DriftEstimate { window_minutes, per_minute_drift: numeric::mean(tail) })
}

/// Detrended, exactly centered per-minute log-returns with the
/// preprocessing metadata carried along.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    /// Detrended per-minute log-return increments.
    pub values: Vec<f64>,
    /// Sampling step; always 1 minute in this pipeline.
    pub step_minutes: u32,
    /// Mean shift removed from the raw returns (average over all elements of
    /// the per-element drift plus the final re-centering constant).
    pub mean_removed: f64,
    /// Elements zeroed by [`purify`].
    pub outliers_neutralized: usize,
    /// First and last timestamp of the price data behind the series, when known.
    pub source_span: Option<(NaiveDateTime, NaiveDateTime)>,
    /// Trailing drift at the end of the raw series, when detrending ran.
    pub drift: Option<DriftEstimate>,
    /// Set when the series was shorter than the drift window and detrending
    /// fell back to global-mean subtraction.
    pub global_mean_fallback: bool,
}

impl ReturnSeries {
    /// Wraps raw values, applying only the exact re-centering pass.
    /// Used for synthetic data and tests.
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut values = values;
        let removed = recenter(&mut values);
        Self {
            values,
            step_minutes: 1,
            mean_removed: removed,
            outliers_neutralized: 0,
            source_span: None,
            drift: None,
            global_mean_fallback: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-minute historical volatility `sqrt(<v^2>)`.
    pub fn per_minute_volatility(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        numeric::mean(&sq).sqrt()
    }
}

impl fmt::Display for ReturnSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} returns, step {}m, {} outliers neutralized",
            self.values.len(),
            self.step_minutes,
            self.outliers_neutralized
        )
    }
}

/// Subtracts the sample mean until `|mean| <= 1e-13 * stddev`; returns the
/// total constant removed.
fn recenter(values: &mut [f64]) -> f64 {
    let mut removed = 0.0;
    for _ in 0..4 {
        let m = numeric::mean(values);
        let sigma = numeric::std_dev(values).max(f64::MIN_POSITIVE);
        if m.abs() <= RECENTER_TOL * sigma {
            break;
        }
        for v in values.iter_mut() {
            *v -= m;
        }
        removed += m;
    }
    removed
}

/// Removes the trailing one-week mean drift and re-centers exactly.
///
/// Element `n` has the mean of the preceding `drift_window` elements
/// subtracted; the first `drift_window` elements use the global mean. A
/// series shorter than the window falls back to global-mean subtraction and
/// sets [`ReturnSeries::global_mean_fallback`]. A final pass re-centers the
/// output so its sample mean is zero to within `1e-13` standard deviations.
pub fn detrend(returns: &[f64], drift_window: usize) -> Result<ReturnSeries, MarketDataError> {
    if returns.is_empty() {
        return Err(MarketDataError::EmptyReturns);
    }
    if drift_window < 2 {
        return Err(MarketDataError::InvalidDriftWindow(drift_window));
    }
    let n = returns.len();
    let input_mean = numeric::mean(returns);
    let fallback = n < drift_window;

    let mut values = Vec::with_capacity(n);
    if fallback {
        values.extend(returns.iter().map(|v| v - input_mean));
    } else {
        let prefix = numeric::compensated_prefix_sums(returns);
        let w = drift_window as f64;
        for (i, &v) in returns.iter().enumerate() {
            let drift = if i < drift_window {
                input_mean
            } else {
                (prefix[i] - prefix[i - drift_window]) / w
            };
            values.push(v - drift);
        }
    }
    let residual = recenter(&mut values);
    let drift = estimate_drift(returns, drift_window.min(n).max(2))?;

    Ok(ReturnSeries {
        values,
        step_minutes: 1,
        mean_removed: input_mean + residual,
        outliers_neutralized: 0,
        source_span: None,
        drift: Some(drift),
        global_mean_fallback: fallback,
    })
}

/// Options for the raw-prices-to-returns pipeline.
#[derive(Debug, Clone, Copy)]
pub struct PreprocessOptions {
    pub outlier_sigma: f64,
    pub drift_window_minutes: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            outlier_sigma: DEFAULT_OUTLIER_SIGMA,
            drift_window_minutes: DEFAULT_DRIFT_WINDOW_MINUTES,
        }
    }
}

/// Full preprocessing: log-returns, outlier neutralization, detrending.
pub fn preprocess(
    series: &PriceSeries,
    options: &PreprocessOptions,
) -> Result<ReturnSeries, MarketDataError> {
    let raw = log_returns(series)?;
    let (purified, neutralized) = purify(&raw, options.outlier_sigma)?;
    let mut result = detrend(&purified, options.drift_window_minutes)?;
    result.outliers_neutralized = neutralized;
    result.source_span = series.source_span();
    Ok(result)
}
