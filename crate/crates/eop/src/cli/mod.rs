//! The `eop` command line: the pipeline as subcommands.
//!
//! `ingest` and `preprocess` turn raw CSV prices into a detrended return
//! series; `filter` compresses it through the Haar low-pass; `price`,
//! `calibrate`, `hist` and `compare` consume return series. Flags override
//! config-file values, which override defaults; every run writes a manifest
//! recording the resolved configuration, input digests and output paths.

mod manifest;

pub use manifest::{default_manifest_path, Manifest};

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chrono::NaiveDate;
use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;

use crate::analytics;
use crate::calibration::{self, FitOptions, MarketQuote, MarketQuoteSet};
use crate::config::{parse_bounds, RunConfig};
use crate::marketdata::{self, CsvFormat, PreprocessOptions};
use crate::pricing::{self, EnsembleSpec, PricingRequest};
use crate::series_io;
use crate::wavelet::{self, FilterSpec};

#[derive(Parser)]
#[command(
    name = "eop",
    version,
    about = "Empirical option pricing over sliding-window return ensembles",
    propagate_version = true
)]
pub struct Cli {
    /// Key-value config file (also read from $EOP_CONFIG when the flag is absent).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Cap the worker thread count. Results never depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Manifest destination (default: next to the primary output).
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Read raw minute CSV prices, stitch sessions, fill gaps, persist.
    Ingest {
        /// Raw CSV with timestamp and price columns.
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Destination series file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Header name of the timestamp column.
        #[arg(long, value_name = "NAME", default_value = "timestamp")]
        timestamp_col: String,
        /// Header name of the price column.
        #[arg(long, value_name = "NAME", default_value = "price")]
        price_col: String,
    },
    /// Log-returns, outlier neutralization and detrending of a price series.
    Preprocess {
        /// Price series produced by `ingest`.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Destination return-series file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Outlier threshold in global standard deviations.
        #[arg(long, value_name = "SIGMAS")]
        outlier_sigma: Option<f64>,
        /// Drift window in minutes.
        #[arg(long, value_name = "MINUTES")]
        drift_window: Option<usize>,
    },
    /// Haar low-pass filter a return series subseries by subseries.
    Filter {
        /// Return series to filter.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Largest scale index; subseries hold 2^(J+1) samples.
        #[arg(long = "J", value_name = "J")]
        max_scale: Option<u32>,
        /// Scale threshold: coefficients with scale < jstar survive.
        #[arg(long = "jstar", value_name = "JSTAR")]
        cutoff_scale: Option<u32>,
        /// Destination return-series file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Optional compression report (JSON).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Price a strike ladder from a return series.
    #[command(group(ArgGroup::new("expiry").required(true).args(["expiry_date", "expiry_minutes"])))]
    Price {
        /// Return series backing the ensemble.
        #[arg(long, value_name = "FILE")]
        series: PathBuf,
        /// Spot price of the index.
        #[arg(long)]
        spot: f64,
        /// Strike ladder: `LO:HI:STEP` or a comma list.
        #[arg(long, value_name = "STRIKES")]
        strikes: String,
        /// Expiry date (requires --quote-date).
        #[arg(long, value_name = "DATE", requires = "quote_date")]
        expiry_date: Option<NaiveDate>,
        /// Quote date the spot refers to.
        #[arg(long, value_name = "DATE", conflicts_with = "expiry_minutes")]
        quote_date: Option<NaiveDate>,
        /// Expiry directly in trading minutes.
        #[arg(long, value_name = "MINUTES")]
        expiry_minutes: Option<usize>,
        /// Annualized risk-free rate.
        #[arg(long, value_name = "RATE")]
        rate: Option<f64>,
        /// Volatility rescaling factor.
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        /// Ensemble stride in minutes.
        #[arg(long, value_name = "MINUTES")]
        stride: Option<usize>,
        /// Market holiday, repeatable; skipped when counting trading days.
        #[arg(long, value_name = "DATE")]
        holiday: Vec<NaiveDate>,
        /// Also write the quotes as JSON.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Fit the g-factor against market quotes by least squares.
    Calibrate {
        /// Return series backing the ensemble.
        #[arg(long, value_name = "FILE")]
        series: PathBuf,
        /// Quotes CSV: quote_date,expiry_date,spot,strike,premium.
        #[arg(long, value_name = "CSV")]
        quotes: PathBuf,
        /// Annualized risk-free rate.
        #[arg(long, value_name = "RATE")]
        rate: Option<f64>,
        /// Search bounds for g as `LO:HI`.
        #[arg(long, value_name = "LO:HI")]
        bounds: Option<String>,
        /// Strikes to exclude from the fit, comma separated.
        #[arg(long, value_name = "STRIKES")]
        exclude: Option<String>,
        /// Drop strikes whose model premium falls below this floor.
        #[arg(long, value_name = "PREMIUM")]
        exclude_model_below: Option<f64>,
        /// Ensemble stride in minutes.
        #[arg(long, value_name = "MINUTES")]
        stride: Option<usize>,
        /// Market holiday, repeatable.
        #[arg(long, value_name = "DATE")]
        holiday: Vec<NaiveDate>,
        /// Also write the result as JSON.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Horizon-aggregated log-return histograms.
    Hist {
        /// Return series to aggregate.
        #[arg(long, value_name = "FILE")]
        series: PathBuf,
        /// Comma-separated horizons in minutes, e.g. 100,300,600.
        #[arg(long, value_name = "MINUTES")]
        horizons: String,
        /// Destination CSV (horizon,bin_left,bin_right,count).
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Window stride in minutes.
        #[arg(long, value_name = "MINUTES")]
        stride: Option<usize>,
        /// Number of bins.
        #[arg(long, default_value_t = analytics::DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
    },
    /// Price the same ladder on two series and tabulate the differences.
    #[command(group(ArgGroup::new("expiry").required(true).args(["expiry_date", "expiry_minutes"])))]
    Compare {
        /// Unfiltered return series.
        #[arg(long, value_name = "FILE")]
        original: PathBuf,
        /// Filtered return series.
        #[arg(long, value_name = "FILE")]
        filtered: PathBuf,
        #[arg(long)]
        spot: f64,
        /// Strike ladder: `LO:HI:STEP` or a comma list.
        #[arg(long, value_name = "STRIKES")]
        strikes: String,
        #[arg(long, value_name = "DATE", requires = "quote_date")]
        expiry_date: Option<NaiveDate>,
        #[arg(long, value_name = "DATE", conflicts_with = "expiry_minutes")]
        quote_date: Option<NaiveDate>,
        #[arg(long, value_name = "MINUTES")]
        expiry_minutes: Option<usize>,
        #[arg(long, value_name = "RATE")]
        rate: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        #[arg(long, value_name = "MINUTES")]
        stride: Option<usize>,
        #[arg(long, value_name = "DATE")]
        holiday: Vec<NaiveDate>,
        /// Optional market premiums CSV (strike,premium) for the MKT column.
        #[arg(long, value_name = "CSV")]
        market: Option<PathBuf>,
        /// Destination table; `.json` extension switches the format.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

/// Parses arguments from the process environment and runs; returns the exit
/// code. Usage errors exit with status 2 before this returns.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore the error if a pool already exists (tests call run() repeatedly)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

fn load_config(flag: Option<&Path>) -> anyhow::Result<RunConfig> {
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("EOP_CONFIG").map(PathBuf::from));
    let config = match path {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

/// `LO:HI:STEP` or comma list.
fn parse_strikes(spec: &str) -> anyhow::Result<Vec<f64>> {
    let strikes: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            bail!("strike range {spec:?} must look like LO:HI:STEP");
        };
        let lo: f64 = lo.trim().parse().context("bad ladder start")?;
        let hi: f64 = hi.trim().parse().context("bad ladder end")?;
        let step: f64 = step.trim().parse().context("bad ladder step")?;
        if step <= 0.0 || step.is_nan() || hi < lo {
            bail!("strike range {spec:?} must satisfy lo <= hi with positive step");
        }
        let count = ((hi - lo) / step).round() as usize;
        (0..=count).map(|i| lo + i as f64 * step).filter(|&e| e <= hi + 1e-9).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().context("bad strike"))
            .collect::<Result<_, _>>()?
    };
    if strikes.is_empty() {
        bail!("strike ladder {spec:?} is empty");
    }
    Ok(strikes)
}

fn parse_horizons(spec: &str) -> anyhow::Result<Vec<usize>> {
    let horizons: Vec<usize> = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>().context("bad horizon"))
        .collect::<Result<_, _>>()?;
    if horizons.is_empty() {
        bail!("no horizons given");
    }
    Ok(horizons)
}

fn resolve_expiry_minutes(
    expiry_date: Option<NaiveDate>,
    quote_date: Option<NaiveDate>,
    expiry_minutes: Option<usize>,
    minutes_per_day: u32,
    holidays: &[NaiveDate],
) -> anyhow::Result<usize> {
    match (expiry_minutes, expiry_date, quote_date) {
        (Some(minutes), _, _) => Ok(minutes),
        (None, Some(expiry), Some(quote)) => {
            Ok(pricing::trading_minutes_between(quote, expiry, minutes_per_day, holidays)?)
        }
        _ => bail!("give either --expiry-minutes or both --expiry-date and --quote-date"),
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { input, out, timestamp_col, price_col } => {
            cmd_ingest(&config, cli.manifest, &input, &out, &timestamp_col, &price_col)
        }
        Command::Preprocess { input, out, outlier_sigma, drift_window } => {
            cmd_preprocess(&config, cli.manifest, &input, &out, outlier_sigma, drift_window)
        }
        Command::Filter { input, max_scale, cutoff_scale, out, report } => {
            cmd_filter(&config, cli.manifest, &input, max_scale, cutoff_scale, &out, report)
        }
        Command::Price {
            series,
            spot,
            strikes,
            expiry_date,
            quote_date,
            expiry_minutes,
            rate,
            g,
            stride,
            holiday,
            json,
        } => cmd_price(
            &config,
            cli.manifest,
            &series,
            spot,
            &strikes,
            expiry_date,
            quote_date,
            expiry_minutes,
            rate,
            g,
            stride,
            &holiday,
            json,
        ),
        Command::Calibrate {
            series,
            quotes,
            rate,
            bounds,
            exclude,
            exclude_model_below,
            stride,
            holiday,
            json,
        } => cmd_calibrate(
            &config,
            cli.manifest,
            &series,
            &quotes,
            rate,
            bounds,
            exclude,
            exclude_model_below,
            stride,
            &holiday,
            json,
        ),
        Command::Hist { series, horizons, out, stride, bins } => {
            cmd_hist(&config, cli.manifest, &series, &horizons, &out, stride, bins)
        }
        Command::Compare {
            original,
            filtered,
            spot,
            strikes,
            expiry_date,
            quote_date,
            expiry_minutes,
            rate,
            g,
            stride,
            holiday,
            market,
            out,
        } => cmd_compare(
            &config,
            cli.manifest,
            &original,
            &filtered,
            spot,
            &strikes,
            expiry_date,
            quote_date,
            expiry_minutes,
            rate,
            g,
            stride,
            &holiday,
            market,
            &out,
        ),
    }
}

#[derive(Serialize)]
struct IngestParams<'a> {
    timestamp_col: &'a str,
    price_col: &'a str,
}

fn cmd_ingest(
    config: &RunConfig,
    manifest_path: Option<PathBuf>,
    input: &Path,
    out: &Path,
    timestamp_col: &str,
    price_col: &str,
) -> anyhow::Result<()> {
    let format = CsvFormat {
        timestamp_column: timestamp_col.to_string(),
        price_column: price_col.to_string(),
    };
    let mut series = marketdata::ingest_csv(input, &format)?;
    series.minutes_per_day = config.minutes_per_day;
    let raw_len = series.len();
    let filled = marketdata::fill_gaps(&series);
    series_io::write_prices(&filled, out)?;
    println!(
        "ingested {} records ({} sessions), {} gap-filled -> {}",
        raw_len,
        filled.session_boundaries.len(),
        filled.len() - raw_len,
        out.display()
    );

    let mut manifest =
        Manifest::new("ingest", *config, IngestParams { timestamp_col, price_col });
    manifest.add_input(input)?;
    manifest.add_output(out);
    let manifest_path =
        manifest_path.unwrap_or_else(|| default_manifest_path("ingest", Some(out)));
    manifest.write(&manifest_path)?;
    Ok(())
}

#[derive(Serialize)]
struct PreprocessParams {
    outlier_sigma: f64,
    drift_window_minutes: usize,
}

fn cmd_preprocess(
    config: &RunConfig,
    manifest_path: Option<PathBuf>,
    input: &Path,
    out: &Path,
    outlier_sigma: Option<f64>,
    drift_window: Option<usize>,
) -> anyhow::Result<()> {
    let options = PreprocessOptions {
        outlier_sigma: outlier_sigma.unwrap_or(config.outlier_sigma),
        drift_window_minutes: drift_window.unwrap_or(config.drift_window_minutes),
    };
    let prices = series_io::read_prices(input)?;
    let returns = marketdata::preprocess(&prices, &options)?;
    series_io::write_returns(&returns, out)?;
    println!(
        "{} -> {} returns, {} outliers neutralized{} -> {}",
        input.display(),
        returns.len(),
        returns.outliers_neutralized,
        if returns.global_mean_fallback { " (global-mean fallback)" } else { "" },
        out.display()
    );

    let params = PreprocessParams {
        outlier_sigma: options.outlier_sigma,
        drift_window_minutes: options.drift_window_minutes,
    };
    let mut manifest = Manifest::new("preprocess", *config, params);
    manifest.add_input(input)?;
    manifest.add_output(out);
    let manifest_path =
        manifest_path.unwrap_or_else(|| default_manifest_path("preprocess", Some(out)));
    manifest.write(&manifest_path)?;
    Ok(())
}

#[derive(Serialize)]
struct FilterParams {
    max_scale: u32,
    cutoff_scale: u32,
}

fn cmd_filter(
    config: &RunConfig,
    manifest_path: Option<PathBuf>,
    input: &Path,
    max_scale: Option<u32>,
    cutoff_scale: Option<u32>,
    out: &Path,
    report_path: Option<PathBuf>,
) -> anyhow::Result<()> {
    let max_scale = max_scale.unwrap_or(config.max_scale);
    let cutoff_scale = cutoff_scale.unwrap_or(config.cutoff_scale);
    let returns = series_io::read_returns(input)?;
    let spec = FilterSpec::new(cutoff_scale);
    let (filtered, report) = wavelet::filter_series(&returns, max_scale, &spec)?;
    series_io::write_returns(&filtered, out)?;
    println!(
        "filtered {} samples: {} subseries x {}, kept {} values ({:.4}%), remainder {}",
        report.total_samples,
        report.subseries_count,
        1usize << (max_scale + 1),
        report.retained_coefficients,
        report.retention_fraction * 100.0,
        report.remainder_samples
    );

    let mut manifest =
        Manifest::new("filter", *config, FilterParams { max_scale, cutoff_scale });
    manifest.add_input(input)?;
    manifest.add_output(out);
    if let Some(path) = &report_path {
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        series_io::atomic_write(path, json.as_bytes())?;
        manifest.add_output(path);
    }
    let manifest_path =
        manifest_path.unwrap_or_else(|| default_manifest_path("filter", Some(out)));
    manifest.write(&manifest_path)?;
    Ok(())
}

#[derive(Serialize)]
struct PriceParams {
    spot: f64,
    strikes: Vec<f64>,
    expiry_minutes: usize,
    rate_annual: f64,
    g_factor: f64,
    stride: usize,
}

#[derive(Serialize)]
struct PricedStrike {
    strike: f64,
    premium: f64,
    exercised_fraction: f64,
    payoff_stddev: f64,
    sample_count: usize,
}

#[allow(clippy::too_many_arguments)]
fn cmd_price(
    config: &RunConfig,
    manifest_path: Option<PathBuf>,
    series_path: &Path,
    spot: f64,
    strikes_spec: &str,
    expiry_date: Option<NaiveDate>,
    quote_date: Option<NaiveDate>,
    expiry_minutes: Option<usize>,
    rate: Option<f64>,
    g: f64,
    stride: Option<usize>,
    holidays: &[NaiveDate],
    json: Option<PathBuf>,
) -> anyhow::Result<()> {
    let strikes = parse_strikes(strikes_spec)?;
    let expiry = resolve_expiry_minutes(
        expiry_date,
        quote_date,
        expiry_minutes,
        config.minutes_per_day,
        holidays,
    )?;
    let rate = rate.unwrap_or(config.rate_annual);
    let stride = stride.unwrap_or(config.ensemble_stride);
    let returns = series_io::read_returns(series_path)?;
    let base = PricingRequest {
        spot,
        strike: strikes[0],
        expiry_minutes: expiry,
        rate_annual: rate,
        g_factor: g,
        minutes_per_year: config.minutes_per_year,
    };
    let requests: Vec<PricingRequest> =
        strikes.iter().map(|&e| base.with_strike(e)).collect();
    let spec = EnsembleSpec { window_length: expiry, stride };
    let quotes = pricing::price_ladder(&returns, &requests, &spec)?;

    println!(
        "{} windows of {} minutes (stride {}), g = {}, r = {}",
        quotes[0].sample_count, expiry, stride, g, rate
    );
    println!("{:>10} {:>12} {:>11} {:>11}", "strike", "premium", "exercised", "stddev");
    let rows: Vec<PricedStrike> = strikes
        .iter()
        .zip(&quotes)
        .map(|(&strike, q)| {
            println!(
                "{:>10.2} {:>12.4} {:>11.4} {:>11.4}",
                strike, q.premium, q.exercised_fraction, q.payoff_stddev
            );
            PricedStrike {
                strike,
                premium: q.premium,
                exercised_fraction: q.exercised_fraction,
                payoff_stddev: q.payoff_stddev,
                sample_count: q.sample_count,
            }
        })
        .collect();

    let params = PriceParams {
        spot,
        strikes: strikes.clone(),
        expiry_minutes: expiry,
        rate_annual: rate,
        g_factor: g,
        stride,
    };
    let mut manifest = Manifest::new("price", *config, params);
    manifest.add_input(series_path)?;
    if let Some(path) = &json {
        let mut body = serde_json::to_string_pretty(&rows)?;
        body.push('\n');
        series_io::atomic_write(path, body.as_bytes())?;
        manifest.add_output(path);
    }
    let manifest_path = manifest_path
        .unwrap_or_else(|| default_manifest_path("price", json.as_deref()));
    manifest.write(&manifest_path)?;
    Ok(())
}

#[derive(Serialize)]
struct CalibrateParams {
    spot: f64,
    rate_annual: f64,
    expiry_minutes: usize,
    stride: usize,
    bounds: (f64, f64),
    excluded_strikes: Vec<f64>,
    exclude_model_below: Option<f64>,
}

fn read_quote_csv(
    path: &Path,
    rate_annual: f64,
    excluded: &[f64],
) -> anyhow::Result<MarketQuoteSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open quotes {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> anyhow::Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow::anyhow!("quotes file lacks column {name:?}"))
    };
    let qd = col("quote_date")?;
    let ed = col("expiry_date")?;
    let sp = col("spot")?;
    let st = col("strike")?;
    let pr = col("premium")?;

    let mut quote_date = None;
    let mut expiry_date = None;
    let mut spot = None;
    let mut quotes = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_date = |idx: usize| -> anyhow::Result<NaiveDate> {
            record
                .get(idx)
                .unwrap_or("")
                .parse()
                .map_err(|_| anyhow::anyhow!("line {line}: bad date"))
        };
        let parse_num = |idx: usize| -> anyhow::Result<f64> {
            record
                .get(idx)
                .unwrap_or("")
                .parse()
                .map_err(|_| anyhow::anyhow!("line {line}: bad number"))
        };
        let row_quote = parse_date(qd)?;
        let row_expiry = parse_date(ed)?;
        let row_spot = parse_num(sp)?;
        match quote_date {
            None => {
                quote_date = Some(row_quote);
                expiry_date = Some(row_expiry);
                spot = Some(row_spot);
            }
            Some(prev) => {
                if prev != row_quote
                    || expiry_date != Some(row_expiry)
                    || spot != Some(row_spot)
                {
                    bail!("line {line}: quote_date/expiry_date/spot differ across rows");
                }
            }
        }
        let strike = parse_num(st)?;
        let premium = parse_num(pr)?;
        quotes.push(MarketQuote {
            strike,
            premium,
            excluded: excluded.contains(&strike),
        });
    }
    if quotes.is_empty() {
        bail!("quotes file {} has no rows", path.display());
    }
    Ok(MarketQuoteSet {
        quote_date,
        expiry_date,
        spot: spot.unwrap(),
        rate_annual,
        quotes,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_calibrate(
    config: &RunConfig,
    manifest_path: Option<PathBuf>,
    series_path: &Path,
    quotes_path: &Path,
    rate: Option<f64>,
    bounds: Option<String>,
    exclude: Option<String>,
    exclude_model_below: Option<f64>,
    stride: Option<usize>,
    holidays: &[NaiveDate],
    json: Option<PathBuf>,
) -> anyhow::Result<()> {
    let rate = rate.unwrap_or(config.rate_annual);
    let stride = stride.unwrap_or(config.ensemble_stride);
    let bounds = match bounds {
        Some(raw) => {
            parse_bounds(&raw).ok_or_else(|| anyhow::anyhow!("bad bounds {raw:?}"))?
        }
        None => config.calibration_bounds,
    };
    let excluded: Vec<f64> = match exclude {
        Some(raw) => parse_strikes(&raw)?,
        None => Vec::new(),
    };
    let quotes = read_quote_csv(quotes_path, rate, &excluded)?;
    let (quote_date, expiry_date) = match (quotes.quote_date, quotes.expiry_date) {
        (Some(q), Some(e)) => (q, e),
        _ => bail!("quotes file must carry quote_date and expiry_date"),
    };
    let expiry = pricing::trading_minutes_between(
        quote_date,
        expiry_date,
        config.minutes_per_day,
        holidays,
    )?;
    let returns = series_io::read_returns(series_path)?;
    let spec = EnsembleSpec { window_length: expiry, stride };
    let options = FitOptions { bounds, exclude_model_below, ..Default::default() };
    let fit = calibration::fit_g(&quotes, &returns, &spec, config.minutes_per_year, &options)?;

    println!(
        "fitted g = {:.4} (sigma* = {:.2}% annualized), rss = {:.6}",
        fit.g,
        fit.sigma_star * 100.0,
        fit.rss
    );
    println!(
        "{} objective evaluations over [{}, {}]{}",
        fit.iterations,
        bounds.0,
        bounds.1,
        if fit.at_boundary { " -- WARNING: minimum sits on the boundary" } else { "" }
    );
    println!("{:>10} {:>10} {:>10} {:>10} {:>9}", "strike", "market", "model", "residual", "in fit");
    for row in &fit.per_strike {
        println!(
            "{:>10.2} {:>10.4} {:>10.4} {:>+10.4} {:>9}",
            row.strike,
            row.market,
            row.model,
            row.residual,
            if row.excluded { "no" } else { "yes" }
        );
    }

    let params = CalibrateParams {
        spot: quotes.spot,
        rate_annual: rate,
        expiry_minutes: expiry,
        stride,
        bounds,
        excluded_strikes: excluded,
        exclude_model_below,
    };
    let mut manifest = Manifest::new("calibrate", *config, params);
    manifest.add_input(series_path)?;
    manifest.add_input(quotes_path)?;
    if let Some(path) = &json {
        let mut body = serde_json::to_string_pretty(&fit)?;
        body.push('\n');
        series_io::atomic_write(path, body.as_bytes())?;
        manifest.add_output(path);
    }
    let manifest_path = manifest_path
        .unwrap_or_else(|| default_manifest_path("calibrate", json.as_deref()));
    manifest.write(&manifest_path)?;
    Ok(())
}

#[derive(Serialize)]
struct HistParams {
    horizons: Vec<usize>,
    stride: usize,
    bins: usize,
}

fn cmd_hist(
    config: &RunConfig,
    manifest_path: Option<PathBuf>,
    series_path: &Path,
    horizons_spec: &str,
    out: &Path,
    stride: Option<usize>,
    bins: usize,
) -> anyhow::Result<()> {
    let horizons = parse_horizons(horizons_spec)?;
    let stride = stride.unwrap_or(config.ensemble_stride);
    let returns = series_io::read_returns(series_path)?;

    let mut body = String::from("horizon,bin_left,bin_right,count\n");
    for &horizon in &horizons {
        let hist = analytics::horizon_histogram(&returns, horizon, stride, bins)?;
        println!(
            "horizon {:>6}m: {} windows, stddev {:.6e}, excess kurtosis {:+.3}",
            horizon, hist.sample_count, hist.stddev, hist.excess_kurtosis
        );
        for (i, &count) in hist.counts.iter().enumerate() {
            use std::fmt::Write as _;
            let _ = writeln!(
                body,
                "{},{},{},{}",
                horizon,
                hist.bin_edges[i],
                hist.bin_edges[i + 1],
                count
            );
        }
    }
    series_io::atomic_write(out, body.as_bytes())?;

    let mut manifest =
        Manifest::new("hist", *config, HistParams { horizons, stride, bins });
    manifest.add_input(series_path)?;
    manifest.add_output(out);
    let manifest_path =
        manifest_path.unwrap_or_else(|| default_manifest_path("hist", Some(out)));
    manifest.write(&manifest_path)?;
    Ok(())
}

#[derive(Serialize)]
struct CompareParams {
    spot: f64,
    strikes: Vec<f64>,
    expiry_minutes: usize,
    rate_annual: f64,
    g_factor: f64,
    stride: usize,
}

fn read_market_csv(path: &Path, strikes: &[f64]) -> anyhow::Result<Vec<Option<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open market quotes {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let st = headers
        .iter()
        .position(|h| h == "strike")
        .ok_or_else(|| anyhow::anyhow!("market file lacks column \"strike\""))?;
    let pr = headers
        .iter()
        .position(|h| h == "premium")
        .ok_or_else(|| anyhow::anyhow!("market file lacks column \"premium\""))?;
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let strike: f64 = record.get(st).unwrap_or("").parse()?;
        let premium: f64 = record.get(pr).unwrap_or("").parse()?;
        rows.push((strike, premium));
    }
    Ok(strikes
        .iter()
        .map(|&e| rows.iter().find(|(s, _)| *s == e).map(|(_, p)| *p))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    config: &RunConfig,
    manifest_path: Option<PathBuf>,
    original_path: &Path,
    filtered_path: &Path,
    spot: f64,
    strikes_spec: &str,
    expiry_date: Option<NaiveDate>,
    quote_date: Option<NaiveDate>,
    expiry_minutes: Option<usize>,
    rate: Option<f64>,
    g: f64,
    stride: Option<usize>,
    holidays: &[NaiveDate],
    market: Option<PathBuf>,
    out: &Path,
) -> anyhow::Result<()> {
    let strikes = parse_strikes(strikes_spec)?;
    let expiry = resolve_expiry_minutes(
        expiry_date,
        quote_date,
        expiry_minutes,
        config.minutes_per_day,
        holidays,
    )?;
    let rate = rate.unwrap_or(config.rate_annual);
    let stride = stride.unwrap_or(config.ensemble_stride);
    let original = series_io::read_returns(original_path)?;
    let filtered = series_io::read_returns(filtered_path)?;
    let market_values = match &market {
        Some(path) => Some(read_market_csv(path, &strikes)?),
        None => None,
    };

    let base = PricingRequest {
        spot,
        strike: strikes[0],
        expiry_minutes: expiry,
        rate_annual: rate,
        g_factor: g,
        minutes_per_year: config.minutes_per_year,
    };
    let spec = EnsembleSpec { window_length: expiry, stride };
    let dense_market: Option<Vec<f64>> =
        market_values.as_ref().map(|m| m.iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    let mut rows = analytics::compare_premiums(
        &original,
        &filtered,
        &base,
        &strikes,
        &spec,
        dense_market.as_deref(),
    )?;
    // a NaN market value means "absent"
    for row in rows.iter_mut() {
        if row.market.map(|m| m.is_nan()).unwrap_or(false) {
            row.market = None;
        }
    }

    println!(
        "{:>10} {:>12} {:>12} {:>10} {:>10} {:>9}",
        "strike", "original", "filtered", "market", "abs diff", "rel diff"
    );
    for row in &rows {
        println!(
            "{:>10.2} {:>12.4} {:>12.4} {:>10} {:>10.4} {:>8.4}%",
            row.strike,
            row.premium_original,
            row.premium_filtered,
            row.market.map(|m| format!("{m:.2}")).unwrap_or_else(|| "-".into()),
            row.abs_diff,
            row.rel_diff * 100.0
        );
    }

    let is_json = out.extension().map(|e| e == "json").unwrap_or(false);
    let body = if is_json {
        let mut s = serde_json::to_string_pretty(&rows)?;
        s.push('\n');
        s
    } else {
        let mut s = String::from(
            "strike,premium_original,premium_filtered,market,abs_diff,rel_diff\n",
        );
        for row in &rows {
            use std::fmt::Write as _;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                row.strike,
                row.premium_original,
                row.premium_filtered,
                row.market.map(|m| m.to_string()).unwrap_or_default(),
                row.abs_diff,
                row.rel_diff
            );
        }
        s
    };
    series_io::atomic_write(out, body.as_bytes())?;

    let params = CompareParams {
        spot,
        strikes: strikes.clone(),
        expiry_minutes: expiry,
        rate_annual: rate,
        g_factor: g,
        stride,
    };
    let mut manifest = Manifest::new("compare", *config, params);
    manifest.add_input(original_path)?;
    manifest.add_input(filtered_path)?;
    if let Some(path) = &market {
        manifest.add_input(path)?;
    }
    manifest.add_output(out);
    let manifest_path =
        manifest_path.unwrap_or_else(|| default_manifest_path("compare", Some(out)));
    manifest.write(&manifest_path)?;
    Ok(())
}
