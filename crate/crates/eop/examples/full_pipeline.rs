//! The whole pipeline in one program: raw minute CSV -> stitched prices ->
//! detrended returns -> Haar low-pass compression -> premium ladder on both
//! the original and the compressed series.
//!
//! Run with `cargo run --example full_pipeline`.

use std::fmt::Write as _;

use chrono::Datelike;
use eop::analytics;
use eop::marketdata::{self, CsvFormat, PreprocessOptions};
use eop::pricing::{EnsembleSpec, PricingRequest, DEFAULT_MINUTES_PER_YEAR};
use eop::wavelet::{filter_series, FilterSpec};

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> anyhow::Result<()> {
    // fabricate four weeks of minute data with a few holes and one spike
    let mut rng = StdRng::seed_from_u64(4711);
    let per_minute = 0.09 / (DEFAULT_MINUTES_PER_YEAR as f64).sqrt();
    let normal = Normal::new(2e-7, per_minute).unwrap();
    let mut price = 5500.0f64;
    let mut csv = String::from("timestamp,price\n");
    let mut day = chrono::NaiveDate::from_ymd_opt(2005, 8, 1).unwrap();
    for d in 0..20 {
        while matches!(day.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun) {
            day = day.succ_opt().unwrap();
        }
        for m in 0..510u32 {
            if !(d == 0 && m == 0) {
                let mut step: f64 = normal.sample(&mut rng);
                if d == 9 && m == 250 {
                    step -= 0.004; // a 17-sigma plunge, reverted next minute
                }
                if d == 9 && m == 251 {
                    step += 0.004;
                }
                price *= step.exp();
            }
            if d == 3 && (200..204).contains(&m) {
                continue; // a four-minute data hole
            }
            let _ = writeln!(
                csv,
                "{}T{:02}:{:02},{:.1}",
                day.format("%Y-%m-%d"),
                8 + m / 60,
                m % 60,
                price
            );
        }
        day = day.succ_opt().unwrap();
    }
    let dir = std::env::temp_dir().join("eop-full-pipeline-example");
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join("raw_minutes.csv");
    std::fs::write(&csv_path, csv)?;

    // ingest, stitch, fill, preprocess
    let raw = marketdata::ingest_csv(&csv_path, &CsvFormat::default())?;
    let prices = marketdata::fill_gaps(&raw);
    println!(
        "ingested {} records over {} sessions ({} minutes gap-filled)",
        raw.len(),
        prices.session_boundaries.len(),
        prices.len() - raw.len()
    );
    let returns = marketdata::preprocess(&prices, &PreprocessOptions::default())?;
    println!(
        "returns: {} samples, {} outliers neutralized, mean removed {:.3e}",
        returns.len(),
        returns.outliers_neutralized,
        returns.mean_removed
    );

    // compress
    let (filtered, report) = filter_series(&returns, 11, &FilterSpec::new(4))?;
    println!(
        "filter: {} subseries, kept {} of {} values ({:.2}% discarded), remainder {}",
        report.subseries_count,
        report.retained_coefficients,
        report.total_samples,
        (1.0 - report.retention_fraction) * 100.0,
        report.remainder_samples
    );

    // price a ladder on both series
    let spot = 5530.0;
    let base = PricingRequest {
        spot,
        strike: spot,
        expiry_minutes: 510,
        rate_annual: 0.045,
        g_factor: 0.85,
        minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
    };
    let spec = EnsembleSpec { window_length: 510, stride: 60 };
    let strikes = [5430.0, 5480.0, 5530.0, 5580.0, 5630.0];
    let rows = analytics::compare_premiums(&returns, &filtered, &base, &strikes, &spec, None)?;

    println!("\none-trading-day calls at g = 0.85:");
    println!("{:>8} {:>12} {:>12} {:>10}", "strike", "original", "filtered", "rel diff");
    for row in rows {
        println!(
            "{:>8.0} {:>12.4} {:>12.4} {:>9.3}%",
            row.strike,
            row.premium_original,
            row.premium_filtered,
            row.rel_diff * 100.0
        );
    }
    Ok(())
}
