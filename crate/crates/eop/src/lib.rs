//! Empirical option pricing for European calls.
//!
//! The library prices calls by averaging discounted payoffs over an ensemble
//! of sliding windows drawn from a detrended minute-by-minute log-return
//! series, instead of assuming a parametric model for the underlying. A Haar
//! low-pass filter can compress that series by two to three orders of
//! magnitude while leaving premiums essentially unchanged for expiries beyond
//! one trading day.
//!
//! The pipeline, end to end:
//!
//! 1. [`marketdata`] — ingest minute-level prices, stitch trading sessions,
//!    fill intra-session gaps, take log-returns, neutralize outliers and
//!    remove the trailing one-week drift.
//! 2. [`wavelet`] — decompose the return series into Haar modes, keep only
//!    the coarse scales, reconstruct.
//! 3. [`pricing`] — build the sliding-window ensemble and average discounted
//!    call payoffs across it.
//! 4. [`calibration`] — fit the single volatility-rescaling factor `g`
//!    against market quotes by least squares.
//! 5. [`analytics`] — horizon histograms, a closed-form Black-Scholes
//!    reference, synthetic series generators and original-vs-filtered
//!    premium comparisons.
//!
//! Each capability has a runnable program under `examples/`; the `eop`
//! binary exposes the same pipeline as subcommands.

pub mod analytics;
pub mod calibration;
pub mod cli;
pub mod config;
pub mod marketdata;
mod numeric;
pub mod pricing;
pub mod series_io;
pub mod wavelet;

pub use config::RunConfig;
pub use marketdata::{PriceRecord, PriceSeries, ReturnSeries};
pub use pricing::{EnsembleSpec, PremiumQuote, PricingRequest};
pub use wavelet::{CompressionReport, FilterSpec, WaveletDecomposition};
