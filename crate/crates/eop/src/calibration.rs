//! Least-squares calibration of the volatility rescaling factor `g` against
//! market call premiums.
//!
//! The objective is the unweighted sum of squared premium residuals over the
//! usable strikes. A deterministic coarse grid guards against local minima
//! inside the bounds; golden-section search then refines around the best
//! grid point.

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::marketdata::ReturnSeries;
use crate::pricing::{self, EnsembleSpec, PricingError, PricingRequest};

/// Search bounds for the `g`-factor.
pub const DEFAULT_BOUNDS: (f64, f64) = (0.1, 3.0);
/// Coarse grid step across the bounds.
pub const DEFAULT_GRID_STEP: f64 = 0.01;
/// Golden-section refinement stops when the bracket is narrower than this.
pub const DEFAULT_REFINE_TOLERANCE: f64 = 1e-4;

const GOLDEN_RATIO: f64 = 1.618033988749895;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("quote set has {0} usable quotes; need at least {1}")]
    NotEnoughQuotes(usize, usize),
    #[error("strikes must be distinct")]
    DuplicateStrikes,
    #[error("invalid bounds ({0}, {1}): need 0 < lower < upper")]
    InvalidBounds(f64, f64),
    #[error("g must be positive, got {0}")]
    InvalidG(f64),
    #[error("objective is not finite at g = {0}; the series may be corrupt")]
    NonFiniteObjective(f64),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

/// One market call quote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketQuote {
    pub strike: f64,
    pub premium: f64,
    /// Flagged out of the fit by the caller.
    pub excluded: bool,
}

impl MarketQuote {
    pub fn new(strike: f64, premium: f64) -> Self {
        Self { strike, premium, excluded: false }
    }
}

/// A day's quotes against one expiry, with the shared pricing inputs.
#[derive(Debug, Clone)]
pub struct MarketQuoteSet {
    pub quote_date: Option<NaiveDate>,
    pub expiry_date: Option<NaiveDate>,
    pub spot: f64,
    pub rate_annual: f64,
    pub quotes: Vec<MarketQuote>,
}

impl MarketQuoteSet {
    pub fn usable(&self) -> impl Iterator<Item = &MarketQuote> {
        self.quotes.iter().filter(|q| !q.excluded)
    }

    fn validate(&self, min_quotes: usize) -> Result<(), CalibrationError> {
        let usable = self.usable().count();
        if usable < min_quotes {
            return Err(CalibrationError::NotEnoughQuotes(usable, min_quotes));
        }
        let mut strikes: Vec<f64> = self.quotes.iter().map(|q| q.strike).collect();
        strikes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if strikes.windows(2).any(|w| w[0] == w[1]) {
            return Err(CalibrationError::DuplicateStrikes);
        }
        Ok(())
    }
}

/// Knobs for [`fit_g`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitOptions {
    pub bounds: (f64, f64),
    pub grid_step: f64,
    pub refine_tolerance: f64,
    /// When set, strikes whose model premium falls below this floor (index
    /// points) are dropped from the objective. Off by default.
    pub exclude_model_below: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds: DEFAULT_BOUNDS,
            grid_step: DEFAULT_GRID_STEP,
            refine_tolerance: DEFAULT_REFINE_TOLERANCE,
            exclude_model_below: None,
        }
    }
}

/// Per-strike outcome of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrikeFit {
    pub strike: f64,
    pub market: f64,
    pub model: f64,
    pub residual: f64,
    pub excluded: bool,
}

/// The fitted `g` with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationResult {
    pub g: f64,
    /// `g` times the annualized historical volatility of the series.
    pub sigma_star: f64,
    /// Residual sum of squares at the fitted `g`, index-points squared.
    pub rss: f64,
    pub per_strike: Vec<StrikeFit>,
    /// Objective evaluations spent (grid plus refinement).
    pub iterations: usize,
    /// The minimum sits on the first or last grid point; treat the fit with
    /// suspicion.
    pub at_boundary: bool,
}

/// Annualized historical volatility `sqrt(<v^2> * minutes_per_year)`.
pub fn historical_volatility(returns: &ReturnSeries, minutes_per_year: u32) -> f64 {
    returns.per_minute_volatility() * (minutes_per_year as f64).sqrt()
}

fn model_ladder(
    g: f64,
    quotes: &MarketQuoteSet,
    returns: &ReturnSeries,
    spec: &EnsembleSpec,
    minutes_per_year: u32,
) -> Result<Vec<f64>, CalibrationError> {
    let base = PricingRequest {
        spot: quotes.spot,
        strike: quotes.spot, // replaced per quote
        expiry_minutes: spec.window_length,
        rate_annual: quotes.rate_annual,
        g_factor: g,
        minutes_per_year,
    };
    let requests: Vec<PricingRequest> =
        quotes.quotes.iter().map(|q| base.with_strike(q.strike)).collect();
    let premiums = pricing::price_ladder(returns, &requests, spec)?;
    Ok(premiums.into_iter().map(|q| q.premium).collect())
}

/// Sum of squared premium residuals at a given `g` over usable strikes.
///
/// Strikes excluded by the quote set are skipped; with `exclude_model_below`
/// set, strikes whose model premium falls under the floor are skipped too.
pub fn objective(
    g: f64,
    quotes: &MarketQuoteSet,
    returns: &ReturnSeries,
    spec: &EnsembleSpec,
    minutes_per_year: u32,
    exclude_model_below: Option<f64>,
) -> Result<f64, CalibrationError> {
    if g <= 0.0 || !g.is_finite() {
        return Err(CalibrationError::InvalidG(g));
    }
    quotes.validate(1)?;
    let model = model_ladder(g, quotes, returns, spec, minutes_per_year)?;
    let mut rss = 0.0;
    let mut used = 0usize;
    for (quote, &v) in quotes.quotes.iter().zip(&model) {
        if quote.excluded {
            continue;
        }
        if let Some(floor) = exclude_model_below {
            if v < floor {
                continue;
            }
        }
        let r = v - quote.premium;
        rss += r * r;
        used += 1;
    }
    if used == 0 {
        return Err(CalibrationError::NotEnoughQuotes(0, 1));
    }
    Ok(rss)
}

/// Fits `g` by coarse grid search then golden-section refinement.
///
/// Deterministic: the grid is walked in order and the refinement bracket is
/// fixed by the best grid point. The returned `g` has an objective no larger
/// than any grid point's.
pub fn fit_g(
    quotes: &MarketQuoteSet,
    returns: &ReturnSeries,
    spec: &EnsembleSpec,
    minutes_per_year: u32,
    options: &FitOptions,
) -> Result<CalibrationResult, CalibrationError> {
    let (lo, hi) = options.bounds;
    if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || lo >= hi {
        return Err(CalibrationError::InvalidBounds(lo, hi));
    }
    quotes.validate(2)?;

    let eval = |g: f64| -> Result<f64, CalibrationError> {
        let value = objective(g, quotes, returns, spec, minutes_per_year,
            options.exclude_model_below)?;
        if !value.is_finite() {
            return Err(CalibrationError::NonFiniteObjective(g));
        }
        Ok(value)
    };

    // coarse grid, inclusive of both ends
    let steps = ((hi - lo) / options.grid_step).round() as usize;
    let mut evaluations = 0usize;
    let mut best_idx = 0usize;
    let mut best_g = lo;
    let mut best_value = f64::INFINITY;
    for i in 0..=steps {
        let g = (lo + i as f64 * options.grid_step).min(hi);
        let value = eval(g)?;
        evaluations += 1;
        if value < best_value {
            best_value = value;
            best_g = g;
            best_idx = i;
        }
    }
    let at_boundary = best_idx == 0 || best_idx == steps;

    // golden-section refinement around the winning grid point
    let mut a = (best_g - options.grid_step).max(lo);
    let mut b = (best_g + options.grid_step).min(hi);
    let mut x1 = b - (b - a) / GOLDEN_RATIO;
    let mut x2 = a + (b - a) / GOLDEN_RATIO;
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    evaluations += 2;
    while b - a > options.refine_tolerance {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - (b - a) / GOLDEN_RATIO;
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + (b - a) / GOLDEN_RATIO;
            f2 = eval(x2)?;
        }
        evaluations += 1;
    }
    let refined = 0.5 * (a + b);
    let refined_value = eval(refined)?;
    evaluations += 1;

    let (g, rss) = if refined_value <= best_value {
        (refined, refined_value)
    } else {
        (best_g, best_value)
    };

    let model = model_ladder(g, quotes, returns, spec, minutes_per_year)?;
    let per_strike = quotes
        .quotes
        .iter()
        .zip(&model)
        .map(|(quote, &v)| {
            let auto_excluded = options
                .exclude_model_below
                .map(|floor| v < floor)
                .unwrap_or(false);
            StrikeFit {
                strike: quote.strike,
                market: quote.premium,
                model: v,
                residual: v - quote.premium,
                excluded: quote.excluded || auto_excluded,
            }
        })
        .collect();

    Ok(CalibrationResult {
        g,
        sigma_star: g * historical_volatility(returns, minutes_per_year),
        rss,
        per_strike,
        iterations: evaluations,
        at_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{generate_synthetic, SyntheticKind};
    use crate::pricing::DEFAULT_MINUTES_PER_YEAR;

    fn quote_set(spot: f64, rate: f64, quotes: &[(f64, f64)]) -> MarketQuoteSet {
        MarketQuoteSet {
            quote_date: None,
            expiry_date: None,
            spot,
            rate_annual: rate,
            quotes: quotes.iter().map(|&(e, p)| MarketQuote::new(e, p)).collect(),
        }
    }

    fn synthetic_returns(seed: u64) -> ReturnSeries {
        generate_synthetic(SyntheticKind::Gaussian, 30_600, 4.2e-4, seed).unwrap()
    }

    #[test]
    fn objective_is_zero_on_self_generated_quotes() {
        let returns = synthetic_returns(3);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let g0 = 0.85;
        let strikes = [96.0, 98.0, 100.0, 102.0, 104.0];
        let set = {
            let base = PricingRequest {
                spot: 100.0,
                strike: 100.0,
                expiry_minutes: 510,
                rate_annual: 0.045,
                g_factor: g0,
                minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
            };
            let requests: Vec<PricingRequest> =
                strikes.iter().map(|&e| base.with_strike(e)).collect();
            let premiums = pricing::price_ladder(&returns, &requests, &spec).unwrap();
            let quotes: Vec<(f64, f64)> = strikes
                .iter()
                .zip(&premiums)
                .map(|(&e, q)| (e, q.premium))
                .collect();
            quote_set(100.0, 0.045, &quotes)
        };
        let value =
            objective(g0, &set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, None).unwrap();
        assert!(value < 1e-20, "objective at the generating g is {value}");
        let other =
            objective(1.1, &set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, None).unwrap();
        assert!(other > value, "objective must discriminate g values");
    }

    #[test]
    fn objective_constant_on_zero_noise_series() {
        let returns = ReturnSeries::from_values(vec![0.0; 2_000]);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let set = quote_set(100.0, 0.0, &[(90.0, 10.0)]);
        let at = |g: f64| {
            objective(g, &set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, None).unwrap()
        };
        assert!(at(0.5).abs() < 1e-18);
        assert_eq!(at(0.5), at(2.0));
    }

    #[test]
    fn objective_rejects_bad_inputs() {
        let returns = ReturnSeries::from_values(vec![0.0; 2_000]);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let set = quote_set(100.0, 0.0, &[(90.0, 10.0)]);
        assert!(matches!(
            objective(0.0, &set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, None),
            Err(CalibrationError::InvalidG(_))
        ));
        let mut excluded = set.clone();
        excluded.quotes[0].excluded = true;
        assert!(matches!(
            objective(1.0, &excluded, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, None),
            Err(CalibrationError::NotEnoughQuotes(0, 1))
        ));
    }

    #[test]
    fn fit_recovers_generating_g() {
        let returns = synthetic_returns(5);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let g0 = 0.85;
        let strikes = [96.0, 98.0, 100.0, 102.0, 104.0];
        let base = PricingRequest {
            spot: 100.0,
            strike: 100.0,
            expiry_minutes: 510,
            rate_annual: 0.045,
            g_factor: g0,
            minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
        };
        let requests: Vec<PricingRequest> =
            strikes.iter().map(|&e| base.with_strike(e)).collect();
        let premiums = pricing::price_ladder(&returns, &requests, &spec).unwrap();
        let quotes: Vec<(f64, f64)> =
            strikes.iter().zip(&premiums).map(|(&e, q)| (e, q.premium)).collect();
        let set = quote_set(100.0, 0.045, &quotes);

        let fit = fit_g(&set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR,
            &FitOptions::default()).unwrap();
        assert!((fit.g - g0).abs() <= 0.01, "fitted g = {}", fit.g);
        assert!(!fit.at_boundary);
        assert!(fit.rss < 1e-8);
        assert_eq!(fit.per_strike.len(), strikes.len());
        for row in &fit.per_strike {
            assert!(row.residual.abs() < 1e-3);
        }
        let sigma_hist = historical_volatility(&returns, DEFAULT_MINUTES_PER_YEAR);
        assert!((fit.sigma_star - fit.g * sigma_hist).abs() < 1e-12);
    }

    #[test]
    fn fit_flags_boundary_solution() {
        // all quotes deep out of the money at premium 0 on a very quiet
        // series: every g prices them at 0, so the grid minimum is the
        // first point
        let returns = generate_synthetic(SyntheticKind::Gaussian, 4_000, 1e-7, 7).unwrap();
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let set = quote_set(100.0, 0.0, &[(150.0, 0.0), (160.0, 0.0)]);
        let fit = fit_g(&set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR,
            &FitOptions::default()).unwrap();
        assert!(fit.at_boundary, "expected a boundary flag, got g = {}", fit.g);
        assert!(fit.g <= DEFAULT_BOUNDS.0 + DEFAULT_GRID_STEP);
    }

    #[test]
    fn fit_requires_two_usable_quotes_and_valid_bounds() {
        let returns = ReturnSeries::from_values(vec![0.0; 2_000]);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let set = quote_set(100.0, 0.0, &[(90.0, 10.0)]);
        assert!(matches!(
            fit_g(&set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, &FitOptions::default()),
            Err(CalibrationError::NotEnoughQuotes(1, 2))
        ));

        let set = quote_set(100.0, 0.0, &[(90.0, 10.0), (95.0, 5.0)]);
        let bad = FitOptions { bounds: (0.0, 3.0), ..Default::default() };
        assert!(matches!(
            fit_g(&set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, &bad),
            Err(CalibrationError::InvalidBounds(..))
        ));

        let dup = quote_set(100.0, 0.0, &[(90.0, 10.0), (90.0, 9.0)]);
        assert!(matches!(
            fit_g(&dup, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, &FitOptions::default()),
            Err(CalibrationError::DuplicateStrikes)
        ));
    }

    #[test]
    fn fitted_objective_beats_every_grid_point() {
        let returns = synthetic_returns(11);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        // market quotes that no g reproduces exactly
        let set = quote_set(
            100.0,
            0.045,
            &[(96.0, 4.9), (100.0, 1.6), (104.0, 0.35)],
        );
        let options = FitOptions::default();
        let fit = fit_g(&set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, &options).unwrap();
        let steps = ((options.bounds.1 - options.bounds.0) / options.grid_step).round() as usize;
        for i in 0..=steps {
            let g = options.bounds.0 + i as f64 * options.grid_step;
            let value = objective(g, &set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, None)
                .unwrap();
            assert!(
                fit.rss <= value + 1e-15,
                "grid point g = {g} beats the fit: {value} < {}",
                fit.rss
            );
        }
    }

    #[test]
    fn scale_invariance_of_objective() {
        let returns = synthetic_returns(13);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let set = quote_set(100.0, 0.045, &[(98.0, 2.4), (102.0, 0.7)]);
        let c = 2.5;
        let scaled = ReturnSeries {
            values: returns.values.iter().map(|v| v * c).collect(),
            ..returns.clone()
        };
        let a = objective(0.9, &set, &returns, &spec, DEFAULT_MINUTES_PER_YEAR, None).unwrap();
        let b =
            objective(0.9 / c, &set, &scaled, &spec, DEFAULT_MINUTES_PER_YEAR, None).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{a} vs {b}");
    }
}
