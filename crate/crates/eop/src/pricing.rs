//! European call premiums by empirical averaging over a sliding-window
//! ensemble of detrended log-returns.
//!
//! A window of `N` per-minute increments stands in for one possible option
//! lifetime of `T = N` minutes. Each increment is rescaled by the `g`-factor,
//! the terminal price includes the quadratic volatility correction, and the
//! premium is the discounted average of the call payoff across all windows.

use chrono::{Datelike, NaiveDate, Weekday};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::marketdata::ReturnSeries;
use crate::numeric;

/// Trading minutes per year: 510 minutes across 252 trading days.
pub const DEFAULT_MINUTES_PER_YEAR: u32 = 128_520;
/// Window translation step (one trading hour).
pub const DEFAULT_ENSEMBLE_STRIDE: usize = 60;

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("window length must be >= 1")]
    ZeroWindow,
    #[error("stride must be >= 1")]
    ZeroStride,
    #[error("series of {have} samples cannot host a {need}-sample window")]
    SeriesTooShort { have: usize, need: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("ladder requests must share spot, expiry, rate, g and time convention")]
    MixedLadder,
    #[error("ladder is empty")]
    EmptyLadder,
    #[error("expiry date {expiry} is not after quote date {quote}")]
    ExpiryNotAfterQuote { quote: NaiveDate, expiry: NaiveDate },
    #[error("no trading days between {quote} and {expiry}")]
    NoTradingDays { quote: NaiveDate, expiry: NaiveDate },
}

/// Sliding-window ensemble layout: window length `N` samples (the expiry in
/// minutes) translated by `stride` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnsembleSpec {
    pub window_length: usize,
    pub stride: usize,
}

impl EnsembleSpec {
    pub fn new(window_length: usize, stride: usize) -> Result<Self, PricingError> {
        if window_length == 0 {
            return Err(PricingError::ZeroWindow);
        }
        if stride == 0 {
            return Err(PricingError::ZeroStride);
        }
        Ok(Self { window_length, stride })
    }

    fn validate(&self) -> Result<(), PricingError> {
        if self.window_length == 0 {
            return Err(PricingError::ZeroWindow);
        }
        if self.stride == 0 {
            return Err(PricingError::ZeroStride);
        }
        Ok(())
    }

    /// Number of windows fitting a series of `len` samples.
    pub fn window_count(&self, len: usize) -> usize {
        if len < self.window_length {
            0
        } else {
            (len - self.window_length) / self.stride + 1
        }
    }
}

/// Everything needed to price one strike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricingRequest {
    /// Spot price of the index.
    pub spot: f64,
    /// Strike price.
    pub strike: f64,
    /// Option lifetime in trading minutes (equals the window length).
    pub expiry_minutes: usize,
    /// Annualized risk-free rate, e.g. 0.045.
    pub rate_annual: f64,
    /// Volatility rescaling factor applied to every increment.
    pub g_factor: f64,
    /// Trading minutes per year used to convert `expiry_minutes` to years.
    pub minutes_per_year: u32,
}

impl PricingRequest {
    pub fn validate(&self) -> Result<(), PricingError> {
        if self.spot <= 0.0 || !self.spot.is_finite() {
            return Err(PricingError::InvalidRequest(format!("spot {}", self.spot)));
        }
        if self.strike <= 0.0 || !self.strike.is_finite() {
            return Err(PricingError::InvalidRequest(format!("strike {}", self.strike)));
        }
        if self.expiry_minutes == 0 {
            return Err(PricingError::InvalidRequest("expiry of 0 minutes".into()));
        }
        if self.g_factor <= 0.0 || !self.g_factor.is_finite() {
            return Err(PricingError::InvalidRequest(format!("g {}", self.g_factor)));
        }
        if self.minutes_per_year == 0 {
            return Err(PricingError::InvalidRequest("minutes_per_year of 0".into()));
        }
        if !self.rate_annual.is_finite() {
            return Err(PricingError::InvalidRequest(format!("rate {}", self.rate_annual)));
        }
        Ok(())
    }

    /// `r * T` with `T` converted from minutes to years.
    pub fn rate_time(&self) -> f64 {
        self.rate_annual * self.expiry_minutes as f64 / self.minutes_per_year as f64
    }

    pub fn discount_factor(&self) -> f64 {
        (-self.rate_time()).exp()
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        Self { strike, ..*self }
    }
}

/// One priced strike with its ensemble statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PremiumQuote {
    /// Discounted average call payoff.
    pub premium: f64,
    /// Number of windows averaged.
    pub sample_count: usize,
    /// Dispersion (population standard deviation) of the discounted payoff
    /// across windows.
    pub payoff_stddev: f64,
    /// Fraction of windows finishing in the money.
    pub exercised_fraction: f64,
}

/// The windows `{v[m*stride] .. v[m*stride + N - 1]}` in translation order.
pub fn build_ensemble<'a>(
    returns: &'a ReturnSeries,
    spec: &EnsembleSpec,
) -> Result<Vec<&'a [f64]>, PricingError> {
    spec.validate()?;
    let len = returns.values.len();
    if len < spec.window_length {
        return Err(PricingError::SeriesTooShort { have: len, need: spec.window_length });
    }
    let count = spec.window_count(len);
    let mut windows = Vec::with_capacity(count);
    for m in 0..count {
        let start = m * spec.stride;
        windows.push(&returns.values[start..start + spec.window_length]);
    }
    Ok(windows)
}

/// Rescales increments by the `g`-factor: `x_n = g * y_n`.
pub fn scale_window(window: &[f64], g: f64) -> Vec<f64> {
    window.iter().map(|v| g * v).collect()
}

/// Terminal price of one already-scaled window:
/// `S * exp(rT + sum(x_n - x_n^2 / 2))`.
pub fn terminal_price(window: &[f64], request: &PricingRequest) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in window {
        let e = x - 0.5 * x * x;
        let t = sum + e;
        if sum.abs() >= e.abs() {
            comp += (sum - t) + e;
        } else {
            comp += (e - t) + sum;
        }
        sum = t;
    }
    request.spot * (request.rate_time() + sum + comp).exp()
}

/// Log-growth exponent of every window via one compensated prefix-sum pass:
/// windows at stride `s` read `p[m s + N] - p[m s]` where `p` accumulates
/// `g v - (g v)^2 / 2`. Same per-element arithmetic as [`scale_window`] +
/// [`terminal_price`]; only the summation grouping differs (within
/// floating-point reordering error).
fn window_log_growth(values: &[f64], spec: &EnsembleSpec, g: f64) -> Vec<f64> {
    let count = spec.window_count(values.len());
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let x = g * v;
        let e = x - 0.5 * x * x;
        let t = sum + e;
        if sum.abs() >= e.abs() {
            comp += (sum - t) + e;
        } else {
            comp += (e - t) + sum;
        }
        sum = t;
        prefix.push(sum + comp);
    }
    (0..count)
        .map(|m| {
            let start = m * spec.stride;
            prefix[start + spec.window_length] - prefix[start]
        })
        .collect()
}

pub(crate) fn ladder_on_values(
    values: &[f64],
    requests: &[PricingRequest],
    spec: &EnsembleSpec,
) -> Result<Vec<PremiumQuote>, PricingError> {
    let base = requests.first().ok_or(PricingError::EmptyLadder)?;
    base.validate()?;
    for req in requests {
        req.validate()?;
        let shared = req.spot == base.spot
            && req.expiry_minutes == base.expiry_minutes
            && req.rate_annual == base.rate_annual
            && req.g_factor == base.g_factor
            && req.minutes_per_year == base.minutes_per_year;
        if !shared {
            return Err(PricingError::MixedLadder);
        }
    }
    let mut spec = *spec;
    spec.window_length = base.expiry_minutes;
    spec.validate()?;
    if values.len() < spec.window_length {
        return Err(PricingError::SeriesTooShort {
            have: values.len(),
            need: spec.window_length,
        });
    }

    let growth = window_log_growth(values, &spec, base.g_factor);
    let rt = base.rate_time();
    let spot = base.spot;
    let terminals: Vec<f64> = growth.par_iter().map(|&d| spot * (rt + d).exp()).collect();
    let discount = base.discount_factor();

    let quotes = requests
        .iter()
        .map(|req| {
            let payoffs: Vec<f64> =
                terminals.iter().map(|&s| (s - req.strike).max(0.0) * discount).collect();
            let exercised =
                terminals.iter().filter(|&&s| s > req.strike).count() as f64
                    / terminals.len() as f64;
            PremiumQuote {
                premium: numeric::mean(&payoffs),
                sample_count: payoffs.len(),
                payoff_stddev: numeric::std_dev(&payoffs),
                exercised_fraction: exercised,
            }
        })
        .collect();
    Ok(quotes)
}

/// Prices one strike: `V = e^{-rT} * <max(S(T) - E, 0)>` over the ensemble.
///
/// The window length is taken from `request.expiry_minutes`; `spec` supplies
/// the stride. Deterministic for fixed inputs regardless of thread count.
pub fn price_call(
    returns: &ReturnSeries,
    request: &PricingRequest,
    spec: &EnsembleSpec,
) -> Result<PremiumQuote, PricingError> {
    let quotes = ladder_on_values(&returns.values, std::slice::from_ref(request), spec)?;
    Ok(quotes[0])
}

/// Prices a strike ladder, computing terminal prices once and reusing them
/// across strikes. All requests must share everything but the strike.
pub fn price_ladder(
    returns: &ReturnSeries,
    requests: &[PricingRequest],
    spec: &EnsembleSpec,
) -> Result<Vec<PremiumQuote>, PricingError> {
    ladder_on_values(&returns.values, requests, spec)
}

/// Trading minutes between two dates: weekdays strictly after `quote_date`
/// up to and including `expiry_date`, skipping `holidays`, times
/// `minutes_per_day`.
pub fn trading_minutes_between(
    quote_date: NaiveDate,
    expiry_date: NaiveDate,
    minutes_per_day: u32,
    holidays: &[NaiveDate],
) -> Result<usize, PricingError> {
    if expiry_date <= quote_date {
        return Err(PricingError::ExpiryNotAfterQuote {
            quote: quote_date,
            expiry: expiry_date,
        });
    }
    let mut days = 0usize;
    let mut d = quote_date;
    while d < expiry_date {
        d = d.succ_opt().expect("date overflow");
        let weekday = d.weekday();
        if weekday != Weekday::Sat && weekday != Weekday::Sun && !holidays.contains(&d) {
            days += 1;
        }
    }
    if days == 0 {
        return Err(PricingError::NoTradingDays { quote: quote_date, expiry: expiry_date });
    }
    Ok(days * minutes_per_day as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn request(spot: f64, strike: f64, expiry: usize, rate: f64, g: f64) -> PricingRequest {
        PricingRequest {
            spot,
            strike,
            expiry_minutes: expiry,
            rate_annual: rate,
            g_factor: g,
            minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
        }
    }

    fn gaussian_series(len: usize, sigma: f64, seed: u64) -> ReturnSeries {
        let mut rng = StdRng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        ReturnSeries::from_values((0..len).map(|_| normal.sample(&mut rng)).collect())
    }

    #[test]
    fn ensemble_enumeration() {
        let series = ReturnSeries::from_values((0..10).map(|i| i as f64 * 1e-4).collect());
        let spec = EnsembleSpec::new(4, 2).unwrap();
        let windows = build_ensemble(&series, &spec).unwrap();
        assert_eq!(windows.len(), 4); // starts 0, 2, 4, 6
        for (m, w) in windows.iter().enumerate() {
            assert_eq!(w.len(), 4);
            assert_eq!(w[0], series.values[m * 2]);
        }
    }

    #[test]
    fn ensemble_single_window_when_window_is_series() {
        let series = ReturnSeries::from_values(vec![1e-4; 128]);
        let spec = EnsembleSpec::new(128, 17).unwrap();
        let windows = build_ensemble(&series, &spec).unwrap();
        assert_eq!(windows.len(), 1);
    }

    #[test]
    fn ensemble_count_matches_production_scale() {
        let spec = EnsembleSpec::new(4590, 60).unwrap();
        assert_eq!(spec.window_count(241_664), (241_664 - 4590) / 60 + 1);
        assert_eq!(spec.window_count(241_664), 3952);
    }

    #[test]
    fn ensemble_too_short_errors() {
        let series = ReturnSeries::from_values(vec![0.0; 10]);
        let spec = EnsembleSpec::new(11, 1).unwrap();
        assert!(matches!(
            build_ensemble(&series, &spec),
            Err(PricingError::SeriesTooShort { have: 10, need: 11 })
        ));
    }

    #[test]
    fn terminal_price_zero_window_is_forward() {
        let req = request(100.0, 90.0, 510, 0.0, 1.0);
        let window = vec![0.0; 510];
        assert_eq!(terminal_price(&window, &req), 100.0);

        let req = request(100.0, 90.0, 510, 0.045, 1.0);
        let expect = 100.0 * (0.045f64 * 510.0 / 128_520.0).exp();
        assert!((terminal_price(&window, &req) - expect).abs() < 1e-12);
    }

    #[test]
    fn terminal_price_single_increment() {
        let req = request(100.0, 100.0, 1, 0.0, 1.0);
        let got = terminal_price(&[0.01], &req);
        let expect = 100.0 * (0.01f64 - 0.5 * 0.0001).exp();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn terminal_price_symmetric_window_penalized_by_variance() {
        let req = request(100.0, 100.0, 2, 0.0, 1.0);
        for x in [0.01, 0.05, 0.2] {
            let got = terminal_price(&[x, -x], &req);
            let expect = 100.0 * (-x * x).exp();
            assert!((got - expect).abs() < 1e-10);
            assert!(got < 100.0);
        }
        assert_eq!(terminal_price(&[0.0, 0.0], &req), 100.0);
    }

    #[test]
    fn scale_window_basics() {
        let w = [1.0, -2.0, 0.5];
        assert_eq!(scale_window(&w, 1.0), w.to_vec());
        let scaled = scale_window(&w, 0.81);
        assert!((scaled[1] + 1.62).abs() < 1e-15);
        // variance scales as g^2
        let unit: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let scaled = scale_window(&unit, 0.81);
        let var = numeric::variance(&scaled);
        assert!((var - 0.6561).abs() < 1e-12);
    }

    #[test]
    fn putative_volatility_from_g_scaling() {
        // historical sigma 8.0% annualized, g = 0.81 -> sigma* ~ 6.5%
        let per_minute = 0.08 / (DEFAULT_MINUTES_PER_YEAR as f64).sqrt();
        let series = ReturnSeries::from_values(
            (0..100_000)
                .map(|i| if i % 2 == 0 { per_minute } else { -per_minute })
                .collect(),
        );
        let sigma_hist =
            series.per_minute_volatility() * (DEFAULT_MINUTES_PER_YEAR as f64).sqrt();
        let sigma_star = 0.81 * sigma_hist;
        assert!((sigma_hist - 0.08).abs() < 1e-6);
        assert!((sigma_star - 0.0648).abs() < 1e-6);
    }

    #[test]
    fn price_call_zero_series_intrinsic_value() {
        let series = ReturnSeries::from_values(vec![0.0; 2000]);
        let spec = EnsembleSpec::new(510, 60).unwrap();

        let itm = request(100.0, 90.0, 510, 0.0, 1.0);
        let quote = price_call(&series, &itm, &spec).unwrap();
        assert!((quote.premium - 10.0).abs() < 1e-12);
        assert_eq!(quote.exercised_fraction, 1.0);
        assert_eq!(quote.payoff_stddev, 0.0);

        let otm = request(100.0, 110.0, 510, 0.0, 1.0);
        let quote = price_call(&series, &otm, &spec).unwrap();
        assert_eq!(quote.premium, 0.0);
        assert_eq!(quote.exercised_fraction, 0.0);
    }

    #[test]
    fn price_call_matches_explicit_window_composition() {
        let series = gaussian_series(4000, 4e-4, 31);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let req = request(100.0, 100.5, 510, 0.03, 0.9);

        let quote = price_call(&series, &req, &spec).unwrap();

        // direct composition: ensemble -> scale -> terminal -> discounted mean
        let windows = build_ensemble(&series, &spec).unwrap();
        let discount = req.discount_factor();
        let payoffs: Vec<f64> = windows
            .iter()
            .map(|w| {
                let scaled = scale_window(w, req.g_factor);
                (terminal_price(&scaled, &req) - req.strike).max(0.0) * discount
            })
            .collect();
        let direct = numeric::mean(&payoffs);
        assert_eq!(quote.sample_count, payoffs.len());
        assert!(
            (quote.premium - direct).abs() <= 1e-12 * direct.max(1.0),
            "prefix {} vs direct {}",
            quote.premium,
            direct
        );
    }

    #[test]
    fn ladder_zero_noise_and_monotonicity() {
        let series = ReturnSeries::from_values(vec![0.0; 1000]);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let base = request(100.0, 100.0, 510, 0.0, 1.0);
        let requests: Vec<PricingRequest> =
            [90.0, 100.0, 110.0].iter().map(|&e| base.with_strike(e)).collect();
        let quotes = price_ladder(&series, &requests, &spec).unwrap();
        assert!((quotes[0].premium - 10.0).abs() < 1e-12);
        assert_eq!(quotes[1].premium, 0.0);
        assert_eq!(quotes[2].premium, 0.0);
    }

    #[test]
    fn ladder_rejects_mixed_requests() {
        let series = ReturnSeries::from_values(vec![0.0; 1000]);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let a = request(100.0, 90.0, 510, 0.0, 1.0);
        let mut b = request(100.0, 100.0, 510, 0.0, 1.0);
        b.spot = 101.0;
        assert!(matches!(
            price_ladder(&series, &[a, b], &spec),
            Err(PricingError::MixedLadder)
        ));
    }

    #[test]
    fn ladder_call_spread_bound_and_premium_bounds() {
        let series = gaussian_series(20_000, 5e-4, 33);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let base = request(100.0, 100.0, 510, 0.045, 1.0);
        let strikes: Vec<f64> = (0..9).map(|i| 92.0 + 2.0 * i as f64).collect();
        let requests: Vec<PricingRequest> =
            strikes.iter().map(|&e| base.with_strike(e)).collect();
        let quotes = price_ladder(&series, &requests, &spec).unwrap();

        let discount = base.discount_factor();
        for pair in quotes.windows(2) {
            let diff = pair[0].premium - pair[1].premium;
            assert!(diff >= -1e-12, "premium increased with strike");
            assert!(diff <= discount * 2.0 + 1e-12, "call spread arbitrage bound violated");
        }

        // V >= e^{-rT} max(0, <S(T)> - E) and V <= e^{-rT} <S(T)>
        let growth = window_log_growth(&series.values, &spec, 1.0);
        let terminals: Vec<f64> =
            growth.iter().map(|&d| base.spot * (base.rate_time() + d).exp()).collect();
        let mean_terminal = numeric::mean(&terminals);
        for (quote, &strike) in quotes.iter().zip(&strikes) {
            let lower = discount * (mean_terminal - strike).max(0.0);
            let upper = discount * mean_terminal;
            assert!(quote.premium >= lower - 1e-9, "Jensen lower bound violated");
            assert!(quote.premium <= upper + 1e-9, "mean-terminal upper bound violated");
        }
    }

    #[test]
    fn premium_nondecreasing_in_g_at_the_money() {
        let series = gaussian_series(20_000, 5e-4, 37);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let mut last = f64::NEG_INFINITY;
        for g in [0.5, 0.75, 1.0, 1.5, 2.0] {
            let req = request(100.0, 100.0, 510, 0.0, g);
            let quote = price_call(&series, &req, &spec).unwrap();
            assert!(
                quote.premium >= last - 1e-12,
                "premium fell as g rose: {last} -> {}",
                quote.premium
            );
            last = quote.premium;
        }
    }

    #[test]
    fn scale_invariance_of_g_series_product() {
        // multiplying the series by c and dividing g by c leaves premiums unchanged
        let series = gaussian_series(8_000, 5e-4, 39);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let c = 3.7;
        let scaled = ReturnSeries {
            values: series.values.iter().map(|v| v * c).collect(),
            ..series.clone()
        };
        let req_a = request(100.0, 101.0, 510, 0.045, 0.9);
        let mut req_b = req_a;
        req_b.g_factor = 0.9 / c;
        let a = price_call(&series, &req_a, &spec).unwrap().premium;
        let b = price_call(&scaled, &req_b, &spec).unwrap().premium;
        assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let series = gaussian_series(30_000, 5e-4, 41);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let req = request(100.0, 100.0, 510, 0.045, 1.0);
        let baseline = price_call(&series, &req, &spec).unwrap();
        for threads in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let quote = pool.install(|| price_call(&series, &req, &spec).unwrap());
            assert_eq!(quote.premium.to_bits(), baseline.premium.to_bits());
            assert_eq!(quote.payoff_stddev.to_bits(), baseline.payoff_stddev.to_bits());
        }
    }

    #[test]
    fn trading_calendar_weekday_arithmetic() {
        let quote = NaiveDate::from_ymd_opt(2005, 12, 2).unwrap();
        let expiry = NaiveDate::from_ymd_opt(2005, 12, 16).unwrap();
        // ten trading days between the two Fridays
        assert_eq!(trading_minutes_between(quote, expiry, 510, &[]).unwrap(), 5100);

        let holiday = NaiveDate::from_ymd_opt(2005, 12, 9).unwrap();
        assert_eq!(trading_minutes_between(quote, expiry, 510, &[holiday]).unwrap(), 4590);

        assert!(matches!(
            trading_minutes_between(expiry, quote, 510, &[]),
            Err(PricingError::ExpiryNotAfterQuote { .. })
        ));
        let saturday = NaiveDate::from_ymd_opt(2005, 12, 3).unwrap();
        let sunday = NaiveDate::from_ymd_opt(2005, 12, 4).unwrap();
        assert!(matches!(
            trading_minutes_between(saturday, sunday, 510, &[]),
            Err(PricingError::NoTradingDays { .. })
        ));
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let series = ReturnSeries::from_values(vec![0.0; 600]);
        let spec = EnsembleSpec::new(510, 60).unwrap();
        for bad in [
            request(-1.0, 90.0, 510, 0.0, 1.0),
            request(100.0, 0.0, 510, 0.0, 1.0),
            request(100.0, 90.0, 0, 0.0, 1.0),
            request(100.0, 90.0, 510, 0.0, 0.0),
            request(100.0, 90.0, 510, f64::NAN, 1.0),
        ] {
            assert!(price_call(&series, &bad, &spec).is_err(), "accepted {bad:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_premium_nonincreasing_in_strike(seed in 0u64..200) {
            let series = gaussian_series(3_000, 5e-4, seed);
            let spec = EnsembleSpec::new(255, 60).unwrap();
            let base = request(100.0, 100.0, 255, 0.02, 1.0);
            let requests: Vec<PricingRequest> =
                (0..8).map(|i| base.with_strike(94.0 + 2.0 * i as f64)).collect();
            let quotes = price_ladder(&series, &requests, &spec).unwrap();
            for pair in quotes.windows(2) {
                prop_assert!(pair[0].premium >= pair[1].premium - 1e-12);
            }
        }

        #[test]
        fn prop_premium_nondecreasing_in_spot(seed in 0u64..200) {
            let series = gaussian_series(3_000, 5e-4, seed);
            let spec = EnsembleSpec::new(255, 60).unwrap();
            let mut last = f64::NEG_INFINITY;
            for spot in [95.0, 100.0, 105.0] {
                let req = request(spot, 100.0, 255, 0.02, 1.0);
                let quote = price_call(&series, &req, &spec).unwrap();
                prop_assert!(quote.premium >= last - 1e-12);
                last = quote.premium;
            }
        }
    }
}
