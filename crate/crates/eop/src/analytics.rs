//! Distribution diagnostics and reference values: horizon-aggregated
//! log-return histograms, a closed-form Black-Scholes call for the gaussian
//! limit, synthetic series generators for testing, and the
//! original-vs-filtered premium comparison.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::Serialize;
use thiserror::Error;

use crate::marketdata::ReturnSeries;
use crate::numeric;
use crate::pricing::{self, EnsembleSpec, PricingError, PricingRequest};

/// Default bin count for horizon histograms.
pub const DEFAULT_HISTOGRAM_BINS: usize = 61;
/// Default window translation for histogram aggregation (one trading hour).
pub const DEFAULT_HISTOGRAM_STRIDE: usize = 60;
/// Premiums below this floor (index points) are compared in absolute terms;
/// `ComparisonRow::rel_diff` divides by `max(premium_original, floor)`.
pub const REL_DIFF_FLOOR: f64 = 0.5;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("series of {have} samples is shorter than horizon {need}")]
    SeriesTooShort { have: usize, need: usize },
    #[error("horizon must be >= 1")]
    ZeroHorizon,
    #[error("stride must be >= 1")]
    ZeroStride,
    #[error("need at least 1 bin")]
    ZeroBins,
    #[error("histogram range is empty or not finite")]
    BadRange,
    #[error("histograms have different bin edges")]
    EdgeMismatch,
    #[error("synthetic length must be >= 1")]
    ZeroLength,
    #[error("per-minute sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("student-t degrees of freedom must exceed 2, got {0}")]
    InvalidDof(f64),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

/// Histogram of horizon-aggregated log-returns `sum of T consecutive
/// increments`, windowed at a fixed stride.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonHistogram {
    pub horizon_minutes: usize,
    /// `bins + 1` strictly increasing edges.
    pub bin_edges: Vec<f64>,
    /// Occupancy per bin; sums outside the range land in the edge bins so
    /// that mass is conserved.
    pub counts: Vec<u64>,
    pub sample_count: usize,
    pub mean: f64,
    pub stddev: f64,
    pub excess_kurtosis: f64,
}

impl HorizonHistogram {
    /// Sum of window values per bin, as densities (counts / sample_count).
    pub fn densities(&self) -> Vec<f64> {
        let n = self.sample_count.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Aggregates `horizon`-minute sums at the given stride and bins them.
///
/// Bin edges span `mean +- 6 stddev` of the sums with equal widths; a
/// degenerate (zero-variance) set of sums falls back to a unit-wide range so
/// everything lands in the central bin.
pub fn horizon_histogram(
    returns: &ReturnSeries,
    horizon: usize,
    stride: usize,
    bins: usize,
) -> Result<HorizonHistogram, AnalyticsError> {
    let sums = horizon_sums(returns, horizon, stride)?;
    let mean = numeric::mean(&sums);
    let stddev = numeric::std_dev(&sums);
    let range = if stddev > 0.0 {
        (mean - 6.0 * stddev, mean + 6.0 * stddev)
    } else {
        (mean - 0.5, mean + 0.5)
    };
    histogram_from_sums(&sums, horizon, bins, range)
}

/// Same aggregation with caller-supplied bin range, for comparing two series
/// on identical bins.
pub fn horizon_histogram_in_range(
    returns: &ReturnSeries,
    horizon: usize,
    stride: usize,
    bins: usize,
    range: (f64, f64),
) -> Result<HorizonHistogram, AnalyticsError> {
    let sums = horizon_sums(returns, horizon, stride)?;
    histogram_from_sums(&sums, horizon, bins, range)
}

/// The horizon-aggregated sums themselves, exposed for tests and reports.
pub fn horizon_sums(
    returns: &ReturnSeries,
    horizon: usize,
    stride: usize,
) -> Result<Vec<f64>, AnalyticsError> {
    if horizon == 0 {
        return Err(AnalyticsError::ZeroHorizon);
    }
    if stride == 0 {
        return Err(AnalyticsError::ZeroStride);
    }
    let len = returns.values.len();
    if len < horizon {
        return Err(AnalyticsError::SeriesTooShort { have: len, need: horizon });
    }
    let prefix = numeric::compensated_prefix_sums(&returns.values);
    let count = (len - horizon) / stride + 1;
    Ok((0..count)
        .map(|m| {
            let start = m * stride;
            prefix[start + horizon] - prefix[start]
        })
        .collect())
}

fn histogram_from_sums(
    sums: &[f64],
    horizon: usize,
    bins: usize,
    range: (f64, f64),
) -> Result<HorizonHistogram, AnalyticsError> {
    if bins == 0 {
        return Err(AnalyticsError::ZeroBins);
    }
    let (lo, hi) = range;
    if lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(AnalyticsError::BadRange);
    }
    let width = (hi - lo) / bins as f64;
    let mut bin_edges = Vec::with_capacity(bins + 1);
    for i in 0..bins {
        bin_edges.push(lo + i as f64 * width);
    }
    bin_edges.push(hi);

    let mut counts = vec![0u64; bins];
    for &s in sums {
        let raw = ((s - lo) / width).floor();
        let idx = if raw.is_nan() { 0 } else { (raw as i64).clamp(0, bins as i64 - 1) };
        counts[idx as usize] += 1;
    }
    Ok(HorizonHistogram {
        horizon_minutes: horizon,
        bin_edges,
        counts,
        sample_count: sums.len(),
        mean: numeric::mean(sums),
        stddev: numeric::std_dev(sums),
        excess_kurtosis: numeric::excess_kurtosis(sums),
    })
}

/// L1 distance between two histograms' densities. The histograms must share
/// bin edges.
pub fn histogram_l1_distance(
    a: &HorizonHistogram,
    b: &HorizonHistogram,
) -> Result<f64, AnalyticsError> {
    if a.bin_edges != b.bin_edges {
        return Err(AnalyticsError::EdgeMismatch);
    }
    let da = a.densities();
    let db = b.densities();
    Ok(da.iter().zip(&db).map(|(x, y)| (x - y).abs()).sum())
}

/// Closed-form Black-Scholes European call with the crate's time convention
/// (`expiry_minutes / minutes_per_year` years).
pub fn black_scholes_call(
    spot: f64,
    strike: f64,
    expiry_minutes: usize,
    rate_annual: f64,
    sigma_annual: f64,
    minutes_per_year: u32,
) -> f64 {
    let t = expiry_minutes as f64 / minutes_per_year as f64;
    let discounted_strike = strike * (-rate_annual * t).exp();
    if t <= 0.0 || sigma_annual <= 0.0 {
        return (spot - discounted_strike).max(0.0);
    }
    let vol = sigma_annual * t.sqrt();
    let d1 = ((spot / strike).ln() + (rate_annual + 0.5 * sigma_annual * sigma_annual) * t) / vol;
    let d2 = d1 - vol;
    spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2)
}

/// Standard normal CDF via `erfc`, accurate to ~1e-15.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function: Maclaurin series below 1.5, Laplace
/// continued fraction (modified Lentz) above.
fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 1.5 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum (-1)^n x^{2n+1} / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let contrib = term / (2 * n + 1) as f64;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // sqrt(pi) e^{x^2} erfc(x) = 1 / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f: f64 = x;
    let mut c: f64 = x;
    let mut d: f64 = 0.0;
    for n in 1..300 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Distribution family for synthetic per-minute returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    Gaussian,
    /// Student-t with the given degrees of freedom, rescaled to unit variance
    /// before the sigma scaling (requires `dof > 2`).
    StudentT { dof: f64 },
}

/// I.i.d. zero-mean synthetic returns with per-minute standard deviation
/// `per_minute_sigma`, deterministic per seed. The sample mean is removed
/// exactly, as for every other return series in the pipeline.
pub fn generate_synthetic(
    kind: SyntheticKind,
    length: usize,
    per_minute_sigma: f64,
    seed: u64,
) -> Result<ReturnSeries, AnalyticsError> {
    if length == 0 {
        return Err(AnalyticsError::ZeroLength);
    }
    if per_minute_sigma <= 0.0 || !per_minute_sigma.is_finite() {
        return Err(AnalyticsError::InvalidSigma(per_minute_sigma));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let values: Vec<f64> = match kind {
        SyntheticKind::Gaussian => {
            let normal = Normal::new(0.0, per_minute_sigma)
                .map_err(|_| AnalyticsError::InvalidSigma(per_minute_sigma))?;
            (0..length).map(|_| normal.sample(&mut rng)).collect()
        }
        SyntheticKind::StudentT { dof } => {
            if dof <= 2.0 || !dof.is_finite() {
                return Err(AnalyticsError::InvalidDof(dof));
            }
            let t = StudentT::new(dof).map_err(|_| AnalyticsError::InvalidDof(dof))?;
            // variance of student-t is dof / (dof - 2)
            let unit_scale = (dof / (dof - 2.0)).sqrt();
            (0..length)
                .map(|_| t.sample(&mut rng) / unit_scale * per_minute_sigma)
                .collect()
        }
    };
    Ok(ReturnSeries::from_values(values))
}

/// One strike of the original-vs-filtered premium comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub strike: f64,
    pub premium_original: f64,
    pub premium_filtered: f64,
    /// Market premium for the strike, when supplied.
    pub market: Option<f64>,
    /// `|premium_original - premium_filtered|`.
    pub abs_diff: f64,
    /// `abs_diff / max(premium_original, 0.5)`; the floor keeps deep
    /// out-of-the-money rows meaningful.
    pub rel_diff: f64,
}

/// Prices the same ladder on two series with identical parameters.
///
/// When the filtered series is shorter (a filtering remainder was dropped),
/// the original is truncated to the same length so both ensembles hold the
/// same windows.
pub fn compare_premiums(
    original: &ReturnSeries,
    filtered: &ReturnSeries,
    base: &PricingRequest,
    strikes: &[f64],
    spec: &EnsembleSpec,
    market: Option<&[f64]>,
) -> Result<Vec<ComparisonRow>, AnalyticsError> {
    let requests: Vec<PricingRequest> =
        strikes.iter().map(|&e| base.with_strike(e)).collect();
    let len = original.values.len().min(filtered.values.len());
    let quotes_orig =
        pricing::ladder_on_values(&original.values[..len], &requests, spec)?;
    let quotes_filt =
        pricing::ladder_on_values(&filtered.values[..len], &requests, spec)?;

    Ok(strikes
        .iter()
        .enumerate()
        .map(|(i, &strike)| {
            let op = quotes_orig[i].premium;
            let fp = quotes_filt[i].premium;
            let abs_diff = (op - fp).abs();
            ComparisonRow {
                strike,
                premium_original: op,
                premium_filtered: fp,
                market: market.and_then(|m| m.get(i).copied()),
                abs_diff,
                rel_diff: abs_diff / op.max(REL_DIFF_FLOOR),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::DEFAULT_MINUTES_PER_YEAR;
    use crate::wavelet::{filter_series, FilterSpec};

    /// Integral of the standard normal density over [0, x] by composite
    /// Simpson; independent oracle for the closed-form CDF.
    fn phi_quadrature(x: f64) -> f64 {
        let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let n = 20_000usize; // even
        let h = x / n as f64;
        let mut acc = density(0.0) + density(x);
        for i in 1..n {
            let w = if i % 2 == 0 { 2.0 } else { 4.0 };
            acc += w * density(i as f64 * h);
        }
        0.5 + acc * h / 3.0
    }

    #[test]
    fn norm_cdf_matches_quadrature() {
        let mut worst = 0.0f64;
        let mut x = -8.0;
        while x <= 8.0 {
            let got = norm_cdf(x);
            let want = phi_quadrature(x);
            worst = worst.max((got - want).abs());
            x += 0.25;
        }
        assert!(worst < 1e-13, "max |cdf error| = {worst}");
        assert_eq!(norm_cdf(0.0), 0.5);
    }

    #[test]
    fn black_scholes_atm_one_year() {
        // S = E = 100, r = 0, sigma = 20%, T = 1 year: 100 (2 Phi(0.1) - 1)
        let oracle = 100.0 * (2.0 * phi_quadrature(0.1) - 1.0);
        let got = black_scholes_call(100.0, 100.0, 128_520, 0.0, 0.2, 128_520);
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
        assert!((got - 7.96557).abs() < 1e-4);
    }

    #[test]
    fn black_scholes_zero_vol_is_intrinsic() {
        let got = black_scholes_call(100.0, 90.0, 128_520, 0.0, 0.0, 128_520);
        assert_eq!(got, 10.0);
        // vanishing-but-positive sigma converges to the same value
        let near = black_scholes_call(100.0, 90.0, 128_520, 0.0, 1e-9, 128_520);
        assert!((near - 10.0).abs() < 1e-9);
    }

    #[test]
    fn black_scholes_vega_positive_and_parity_bounds() {
        let mut last = 0.0;
        for sigma in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let v = black_scholes_call(100.0, 100.0, 64_260, 0.03, sigma, 128_520);
            assert!(v > last, "vega must be positive");
            last = v;

            let t: f64 = 64_260.0 / 128_520.0;
            let lower = 100.0 - 100.0 * (-0.03 * t).exp();
            assert!(v >= lower && v <= 100.0, "parity bounds violated at sigma {sigma}");
        }
    }

    #[test]
    fn synthetic_gaussian_moments_and_determinism() {
        let a = generate_synthetic(SyntheticKind::Gaussian, 1_000_000, 1e-4, 5).unwrap();
        let b = generate_synthetic(SyntheticKind::Gaussian, 1_000_000, 1e-4, 5).unwrap();
        assert_eq!(a.values, b.values);
        let sd = numeric::std_dev(&a.values);
        assert!((sd - 1e-4).abs() / 1e-4 < 0.005, "stddev {sd}");
        let sigma = numeric::std_dev(&a.values);
        assert!(numeric::mean(&a.values).abs() <= 1e-12 * sigma);
    }

    #[test]
    fn synthetic_student_t_is_heavy_tailed() {
        let series =
            generate_synthetic(SyntheticKind::StudentT { dof: 4.0 }, 1_000_000, 1e-4, 9)
                .unwrap();
        let sd = numeric::std_dev(&series.values);
        assert!((sd - 1e-4).abs() / 1e-4 < 0.05, "stddev {sd}");
        let kurt = numeric::excess_kurtosis(&series.values);
        assert!(kurt > 1.0, "expected heavy tails, excess kurtosis {kurt}");
    }

    #[test]
    fn synthetic_rejects_bad_parameters() {
        assert!(matches!(
            generate_synthetic(SyntheticKind::StudentT { dof: 2.0 }, 10, 1e-4, 0),
            Err(AnalyticsError::InvalidDof(_))
        ));
        assert!(matches!(
            generate_synthetic(SyntheticKind::Gaussian, 10, 0.0, 0),
            Err(AnalyticsError::InvalidSigma(_))
        ));
        assert!(matches!(
            generate_synthetic(SyntheticKind::Gaussian, 0, 1e-4, 0),
            Err(AnalyticsError::ZeroLength)
        ));
    }

    #[test]
    fn histogram_zero_series_single_occupied_bin() {
        let series = ReturnSeries::from_values(vec![0.0; 500]);
        let h = horizon_histogram(&series, 100, 60, 61).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), h.sample_count as u64);
        let occupied: Vec<usize> = h
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(occupied.len(), 1);
        // the single bin straddles zero
        let i = occupied[0];
        assert!(h.bin_edges[i] <= 0.0 && 0.0 <= h.bin_edges[i + 1]);
    }

    #[test]
    fn histogram_mass_is_conserved_with_fixed_range() {
        let series = generate_synthetic(SyntheticKind::StudentT { dof: 4.0 }, 50_000, 1e-4, 3)
            .unwrap();
        // a deliberately narrow range: outliers clamp into the edge bins
        let h = horizon_histogram_in_range(&series, 100, 60, 31, (-1e-4, 1e-4)).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), h.sample_count as u64);
        assert_eq!(h.sample_count, (50_000 - 100) / 60 + 1);
    }

    #[test]
    fn histogram_gaussian_sums_have_no_excess_kurtosis() {
        let series =
            generate_synthetic(SyntheticKind::Gaussian, 700_000, 1e-4, 17).unwrap();
        let h = horizon_histogram(&series, 100, 60, 61).unwrap();
        assert!(h.sample_count >= 10_000);
        assert!(h.excess_kurtosis.abs() < 0.3, "kurtosis {}", h.excess_kurtosis);
    }

    #[test]
    fn filtered_histogram_converges_with_horizon() {
        let series =
            generate_synthetic(SyntheticKind::StudentT { dof: 4.0 }, 262_144, 5e-4, 23)
                .unwrap();
        let (filtered, _) = filter_series(&series, 11, &FilterSpec::new(4)).unwrap();
        let mut distances = Vec::new();
        for horizon in [100usize, 600] {
            let base = horizon_histogram(&series, horizon, 60, 61).unwrap();
            let range =
                (base.bin_edges[0], *base.bin_edges.last().unwrap());
            let filt =
                horizon_histogram_in_range(&filtered, horizon, 60, 61, range).unwrap();
            distances.push(histogram_l1_distance(&base, &filt).unwrap());
        }
        assert!(
            distances[1] < distances[0],
            "L1 distance should shrink with horizon: {distances:?}"
        );
    }

    #[test]
    fn compare_premiums_identity_when_filter_keeps_everything() {
        let series =
            generate_synthetic(SyntheticKind::StudentT { dof: 4.0 }, 8_192, 5e-4, 29).unwrap();
        let (full, _) = filter_series(&series, 11, &FilterSpec::new(12)).unwrap();
        let base = PricingRequest {
            spot: 100.0,
            strike: 100.0,
            expiry_minutes: 510,
            rate_annual: 0.045,
            g_factor: 1.0,
            minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
        };
        let spec = EnsembleSpec::new(510, 60).unwrap();
        let rows = compare_premiums(
            &series,
            &full,
            &base,
            &[96.0, 100.0, 104.0],
            &spec,
            None,
        )
        .unwrap();
        for row in rows {
            assert!(row.abs_diff < 1e-9, "row {row:?}");
            assert!(row.rel_diff < 1e-9);
        }
    }

    #[test]
    fn compare_premiums_near_money_student_t_agreement() {
        let series = generate_synthetic(
            SyntheticKind::StudentT { dof: 4.0 },
            262_144,
            5e-4,
            31,
        )
        .unwrap();
        let (filtered, _) = filter_series(&series, 11, &FilterSpec::new(4)).unwrap();
        let base = PricingRequest {
            spot: 100.0,
            strike: 100.0,
            expiry_minutes: 1020, // two trading days
            rate_annual: 0.045,
            g_factor: 1.0,
            minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
        };
        let spec = EnsembleSpec::new(1020, 60).unwrap();
        let strikes = [98.0, 100.0, 102.0];
        let rows =
            compare_premiums(&series, &filtered, &base, &strikes, &spec, None).unwrap();
        for row in &rows {
            assert!(row.rel_diff <= 0.05, "disagreement at {}: {row:?}", row.strike);
        }
        // market column pass-through
        let with_market =
            compare_premiums(&series, &filtered, &base, &strikes, &spec, Some(&[1.0, 0.8]))
                .unwrap();
        assert_eq!(with_market[0].market, Some(1.0));
        assert_eq!(with_market[2].market, None);
    }
}
