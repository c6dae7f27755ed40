//! Premium evaluation over the sliding-window ensemble: a strike ladder with
//! exercised fractions and payoff dispersion, plus the effect of the
//! g-factor on at-the-money value.
//!
//! Run with `cargo run --example price_ladder`.

use eop::analytics::{generate_synthetic, SyntheticKind};
use eop::pricing::{self, EnsembleSpec, PricingRequest, DEFAULT_MINUTES_PER_YEAR};

fn main() -> anyhow::Result<()> {
    // two years of heavy-tailed minute returns at 10% annualized volatility
    let per_minute = 0.10 / (DEFAULT_MINUTES_PER_YEAR as f64).sqrt();
    let returns =
        generate_synthetic(SyntheticKind::StudentT { dof: 4.0 }, 257_040, per_minute, 12)?;

    let spot = 5530.0;
    let expiry = 10 * 510; // ten trading days
    let base = PricingRequest {
        spot,
        strike: spot,
        expiry_minutes: expiry,
        rate_annual: 0.045,
        g_factor: 0.85,
        minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
    };
    let spec = EnsembleSpec { window_length: expiry, stride: 60 };

    let strikes: Vec<f64> = (0..9).map(|i| 5330.0 + 50.0 * i as f64).collect();
    let requests: Vec<PricingRequest> = strikes.iter().map(|&e| base.with_strike(e)).collect();
    let quotes = pricing::price_ladder(&returns, &requests, &spec)?;

    println!(
        "{} windows of {} minutes, stride {}, g = {}",
        quotes[0].sample_count, expiry, spec.stride, base.g_factor
    );
    println!("{:>8} {:>12} {:>11} {:>11}", "strike", "premium", "exercised", "stddev");
    for (strike, quote) in strikes.iter().zip(&quotes) {
        println!(
            "{:>8.0} {:>12.4} {:>11.4} {:>11.4}",
            strike, quote.premium, quote.exercised_fraction, quote.payoff_stddev
        );
    }

    println!("\nat-the-money premium against the g-factor:");
    println!("{:>6} {:>12} {:>18}", "g", "premium", "putative vol");
    let sigma_hist = returns.per_minute_volatility() * (DEFAULT_MINUTES_PER_YEAR as f64).sqrt();
    for g in [0.6, 0.8, 1.0, 1.2] {
        let request = PricingRequest { g_factor: g, ..base };
        let quote = pricing::price_call(&returns, &request, &spec)?;
        println!("{:>6.2} {:>12.4} {:>17.2}%", g, quote.premium, g * sigma_hist * 100.0);
    }
    Ok(())
}
