//! Gaussian-limit consistency: on i.i.d. gaussian minute returns the
//! empirical ensemble average converges to the closed-form Black-Scholes
//! value. Heavy-tailed returns do not, which is the reason to price from
//! the empirical series in the first place.
//!
//! Run with `cargo run --example gaussian_black_scholes --release`.

use eop::analytics::{black_scholes_call, generate_synthetic, SyntheticKind};
use eop::pricing::{self, EnsembleSpec, PricingRequest, DEFAULT_MINUTES_PER_YEAR};

fn main() -> anyhow::Result<()> {
    let sigma_annual = 0.20;
    let per_minute = sigma_annual / (DEFAULT_MINUTES_PER_YEAR as f64).sqrt();
    let expiry = 30 * 510; // thirty trading days
    let spec = EnsembleSpec { window_length: expiry, stride: 60 };
    let base = PricingRequest {
        spot: 100.0,
        strike: 100.0,
        expiry_minutes: expiry,
        rate_annual: 0.0,
        g_factor: 1.0,
        minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
    };
    let strikes = [90.0, 95.0, 100.0, 105.0, 110.0];
    let requests: Vec<PricingRequest> = strikes.iter().map(|&e| base.with_strike(e)).collect();

    for (label, kind, length) in [
        ("gaussian", SyntheticKind::Gaussian, 16_065_000),
        ("student-t(4)", SyntheticKind::StudentT { dof: 4.0 }, 16_065_000),
    ] {
        let returns = generate_synthetic(kind, length, per_minute, 7)?;
        let quotes = pricing::price_ladder(&returns, &requests, &spec)?;
        println!(
            "{label}: {} windows of {} minutes at 20% annualized",
            quotes[0].sample_count, expiry
        );
        println!("{:>8} {:>12} {:>14} {:>10}", "strike", "empirical", "closed form", "rel diff");
        for (&strike, quote) in strikes.iter().zip(&quotes) {
            let reference = black_scholes_call(
                base.spot,
                strike,
                expiry,
                base.rate_annual,
                sigma_annual,
                DEFAULT_MINUTES_PER_YEAR,
            );
            println!(
                "{:>8.0} {:>12.4} {:>14.4} {:>9.2}%",
                strike,
                quote.premium,
                reference,
                (quote.premium - reference) / reference * 100.0
            );
        }
        println!();
    }
    println!("the gaussian run tracks the formula; the heavy-tailed one drifts away from it in the wings");
    Ok(())
}
