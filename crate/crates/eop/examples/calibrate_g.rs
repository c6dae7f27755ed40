//! Least-squares calibration of the g-factor: quotes manufactured by the
//! model at a known g are recovered by the grid + golden-section search.
//!
//! Run with `cargo run --example calibrate_g`.

use eop::calibration::{self, FitOptions, MarketQuote, MarketQuoteSet};
use eop::analytics::{generate_synthetic, SyntheticKind};
use eop::pricing::{self, EnsembleSpec, PricingRequest, DEFAULT_MINUTES_PER_YEAR};

fn main() -> anyhow::Result<()> {
    let returns = generate_synthetic(SyntheticKind::Gaussian, 61_200, 4.5e-4, 2024)?;
    let spec = EnsembleSpec { window_length: 510, stride: 60 };
    let g_true = 0.81;
    let spot = 5528.1;

    let base = PricingRequest {
        spot,
        strike: spot,
        expiry_minutes: 510,
        rate_annual: 0.045,
        g_factor: g_true,
        minutes_per_year: DEFAULT_MINUTES_PER_YEAR,
    };
    let strikes: Vec<f64> = (0..7).map(|i| 5378.1 + 50.0 * i as f64).collect();
    let requests: Vec<PricingRequest> = strikes.iter().map(|&e| base.with_strike(e)).collect();
    let model = pricing::price_ladder(&returns, &requests, &spec)?;

    let quotes = MarketQuoteSet {
        quote_date: None,
        expiry_date: None,
        spot,
        rate_annual: 0.045,
        quotes: strikes
            .iter()
            .zip(&model)
            .map(|(&strike, q)| MarketQuote::new(strike, q.premium))
            .collect(),
    };

    let fit = calibration::fit_g(
        &quotes,
        &returns,
        &spec,
        DEFAULT_MINUTES_PER_YEAR,
        &FitOptions::default(),
    )?;

    println!("quotes generated at g = {g_true}");
    println!(
        "recovered g = {:.4} in {} objective evaluations (rss {:.3e}{})",
        fit.g,
        fit.iterations,
        fit.rss,
        if fit.at_boundary { ", boundary!" } else { "" }
    );
    println!(
        "putative volatility sigma* = {:.2}% against historical {:.2}%",
        fit.sigma_star * 100.0,
        calibration::historical_volatility(&returns, DEFAULT_MINUTES_PER_YEAR) * 100.0
    );
    println!("\n{:>8} {:>10} {:>10} {:>11}", "strike", "market", "model", "residual");
    for row in &fit.per_strike {
        println!(
            "{:>8.1} {:>10.4} {:>10.4} {:>+11.2e}",
            row.strike, row.market, row.model, row.residual
        );
    }
    Ok(())
}
