//! Fit polynomial candidates to noisy data and rank them by AIC-family
//! criteria, once with the error variance known and once with it fitted.
//!
//! cargo run --example fit_and_criteria

use infocrit::criteria::{aic_known_sigma, aic_unknown_sigma, aicc, aicu, akaike_weights};
use infocrit::regression::{fit_ols, LinearModel, VarianceMode};
use infocrit::sim::replication_rng;
use rand::Rng;
use rand_distr::StandardNormal;

fn polynomial(ts: &[f64], degree: usize) -> Vec<Vec<f64>> {
    ts.iter()
        .map(|t| (0..=degree).map(|p| t.powi(p as i32)).collect())
        .collect()
}

fn main() -> infocrit::Result<()> {
    let n = 40;
    let sigma = 0.3;
    let ts: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let mut rng = replication_rng(2024, 0);
    // Cubic truth; the quadratic and linear fits are mis-specified.
    let y: Vec<f64> = ts
        .iter()
        .map(|t| 1.0 + 0.5 * t - 0.8 * t * t + 0.6 * t * t * t + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();

    println!("known sigma^2 = {}", sigma * sigma);
    let mut known = Vec::new();
    for degree in 0..=5 {
        let m = LinearModel::from_rows(&polynomial(&ts, degree), VarianceMode::Known(sigma * sigma))?;
        let fit = fit_ols(&m, &y)?;
        known.push((degree, fit.rss, aic_known_sigma(fit.rss, sigma * sigma, fit.k)?));
    }
    let w = akaike_weights(&known.iter().map(|r| r.2).collect::<Vec<_>>())?;
    println!("{:>6}  {:>10}  {:>10}  {:>8}", "degree", "rss", "AIC", "weight");
    for ((d, rss, aic), w) in known.iter().zip(&w) {
        println!("{d:>6}  {rss:>10.4}  {aic:>10.4}  {w:>8.4}");
    }

    println!("\nfitted sigma^2 = RSS/n");
    println!(
        "{:>6}  {:>10}  {:>10}  {:>10}  {:>10}",
        "degree", "sigma2_hat", "AIC", "AICc", "AICu"
    );
    for degree in 0..=5 {
        let m = LinearModel::from_rows(&polynomial(&ts, degree), VarianceMode::Unknown)?;
        let fit = fit_ols(&m, &y)?;
        println!(
            "{degree:>6}  {:>10.5}  {:>10.4}  {:>10.4}  {:>10.4}",
            fit.sigma2_hat.unwrap_or(f64::NAN),
            aic_unknown_sigma(fit.rss, n, fit.k)?,
            aicc(fit.rss, n, fit.k)?,
            aicu(fit.rss, n, fit.k)?
        );
    }
    Ok(())
}
