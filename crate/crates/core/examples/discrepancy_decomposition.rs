//! Split the overall discrepancy of a fitted model into its approximation
//! and estimation parts, and compare realized values with expectations.
//!
//! cargo run --example discrepancy_decomposition

use infocrit::discrepancy::{msc_known_sigma, realized_discrepancies, TrueModel};
use infocrit::regression::{fit_ols, LinearModel, VarianceMode};
use infocrit::sim::{generate_data, misspecified_mean, replication_rng};

fn main() -> infocrit::Result<()> {
    let n = 25;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0, i as f64 / n as f64]).collect();
    let sigma0_2 = 1.0;
    let line = LinearModel::from_rows(&rows, VarianceMode::Known(sigma0_2))?;

    // A mean off the line by λ = 6 noise units.
    let base: Vec<f64> = (0..n).map(|i| 2.0 - 3.0 * i as f64 / n as f64).collect();
    let bump: Vec<f64> = (0..n).map(|i| ((i as f64 - 12.0) / 4.0).powi(2)).collect();
    let y0 = misspecified_mean(&line, &base, &bump, 6.0, sigma0_2)?;
    let truth = TrueModel::new(y0, sigma0_2)?;

    let y = generate_data(&truth, &mut replication_rng(7, 0));
    let dd = realized_discrepancies(&truth, &line, &y)?;
    println!(
        "n = {}, k = {}, lambda = {:.4}, d_KL(f;f) = {:.4}",
        dd.n, dd.k, dd.lambda, dd.dkl_self
    );
    println!("{:<4} {:>10} {:>10}", "", "realized", "expected");
    println!("{:<4} {:>10.4} {:>10.4}", "OD", dd.od, dd.e_od);
    println!("{:<4} {:>10.4} {:>10.4}", "FD", dd.fd, dd.e_fd);
    println!("{:<4} {:>10.4} {:>10}", "AD", dd.ad, "-");
    println!("{:<4} {:>10.4} {:>10.4}", "ED", dd.ed, dd.e_ed);
    println!(
        "OD - AD - (ED - d) = {:.4} (cross term, mean zero)",
        dd.od - dd.ad - (dd.ed - dd.dkl_self)
    );

    // With σ = σ₀ the criterion is the usual AIC; with the constant restored
    // it is twice FD plus the unbiasing term 2k.
    let rss = fit_ols(&line, &y)?.rss;
    let msc = msc_known_sigma(rss, sigma0_2, sigma0_2, n, 2, true)?;
    println!("MSC/2 = {:.4}, FD + k = {:.4}", msc / 2.0, dd.fd + 2.0);

    // Averaging over replications recovers the expectations.
    let reps = 20_000;
    let (mut od, mut fd) = (0.0, 0.0);
    for i in 0..reps {
        let y = generate_data(&truth, &mut replication_rng(7, i + 1));
        let d = realized_discrepancies(&truth, &line, &y)?;
        od += d.od;
        fd += d.fd;
    }
    println!(
        "over {reps} replications: mean OD {:.4} (expected {:.4}), mean FD {:.4} (expected {:.4})",
        od / reps as f64,
        dd.e_od,
        fd / reps as f64,
        dd.e_fd
    );
    Ok(())
}
