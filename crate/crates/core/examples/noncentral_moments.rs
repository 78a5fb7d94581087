//! Moments of the non-central chi-squared law, including E[1/X], checked
//! against sampling.
//!
//! cargo run --example noncentral_moments

use infocrit::chi2::NoncentralChi2;
use infocrit::sim::neg_first_moment_check;

fn main() -> infocrit::Result<()> {
    println!(
        "{:>4} {:>7} {:>9} {:>9} {:>12} {:>12} {:>7}",
        "r", "lambda", "mean", "var", "E[1/X]", "sampled", "z"
    );
    for (r, lambda) in [(3, 0.0), (5, 2.0), (10, 10.0), (40, 100.0), (200, 1000.0)] {
        let d = NoncentralChi2::new(r, lambda)?;
        let check = neg_first_moment_check(d, 1_000_000, 1, 0)?;
        println!(
            "{r:>4} {lambda:>7} {:>9.2} {:>9.2} {:>12.8} {:>12.8} {:>7.2}",
            d.mean(),
            d.variance(),
            check.theoretical,
            check.empirical,
            check.deviation / check.std_error.unwrap_or(f64::NAN)
        );
    }
    match NoncentralChi2::new(2, 1.0)?.neg_first_moment() {
        Ok(v) => println!("r = 2: {v}"),
        Err(e) => println!("r = 2: {e}"),
    }
    Ok(())
}
