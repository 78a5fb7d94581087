//! When the variance is fitted, the unbiasing term depends on the
//! mis-specification λ. Compare it with the AIC and AICc penalties.
//!
//! cargo run --example unknown_variance_shift

use infocrit::criteria::aicc_penalty;
use infocrit::discrepancy::{aicc_shift, exact_shift, unbiasing_term_unknown_sigma, MisspecRegime};

fn main() -> infocrit::Result<()> {
    let k = 2;
    println!(
        "2B(n, k = {k}, lambda) against the AIC penalty 2(k+1) = {}",
        2 * (k + 1)
    );
    println!(
        "{:>6} {:>8} {:>10} {:>10} {:>10} {:>10}",
        "n", "AICc", "lam=0", "lam=1", "lam=sqrt n", "lam=n/10"
    );
    for n in [10usize, 20, 50, 100, 1000] {
        let nf = n as f64;
        let mut row = format!("{n:>6} {:>8.4}", aicc_penalty(n, k)?);
        for lambda in [0.0, 1.0, nf.sqrt(), nf / 10.0] {
            row.push_str(&format!(" {:>10.4}", unbiasing_term_unknown_sigma(n, k, lambda)?));
        }
        println!("{row}");
    }

    println!("\nexact shift of the criterion against the predicted asymptote");
    let regimes = [
        MisspecRegime::Small { lambda0: 1.0 },
        MisspecRegime::Medium { lambda_half: 0.5 },
        MisspecRegime::Large { lambda1: 0.1 },
    ];
    for regime in regimes {
        println!("{regime:?} (relative to {})", regime.baseline());
        for n in [250usize, 1000, 10_000, 100_000] {
            println!(
                "  n = {n:>6}  lambda = {:>9.3}  exact {:>10.6}  predicted {:>10.6}",
                regime.lambda_at(n),
                exact_shift(n, k, regime)?,
                aicc_shift(n, k, regime)?
            );
        }
    }
    Ok(())
}
