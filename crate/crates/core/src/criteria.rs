//! The AIC family as plain formulas on fit summaries.
//!
//! Additive constants that do not depend on k are dropped throughout: the
//! known-variance criteria omit 2·d_KL(f;f) and the fitted-variance criteria
//! omit 2Cₙ = n(1 + ln 2π). Only differences between models fitted to the
//! same data are meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::check_positive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriterionKind {
    AicKnown,
    AicUnknown,
    Aicc,
    Aicu,
    AicGamma { gamma: f64 },
    AkaikeWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    pub value: f64,
    #[serde(flatten)]
    pub kind: CriterionKind,
}

/// RSS/σ² + 2k.
pub fn aic_known_sigma(rss: f64, sigma2: f64, k: usize) -> Result<f64> {
    aic_gamma(rss, sigma2, k, 2.0)
}

/// n·ln(RSS/n) + 2(k+1).
pub fn aic_unknown_sigma(rss: f64, n: usize, k: usize) -> Result<f64> {
    check_log_args(rss, n, k)?;
    Ok(log_term(rss, n) + 2.0 * (k as f64 + 1.0))
}

/// n·ln(RSS/n) + 2(k+1)n/(n−k−2).
pub fn aicc(rss: f64, n: usize, k: usize) -> Result<f64> {
    check_log_args(rss, n, k)?;
    Ok(log_term(rss, n) + aicc_penalty(n, k)?)
}

/// The small-sample penalty 2(k+1)n/(n−k−2).
pub fn aicc_penalty(n: usize, k: usize) -> Result<f64> {
    if n <= k + 2 {
        return Err(Error::undefined(format!("AICc needs n − k − 2 > 0 (n = {n}, k = {k})")));
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(2.0 * (kf + 1.0) * nf / (nf - kf - 2.0))
}

/// n·ln(RSS/(n−k)) + 2(k+1): the fitted variance replaced by s² = RSS/(n−k).
pub fn aicu(rss: f64, n: usize, k: usize) -> Result<f64> {
    check_log_args(rss, n, k)?;
    let nf = n as f64;
    Ok(nf * (rss / (nf - k as f64)).ln() + 2.0 * (k as f64 + 1.0))
}

/// RSS/σ² + γk.
pub fn aic_gamma(rss: f64, sigma2: f64, k: usize, gamma: f64) -> Result<f64> {
    check_positive("sigma2", sigma2)?;
    if !(rss >= 0.0 && rss.is_finite()) {
        return Err(Error::invalid(format!("RSS must be nonnegative, got {rss}")));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be at least 1, got {gamma}")));
    }
    Ok(rss / sigma2 + gamma * k as f64)
}

/// Normalized Akaike weights exp(−AICˡ/2) / Σ exp(−AICᵐ/2).
pub fn akaike_weights(criteria: &[f64]) -> Result<Vec<f64>> {
    if criteria.is_empty() {
        return Err(Error::invalid("no criteria to weight"));
    }
    if criteria.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("criteria must be finite"));
    }
    let min = criteria.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = criteria.iter().map(|c| (-(c - min) / 2.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

fn log_term(rss: f64, n: usize) -> f64 {
    n as f64 * (rss / n as f64).ln()
}

fn check_log_args(rss: f64, n: usize, k: usize) -> Result<()> {
    if n <= k {
        return Err(Error::TooFewObservations { n, k });
    }
    if rss == 0.0 {
        return Err(Error::undefined(
            "RSS = 0: saturated fit, log-likelihood criterion undefined",
        ));
    }
    if !(rss > 0.0 && rss.is_finite()) {
        return Err(Error::invalid(format!("RSS must be positive, got {rss}")));
    }
    Ok(())
}
