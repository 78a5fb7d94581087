//! Kullback–Leibler discrepancies between a normal data-generating model
//! `y = y₀ + σ₀z` and a fitted normal linear candidate.
//!
//! With the variance known (σ² supplied), the overall discrepancy OD of the
//! fitted model from the truth splits in expectation into an approximation
//! part AD (from the best approximating β*) and an estimation part ED. The
//! fitted discrepancy FD is the negative maximized log-likelihood, and the
//! selection criterion is 2·(FD + B) with B = E[OD − FD].
//!
//! With the variance fitted, B depends on the mis-specification λ through the
//! negative first moment of χ²_{n−k}(λ).

use serde::{Deserialize, Serialize};

use crate::chi2::NoncentralChi2;
use crate::criteria::aicc_penalty;
use crate::error::{Error, Result};
use crate::regression::{check_positive, fit_ols, norm2, LinearModel, VarianceMode};

/// Mean vector and error variance of the data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    y0: Vec<f64>,
    sigma0_2: f64,
}

impl TrueModel {
    pub fn new(y0: Vec<f64>, sigma0_2: f64) -> Result<Self> {
        if y0.is_empty() {
            return Err(Error::invalid("true mean vector must be nonempty"));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("true mean vector must be finite"));
        }
        check_positive("sigma0_2", sigma0_2)?;
        Ok(Self { y0, sigma0_2 })
    }

    pub fn n(&self) -> usize {
        self.y0.len()
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn sigma0_2(&self) -> f64 {
        self.sigma0_2
    }

    pub(crate) fn check_model(&self, model: &LinearModel) -> Result<()> {
        if model.n() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "model rows vs true mean",
                expected: self.n(),
                got: model.n(),
            });
        }
        Ok(())
    }
}

/// Realized and expected discrepancies for one fitted candidate (known σ²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyDecomposition {
    pub od: f64,
    pub fd: f64,
    pub ad: f64,
    pub ed: f64,
    pub e_od: f64,
    pub e_fd: f64,
    pub e_ed: f64,
    pub lambda: f64,
    pub dkl_self: f64,
    pub n: usize,
    pub k: usize,
}

/// d_KL(f;f) = (n/2)[1 + ln 2π] + (n/2) ln σ².
pub fn dkl_self(n: usize, sigma2: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    check_positive("sigma2", sigma2)?;
    Ok(c_n(n) + n as f64 / 2.0 * sigma2.ln())
}

/// Cₙ = (n/2)[1 + ln 2π].
pub fn c_n(n: usize) -> f64 {
    n as f64 / 2.0 * (1.0 + (2.0 * std::f64::consts::PI).ln())
}

/// λ = y₀ᵗQy₀/σ₀².
pub fn lambda_misspec(truth: &TrueModel, model: &LinearModel) -> Result<f64> {
    truth.check_model(model)?;
    Ok(model.quadratic_form_q(truth.y0())? / truth.sigma0_2())
}

/// Fit `model` (known σ²) to `y` and evaluate OD, FD, AD, ED along with
/// their expectations under `truth`.
pub fn realized_discrepancies(truth: &TrueModel, model: &LinearModel, y: &[f64]) -> Result<DiscrepancyDecomposition> {
    truth.check_model(model)?;
    let sigma2 = match model.variance_mode() {
        VarianceMode::Known(s2) => s2,
        VarianceMode::Unknown => {
            return Err(Error::VarianceMode(
                "known-variance discrepancies need a model with known sigma2".into(),
            ))
        }
    };
    let fit = fit_ols(model, y)?;
    let (n, k) = (model.n(), model.k());
    let nf = n as f64;
    let s0 = truth.sigma0_2();
    let ratio = s0 / sigma2;
    let d = dkl_self(n, sigma2)?;
    let lambda = lambda_misspec(truth, model)?;
    let stat = nf / 2.0 * (ratio - 1.0);

    let py0 = model.project(truth.y0())?;
    let fit_err = norm2(&diff(&fit.y_hat, truth.y0()));
    let est_err = norm2(&diff(&fit.y_hat, &py0));

    Ok(DiscrepancyDecomposition {
        od: d + stat + fit_err / (2.0 * sigma2),
        fd: d - nf / 2.0 + fit.rss / (2.0 * sigma2),
        ad: d + stat + ratio / 2.0 * lambda,
        ed: d + est_err / (2.0 * sigma2),
        e_od: d + stat + ratio / 2.0 * (k as f64 + lambda),
        e_fd: d + stat + ratio / 2.0 * (lambda - k as f64),
        e_ed: d + ratio / 2.0 * k as f64,
        lambda,
        dkl_self: d,
        n,
        k,
    })
}

/// Known-variance selection criterion RSS/σ² + (σ₀²/σ²)·2k, optionally with
/// the model-independent constant n·ln(2πσ²) = 2·d_KL(f;f) − n restored, so
/// that half of it is FD + B.
pub fn msc_known_sigma(
    rss: f64,
    sigma2: f64,
    sigma0_2: f64,
    n: usize,
    k: usize,
    include_constant: bool,
) -> Result<f64> {
    check_positive("sigma2", sigma2)?;
    check_positive("sigma0_2", sigma0_2)?;
    let base = rss / sigma2 + sigma0_2 / sigma2 * 2.0 * k as f64;
    if include_constant {
        Ok(base + 2.0 * dkl_self(n, sigma2)? - n as f64)
    } else {
        Ok(base)
    }
}

/// 2B = n·{(n + k + λ)·E[1/χ²_{n−k}(λ)] − 1}.
pub fn unbiasing_term_unknown_sigma(n: usize, k: usize, lambda: f64) -> Result<f64> {
    if n <= k + 2 {
        return Err(Error::undefined(format!(
            "unbiasing term diverges unless n − k > 2 (n = {n}, k = {k})"
        )));
    }
    let r = u32::try_from(n - k).map_err(|_| Error::invalid("n − k too large"))?;
    let inv = NoncentralChi2::new(r, lambda)?.neg_first_moment()?;
    let nf = n as f64;
    Ok(nf * ((nf + k as f64 + lambda) * inv - 1.0))
}

/// Fitted-variance selection criterion n·ln(RSS/n) + 2B(n, k, λ), with 2Cₙ
/// dropped. λ is a hypothesis; it cannot be estimated from the data.
pub fn msc_unknown_sigma(rss: f64, n: usize, k: usize, lambda: f64) -> Result<f64> {
    let two_b = unbiasing_term_unknown_sigma(n, k, lambda)?;
    if !(rss > 0.0 && rss.is_finite()) {
        return Err(Error::undefined(format!("RSS must be positive, got {rss}")));
    }
    Ok(n as f64 * (rss / n as f64).ln() + two_b)
}

/// Realized discrepancies when σ² is fitted by RSS/n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedVarianceDiscrepancy {
    pub od: f64,
    pub fd: f64,
    pub sigma2_hat: f64,
    /// ‖Py − y₀‖², independent of σ̂² under the true model.
    pub fit_error: f64,
}

pub fn realized_discrepancies_unknown_sigma(
    truth: &TrueModel,
    model: &LinearModel,
    y: &[f64],
) -> Result<FittedVarianceDiscrepancy> {
    truth.check_model(model)?;
    let fit = fit_ols(&model.with_variance_mode(VarianceMode::Unknown)?, y)?;
    let s2 = fit.sigma2_hat.expect("unknown mode sets sigma2_hat");
    let nf = model.n() as f64;
    if s2 <= f64::EPSILON * norm2(y) / nf {
        return Err(Error::undefined("perfect fit: fitted variance is zero"));
    }
    let fd = c_n(model.n()) + nf / 2.0 * s2.ln();
    let fit_error = norm2(&diff(&fit.y_hat, truth.y0()));
    let od = fd + nf / 2.0 * (truth.sigma0_2() / s2 - 1.0) + fit_error / (2.0 * s2);
    Ok(FittedVarianceDiscrepancy {
        od,
        fd,
        sigma2_hat: s2,
        fit_error,
    })
}

/// Growth regime of λ with n: λ₀, λ_{1/2}√n or λ₁n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MisspecRegime {
    Small { lambda0: f64 },
    Medium { lambda_half: f64 },
    Large { lambda1: f64 },
}

impl MisspecRegime {
    fn coefficient(&self) -> f64 {
        match *self {
            MisspecRegime::Small { lambda0 } => lambda0,
            MisspecRegime::Medium { lambda_half } => lambda_half,
            MisspecRegime::Large { lambda1 } => lambda1,
        }
    }

    fn validate(&self) -> Result<()> {
        let c = self.coefficient();
        if c.is_finite() && c >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "regime coefficient must be nonnegative, got {c}"
            )))
        }
    }

    /// λ at sample size n.
    pub fn lambda_at(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            MisspecRegime::Small { lambda0 } => lambda0,
            MisspecRegime::Medium { lambda_half } => lambda_half * nf.sqrt(),
            MisspecRegime::Large { lambda1 } => lambda1 * nf,
        }
    }

    /// Whether the shift is measured against AICc (small) or AIC.
    pub fn baseline(&self) -> &'static str {
        match self {
            MisspecRegime::Small { .. } => "AICc",
            _ => "AIC",
        }
    }
}

/// Predicted asymptotic shift of the criterion: −λ₀(2k+λ₀)/n relative to
/// AICc, −λ_{1/2}² relative to AIC, and for the large regime (no closed
/// asymptote) the exact 2B − 2(k+1) relative to AIC.
pub fn aicc_shift(n: usize, k: usize, regime: MisspecRegime) -> Result<f64> {
    regime.validate()?;
    if n <= k + 2 {
        return Err(Error::undefined(format!("need n − k > 2 (n = {n}, k = {k})")));
    }
    Ok(match regime {
        MisspecRegime::Small { lambda0 } => -lambda0 * (2.0 * k as f64 + lambda0) / n as f64,
        MisspecRegime::Medium { lambda_half } => -lambda_half * lambda_half,
        MisspecRegime::Large { .. } => exact_shift(n, k, regime)?,
    })
}

/// The shift computed from the exact unbiasing term at λ = `regime.lambda_at(n)`:
/// 2B − AICc penalty for the small regime, 2B − 2(k+1) otherwise. The
/// n·ln σ̂² term is common to both criteria and cancels.
pub fn exact_shift(n: usize, k: usize, regime: MisspecRegime) -> Result<f64> {
    regime.validate()?;
    let two_b = unbiasing_term_unknown_sigma(n, k, regime.lambda_at(n))?;
    Ok(match regime {
        MisspecRegime::Small { .. } => two_b - aicc_penalty(n, k)?,
        _ => two_b - 2.0 * (k as f64 + 1.0),
    })
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
