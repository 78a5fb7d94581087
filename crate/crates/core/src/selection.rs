//! The AIC difference Δ¹² = AIC² − AIC¹ between two candidates fitted with a
//! known common error variance σ₀², its exact first two moments, an unbiased
//! estimator of its variance, and the z-test of equal expected discrepancy.
//!
//! Sign convention: a large positive Δ¹² (and z) favours model 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chi2::NoncentralChi2;
use crate::discrepancy::{lambda_misspec, TrueModel};
use crate::error::{Error, Result};
use crate::normal;
use crate::regression::{
    check_positive, check_same_n, diff_projection_traces, fit_ols, quadratic_form_diff_q, LinearModel,
};

/// Relative tolerance for deciding that one column space lies inside another.
pub const NESTING_TOLERANCE: f64 = 1e-8;

/// tr[(Q²−Q¹)²] below this multiple of k₁+k₂ means the error spaces coincide.
pub const IDENTICAL_SPACE_TOLERANCE: f64 = 1e-10;

/// Cutoffs for the finite-n separation flag.
pub const SEPARATION_Y0_MIN: f64 = 0.01;
pub const SEPARATION_TRACE_FACTOR: f64 = 10.0;
pub const SEPARATION_TRACE_FRACTION_OF_N: f64 = 0.1;
pub const SEPARATION_LAMBDA_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// Model 1 has the smaller expected discrepancy: large positive z.
    M1Closer,
    M2Closer,
}

impl FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(Alternative::TwoSided),
            "m1-closer" => Ok(Alternative::M1Closer),
            "m2-closer" => Ok(Alternative::M2Closer),
            other => Err(Error::invalid(format!(
                "unknown alternative `{other}` (expected two-sided, m1-closer or m2-closer)"
            ))),
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::TwoSided => "two-sided",
            Alternative::M1Closer => "m1-closer",
            Alternative::M2Closer => "m2-closer",
        })
    }
}

/// Outcome of [`z_test`]. `z` and the p-values are absent when the variance
/// estimate is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaComparison {
    pub delta12: f64,
    pub trace_t2: f64,
    pub var_estimate: f64,
    pub z: Option<f64>,
    pub p_two_sided: Option<f64>,
    pub p_one_sided: Option<f64>,
    pub alternative: Alternative,
    pub valid: bool,
    /// Both candidates span the same column space.
    pub identical_spaces: bool,
}

impl DeltaComparison {
    /// The p-value for the requested alternative.
    pub fn p_value(&self) -> Option<f64> {
        match self.alternative {
            Alternative::TwoSided => self.p_two_sided,
            _ => self.p_one_sided,
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value().is_some_and(|p| p < alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMoments {
    pub e_delta: f64,
    pub var_delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// (RSS²/σ₀² + 2k₂) − (RSS¹/σ₀² + 2k₁); both models must carry the same known σ₀².
pub fn delta12(model1: &LinearModel, model2: &LinearModel, y: &[f64]) -> Result<f64> {
    let s2 = shared_known_sigma2(model1, model2)?;
    delta_with_sigma2(model1, model2, y, s2)
}

pub(crate) fn delta_with_sigma2(model1: &LinearModel, model2: &LinearModel, y: &[f64], sigma0_2: f64) -> Result<f64> {
    check_same_n(model1, model2)?;
    let rss1 = fit_ols(model1, y)?.rss;
    let rss2 = fit_ols(model2, y)?.rss;
    Ok((rss2 / sigma0_2 + 2.0 * model2.k() as f64) - (rss1 / sigma0_2 + 2.0 * model1.k() as f64))
}

/// Exact mean and variance of Δ¹² under `truth`.
pub fn delta_moments(truth: &TrueModel, model1: &LinearModel, model2: &LinearModel) -> Result<DeltaMoments> {
    check_same_n(model1, model2)?;
    let lambda1 = lambda_misspec(truth, model1)?;
    let lambda2 = lambda_misspec(truth, model2)?;
    let (t2, _) = diff_projection_traces(model1, model2)?;
    let y0_term = quadratic_form_diff_q(model1, model2, truth.y0())? / truth.sigma0_2();
    Ok(DeltaMoments {
        e_delta: (model2.k() as f64 - model1.k() as f64) + (lambda2 - lambda1),
        var_delta: 2.0 * t2 + 4.0 * y0_term,
        lambda1,
        lambda2,
    })
}

/// −2·tr[(Q²−Q¹)²] + 4·yᵗ(Q²−Q¹)²y/σ₀²; unbiased for Var Δ¹² but not
/// guaranteed positive.
pub fn var_delta_estimate(model1: &LinearModel, model2: &LinearModel, y: &[f64], sigma0_2: f64) -> Result<f64> {
    check_positive("sigma0_2", sigma0_2)?;
    let (t2, _) = diff_projection_traces(model1, model2)?;
    Ok(-2.0 * t2 + 4.0 * quadratic_form_diff_q(model1, model2, y)? / sigma0_2)
}

/// z = Δ¹²/√V̂ with normal p-values.
pub fn z_test(
    model1: &LinearModel,
    model2: &LinearModel,
    y: &[f64],
    sigma0_2: f64,
    alternative: Alternative,
) -> Result<DeltaComparison> {
    check_positive("sigma0_2", sigma0_2)?;
    let delta = delta_with_sigma2(model1, model2, y, sigma0_2)?;
    let (t2, _) = diff_projection_traces(model1, model2)?;
    let var_estimate = -2.0 * t2 + 4.0 * quadratic_form_diff_q(model1, model2, y)? / sigma0_2;
    let identical_spaces = t2 <= IDENTICAL_SPACE_TOLERANCE * (model1.k() + model2.k()) as f64;
    let valid = var_estimate > 0.0 && !identical_spaces;
    let (z, p2, p1) = if valid {
        let z = delta / var_estimate.sqrt();
        let one = match alternative {
            Alternative::M2Closer => normal::cdf(z),
            _ => normal::sf(z),
        };
        (Some(z), Some(normal::two_sided_p(z)), Some(one))
    } else {
        (None, None, None)
    };
    Ok(DeltaComparison {
        delta12: delta,
        trace_t2: t2,
        var_estimate,
        z,
        p_two_sided: p2,
        p_one_sided: p1,
        alternative,
        valid,
        identical_spaces,
    })
}

/// Finite-n proxies for the conditions under which Δ¹² is asymptotically normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// y₀ᵗ(Q²−Q¹)²y₀/(σ₀²n)
    pub y0_term_per_n: f64,
    pub lambda1_per_n: f64,
    pub lambda2_per_n: f64,
    pub trace_t2: f64,
    pub y0_term_bounded_below: bool,
    pub lambdas_bounded: bool,
    pub trace_bounded: bool,
    pub separated: bool,
}

/// Flags a pair as separately mis-specified when y₀ᵗ(Q²−Q¹)²y₀/(σ₀²n) ≥
/// [`SEPARATION_Y0_MIN`], both λ/n ≤ [`SEPARATION_LAMBDA_MAX`], and the trace
/// term stays small: at most 10(k₁+k₂) and at most n/10.
pub fn separation_diagnostic(
    truth: &TrueModel,
    model1: &LinearModel,
    model2: &LinearModel,
) -> Result<SeparationReport> {
    check_same_n(model1, model2)?;
    let nf = model1.n() as f64;
    let (t2, _) = diff_projection_traces(model1, model2)?;
    let y0_term = quadratic_form_diff_q(model1, model2, truth.y0())? / truth.sigma0_2() / nf;
    let l1 = lambda_misspec(truth, model1)? / nf;
    let l2 = lambda_misspec(truth, model2)? / nf;
    let y0_ok = y0_term >= SEPARATION_Y0_MIN;
    let lambda_ok = l1 <= SEPARATION_LAMBDA_MAX && l2 <= SEPARATION_LAMBDA_MAX;
    let k_sum = (model1.k() + model2.k()) as f64;
    let trace_ok = t2 <= SEPARATION_TRACE_FACTOR * k_sum && t2 <= SEPARATION_TRACE_FRACTION_OF_N * nf;
    Ok(SeparationReport {
        y0_term_per_n: y0_term,
        lambda1_per_n: l1,
        lambda2_per_n: l2,
        trace_t2: t2,
        y0_term_bounded_below: y0_ok,
        lambdas_bounded: lambda_ok,
        trace_bounded: trace_ok,
        separated: y0_ok && lambda_ok && trace_ok,
    })
}

/// Whether the column space of `inner` lies inside that of `outer`:
/// ‖P_inner u − P_outer u‖ ≤ tol·‖u‖ for each basis vector u of `inner`.
pub fn is_nested(outer: &LinearModel, inner: &LinearModel) -> bool {
    if outer.n() != inner.n() || inner.k() > outer.k() {
        return false;
    }
    let basis = inner.basis();
    (0..inner.k()).all(|j| {
        let u: Vec<f64> = basis.column(j).iter().copied().collect();
        let pu = outer.project_unchecked(&u);
        let gap: f64 = u.iter().zip(&pu).map(|(a, b)| (a - b) * (a - b)).sum();
        gap.sqrt() <= NESTING_TOLERANCE * crate::regression::norm2(&u).sqrt()
    })
}

/// For L₂ ⊂ L₁ and y₀ ∈ L₁: the law χ²_{k₁−k₂}(λ⁽²⁾) of Δ¹² + 2(k₁−k₂).
pub fn nested_delta_law(model1: &LinearModel, model2: &LinearModel, truth: &TrueModel) -> Result<NoncentralChi2> {
    check_same_n(model1, model2)?;
    if !is_nested(model1, model2) {
        return Err(Error::invalid("model 2's column space is not contained in model 1's"));
    }
    let lambda1 = lambda_misspec(truth, model1)?;
    let scale = 1.0 + crate::regression::norm2(truth.y0()) / truth.sigma0_2();
    if lambda1 > NESTING_TOLERANCE * scale {
        return Err(Error::invalid(format!(
            "true mean lies outside the larger model (λ = {lambda1:.3e})"
        )));
    }
    let lambda2 = lambda_misspec(truth, model2)?;
    let r = u32::try_from(model1.k() - model2.k()).map_err(|_| Error::invalid("dimension too large"))?;
    NoncentralChi2::new(r, if r == 0 { 0.0 } else { lambda2 })
}

fn shared_known_sigma2(model1: &LinearModel, model2: &LinearModel) -> Result<f64> {
    match (
        model1.variance_mode().known_sigma2(),
        model2.variance_mode().known_sigma2(),
    ) {
        (Some(a), Some(b)) if a == b => Ok(a),
        (Some(a), Some(b)) => Err(Error::VarianceMode(format!(
            "models carry different known variances ({a} and {b})"
        ))),
        _ => Err(Error::VarianceMode(
            "the AIC difference test needs a known error variance".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::VarianceMode;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model(cols: &[&[f64]], s2: f64) -> LinearModel {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        LinearModel::from_rows(&rows, VarianceMode::Known(s2)).unwrap()
    }

    fn e(n: usize, i: usize) -> Vec<f64> {
        (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
    }

    fn worked_pair() -> (LinearModel, LinearModel) {
        (model(&[&e(3, 0)], 1.0), model(&[&e(3, 1)], 1.0))
    }

    #[test]
    fn worked_three_point_example() {
        let (m1, m2) = worked_pair();
        let y = [1.0, 2.0, 0.0];
        assert_relative_eq!(delta12(&m1, &m2, &y).unwrap(), -3.0, epsilon = 1e-13);
        assert_relative_eq!(var_delta_estimate(&m1, &m2, &y, 1.0).unwrap(), 16.0, epsilon = 1e-12);
        let t = z_test(&m1, &m2, &y, 1.0, Alternative::TwoSided).unwrap();
        assert!(t.valid);
        assert_relative_eq!(t.z.unwrap(), -0.75, epsilon = 1e-13);
        assert!((t.p_two_sided.unwrap() - 0.453_254_704_753_736_4).abs() < 1e-12);

        let truth = TrueModel::new(y.to_vec(), 1.0).unwrap();
        let mom = delta_moments(&truth, &m1, &m2).unwrap();
        assert_relative_eq!(mom.var_delta, 24.0, epsilon = 1e-12);
        // λ¹ = 4, λ² = 1.
        assert_relative_eq!(mom.e_delta, -3.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_models() {
        let m = model(&[&[1.0, 1.0, 1.0, 1.0], &[0.0, 1.0, 2.0, 5.0]], 2.0);
        let y = [0.3, -1.0, 2.0, 4.0];
        assert_eq!(delta12(&m, &m, &y).unwrap(), 0.0);
        assert!(var_delta_estimate(&m, &m, &y, 2.0).unwrap().abs() < 1e-12);
        let t = z_test(&m, &m, &y, 2.0, Alternative::TwoSided).unwrap();
        assert!(!t.valid && t.identical_spaces);
        assert!(t.z.is_none() && t.p_two_sided.is_none());
        let truth = TrueModel::new(y.to_vec(), 2.0).unwrap();
        let mom = delta_moments(&truth, &m, &m).unwrap();
        assert!(mom.e_delta.abs() < 1e-12 && mom.var_delta.abs() < 1e-12);
    }

    #[test]
    fn zero_mean_moments() {
        let (m1, m2) = worked_pair();
        let truth = TrueModel::new(vec![0.0; 3], 1.0).unwrap();
        let mom = delta_moments(&truth, &m1, &m2).unwrap();
        let (t2, _) = diff_projection_traces(&m1, &m2).unwrap();
        assert_eq!(mom.var_delta, 2.0 * t2);
        assert_eq!(mom.e_delta, 0.0);
    }

    #[test]
    fn nested_delta_is_rss_difference() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let ones = [1.0; 6];
        let big = model(&[&ones, &x], 1.5);
        let small = model(&[&ones], 1.5);
        let y = [2.0; 6];
        let rss1 = fit_ols(&big, &y).unwrap().rss;
        let rss2 = fit_ols(&small, &y).unwrap().rss;
        assert_relative_eq!(
            delta12(&big, &small, &y).unwrap(),
            (rss2 - rss1) / 1.5 + 2.0 * (1.0 - 2.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn variance_modes_checked() {
        let (m1, _) = worked_pair();
        let m2 = model(&[&e(3, 1)], 2.0);
        assert!(matches!(delta12(&m1, &m2, &[0.0; 3]), Err(Error::VarianceMode(_))));
        let m3 = m2.with_variance_mode(VarianceMode::Unknown).unwrap();
        assert!(matches!(delta12(&m1, &m3, &[0.0; 3]), Err(Error::VarianceMode(_))));
        let m4 = model(&[&e(4, 1)], 1.0);
        assert!(delta12(&m1, &m4, &[0.0; 3]).is_err());
    }

    #[test]
    fn p_value_at_normal_quantile() {
        // Δ = 1.959964·√V̂ with V̂ = 16 from the worked pair.
        let (m1, m2) = worked_pair();
        let t = z_test(&m1, &m2, &[1.0, 2.0, 0.0], 1.0, Alternative::TwoSided).unwrap();
        let p = normal::two_sided_p(1.959964);
        assert!((p - 0.05).abs() < 1e-6);
        assert!((t.p_two_sided.unwrap() - normal::two_sided_p(-0.75)).abs() < 1e-14);
    }

    #[test]
    fn one_sided_alternatives() {
        // z = −0.75 favours model 2.
        let (m1, m2) = worked_pair();
        let y = [1.0, 2.0, 0.0];
        let two = z_test(&m1, &m2, &y, 1.0, Alternative::TwoSided).unwrap();
        let m2c = z_test(&m1, &m2, &y, 1.0, Alternative::M2Closer).unwrap();
        let m1c = z_test(&m1, &m2, &y, 1.0, Alternative::M1Closer).unwrap();
        assert_relative_eq!(m2c.p_value().unwrap(), two.p_value().unwrap() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(m1c.p_value().unwrap(), 1.0 - m2c.p_value().unwrap(), epsilon = 1e-15);
        assert_eq!("m1-closer".parse::<Alternative>().unwrap(), Alternative::M1Closer);
        assert!("sideways".parse::<Alternative>().is_err());
    }

    #[test]
    fn separation_flags() {
        let (m1, m2) = worked_pair();
        let zero = TrueModel::new(vec![0.0; 3], 1.0).unwrap();
        let rep = separation_diagnostic(&zero, &m1, &m2).unwrap();
        assert!(!rep.y0_term_bounded_below && !rep.separated);

        // Q¹Q² = 0: L₁ = span{e₁,e₂}, L₂ = span{e₃,e₄}.
        let m1 = model(&[&e(4, 0), &e(4, 1)], 1.0);
        let m2 = model(&[&e(4, 2), &e(4, 3)], 1.0);
        let truth = TrueModel::new(vec![1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        let rep = separation_diagnostic(&truth, &m1, &m2).unwrap();
        assert_relative_eq!(rep.trace_t2, (4.0 - 2.0) + (4.0 - 2.0), epsilon = 1e-12);
        assert!(!rep.trace_bounded && !rep.separated);
    }

    #[test]
    fn separation_of_growing_nested_pair() {
        // y₀ = c·x with λ's ∝ n for the constant-only and the constant+x models
        // against a quadratic; distinct growth rates.
        for n in [200usize, 800] {
            let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
            let ones = vec![1.0; n];
            let m1 = model(&[&ones, &x], 1.0);
            let m2 = model(&[&ones], 1.0);
            let y0: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| 3.0 * a + 2.0 * b).collect();
            let truth = TrueModel::new(y0, 1.0).unwrap();
            let rep = separation_diagnostic(&truth, &m1, &m2).unwrap();
            assert!(rep.separated, "{rep:?}");
            assert!((rep.lambda2_per_n - rep.lambda1_per_n).abs() > 0.1);
        }
    }

    #[test]
    fn nested_law() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
        let ones = [1.0; 8];
        let big = model(&[&ones, &x, &x2], 1.0);
        let small = model(&[&ones], 1.0);
        let inside = TrueModel::new(vec![4.0; 8], 1.0).unwrap();
        let law = nested_delta_law(&big, &small, &inside).unwrap();
        assert_eq!(law.dof(), 2);
        assert!(law.lambda() < 1e-20);

        let y0: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        let truth = TrueModel::new(y0, 1.0).unwrap();
        let law = nested_delta_law(&big, &small, &truth).unwrap();
        assert_relative_eq!(law.lambda(), lambda_misspec(&truth, &small).unwrap(), epsilon = 1e-12);

        let same = nested_delta_law(&small, &small, &inside).unwrap();
        assert!(same.is_degenerate());

        // Not nested, or truth outside the larger space.
        let other = model(&[&x2], 1.0);
        assert!(nested_delta_law(&small, &other, &inside).is_err());
        let outside = TrueModel::new(x.iter().map(|v| v.powi(3)).collect(), 1.0).unwrap();
        assert!(nested_delta_law(&big, &small, &outside).is_err());
    }

    proptest! {
        #[test]
        fn antisymmetry(
            a in proptest::collection::vec(-5.0f64..5.0, 6),
            b in proptest::collection::vec(-5.0f64..5.0, 6),
            y in proptest::collection::vec(-5.0f64..5.0, 6),
        ) {
            let ones = [1.0; 6];
            let m1 = LinearModel::from_rows(
                &(0..6).map(|i| vec![ones[i], a[i]]).collect::<Vec<_>>(), VarianceMode::Known(1.0));
            let m2 = LinearModel::from_rows(
                &(0..6).map(|i| vec![ones[i], b[i]]).collect::<Vec<_>>(), VarianceMode::Known(1.0));
            let (Ok(m1), Ok(m2)) = (m1, m2) else { return Ok(()); };
            prop_assert_eq!(delta12(&m1, &m2, &y).unwrap(), -delta12(&m2, &m1, &y).unwrap());
            let t12 = z_test(&m1, &m2, &y, 1.0, Alternative::TwoSided).unwrap();
            let t21 = z_test(&m2, &m1, &y, 1.0, Alternative::TwoSided).unwrap();
            prop_assert_eq!(t12.valid, t21.valid);
            if let (Some(z12), Some(z21)) = (t12.z, t21.z) {
                prop_assert!((z12 + z21).abs() <= 1e-9 * (1.0 + z12.abs()));
                prop_assert!((t12.p_two_sided.unwrap() - t21.p_two_sided.unwrap()).abs() < 1e-9);
                let p = t12.p_two_sided.unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
