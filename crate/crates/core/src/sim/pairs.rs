//! Random designs and constructed true means with prescribed mis-specification.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::discrepancy::{lambda_misspec, TrueModel};
use crate::error::{Error, Result};
use crate::regression::{check_positive, norm2, LinearModel, VarianceMode};
use crate::selection::separation_diagnostic;

/// Identity k₁ + λ⁽¹⁾ = k₂ + λ⁽²⁾ must hold to this absolute tolerance.
pub const H0_TOLERANCE: f64 = 1e-8;

const MAX_ATTEMPTS: usize = 100;

/// A true model and two candidates (known σ₀²) with their λ's.
#[derive(Debug, Clone)]
pub struct ModelPair {
    pub truth: TrueModel,
    pub model1: LinearModel,
    pub model2: LinearModel,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// An n×k design: an intercept column followed by k−1 standard normal
/// columns, or a single normal column when k = 1.
pub fn random_design<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, j| {
        if j == 0 && k > 1 {
            1.0
        } else {
            rng.sample(StandardNormal)
        }
    })
}

/// P·base + √(λσ₀²)·Qd/‖Qd‖: a mean whose mis-specification against
/// `model` is exactly λ.
pub fn misspecified_mean(
    model: &LinearModel,
    base: &[f64],
    direction: &[f64],
    lambda: f64,
    sigma0_2: f64,
) -> Result<Vec<f64>> {
    check_positive("sigma0_2", sigma0_2)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    let p = model.project(base)?;
    let q = model.apply_q(direction)?;
    let len = norm2(&q).sqrt();
    if lambda > 0.0 && len <= 1e-12 * norm2(direction).sqrt().max(1e-300) {
        return Err(Error::invalid("direction lies in the model's column space"));
    }
    let c = if lambda > 0.0 {
        (lambda * sigma0_2).sqrt() / len
    } else {
        0.0
    };
    Ok(p.iter().zip(&q).map(|(a, b)| a + c * b).collect())
}

/// Random vectors shared by the pair constructions: the two designs, a unit
/// vector uₗ in each column space (the last design column, normalized), and
/// a unit vector g orthogonal to both spaces.
struct Geometry {
    model1: LinearModel,
    model2: LinearModel,
    u1: Vec<f64>,
    u2: Vec<f64>,
    g: Vec<f64>,
    /// ‖Q₂u₁‖² and ‖Q₁u₂‖².
    q21: f64,
    q12: f64,
}

impl Geometry {
    fn draw<R: Rng + ?Sized>(n: usize, k1: usize, k2: usize, sigma0_2: f64, rng: &mut R) -> Result<Self> {
        let x1 = random_design(n, k1, rng);
        let x2 = random_design(n, k2, rng);
        let mode = VarianceMode::Known(sigma0_2);
        let model1 = LinearModel::new(x1.clone(), mode)?;
        let model2 = LinearModel::new(x2.clone(), mode)?;
        let unit = |m: &DMatrix<f64>| {
            let c: Vec<f64> = m.column(m.ncols() - 1).iter().copied().collect();
            let len = norm2(&c).sqrt();
            c.into_iter().map(|v| v / len).collect::<Vec<f64>>()
        };
        let (u1, u2) = (unit(&x1), unit(&x2));

        // Both designs start with the same intercept when k > 1.
        let skip = usize::from(k1 > 1 && k2 > 1);
        let cols: Vec<_> = x1.column_iter().chain(x2.column_iter().skip(skip)).collect();
        let g = if cols.len() < n {
            let joint = LinearModel::new(DMatrix::from_columns(&cols), mode)?;
            let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let q = joint.apply_q(&raw)?;
            let len = norm2(&q).sqrt();
            q.into_iter().map(|v| v / len).collect()
        } else {
            vec![0.0; n]
        };
        let q21 = model2.quadratic_form_q(&u1)?;
        let q12 = model1.quadratic_form_q(&u2)?;
        Ok(Self {
            model1,
            model2,
            u1,
            u2,
            g,
            q21,
            q12,
        })
    }

    /// y₀ = a·u₁ + b·u₂ + c·g.
    fn mean(&self, a: f64, b: f64, c: f64) -> Vec<f64> {
        (0..self.g.len())
            .map(|i| a * self.u1[i] + b * self.u2[i] + c * self.g[i])
            .collect()
    }

    fn finish(self, y0: Vec<f64>, sigma0_2: f64) -> Result<ModelPair> {
        let truth = TrueModel::new(y0, sigma0_2)?;
        let lambda1 = lambda_misspec(&truth, &self.model1)?;
        let lambda2 = lambda_misspec(&truth, &self.model2)?;
        Ok(ModelPair {
            truth,
            model1: self.model1,
            model2: self.model2,
            lambda1,
            lambda2,
        })
    }
}

/// Two random candidates and a true mean with λ⁽¹⁾ and λ⁽²⁾ as given.
///
/// y₀ = a·u₁ + b·u₂ + c·g with c² = ½·min(λ⁽¹⁾, λ⁽²⁾)σ₀², so that
/// λ⁽¹⁾σ₀² = b²‖Q₁u₂‖² + c² and λ⁽²⁾σ₀² = a²‖Q₂u₁‖² + c².
pub fn pair_with_lambdas<R: Rng + ?Sized>(
    n: usize,
    k1: usize,
    k2: usize,
    lambda1: f64,
    lambda2: f64,
    sigma0_2: f64,
    rng: &mut R,
) -> Result<ModelPair> {
    check_pair_dims(n, k1, k2)?;
    check_positive("sigma0_2", sigma0_2)?;
    for l in [lambda1, lambda2] {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::invalid(format!("lambda must be nonnegative, got {l}")));
        }
    }
    for _ in 0..MAX_ATTEMPTS {
        let geo = Geometry::draw(n, k1, k2, sigma0_2, rng)?;
        if geo.q12 < 1e-8 || geo.q21 < 1e-8 || (norm2(&geo.g) == 0.0 && lambda1.min(lambda2) > 0.0) {
            continue;
        }
        let c2 = 0.5 * lambda1.min(lambda2) * sigma0_2;
        let b = ((lambda1 * sigma0_2 - c2) / geo.q12).sqrt();
        let a = ((lambda2 * sigma0_2 - c2) / geo.q21).sqrt();
        let y0 = geo.mean(a, b, c2.sqrt());
        return geo.finish(y0, sigma0_2);
    }
    Err(Error::invalid("could not draw a usable pair of designs"))
}

/// A pair with equal expected overall discrepancy, k₁ + λ⁽¹⁾ = k₂ + λ⁽²⁾,
/// that is separately mis-specified.
///
/// With a² = ½nσ₀² and c² = ¼nσ₀² fixed, λ⁽²⁾ does not depend on b and
/// k₁ + λ⁽¹⁾(b) − k₂ − λ⁽²⁾ is increasing in b ≥ 0; its root is bracketed by
/// doubling and refined by bisection. Draws new designs when the root cannot
/// be bracketed or the result fails the checks.
pub fn build_h0_pair<R: Rng + ?Sized>(n: usize, k1: usize, k2: usize, sigma0_2: f64, rng: &mut R) -> Result<ModelPair> {
    check_pair_dims(n, k1, k2)?;
    check_positive("sigma0_2", sigma0_2)?;
    let nf = n as f64;
    let a = (0.5 * nf * sigma0_2).sqrt();
    let c = (0.25 * nf * sigma0_2).sqrt();
    let (k1f, k2f) = (k1 as f64, k2 as f64);
    for _ in 0..MAX_ATTEMPTS {
        let geo = Geometry::draw(n, k1, k2, sigma0_2, rng)?;
        let gap = |b: f64| -> Result<f64> {
            let y0 = geo.mean(a, b, c);
            let l1 = geo.model1.quadratic_form_q(&y0)? / sigma0_2;
            let l2 = geo.model2.quadratic_form_q(&y0)? / sigma0_2;
            Ok(k1f + l1 - k2f - l2)
        };
        let Some(b) = bisect_increasing(&gap)? else { continue };
        let y0 = geo.mean(a, b, c);
        let pair = geo.finish(y0, sigma0_2)?;
        let identity = (k1f + pair.lambda1) - (k2f + pair.lambda2);
        if identity.abs() >= H0_TOLERANCE {
            continue;
        }
        if !separation_diagnostic(&pair.truth, &pair.model1, &pair.model2)?.separated {
            continue;
        }
        return Ok(pair);
    }
    Err(Error::invalid(format!(
        "no equal-discrepancy pair found in {MAX_ATTEMPTS} attempts (n = {n}, k1 = {k1}, k2 = {k2})"
    )))
}

/// Root of an increasing function on [0, ∞), or `None` if f(0) > 0 or no
/// sign change is found.
fn bisect_increasing(f: &dyn Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    let f0 = f(0.0)?;
    if f0 == 0.0 {
        return Ok(Some(0.0));
    }
    if f0 > 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut bracketed = false;
    for _ in 0..200 {
        if f(hi)? >= 0.0 {
            bracketed = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !bracketed {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return whichever end is closer to the root.
    Ok(Some(if f(lo)?.abs() <= f(hi)?.abs() { lo } else { hi }))
}

fn check_pair_dims(n: usize, k1: usize, k2: usize) -> Result<()> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::invalid("models need at least one column"));
    }
    if n <= k1.max(k2) + 2 {
        return Err(Error::TooFewObservations { n, k: k1.max(k2) + 2 });
    }
    Ok(())
}
