//! Least-squares fitting and projection algebra for full-rank designs.
//!
//! A [`LinearModel`] carries a thin orthonormal basis `U` (n×k) for the
//! column space of its design matrix. Every projection is applied through
//! that basis: `Pv = U(Uᵗv)` and `Qv = v − Pv`. No n×n matrix is ever formed,
//! and traces of products of two projections reduce to the k₁×k₂ cross-Gram
//! matrix `U₁ᵗU₂`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular-value ratio below which a design is declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Observed responses, optionally with per-point error bars or a known
/// common error variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    error_bars: Option<Vec<f64>>,
    common_sigma2: Option<f64>,
}

impl Dataset {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::invalid("dataset must contain at least one observation"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("response values must be finite"));
        }
        Ok(Self {
            y,
            error_bars: None,
            common_sigma2: None,
        })
    }

    pub fn with_error_bars(y: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let mut ds = Self::new(y)?;
        if sigma.len() != ds.y.len() {
            return Err(Error::DimensionMismatch {
                what: "error bars",
                expected: ds.y.len(),
                got: sigma.len(),
            });
        }
        if let Some(bad) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid(format!(
                "error bar {} is not strictly positive ({})",
                bad, sigma[bad]
            )));
        }
        ds.error_bars = Some(sigma);
        Ok(ds)
    }

    pub fn with_common_sigma2(y: Vec<f64>, sigma2: f64) -> Result<Self> {
        let mut ds = Self::new(y)?;
        check_positive("common variance", sigma2)?;
        ds.common_sigma2 = Some(sigma2);
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn error_bars(&self) -> Option<&[f64]> {
        self.error_bars.as_deref()
    }

    pub fn common_sigma2(&self) -> Option<f64> {
        self.common_sigma2
    }
}

/// Output of [`standardize_errors`]: the rescaled data plus the per-row
/// factors `target_sigma/σᵢ` that must also be applied to the design rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub dataset: Dataset,
    pub row_scale: Vec<f64>,
}

/// Rescale heteroscedastic data `ȳᵢ ± σᵢ` to a common known variance
/// `target_sigma²` by `yᵢ = (target_sigma/σᵢ)·ȳᵢ`.
pub fn standardize_errors(dataset: &Dataset, target_sigma: f64) -> Result<Standardized> {
    check_positive("target sigma", target_sigma)?;
    let sigma = dataset
        .error_bars()
        .ok_or_else(|| Error::invalid("dataset has no error bars to standardize"))?;
    let row_scale: Vec<f64> = sigma.iter().map(|s| target_sigma / s).collect();
    let y = dataset.y().iter().zip(&row_scale).map(|(y, c)| c * y).collect();
    Ok(Standardized {
        dataset: Dataset::with_common_sigma2(y, target_sigma * target_sigma)?,
        row_scale,
    })
}

/// Whether the error variance is supplied (error bars) or fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    Known(f64),
    Unknown,
}

impl VarianceMode {
    pub fn known_sigma2(&self) -> Option<f64> {
        match *self {
            VarianceMode::Known(s2) => Some(s2),
            VarianceMode::Unknown => None,
        }
    }
}

/// A full-rank n×k design matrix together with its variance mode.
#[derive(Debug, Clone)]
pub struct LinearModel {
    design: DMatrix<f64>,
    mode: VarianceMode,
    basis: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(design: DMatrix<f64>, mode: VarianceMode) -> Result<Self> {
        let (n, k) = design.shape();
        if k == 0 || n <= k {
            return Err(Error::TooFewObservations { n, k });
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design matrix entries must be finite"));
        }
        if let VarianceMode::Known(s2) = mode {
            check_positive("known variance", s2)?;
        }
        let qr = design.clone().qr();
        let basis = qr.q();
        let r = qr.r();
        let sv = r.singular_values();
        let max = sv.max();
        let min = sv.min();
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if ratio.is_nan() || ratio < RANK_TOLERANCE {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(Self { design, mode, basis, r })
    }

    /// Build from observation rows (one `Vec` per row).
    pub fn from_rows(rows: &[Vec<f64>], mode: VarianceMode) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                what: "design row length",
                expected: k,
                got: rows[bad].len(),
            });
        }
        Self::new(DMatrix::from_fn(n, k, |i, j| rows[i][j]), mode)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn k(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn variance_mode(&self) -> VarianceMode {
        self.mode
    }

    /// Orthonormal basis of the column space (n×k).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn with_variance_mode(&self, mode: VarianceMode) -> Result<Self> {
        if let VarianceMode::Known(s2) = mode {
            check_positive("known variance", s2)?;
        }
        Ok(Self { mode, ..self.clone() })
    }

    /// Multiply row i of the design by `scale[i]`; pairs with
    /// [`standardize_errors`].
    pub fn scale_rows(&self, scale: &[f64]) -> Result<Self> {
        self.check_len("row scale", scale.len())?;
        let mut x = self.design.clone();
        for (i, c) in scale.iter().enumerate() {
            x.row_mut(i).scale_mut(*c);
        }
        Self::new(x, self.mode)
    }

    /// Pv: orthogonal projection onto the column space.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len("vector", v.len())?;
        Ok(self.project_unchecked(v))
    }

    pub(crate) fn project_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        let coef = self.basis.tr_mul(&v);
        (&self.basis * coef).data.into()
    }

    /// Qv = v − Pv: projection onto the error space.
    pub fn apply_q(&self, v: &[f64]) -> Result<Vec<f64>> {
        let pv = self.project(v)?;
        Ok(v.iter().zip(pv).map(|(a, b)| a - b).collect())
    }

    /// vᵗQv = ‖Qv‖².
    pub fn quadratic_form_q(&self, v: &[f64]) -> Result<f64> {
        Ok(norm2(&self.apply_q(v)?))
    }

    fn check_len(&self, what: &'static str, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.n(),
                got,
            });
        }
        Ok(())
    }
}

/// Least-squares fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub rss: f64,
    /// ML variance estimate RSS/n; only set in [`VarianceMode::Unknown`].
    pub sigma2_hat: Option<f64>,
    pub n: usize,
    pub k: usize,
}

impl FitResult {
    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.y_hat).map(|(a, b)| a - b).collect()
    }
}

/// Ordinary least squares through the model's QR factorization.
pub fn fit_ols(model: &LinearModel, y: &[f64]) -> Result<FitResult> {
    model.check_len("response", y.len())?;
    let yv = DVector::from_column_slice(y);
    let qty = model.basis.tr_mul(&yv);
    let beta = model
        .r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { ratio: 0.0 })?;
    let y_hat: Vec<f64> = (&model.basis * &qty).data.into();
    let rss = y.iter().zip(&y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let (n, k) = (model.n(), model.k());
    let sigma2_hat = match model.mode {
        VarianceMode::Unknown => Some(rss / n as f64),
        VarianceMode::Known(_) => None,
    };
    Ok(FitResult {
        beta_hat: beta.data.into(),
        y_hat,
        rss,
        sigma2_hat,
        n,
        k,
    })
}

/// `(tr[(Q₂−Q₁)²], tr[(Q₂−Q₁)³])` from the cross-Gram matrix `U₁ᵗU₂`.
///
/// Q₂ − Q₁ = P₁ − P₂, so with C = U₁ᵗU₂ the square has trace
/// k₁ + k₂ − 2‖C‖²_F. Every mixed term of the cube has trace ‖C‖²_F and
/// they cancel in pairs, leaving k₁ − k₂.
pub fn diff_projection_traces(model1: &LinearModel, model2: &LinearModel) -> Result<(f64, f64)> {
    check_same_n(model1, model2)?;
    let c2 = cross_gram_norm2(model1, model2);
    let (k1, k2) = (model1.k() as f64, model2.k() as f64);
    let t2 = (k1 + k2 - 2.0 * c2).max(0.0);
    let t3 = (k1 - 3.0 * c2) + (3.0 * c2 - k2);
    Ok((t2, t3))
}

/// vᵗ(Q₂−Q₁)²v = ‖P₁v − P₂v‖².
pub fn quadratic_form_diff_q(model1: &LinearModel, model2: &LinearModel, v: &[f64]) -> Result<f64> {
    check_same_n(model1, model2)?;
    let p1 = model1.project(v)?;
    let p2 = model2.project(v)?;
    Ok(p1.iter().zip(&p2).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// ‖U₁ᵗU₂‖²_F = tr(P₁P₂).
pub(crate) fn cross_gram_norm2(model1: &LinearModel, model2: &LinearModel) -> f64 {
    model1.basis.tr_mul(&model2.basis).norm_squared()
}

pub(crate) fn check_same_n(model1: &LinearModel, model2: &LinearModel) -> Result<()> {
    if model1.n() != model2.n() {
        return Err(Error::DimensionMismatch {
            what: "models must share n",
            expected: model1.n(),
            got: model2.n(),
        });
    }
    Ok(())
}

pub(crate) fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn col(v: &[f64]) -> LinearModel {
        LinearModel::from_rows(&v.iter().map(|x| vec![*x]).collect::<Vec<_>>(), VarianceMode::Unknown).unwrap()
    }

    fn unit(n: usize, i: usize) -> LinearModel {
        col(&(0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect::<Vec<_>>())
    }

    #[test]
    fn standardize_direct_ratio() {
        let ds = Dataset::with_error_bars(vec![2.0, 6.0], vec![1.0, 2.0]).unwrap();
        let st = standardize_errors(&ds, 1.0).unwrap();
        assert_eq!(st.dataset.y(), &[2.0, 3.0]);
        assert_eq!(st.row_scale, vec![1.0, 0.5]);
        assert_eq!(st.dataset.common_sigma2(), Some(1.0));
        assert!(st.dataset.error_bars().is_none());
    }

    #[test]
    fn standardize_identity_and_hand_values() {
        let ds = Dataset::with_error_bars(vec![5.0], vec![1.0]).unwrap();
        assert_eq!(standardize_errors(&ds, 1.0).unwrap().dataset.y(), &[5.0]);

        let ds = Dataset::with_error_bars(vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 4.0]).unwrap();
        let st = standardize_errors(&ds, 2.0).unwrap();
        assert_eq!(st.dataset.y(), &[2.0, 1.0, 0.5]);
        assert_eq!(st.dataset.common_sigma2(), Some(4.0));
    }

    #[test]
    fn standardize_errors_rejected() {
        let plain = Dataset::new(vec![1.0, 2.0]).unwrap();
        assert!(standardize_errors(&plain, 1.0).is_err());
        let ds = Dataset::with_error_bars(vec![1.0], vec![1.0]).unwrap();
        assert!(standardize_errors(&ds, 0.0).is_err());
        assert!(Dataset::with_error_bars(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(Dataset::with_error_bars(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(Dataset::new(vec![]).is_err());
    }

    #[test]
    fn fit_mean_of_two_points() {
        let fit = fit_ols(&col(&[1.0, 1.0]), &[1.0, 3.0]).unwrap();
        assert_relative_eq!(fit.beta_hat[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.y_hat[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.y_hat[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.rss, 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.sigma2_hat.unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fit_rejects_square_and_deficient_designs() {
        let eye = LinearModel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], VarianceMode::Unknown);
        assert!(matches!(eye, Err(Error::TooFewObservations { n: 2, k: 2 })));
        let dup = LinearModel::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 4.0]], VarianceMode::Unknown);
        assert!(matches!(dup, Err(Error::RankDeficient { .. })));
        let ragged = LinearModel::from_rows(&[vec![1.0, 2.0], vec![1.0]], VarianceMode::Unknown);
        assert!(ragged.is_err());
        assert!(fit_ols(&col(&[1.0, 1.0]), &[1.0]).is_err());
    }

    #[test]
    fn fit_line_through_three_points() {
        // Normal equations: [[3,3],[3,5]] β = [5,9] → β = (−1/3, 2).
        let m = LinearModel::from_rows(
            &[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]],
            VarianceMode::Known(1.0),
        )
        .unwrap();
        let fit = fit_ols(&m, &[0.0, 1.0, 4.0]).unwrap();
        assert_relative_eq!(fit.beta_hat[0], -1.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(fit.beta_hat[1], 2.0, epsilon = 1e-13);
        assert_relative_eq!(fit.rss, 2.0 / 3.0, epsilon = 1e-13);
        assert!(fit.sigma2_hat.is_none());
    }

    #[test]
    fn fit_line_matches_grid_search() {
        // Brute-force oracle: refine a grid around the minimizer of RSS(β).
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 4.0];
        let rss = |a: f64, b: f64| -> f64 { xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum() };
        let (mut a0, mut b0, mut h) = (0.0, 0.0, 1.0);
        for _ in 0..40 {
            let mut best = (f64::INFINITY, a0, b0);
            for i in -10..=10 {
                for j in -10..=10 {
                    let (a, b) = (a0 + h * i as f64, b0 + h * j as f64);
                    let r = rss(a, b);
                    if r < best.0 {
                        best = (r, a, b);
                    }
                }
            }
            a0 = best.1;
            b0 = best.2;
            h /= 4.0;
        }
        // RSS is flat to rounding within ~1e-8 of the minimizer.
        assert!((a0 + 1.0 / 3.0).abs() < 1e-6);
        assert!((b0 - 2.0).abs() < 1e-6);
        assert!((rss(a0, b0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_line_matches_normal_equations() {
        // Closed-form simple regression from centred sums.
        let xs: Vec<f64> = (0..25)
            .map(|i| (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.1)
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 1.5 - 0.7 * x + (i as f64 * 1.3).cos())
            .collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x]).collect();
        let fit = fit_ols(&LinearModel::from_rows(&rows, VarianceMode::Unknown).unwrap(), &ys).unwrap();
        assert_relative_eq!(fit.beta_hat[0], icpt, epsilon = 1e-12);
        assert_relative_eq!(fit.beta_hat[1], slope, epsilon = 1e-12);
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
        assert_relative_eq!(fit.rss, rss, epsilon = 1e-11);
    }

    #[test]
    fn apply_q_examples() {
        let m = col(&[1.0, 1.0]);
        let q = m.apply_q(&[1.0, 1.0]).unwrap();
        assert!(q.iter().all(|v| v.abs() < 1e-15));
        let q = m.apply_q(&[1.0, -1.0]).unwrap();
        assert_relative_eq!(q[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(q[1], -1.0, epsilon = 1e-15);

        let m = col(&[1.0, 1.0, 1.0]);
        let q = m.apply_q(&[1.0, 2.0, 3.0]).unwrap();
        for (got, want) in q.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(m.apply_q(&[1.0]).is_err());
    }

    #[test]
    fn quadratic_form_q_examples() {
        let m = col(&[1.0, 1.0, 1.0]);
        assert!(m.quadratic_form_q(&[3.0, 3.0, 3.0]).unwrap() < 1e-13);
        assert_relative_eq!(m.quadratic_form_q(&[1.0, 2.0, 3.0]).unwrap(), 2.0, epsilon = 1e-13);
        assert_eq!(m.quadratic_form_q(&[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn diff_traces_examples() {
        let m = col(&[1.0, 2.0, 3.0]);
        let (t2, t3) = diff_projection_traces(&m, &m).unwrap();
        assert!(t2.abs() < 1e-13);
        assert!(t3.abs() < 1e-13);

        let (t2, _) = diff_projection_traces(&unit(3, 0), &unit(3, 1)).unwrap();
        assert_relative_eq!(t2, 2.0, epsilon = 1e-14);

        // L₂ = span{(1,1,1,1,1)} ⊂ L₁ = span{1, x, x²}.
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let big = LinearModel::from_rows(
            &xs.iter().map(|x| vec![1.0, *x, x * x]).collect::<Vec<_>>(),
            VarianceMode::Unknown,
        )
        .unwrap();
        let small = col(&[1.0; 5]);
        let (t2, t3) = diff_projection_traces(&big, &small).unwrap();
        assert_relative_eq!(t2, 2.0, epsilon = 1e-12);
        assert_relative_eq!(t3, 2.0, epsilon = 1e-12);

        assert!(diff_projection_traces(&unit(3, 0), &unit(4, 0)).is_err());
    }

    #[test]
    fn diff_quadratic_form_examples() {
        let m = col(&[1.0, 2.0, 3.0]);
        assert!(quadratic_form_diff_q(&m, &m, &[4.0, -1.0, 2.0]).unwrap() < 1e-14);
        let v = quadratic_form_diff_q(&unit(3, 0), &unit(3, 1), &[1.0, 2.0, 0.0]).unwrap();
        assert_relative_eq!(v, 5.0, epsilon = 1e-14);
        assert_eq!(quadratic_form_diff_q(&unit(3, 0), &unit(3, 1), &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn scaled_rows_reproduce_weighted_fit() {
        // A constant model on standardized data recovers the inverse-variance
        // weighted mean.
        let ds = Dataset::with_error_bars(vec![1.0, 3.0], vec![1.0, 2.0]).unwrap();
        let st = standardize_errors(&ds, 1.0).unwrap();
        let m = col(&[1.0, 1.0]).scale_rows(&st.row_scale).unwrap();
        let fit = fit_ols(&m, st.dataset.y()).unwrap();
        let wmean = (1.0 * 1.0 + 3.0 * 0.25) / (1.0 + 0.25);
        assert_relative_eq!(fit.beta_hat[0], wmean, epsilon = 1e-14);
    }
}
