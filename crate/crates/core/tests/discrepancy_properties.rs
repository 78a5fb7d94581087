//! Monte-Carlo and quadrature checks of the known- and fitted-variance
//! discrepancy formulas.

use nalgebra::DMatrix;

use infocrit::discrepancy::{msc_known_sigma, realized_discrepancies, realized_discrepancies_unknown_sigma, TrueModel};
use infocrit::regression::{fit_ols, LinearModel, VarianceMode};
use infocrit::sim::{generate_data, misspecified_mean, moments, replication_rng};

const REPS: u64 = 100_000;

fn line_design(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / n as f64 })
}

fn truth_with_lambda(model: &LinearModel, lambda: f64, sigma0_2: f64) -> TrueModel {
    let n = model.n();
    let base: Vec<f64> = (0..n).map(|i| 1.0 - 0.5 * i as f64).collect();
    let dir: Vec<f64> = (0..n).map(|i| (0.9 * i as f64).sin()).collect();
    TrueModel::new(
        misspecified_mean(model, &base, &dir, lambda, sigma0_2).unwrap(),
        sigma0_2,
    )
    .unwrap()
}

/// Half the criterion with its constant estimates the overall discrepancy
/// without bias, for matched and for mismatched error variances.
#[test]
fn known_variance_criterion_is_unbiased() {
    let n = 20;
    for (sigma2, sigma0_2) in [(1.0, 1.0), (2.0, 0.5)] {
        let model = LinearModel::new(line_design(n), VarianceMode::Known(sigma2)).unwrap();
        for (j, lambda) in [0.0, 2.0, n as f64 / 2.0].into_iter().enumerate() {
            let truth = truth_with_lambda(&model, lambda, sigma0_2);
            let gaps: Vec<f64> = (0..REPS)
                .map(|i| {
                    let y = generate_data(&truth, &mut replication_rng(31 + j as u64, i));
                    let rss = fit_ols(&model, &y).unwrap().rss;
                    let msc = msc_known_sigma(rss, sigma2, sigma0_2, n, 2, true).unwrap();
                    msc / 2.0 - realized_discrepancies(&truth, &model, &y).unwrap().od
                })
                .collect();
            let m = moments(&gaps);
            assert!(
                m.mean.abs() <= 5.0 * m.se_mean,
                "σ²={sigma2} σ0²={sigma0_2} λ={lambda}: mean {} se {}",
                m.mean,
                m.se_mean
            );
        }
    }
}

#[test]
fn fit_error_and_variance_estimate_are_uncorrelated() {
    let n = 15;
    let model = LinearModel::new(line_design(n), VarianceMode::Unknown).unwrap();
    let truth = truth_with_lambda(&model, 5.0, 1.0);
    let (a, b): (Vec<f64>, Vec<f64>) = (0..REPS)
        .map(|i| {
            let y = generate_data(&truth, &mut replication_rng(57, i));
            let r = realized_discrepancies_unknown_sigma(&truth, &model, &y).unwrap();
            (r.fit_error, r.sigma2_hat)
        })
        .unzip();
    let (ma, mb) = (moments(&a), moments(&b));
    let cov = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ma.mean) * (y - mb.mean))
        .sum::<f64>()
        / (REPS as f64 - 1.0);
    let corr = cov / (ma.var * mb.var).sqrt();
    assert!(corr.abs() < 5.0 / (REPS as f64).sqrt(), "correlation {corr}");
}

/// −∫ g ln f for isotropic normals on ℝ³ by composite Simpson over ±12 sd of g.
fn cross_entropy_3d(mg: [f64; 3], sg2: f64, mf: [f64; 3], sf2: f64) -> f64 {
    let m = 160;
    let half = 12.0 * sg2.sqrt();
    let h = 2.0 * half / m as f64;
    let w = |i: usize| {
        if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let norm = (two_pi * sg2).powf(-1.5);
    let axis = |d: usize| -> Vec<f64> { (0..=m).map(|i| mg[d] - half + i as f64 * h).collect() };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let mut s = 0.0;
    for (i, a) in xs.iter().enumerate() {
        for (j, b) in ys.iter().enumerate() {
            for (l, c) in zs.iter().enumerate() {
                let p = [*a, *b, *c];
                let dg: f64 = (0..3).map(|d| (p[d] - mg[d]).powi(2)).sum();
                let df: f64 = (0..3).map(|d| (p[d] - mf[d]).powi(2)).sum();
                let g = norm * (-dg / (2.0 * sg2)).exp();
                s += w(i) * w(j) * w(l) * g * (df / (2.0 * sf2) + 1.5 * (two_pi * sf2).ln());
            }
        }
    }
    s * (h / 3.0).powi(3)
}

#[test]
fn three_point_discrepancies_match_quadrature() {
    let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 3.0]);
    let (sigma0_2, sigma2) = (0.8, 0.5);
    let y0 = [0.2, 1.5, 1.1];
    let y = [0.6, 0.9, 2.0];
    let truth = TrueModel::new(y0.to_vec(), sigma0_2).unwrap();
    let model = LinearModel::new(x.clone(), VarianceMode::Known(sigma2)).unwrap();
    let dd = realized_discrepancies(&truth, &model, &y).unwrap();

    // Hat matrix from the normal equations, independent of the QR path.
    let p = &x * (x.transpose() * &x).try_inverse().unwrap() * x.transpose();
    let proj = |v: [f64; 3]| {
        let r = &p * nalgebra::Vector3::from(v);
        [r[0], r[1], r[2]]
    };
    let (fitted, best) = (proj(y), proj(y0));
    let od = cross_entropy_3d(y0, sigma0_2, fitted, sigma2);
    let ad = cross_entropy_3d(y0, sigma0_2, best, sigma2);
    let ed = cross_entropy_3d(best, sigma2, fitted, sigma2);
    for (name, closed, quad) in [("OD", dd.od, od), ("AD", dd.ad, ad), ("ED", dd.ed, ed)] {
        assert!(
            (closed - quad).abs() < 1e-6,
            "{name}: closed {closed} quadrature {quad}"
        );
    }
}
