//! Sample summaries used by the Monte-Carlo checks.

use crate::normal;

/// Sample mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub se_mean: f64,
    /// √((m₄ − s⁴)/N), the large-sample standard error of the variance.
    pub se_var: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let var = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
    let biased = m2 / nf;
    m4 /= nf;
    Moments {
        count: n,
        mean,
        var,
        se_mean: (var / nf).sqrt(),
        se_var: ((m4 - biased * biased).max(0.0) / nf).sqrt(),
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and N(0,1).
pub fn ks_normal(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = normal::cdf(*x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS critical distance at significance `alpha`:
/// √(−ln(α/2)/2)·√((n+m)/(nm)).
pub fn ks_two_sample_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
