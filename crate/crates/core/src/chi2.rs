//! Central and non-central chi-squared laws: moments, the negative first
//! moment, and sampling.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// χ²_r(λ): the law of ‖z + u‖² for z a standard normal r-vector and
/// ‖u‖² = λ. `r = 0` (with λ = 0) is the point mass at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoncentralChi2 {
    r: u32,
    lambda: f64,
}

impl NoncentralChi2 {
    pub fn new(r: u32, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!(
                "non-centrality must be finite and nonnegative, got {lambda}"
            )));
        }
        if r == 0 && lambda != 0.0 {
            return Err(Error::invalid("zero degrees of freedom require zero non-centrality"));
        }
        Ok(Self { r, lambda })
    }

    pub fn central(r: u32) -> Self {
        Self { r, lambda: 0.0 }
    }

    pub fn dof(&self) -> u32 {
        self.r
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_degenerate(&self) -> bool {
        self.r == 0
    }

    pub fn mean(&self) -> f64 {
        self.r as f64 + self.lambda
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.r as f64 + 4.0 * self.lambda
    }

    /// E[1/X] = e^{−λ/2} Σₘ (λ/2)ᵐ/m! · 1/(r − 2 + 2m), finite for r > 2.
    ///
    /// The Poisson weights are generated by recurrence outward from the mode
    /// ⌊λ/2⌋, with the mode weight set to one. Dividing by the summed weights
    /// restores the e^{−λ/2}/m! normalization without evaluating it, so no
    /// term underflows for large λ.
    pub fn neg_first_moment(&self) -> Result<f64> {
        if self.r <= 2 {
            return Err(Error::undefined(format!(
                "E[1/X] diverges for {} degrees of freedom",
                self.r
            )));
        }
        let r = self.r as f64;
        let mu = self.lambda / 2.0;
        if mu == 0.0 {
            return Ok(1.0 / (r - 2.0));
        }
        let inv = |m: f64| 1.0 / (r - 2.0 + 2.0 * m);
        let mode = mu.floor();

        let mut sum_w = 1.0;
        let mut sum_t = inv(mode);

        // Upward: both weights and terms decay geometrically once m + 1 > μ.
        let mut w = 1.0;
        let mut m = mode;
        loop {
            w *= mu / (m + 1.0);
            m += 1.0;
            let t = w * inv(m);
            sum_w += w;
            sum_t += t;
            let q = mu / (m + 1.0);
            if q < 1.0 && t * q / (1.0 - q) < 1e-17 * sum_t && w * q / (1.0 - q) < 1e-17 * sum_w {
                break;
            }
        }

        // Downward: weights fall, 1/(r−2+2m) rises but is capped by 1/(r−2),
        // so the remaining m terms are bounded by m·w/(r−2).
        let mut w = 1.0;
        let mut m = mode;
        while m > 0.0 {
            w *= m / mu;
            m -= 1.0;
            sum_w += w;
            sum_t += w * inv(m);
            if m * w / (r - 2.0) < 1e-17 * sum_t && m * w < 1e-17 * sum_w {
                break;
            }
        }

        Ok(sum_t / sum_w)
    }

    /// One draw via (Z + √λ)² + χ²_{r−1}.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// A reusable sampler; cheaper than [`Self::sample`] in loops.
    pub fn sampler(&self) -> Chi2Sampler {
        Chi2Sampler {
            shift: self.lambda.sqrt(),
            rest: (self.r > 1).then(|| ChiSquared::new((self.r - 1) as f64).expect("positive dof")),
            degenerate: self.r == 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Chi2Sampler {
    shift: f64,
    rest: Option<ChiSquared<f64>>,
    degenerate: bool,
}

impl Distribution<f64> for Chi2Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let z: f64 = rng.sample(StandardNormal);
        let head = (z + self.shift) * (z + self.shift);
        match &self.rest {
            Some(c) => head + c.sample(rng),
            None => head,
        }
    }
}

/// The law of (z+u)ᵗP(z+u) for a rank-s projection P: χ²_s(uᵗPu).
pub fn quadratic_form_law(rank_s: i64, u_quadratic: f64) -> Result<NoncentralChi2> {
    if rank_s < 0 {
        return Err(Error::invalid(format!("rank must be nonnegative, got {rank_s}")));
    }
    if u_quadratic.is_nan() || u_quadratic < 0.0 {
        return Err(Error::invalid(format!(
            "quadratic form must be nonnegative, got {u_quadratic}"
        )));
    }
    let r = u32::try_from(rank_s).map_err(|_| Error::invalid("rank too large"))?;
    NoncentralChi2::new(r, u_quadratic)
}
