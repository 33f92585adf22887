//! Gamma and Beta variates plus the Beta density.
//!
//! Gamma uses the Marsaglia–Tsang squeeze; shapes below one are boosted via
//! `Gamma(a) = Gamma(a + 1) * U^(1/a)`. Beta is `X / (X + Y)` for independent
//! Gamma draws, which is exact for every positive shape pair.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Shape parameters `(a, b)` of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BetaShape {
    pub a: f64,
    pub b: f64,
}

impl BetaShape {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let shape = Self { a, b };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::Parameter(format!(
                "beta shape parameters must be positive and finite, got ({}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    fn ln_norm(&self) -> f64 {
        libm::lgamma(self.a + self.b) - libm::lgamma(self.a) - libm::lgamma(self.b)
    }

    /// Density on `[0, 1]`, zero outside.
    pub fn pdf(&self, z: f64) -> f64 {
        if !(0.0..=1.0).contains(&z) {
            return 0.0;
        }
        // Endpoint conventions: x^0 = 1, 0^(positive) = 0, 0^(negative) = inf.
        let left = pow_at_zero_safe(z, self.a - 1.0);
        let right = pow_at_zero_safe(1.0 - z, self.b - 1.0);
        self.ln_norm().exp() * left * right
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = sample_gamma(self.a, rng);
        let y = sample_gamma(self.b, rng);
        let total = x + y;
        if total > 0.0 {
            x / total
        } else {
            // Both draws underflowed (tiny shapes); fall back on the Bernoulli limit.
            if rng.random::<f64>() < self.mean() {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn pow_at_zero_safe(base: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else if base == 0.0 {
        if exponent > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        base.powf(exponent)
    }
}

/// Gamma(shape, 1) variate.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let boosted = sample_gamma(shape + 1.0, rng);
        let u: f64 = rng.random();
        return boosted * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}
