//! The M-variate beta distribution on the open unit hypercube.
//!
//! ```text
//! MB(x | a, b) = 1/Z · Π_m x_m^(a_m-1) / (1-x_m)^(a_m+1)
//!                     / (1 + Σ_k x_k/(1-x_k))^(Σ_m a_m + b)
//! Z = Γ(b) Π_m Γ(a_m) / Γ(b + Σ_m a_m)
//! ```
//!
//! Every marginal X_m is Beta(a_m, b), and the shared `b` induces positive
//! correlation between all coordinates. Unlike the Dirichlet, the support is
//! the whole hypercube rather than the simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::specfun::ln_gamma_unchecked;

/// Coordinates of sampled points are clamped into `[SAMPLE_EPS, 1 - SAMPLE_EPS]`.
pub const SAMPLE_EPS: f64 = 1e-9;

/// Shape parameters `(a_1..a_M, b)` of one multivariate beta component.
#[derive(Debug, Clone, PartialEq)]
pub struct MBParams {
    a: Vec<f64>,
    b: f64,
}

impl MBParams {
    pub fn new(a: Vec<f64>, b: f64) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidParams(
                "need at least one shape parameter a_m".into(),
            ));
        }
        if let Some(bad) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "a_m = {bad} must be finite and > 0"
            )));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParams(format!(
                "b = {b} must be finite and > 0"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// ln Z, evaluated entirely through log-gamma.
    pub fn log_normalizer(&self) -> f64 {
        log_normalizer_raw(&self.a, self.b)
    }

    /// ln MB(x | a, b).
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if let Some(bad) = x.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::NonFinite(format!("coordinate {bad} outside (0, 1)")));
        }
        let value = self.log_pdf_with_normalizer(x, self.log_normalizer());
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite(format!("log_pdf at {x:?} is {value}")))
        }
    }

    /// Density without the dimension or support checks; `log_z` must be
    /// `self.log_normalizer()`.
    pub(crate) fn log_pdf_with_normalizer(&self, x: &[f64], log_z: f64) -> f64 {
        let mut acc = 0.0;
        let mut odds = 0.0;
        let mut sum_a = 0.0;
        for (&am, &xm) in self.a.iter().zip(x) {
            let ln_1mx = (-xm).ln_1p();
            acc += (am - 1.0) * xm.ln() - (am + 1.0) * ln_1mx;
            odds += xm / (1.0 - xm);
            sum_a += am;
        }
        acc - (sum_a + self.b) * odds.ln_1p() - log_z
    }

    /// exp(log_pdf). Underflows to 0 for points far in the tails.
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.log_pdf(x).map(f64::exp)
    }

    /// Draws `count` points with a generator seeded from `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::Empty("sample count must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| self.sample_one(&mut rng)).collect())
    }

    /// One draw via the gamma-ratio construction: with G_0 ~ Gamma(b) and
    /// G_m ~ Gamma(a_m) independent, X_m = G_m / (G_m + G_0).
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let ln_g0 = ln_gamma_variate(self.b, rng);
        self.a
            .iter()
            .map(|&am| {
                let ln_gm = ln_gamma_variate(am, rng);
                // G_m / (G_m + G_0) = 1 / (1 + exp(ln G_0 - ln G_m))
                let x = 1.0 / (1.0 + (ln_g0 - ln_gm).exp());
                x.clamp(SAMPLE_EPS, 1.0 - SAMPLE_EPS)
            })
            .collect()
    }
}

pub(crate) fn log_normalizer_raw(a: &[f64], b: f64) -> f64 {
    let sum_a: f64 = a.iter().sum();
    ln_gamma_unchecked(b) + a.iter().map(|&v| ln_gamma_unchecked(v)).sum::<f64>()
        - ln_gamma_unchecked(b + sum_a)
}

/// Natural log of a Gamma(shape, 1) variate.
///
/// Marsaglia & Tsang squeeze method; for shape < 1 the variate is drawn at
/// shape + 1 and scaled by U^(1/shape). Returned in log space so that tiny
/// shapes do not underflow to zero.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_log_pdf(x: f64, alpha: f64, beta: f64) -> f64 {
        (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln()
            - ln_gamma_unchecked(alpha)
            - ln_gamma_unchecked(beta)
            + ln_gamma_unchecked(alpha + beta)
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(MBParams::new(vec![], 1.0).is_err());
        assert!(MBParams::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(MBParams::new(vec![1.0], -2.0).is_err());
        assert!(MBParams::new(vec![f64::NAN], 1.0).is_err());
        assert!(MBParams::new(vec![1.0], f64::INFINITY).is_err());
    }

    #[test]
    fn normalizer_trivial_cases() {
        assert!(
            MBParams::new(vec![1.0], 1.0)
                .unwrap()
                .log_normalizer()
                .abs()
                < 1e-15
        );
        let z = MBParams::new(vec![1.0, 1.0], 1.0).unwrap().log_normalizer();
        assert!((z + 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn uniform_case() {
        let p = MBParams::new(vec![1.0], 1.0).unwrap();
        assert!(p.log_pdf(&[0.37]).unwrap().abs() < 1e-15);
        assert!((p.pdf(&[0.9]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn univariate_reduces_to_beta() {
        let p = MBParams::new(vec![2.0], 3.0).unwrap();
        assert!((p.log_pdf(&[0.5]).unwrap() - 1.5f64.ln()).abs() < 1e-14);
        assert!((p.log_pdf(&[0.5]).unwrap() - beta_log_pdf(0.5, 2.0, 3.0)).abs() < 1e-14);
    }

    #[test]
    fn dimension_and_support_errors() {
        let p = MBParams::new(vec![2.0, 3.0], 1.5).unwrap();
        assert!(matches!(
            p.log_pdf(&[0.5]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
        assert!(p.log_pdf(&[0.5, 1.0]).is_err());
        assert!(p.log_pdf(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn full_hypercube_support() {
        let p = MBParams::new(vec![1.5, 2.0, 0.7], 1.1).unwrap();
        let v = p.pdf(&[0.9, 0.9, 0.9]).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let p = MBParams::new(vec![0.002, 3.0], 0.5).unwrap();
        let s1 = p.sample(500, 11).unwrap();
        let s2 = p.sample(500, 11).unwrap();
        assert_eq!(s1, s2);
        for x in &s1 {
            assert!(x
                .iter()
                .all(|&v| (SAMPLE_EPS..=1.0 - SAMPLE_EPS).contains(&v)));
        }
        assert!(p.sample(0, 1).is_err());
    }

    #[test]
    fn uniform_marginal_mean() {
        let p = MBParams::new(vec![1.0], 1.0).unwrap();
        let s = p.sample(100_000, 3).unwrap();
        let mean = s.iter().map(|x| x[0]).sum::<f64>() / s.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn marginal_mean_matches_beta() {
        let p = MBParams::new(vec![2.0, 3.0], 4.0).unwrap();
        let s = p.sample(100_000, 5).unwrap();
        let mean = s.iter().map(|x| x[0]).sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn coordinates_positively_correlated() {
        let p = MBParams::new(vec![2.0, 2.0], 1.0).unwrap();
        let s = p.sample(100_000, 9).unwrap();
        let n = s.len() as f64;
        let m0 = s.iter().map(|x| x[0]).sum::<f64>() / n;
        let m1 = s.iter().map(|x| x[1]).sum::<f64>() / n;
        let cov = s.iter().map(|x| (x[0] - m0) * (x[1] - m1)).sum::<f64>();
        assert!(cov > 0.0);
    }
}
