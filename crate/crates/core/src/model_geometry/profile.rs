//! The profile function `f` and its domain interval.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Open interval `(lo, hi)`; `None` stands for an infinite endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: None, hi: None };
    pub const POSITIVE: Interval = Interval { lo: Some(0.0), hi: None };

    pub fn new(lo: Option<f64>, hi: Option<f64>) -> Result<Self> {
        if let (Some(a), Some(b)) = (lo, hi) {
            if !(a < b) {
                return Err(LabError::InvalidParameter(format!("empty interval ({a}, {b})")));
            }
        }
        if lo.is_some_and(|a| !a.is_finite()) || hi.is_some_and(|b| !b.is_finite()) {
            return Err(LabError::InvalidParameter("interval endpoints must be finite or absent".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn bounded(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Some(lo), Some(hi))
    }

    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && self.lo.is_none_or(|a| t > a) && self.hi.is_none_or(|b| t < b)
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(LabError::OutsideInterval {
                t,
                lo: self.lo.unwrap_or(f64::NEG_INFINITY),
                hi: self.hi.unwrap_or(f64::INFINITY),
            })
        }
    }

    /// Default base point: the midpoint, `1` on `(0, ∞)`, one unit inside a
    /// single finite endpoint, `0` on the real line.
    pub fn base_point(&self) -> f64 {
        match (self.lo, self.hi) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) => a + 1.0,
            (None, Some(b)) => b - 1.0,
            (None, None) => 0.0,
        }
    }

    /// A compact sub-interval used for sampling and grid checks.
    pub fn core(&self) -> (f64, f64) {
        match (self.lo, self.hi) {
            (Some(a), Some(b)) => {
                let l = b - a;
                (a + 0.1 * l, b - 0.1 * l)
            }
            (Some(a), None) => (a + 0.25, a + 4.0),
            (None, Some(b)) => (b - 4.0, b - 0.25),
            (None, None) => (-2.0, 2.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.core();
        rng.gen_range(a..b)
    }

    /// `k` Chebyshev nodes on the core sub-interval.
    pub fn chebyshev_grid(&self, k: usize) -> Vec<f64> {
        let (a, b) = self.core();
        (0..k)
            .map(|i| {
                let x = ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * k) as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * x
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `f(t) = (c² − 1/4)/t²` on `(0, ∞)`.
    Homogeneous { c: [f64; 2] },
    /// `f(t) = Σ coeffs[k] tᵏ`.
    Polynomial { coeffs: Vec<f64> },
    /// `f(t) = Σ coeff · t^exponent`.
    SumOfPowers { terms: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileF {
    kind: ProfileKind,
    interval: Interval,
}

impl ProfileF {
    /// Homogeneous profile; `c` must be real in `[0, 1/2) ∪ (1/2, ∞)` or
    /// purely imaginary with positive imaginary part.
    pub fn homogeneous(c: Complex64) -> Result<Self> {
        let real = c.im == 0.0 && c.re >= 0.0 && c.re != 0.5;
        let imaginary = c.re == 0.0 && c.im > 0.0;
        if !(real || imaginary) || !c.re.is_finite() || !c.im.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "homogeneous parameter c = {c} must lie in [0,1/2) ∪ (1/2,∞) ∪ i(0,∞)"
            )));
        }
        Ok(Self { kind: ProfileKind::Homogeneous { c: [c.re, c.im] }, interval: Interval::POSITIVE })
    }

    pub fn polynomial(coeffs: Vec<f64>, interval: Interval) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LabError::InvalidParameter("non-finite polynomial coefficient".into()));
        }
        Ok(Self { kind: ProfileKind::Polynomial { coeffs }, interval })
    }

    /// Real powers need `t > 0`, so the interval must lie in `(0, ∞)`.
    pub fn sum_of_powers(terms: Vec<(f64, f64)>, interval: Interval) -> Result<Self> {
        if interval.lo.is_none_or(|a| a < 0.0) {
            return Err(LabError::InvalidParameter("sum-of-powers profile needs an interval inside (0, ∞)".into()));
        }
        Ok(Self { kind: ProfileKind::SumOfPowers { terms }, interval })
    }

    pub fn from_kind(kind: ProfileKind, interval: Interval) -> Result<Self> {
        match kind {
            ProfileKind::Homogeneous { c } => {
                let f = Self::homogeneous(Complex64::new(c[0], c[1]))?;
                if interval != Interval::POSITIVE {
                    return Err(LabError::InvalidParameter("homogeneous profile lives on (0, ∞)".into()));
                }
                Ok(f)
            }
            ProfileKind::Polynomial { coeffs } => Self::polynomial(coeffs, interval),
            ProfileKind::SumOfPowers { terms } => Self::sum_of_powers(terms, interval),
        }
    }

    /// Identically zero profile, only meaningful for raw (flat) test models.
    pub fn zero(interval: Interval) -> Self {
        Self { kind: ProfileKind::Polynomial { coeffs: vec![] }, interval }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// The parameter `c` of a homogeneous profile.
    pub fn homogeneous_c(&self) -> Option<Complex64> {
        match self.kind {
            ProfileKind::Homogeneous { c } => Some(Complex64::new(c[0], c[1])),
            _ => None,
        }
    }

    /// `f, f′, f″, f‴` at `t`; no interval check.
    pub fn derivs(&self, t: f64) -> [f64; 4] {
        match &self.kind {
            ProfileKind::Homogeneous { c } => {
                let h = c[0] * c[0] - c[1] * c[1] - 0.25;
                let u = 1.0 / t;
                let u2 = u * u;
                [h * u2, -2.0 * h * u2 * u, 6.0 * h * u2 * u2, -24.0 * h * u2 * u2 * u]
            }
            ProfileKind::Polynomial { coeffs } => {
                let mut d = [0.0; 4];
                // Horner on the value and its derivatives simultaneously
                for &a in coeffs.iter().rev() {
                    d[3] = d[3] * t + 3.0 * d[2];
                    d[2] = d[2] * t + 2.0 * d[1];
                    d[1] = d[1] * t + d[0];
                    d[0] = d[0] * t + a;
                }
                d
            }
            ProfileKind::SumOfPowers { terms } => {
                let mut d = [0.0; 4];
                for &(a, e) in terms {
                    let p = t.powf(e - 3.0);
                    d[0] += a * p * t * t * t;
                    d[1] += a * e * p * t * t;
                    d[2] += a * e * (e - 1.0) * p * t;
                    d[3] += a * e * (e - 1.0) * (e - 2.0) * p;
                }
                d
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivs(t)[0]
    }

    /// `f′` is not identically zero on a sample grid of the core interval.
    pub fn is_nonconstant(&self) -> bool {
        self.interval.chebyshev_grid(32).iter().any(|&t| self.derivs(t)[1].abs() > 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let f = ProfileF::polynomial(vec![1.0, -2.0, 0.5, 3.0], Interval::REAL_LINE).unwrap();
        let t = 1.7;
        let d = f.derivs(t);
        assert!((d[0] - (1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t)).abs() < 1e-13);
        assert!((d[1] - (-2.0 + t + 9.0 * t * t)).abs() < 1e-13);
        assert!((d[2] - (1.0 + 18.0 * t)).abs() < 1e-13);
        assert!((d[3] - 18.0).abs() < 1e-13);
    }

    #[test]
    fn homogeneous_values() {
        let f = ProfileF::homogeneous(Complex64::new(1.5, 0.0)).unwrap();
        assert_eq!(f.value(1.0), 2.0);
        let g = ProfileF::homogeneous(Complex64::new(0.0, 0.5)).unwrap();
        assert_eq!(g.value(1.0), -0.5);
        assert!(ProfileF::homogeneous(Complex64::new(0.5, 0.0)).is_err());
        assert!(ProfileF::homogeneous(Complex64::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn sum_of_powers_matches_finite_differences() {
        let f = ProfileF::sum_of_powers(vec![(1.5, -1.3), (0.2, 2.5)], Interval::POSITIVE).unwrap();
        let t = 1.3;
        let h = 1e-5;
        let d = f.derivs(t);
        for k in 0..3 {
            let fd = (f.derivs(t + h)[k] - f.derivs(t - h)[k]) / (2.0 * h);
            assert!((fd - d[k + 1]).abs() < 1e-7 * (1.0 + d[k + 1].abs()), "k={k}");
        }
    }

    #[test]
    fn interval_membership() {
        let i = Interval::bounded(-1.0, 2.0).unwrap();
        assert!(i.contains(0.0) && !i.contains(2.0) && !i.contains(-1.0));
        assert_eq!(i.base_point(), 0.5);
        assert_eq!(Interval::POSITIVE.base_point(), 1.0);
        assert!(Interval::bounded(1.0, 1.0).is_err());
        assert!(Interval::POSITIVE.chebyshev_grid(64).iter().all(|&t| Interval::POSITIVE.contains(t)));
    }

    #[test]
    fn constancy_flag() {
        assert!(!ProfileF::polynomial(vec![2.0], Interval::REAL_LINE).unwrap().is_nonconstant());
        assert!(ProfileF::polynomial(vec![0.0, 1.0], Interval::REAL_LINE).unwrap().is_nonconstant());
    }
}
