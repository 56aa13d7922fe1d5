//! Complex univariate polynomials in the monomial basis.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{OdbaError, Result};
use crate::tensor::{cr, C64};

/// Coefficients in ascending degree; trailing exact zeros are trimmed, so the
/// zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialC {
    coeffs: Vec<C64>,
}

impl PolynomialC {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == cr(0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `∏ (u − r)`
    pub fn from_roots(roots: &[C64]) -> Self {
        roots
            .iter()
            .fold(Self::constant(cr(1.0)), |acc, r| &acc * &Self::new(vec![-r, cr(1.0)]))
    }

    /// `Σ c_k (u(u+1))^k`, the general crossing-symmetric polynomial.
    pub fn from_crossing_coeffs(c: &[C64]) -> Self {
        let v = Self::new(vec![cr(0.0), cr(1.0), cr(1.0)]);
        let mut acc = Self::zero();
        for ck in c.iter().rev() {
            acc = &(&acc * &v) + &Self::constant(*ck);
        }
        acc
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of `u^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(cr(0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(cr(0.0))
    }

    pub fn eval(&self, u: C64) -> C64 {
        self.coeffs.iter().rev().fold(cr(0.0), |acc, c| acc * u + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `p(a u + b)`
    pub fn compose_affine(&self, a: C64, b: C64) -> Self {
        let lin = Self::new(vec![b, a]);
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &lin) + &Self::constant(*c);
        }
        acc
    }

    /// Drops coefficients with modulus below `tol · max|c|`.
    pub fn chop(&self, tol: f64) -> Self {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        Self::new(
            self.coeffs
                .iter()
                .map(|c| if c.norm() <= tol * scale { cr(0.0) } else { *c })
                .collect(),
        )
    }

    /// Least-squares fit of degree `degree` through `(nodes, values)`. The
    /// Vandermonde system is set up in `w = (u − center)/radius` for
    /// conditioning and the result converted back to monomials in `u`.
    pub fn fit(nodes: &[C64], values: &[C64], degree: usize, center: C64, radius: f64) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(OdbaError::DimensionMismatch { expected: nodes.len(), found: values.len() });
        }
        if nodes.len() < degree + 1 {
            return Err(OdbaError::DimensionMismatch { expected: degree + 1, found: nodes.len() });
        }
        let w: Vec<C64> = nodes.iter().map(|u| (u - center) / radius).collect();
        let vander = DMatrix::from_fn(nodes.len(), degree + 1, |i, k| w[i].powi(k as i32));
        let rhs = DVector::from_column_slice(values);
        let svd = vander.svd(true, true);
        let b = svd
            .solve(&rhs, 1e-14)
            .map_err(|e| OdbaError::Singular(e.to_string()))?;
        let in_w = Self::new(b.iter().copied().collect());
        Ok(in_w.compose_affine(cr(1.0 / radius), -center / radius))
    }

    /// Relative ℓ2 distance of the coefficient vectors.
    pub fn coeff_distance(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut diff = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for k in 0..n {
            let a = self.coeff(k);
            let b = other.coeff(k);
            diff += (a - b).norm_sqr();
            na += a.norm_sqr();
            nb += b.norm_sqr();
        }
        diff.sqrt() / na.max(nb).sqrt().max(1e-300)
    }
}

impl Add<&PolynomialC> for &PolynomialC {
    type Output = PolynomialC;
    fn add(self, rhs: &PolynomialC) -> PolynomialC {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolynomialC::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub<&PolynomialC> for &PolynomialC {
    type Output = PolynomialC;
    fn sub(self, rhs: &PolynomialC) -> PolynomialC {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolynomialC::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul<&PolynomialC> for &PolynomialC {
    type Output = PolynomialC;
    fn mul(self, rhs: &PolynomialC) -> PolynomialC {
        if self.is_zero() || rhs.is_zero() {
            return PolynomialC::zero();
        }
        let mut out = vec![cr(0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolynomialC::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::c;
    use proptest::prelude::*;

    #[test]
    fn trims_and_evaluates() {
        let p = PolynomialC::new(vec![cr(1.0), cr(2.0), cr(0.0), cr(0.0)]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.eval(cr(3.0)), cr(7.0));
        assert!(PolynomialC::new(vec![cr(0.0)]).is_zero());
    }

    #[test]
    fn roots_and_derivative() {
        let p = PolynomialC::from_roots(&[cr(1.0), cr(-2.0)]);
        assert_eq!(p.coeffs(), &[cr(-2.0), cr(1.0), cr(1.0)]);
        assert_eq!(p.derivative().coeffs(), &[cr(1.0), cr(2.0)]);
    }

    #[test]
    fn crossing_coeffs_are_symmetric() {
        let p = PolynomialC::from_crossing_coeffs(&[c(1.0, 0.5), cr(-2.0), c(0.3, 0.1)]);
        assert_eq!(p.degree(), 4);
        for u in [c(0.3, 0.2), c(-1.1, 0.7), cr(2.0)] {
            assert!((p.eval(u) - p.eval(-u - 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_polynomial() {
        let p = PolynomialC::new(vec![c(1.0, 2.0), cr(-3.0), c(0.5, 0.5), cr(0.25), cr(2.0)]);
        let nodes: Vec<C64> = (0..9)
            .map(|k| cr(-0.5) + C64::from_polar(1.5, 2.0 * std::f64::consts::PI * k as f64 / 9.0))
            .collect();
        let values: Vec<C64> = nodes.iter().map(|u| p.eval(*u)).collect();
        let fitted = PolynomialC::fit(&nodes, &values, 4, cr(-0.5), 1.5).unwrap();
        assert!(fitted.coeff_distance(&p) < 1e-13);
        assert!(PolynomialC::fit(&nodes[..3], &values[..3], 4, cr(0.0), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn horner_matches_power_sum(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let p = PolynomialC::new(vec![cr(a), c(b, a), cr(1.0), c(0.0, b)]);
            let u = c(x, y);
            let direct: C64 = p.coeffs().iter().enumerate().map(|(k, ck)| ck * u.powi(k as i32)).sum();
            prop_assert!((p.eval(u) - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
        }

        #[test]
        fn product_evaluates_to_product(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -2.0f64..2.0) {
            let p = PolynomialC::new(vec![cr(a), cr(1.0), cr(b)]);
            let q = PolynomialC::new(vec![cr(b), c(0.0, a)]);
            let u = c(x, 0.3);
            prop_assert!(((&p * &q).eval(u) - p.eval(u) * q.eval(u)).norm() < 1e-11);
        }
    }
}
