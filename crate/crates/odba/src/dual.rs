//! Forward-mode dual numbers over the complex field.
//!
//! Residual functions are written once, generic over [`Scalar`], and evaluated
//! either on plain complex numbers or on [`Dual`] numbers to get exact
//! directional derivatives of holomorphic maps.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::tensor::{cr, CMatrix, C64};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_c(c: C64) -> Self;
    fn value(&self) -> C64;

    fn cst(x: f64) -> Self {
        Self::from_c(cr(x))
    }

    fn powi(self, k: u32) -> Self {
        (0..k).fold(Self::cst(1.0), |acc, _| acc * self)
    }
}

impl Scalar for C64 {
    fn from_c(c: C64) -> Self {
        c
    }
    fn value(&self) -> C64 {
        *self
    }
}

/// `v + d·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: C64,
    pub d: C64,
}

impl Dual {
    pub fn variable(v: C64) -> Self {
        Self { v, d: cr(1.0) }
    }
}

impl Scalar for Dual {
    fn from_c(c: C64) -> Self {
        Self { v: c, d: cr(0.0) }
    }
    fn value(&self) -> C64 {
        self.v
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = o.v.inv();
        Dual { v: self.v * inv, d: (self.d * o.v - self.v * o.d) * inv * inv }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

/// Residual map usable with both scalar types.
pub trait ResidualMap {
    fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S>;

    /// Per-component weights for the convergence test and line search.
    /// `None` means unweighted.
    fn weights(&self, _z: &[C64]) -> Option<Vec<f64>> {
        None
    }
}

/// Value and Jacobian `∂r_i/∂z_k` of a holomorphic residual map.
pub fn jacobian<F: ResidualMap>(f: &F, z: &[C64]) -> (Vec<C64>, CMatrix) {
    let n = z.len();
    let value = f.eval(z);
    let mut jac = CMatrix::zeros(value.len(), n);
    let mut dz: Vec<Dual> = z.iter().map(|&v| Dual::from_c(v)).collect();
    for k in 0..n {
        dz[k].d = cr(1.0);
        let col = f.eval(&dz);
        for (i, r) in col.iter().enumerate() {
            jac[(i, k)] = r.d;
        }
        dz[k].d = cr(0.0);
    }
    (value, jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::c;

    struct Cubic;
    impl ResidualMap for Cubic {
        fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
            vec![z[0] * z[0] * z[1] - S::cst(2.0), z[0] / z[1] + z[1].powi(3)]
        }
    }

    #[test]
    fn jacobian_matches_analytic() {
        let z = [c(0.4, 0.3), c(-1.2, 0.5)];
        let (_, j) = jacobian(&Cubic, &z);
        let (x, y) = (z[0], z[1]);
        let expected = [[x * y * 2.0, x * x], [y.inv(), -x / (y * y) + y * y * 3.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - expected[i][k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dual_division_rule() {
        let x = Dual::variable(c(2.0, 1.0));
        let r = Dual::cst(1.0) / x;
        assert!((r.d + x.v.inv() * x.v.inv()).norm() < 1e-15);
    }
}
