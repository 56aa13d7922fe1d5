//! Damped Newton iteration on holomorphic residual maps.
//!
//! Square systems take a plain Newton step; rectangular ones a Gauss–Newton
//! least-squares step through the SVD. A step is halved until either the
//! residual 2-norm or the (optionally weighted) max-norm decreases;
//! convergence is judged on the weighted max-norm.

use nalgebra::DVector;

use crate::dual::{jacobian, ResidualMap};
use crate::tensor::{cr, C64};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-11, min_step: 1.0 / 1024.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NewtonFailure {
    /// Residual became NaN or infinite.
    NonFinite,
    /// No step length in the halving schedule reduced the residual.
    Stalled { residual: f64 },
    /// Iteration limit reached.
    MaxIterations { residual: f64 },
    /// Jacobian could not be inverted.
    Singular,
}

impl std::fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NewtonFailure::NonFinite => write!(f, "non-finite residual"),
            NewtonFailure::Stalled { residual } => write!(f, "line search stalled at residual {residual:.3e}"),
            NewtonFailure::MaxIterations { residual } => {
                write!(f, "iteration limit reached at residual {residual:.3e}")
            }
            NewtonFailure::Singular => write!(f, "singular Jacobian"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub z: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
}

fn max_norm(r: &[C64], w: Option<&[f64]>) -> f64 {
    r.iter().enumerate().fold(0.0f64, |a, (i, v)| {
        let x = v.norm() * w.map_or(1.0, |w| w[i]);
        if x.is_nan() {
            f64::NAN
        } else {
            a.max(x)
        }
    })
}

fn l2(r: &[C64]) -> f64 {
    r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Weighted max-norm of `f` at `z`, as used for convergence.
pub fn weighted_residual<F: ResidualMap>(f: &F, z: &[C64]) -> f64 {
    max_norm(&f.eval(z), f.weights(z).as_deref())
}

pub fn solve<F: ResidualMap>(
    f: &F,
    z0: &[C64],
    opts: &NewtonOptions,
) -> std::result::Result<NewtonOutcome, NewtonFailure> {
    let mut z = z0.to_vec();
    let (mut r, mut jac) = jacobian(f, &z);
    let mut res = max_norm(&r, f.weights(&z).as_deref());
    let mut merit = l2(&r);
    for it in 0..opts.max_iter {
        if !res.is_finite() {
            return Err(NewtonFailure::NonFinite);
        }
        if res <= opts.tol {
            return Ok(NewtonOutcome { z, residual: res, iterations: it });
        }
        let rhs = -DVector::from_column_slice(&r);
        let step = if jac.is_square() {
            jac.clone().lu().solve(&rhs)
        } else {
            None
        };
        let step = match step {
            Some(s) if s.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => s,
            _ => jac
                .clone()
                .svd(true, true)
                .solve(&rhs, 1e-13)
                .map_err(|_| NewtonFailure::Singular)?,
        };
        let mut t = 1.0;
        let mut accepted = None;
        while t >= opts.min_step {
            let trial: Vec<C64> = z.iter().zip(step.iter()).map(|(a, d)| a + d * cr(t)).collect();
            let tr = f.eval(&trial);
            let tn = l2(&tr);
            let better = tn < merit || max_norm(&tr, f.weights(&trial).as_deref()) < res;
            if tn.is_finite() && better {
                accepted = Some(trial);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(next) => {
                z = next;
                let (nr, nj) = jacobian(f, &z);
                r = nr;
                jac = nj;
                res = max_norm(&r, f.weights(&z).as_deref());
                merit = l2(&r);
            }
            None => return Err(NewtonFailure::Stalled { residual: res }),
        }
    }
    if res <= opts.tol {
        Ok(NewtonOutcome { z, residual: res, iterations: opts.max_iter })
    } else {
        Err(NewtonFailure::MaxIterations { residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Scalar;
    use crate::tensor::c;

    struct Circle;
    impl ResidualMap for Circle {
        fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
            vec![z[0] * z[0] + z[1] * z[1] - S::cst(1.0), z[0] - z[1] * S::cst(2.0)]
        }
    }

    struct Overdetermined;
    impl ResidualMap for Overdetermined {
        fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
            vec![z[0] * z[0] - S::cst(4.0), z[0] - S::cst(2.0), S::cst(0.0)]
        }
    }

    #[test]
    fn converges_on_square_system() {
        let out = solve(&Circle, &[c(0.5, 0.1), c(0.5, -0.1)], &NewtonOptions::default()).unwrap();
        let x = out.z[0];
        let y = out.z[1];
        assert!((x - y * 2.0).norm() < 1e-12);
        assert!((x * x + y * y - 1.0).norm() < 1e-11);
    }

    #[test]
    fn least_squares_branch() {
        let out = solve(&Overdetermined, &[c(1.5, 0.2)], &NewtonOptions::default()).unwrap();
        assert!((out.z[0] - 2.0).norm() < 1e-11);
    }
}
