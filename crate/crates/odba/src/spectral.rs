//! Quantum determinant, eigenvalue polynomials from exact diagonalization, and
//! direct solution of the eigenvalue functional relations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{ResidualMap, Scalar};
use crate::error::{OdbaError, Result};
use crate::lattice::{k_minus, k_plus, monodromy_on, r_matrix, transfer_matrix, ModelParams, MonodromyKind};
use crate::linalg::eigen_general;
use crate::newton::{self, NewtonOptions};
use crate::poly::PolynomialC;
use crate::tensor::{c, cr, pauli, CMatrix, DenseOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeterminantMode {
    ClosedForm,
    TraceForm,
}

/// The four factors whose product is the quantum determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminantFactors {
    pub det_t: C64,
    pub det_t_hat: C64,
    pub det_k_minus: C64,
    pub det_k_plus: C64,
}

impl DeterminantFactors {
    pub fn product(&self) -> C64 {
        self.det_t * self.det_t_hat * self.det_k_minus * self.det_k_plus
    }
}

pub fn determinant_factors(u: C64, params: &ModelParams, mode: DeterminantMode) -> DeterminantFactors {
    match mode {
        DeterminantMode::ClosedForm => DeterminantFactors {
            det_t: params.theta.iter().map(|t| (u - t + 1.0) * (u - t - 1.0)).product(),
            det_t_hat: params.theta.iter().map(|t| (u + t + 1.0) * (u + t - 1.0)).product(),
            det_k_minus: (u - 1.0) * (params.p * params.p - u * u) * 2.0,
            det_k_plus: (u + 1.0) * ((params.xi * params.xi + 1.0) * u * u - params.q * params.q) * 2.0,
        },
        DeterminantMode::TraceForm => trace_form_factors(u, params),
    }
}

/// `tr_{12}(P⁻ X P⁻)` constructions on two auxiliary spaces.
fn trace_form_factors(u: C64, params: &ModelParams) -> DeterminantFactors {
    let n = params.n;
    let total = n + 2;
    let pm = pauli::antisymmetrizer();
    let mono_det = |kind: MonodromyKind| -> C64 {
        let t1 = monodromy_on(u - 1.0, params, kind, 1, 3, total).expect("valid layout");
        let t2 = monodromy_on(u, params, kind, 2, 3, total).expect("valid layout");
        let mut x = &t1 * &t2;
        x.apply_left(&pm, &[1, 2]).expect("valid layout");
        x.apply_right(&pm, &[1, 2]).expect("valid layout");
        let reduced = x.trace_factors(&[1, 2]).expect("valid layout");
        reduced.identity_multiple().0
    };
    let id2 = CMatrix::identity(2, 2);
    let km = pm.clone()
        * k_minus(u - 1.0, params).kronecker(&id2)
        * r_matrix(u * 2.0 - 1.0)
        * id2.kronecker(&k_minus(u, params));
    let kp = pm.clone()
        * id2.kronecker(&k_plus(u, params))
        * r_matrix(-u * 2.0 - 1.0)
        * k_plus(u - 1.0, params).kronecker(&id2);
    DeterminantFactors {
        det_t: mono_det(MonodromyKind::Forward),
        det_t_hat: mono_det(MonodromyKind::Hat),
        det_k_minus: km.trace(),
        det_k_plus: kp.trace(),
    }
}

/// `Δ_q(u) = Det T · Det T̂ · Det K⁻ · Det K⁺`.
pub fn quantum_determinant(u: C64, params: &ModelParams, mode: DeterminantMode) -> C64 {
    determinant_factors(u, params, mode).product()
}

/// θ → 0 limit of the factor product:
/// `4(u²−1)(p²−u²)((1+ξ²)u²−q²)(u+1)^{2N}(u−1)^{2N}`.
pub fn homogeneous_quantum_determinant(u: C64, params: &ModelParams) -> C64 {
    homogeneous_qdet_with(u, params, params.xi * params.xi + 1.0)
}

/// The variant carrying `(1+ξ²)²` in place of `(1+ξ²)`; kept for comparison.
pub fn printed_homogeneous_quantum_determinant(u: C64, params: &ModelParams) -> C64 {
    let s = params.xi * params.xi + 1.0;
    homogeneous_qdet_with(u, params, s * s)
}

fn homogeneous_qdet_with(u: C64, params: &ModelParams, s: C64) -> C64 {
    let n = 2 * params.n as u32;
    (u * u - 1.0) * (params.p * params.p - u * u) * (s * u * u - params.q * params.q) * 4.0
        * (u + 1.0).powi(n)
        * (u - 1.0).powi(n)
}

/// Same as [`homogeneous_quantum_determinant`], as a polynomial in u.
pub fn homogeneous_qdet_poly(params: &ModelParams, printed: bool) -> PolynomialC {
    let s = params.xi * params.xi + 1.0;
    let s = if printed { s * s } else { s };
    let mut poly = PolynomialC::new(vec![cr(-4.0), cr(0.0), cr(4.0)]);
    poly = &poly * &PolynomialC::new(vec![params.p * params.p, cr(0.0), cr(-1.0)]);
    poly = &poly * &PolynomialC::new(vec![-params.q * params.q, cr(0.0), s]);
    let up = PolynomialC::new(vec![cr(1.0), cr(1.0)]);
    let um = PolynomialC::new(vec![cr(-1.0), cr(1.0)]);
    for _ in 0..2 * params.n {
        poly = &(&poly * &up) * &um;
    }
    poly
}

/// `A(u)|0⟩ = a(u)|0⟩`: `a(u) = (p+u)∏(u−θ_j+1)(u+θ_j+1)`.
pub fn vacuum_a(u: C64, params: &ModelParams) -> C64 {
    (params.p + u) * params.theta.iter().map(|t| (u - t + 1.0) * (u + t + 1.0)).product::<C64>()
}

/// `D̄(u)|0⟩ = d(u)|0⟩`: `d(u) = 2u(p−u−1)∏(u−θ_j)(u+θ_j)`.
pub fn vacuum_d(u: C64, params: &ModelParams) -> C64 {
    u * 2.0 * (params.p - u - 1.0) * params.theta.iter().map(|t| (u - t) * (u + t)).product::<C64>()
}

/// `ã(λ) = ∏(λ−θ_j+1)`
pub fn a_tilde(u: C64, params: &ModelParams) -> C64 {
    params.theta.iter().map(|t| u - t + 1.0).product()
}

/// `d̃(λ) = ∏(λ−θ_j)`
pub fn d_tilde(u: C64, params: &ModelParams) -> C64 {
    params.theta.iter().map(|t| u - t).product()
}

/// `Λ(0) = 2pq∏(1−θ_j)(1+θ_j)`.
pub fn lambda_at_zero(params: &ModelParams) -> C64 {
    params.p * params.q * 2.0 * params.theta.iter().map(|t| (cr(1.0) - t) * (cr(1.0) + t)).product::<C64>()
}

/// Right-hand side of the functional relation at `u`:
/// `Δ_q(u)/((1−2u)(1+2u))`.
pub fn functional_rhs(u: C64, params: &ModelParams) -> C64 {
    quantum_determinant(u, params, DeterminantMode::ClosedForm) / ((cr(1.0) - u * 2.0) * (cr(1.0) + u * 2.0))
}

/// The same right-hand side written through the vacuum eigenvalues:
/// `2(u+1)(q²−(1+ξ²)u²)/((2u−1)(2u+1)) · a(u) d(u−1)`.
pub fn functional_rhs_vacuum_form(u: C64, params: &ModelParams) -> C64 {
    let s = params.xi * params.xi + 1.0;
    (u + 1.0) * 2.0 * (params.q * params.q - s * u * u) / ((u * 2.0 - 1.0) * (u * 2.0 + 1.0))
        * vacuum_a(u, params)
        * vacuum_d(u - 1.0, params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCandidate {
    pub poly: PolynomialC,
    /// One relative residual per functional constraint.
    pub residuals: Vec<f64>,
}

/// Relative deviations of an eigenvalue polynomial from its defining
/// properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaProperties {
    pub degree: usize,
    pub crossing: f64,
    pub initial: f64,
    pub leading: f64,
    pub functional: Vec<f64>,
}

impl LambdaProperties {
    pub fn max_residual(&self) -> f64 {
        self.functional
            .iter()
            .fold(self.crossing.max(self.initial).max(self.leading), |a, &b| a.max(b))
    }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// Checks crossing symmetry on 20 fixed points, `Λ(0)`, the leading
/// coefficient and, for inhomogeneous chains, the functional relation at every
/// θ_j; for homogeneous chains the Taylor conditions at u = 0.
pub fn lambda_properties(poly: &PolynomialC, params: &ModelParams) -> LambdaProperties {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut crossing = 0.0f64;
    for _ in 0..20 {
        let u = c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        crossing = crossing.max(rel(poly.eval(u), poly.eval(-u - 1.0)));
    }
    let initial = rel(poly.eval(cr(0.0)), lambda_at_zero(params));
    let leading = rel(poly.coeff(2 * params.n + 2), cr(2.0));
    let functional = if params.is_homogeneous() {
        homogeneous_condition_residuals(poly, params, false)
    } else {
        params
            .theta
            .iter()
            .map(|&t| rel(poly.eval(t) * poly.eval(t - 1.0), functional_rhs(t, params)))
            .collect()
    };
    LambdaProperties { degree: poly.degree(), crossing, initial, leading, functional }
}

/// Highest Taylor order used by the homogeneous conditions: `2N + 1`.
pub fn homogeneous_condition_order(n: usize) -> usize {
    2 * n + 1
}

/// Taylor coefficients `l = 0..=2N+1` at u = 0 of
/// `Λ(u)Λ(u−1) − Δ̄_q(u)/((1+2u)(1−2u))`, each divided by the largest
/// right-hand-side coefficient. `printed` selects the `(1+ξ²)²` determinant.
pub fn homogeneous_condition_residuals(poly: &PolynomialC, params: &ModelParams, printed: bool) -> Vec<f64> {
    let lmax = homogeneous_condition_order(params.n);
    let shifted = poly.compose_affine(cr(1.0), cr(-1.0));
    let lhs = poly * &shifted;
    let rhs = homogeneous_rhs_series(params, printed, lmax);
    let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1e-300);
    (0..=lmax).map(|l| (lhs.coeff(l) - rhs[l]).norm() / scale).collect()
}

/// Taylor coefficients `0..=lmax` of `Δ̄_q(u)/(1−4u²)`.
pub fn homogeneous_rhs_series(params: &ModelParams, printed: bool, lmax: usize) -> Vec<C64> {
    let det = homogeneous_qdet_poly(params, printed);
    let series: Vec<C64> = (0..=lmax)
        .map(|k| if k % 2 == 0 { cr(4f64.powi(k as i32 / 2)) } else { cr(0.0) })
        .collect();
    (0..=lmax)
        .map(|l| (0..=l).map(|k| det.coeff(k) * series[l - k]).sum())
        .collect()
}

/// Interpolation nodes on `|u + 1/2| = 1.5`.
pub fn fit_nodes(count: usize, phase: f64) -> Vec<C64> {
    (0..count)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + phase) / count as f64;
            cr(-0.5) + C64::from_polar(1.5, ang)
        })
        .collect()
}

pub const ORACLE_REFERENCE_POINT: C64 = C64 { re: 0.37, im: 0.21 };
pub const ORACLE_ATTEMPTS: usize = 5;

/// Eigenvalue polynomials of the transfer matrix, one per eigenstate.
///
/// τ(u) is diagonalized once at a generic reference point; the eigenvalue of
/// each eigenvector is then sampled on `2N + 5` nodes and fitted with a
/// polynomial of degree `2N + 2`. A near-degenerate reference spectrum or an
/// eigenvector that fails to diagonalize τ at the nodes triggers a retry with
/// the reference point shifted by a random offset of modulus 0.1.
pub fn lambda_from_oracle(params: &ModelParams) -> Result<Vec<LambdaCandidate>> {
    oracle_fit(params, 0.0).map(|(c, _)| c)
}

/// Oracle fit on a rotated node set; also returns the eigenvectors used.
pub fn oracle_fit(params: &ModelParams, node_phase: f64) -> Result<(Vec<LambdaCandidate>, CMatrix)> {
    if params.n > 10 {
        return Err(OdbaError::InvalidParams("oracle limited to N <= 10".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dba);
    let mut ustar = ORACLE_REFERENCE_POINT;
    let degree = 2 * params.n + 2;
    let nodes = fit_nodes(degree + 3, node_phase);
    let taus: Vec<DenseOperator> = nodes.iter().map(|&u| transfer_matrix(u, params)).collect();
    for _ in 0..ORACLE_ATTEMPTS {
        let attempt = (|| -> Option<(Vec<LambdaCandidate>, CMatrix)> {
            let (_, vecs) = eigen_general(transfer_matrix(ustar, params).entries(), 1e-9).ok()?;
            let mut out = Vec::with_capacity(vecs.ncols());
            for k in 0..vecs.ncols() {
                let v = vecs.column(k).into_owned();
                let mut values = Vec::with_capacity(nodes.len());
                for tau in &taus {
                    let tv = tau.entries() * &v;
                    let lam = v.dotc(&tv) / v.dotc(&v);
                    if (&tv - &v * lam).norm() > 1e-9 * tau.frobenius_norm() {
                        return None;
                    }
                    values.push(lam);
                }
                let poly = PolynomialC::fit(&nodes, &values, degree, cr(-0.5), 1.5).ok()?;
                let residuals = lambda_properties(&poly, params).functional;
                out.push(LambdaCandidate { poly, residuals });
            }
            Some((out, vecs))
        })();
        if let Some(found) = attempt {
            return Ok(found);
        }
        ustar += C64::from_polar(0.1, rng.random_range(0.0..std::f64::consts::TAU));
    }
    Err(OdbaError::IllConditionedEigenbasis { attempts: ORACLE_ATTEMPTS })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalMode {
    Inhomogeneous,
    Homogeneous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSolution {
    pub candidates: Vec<LambdaCandidate>,
    pub failures: Vec<SeedFailure>,
    pub seeds: usize,
}

/// Coefficient distance under which two candidates are the same solution.
pub const DUPLICATE_DISTANCE: f64 = 1e-8;

/// Unknowns `c_1..c_N` of `Λ = c_0 + Σ c_k v^k + 2v^{N+1}`, `v = u(u+1)`.
struct InhomogeneousSystem {
    c0: C64,
    n: usize,
    points: Vec<(C64, C64, C64)>,
}

impl InhomogeneousSystem {
    fn new(params: &ModelParams) -> Self {
        let points = params
            .theta
            .iter()
            .map(|&t| {
                let rhs = functional_rhs(t, params);
                (t * (t + 1.0), t * (t - 1.0), rhs)
            })
            .collect();
        Self { c0: lambda_at_zero(params), n: params.n, points }
    }
}

fn lambda_in_v<S: Scalar>(c0: C64, z: &[S], n: usize, v: C64) -> S {
    let v = S::from_c(v);
    let mut acc = S::cst(2.0);
    for k in (1..=n).rev() {
        acc = acc * v + z[k - 1];
    }
    acc * v + S::from_c(c0)
}

impl ResidualMap for InhomogeneousSystem {
    fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        self.points
            .iter()
            .map(|&(v1, v2, rhs)| {
                let lhs = lambda_in_v(self.c0, z, self.n, v1) * lambda_in_v(self.c0, z, self.n, v2);
                (lhs - S::from_c(rhs)) / S::from_c(cr(rhs.norm().max(1e-300)))
            })
            .collect()
    }
}

/// Taylor conditions at u = 0 in the same unknowns.
struct HomogeneousSystem {
    c0: C64,
    n: usize,
    rhs: Vec<C64>,
    scale: f64,
}

impl HomogeneousSystem {
    fn new(params: &ModelParams) -> Self {
        let rhs = homogeneous_rhs_series(params, false, homogeneous_condition_order(params.n));
        let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1e-300);
        Self { c0: lambda_at_zero(params), n: params.n, rhs, scale }
    }
}

/// Monomial coefficients in u of `Σ c_k (u²+u)^k`, truncated at `len`.
fn crossing_poly_coeffs<S: Scalar>(c: &[S], len: usize) -> Vec<S> {
    let mut acc: Vec<S> = vec![S::cst(0.0); len];
    for ck in c.iter().rev() {
        // acc ← acc·(u + u²) + c_k
        let mut next = vec![S::cst(0.0); len];
        for (i, a) in acc.iter().enumerate() {
            if i + 1 < len {
                next[i + 1] = next[i + 1] + *a;
            }
            if i + 2 < len {
                next[i + 2] = next[i + 2] + *a;
            }
        }
        next[0] = next[0] + *ck;
        acc = next;
    }
    acc
}

impl ResidualMap for HomogeneousSystem {
    fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        let len = self.rhs.len();
        let mut all = Vec::with_capacity(self.n + 2);
        all.push(S::from_c(self.c0));
        all.extend_from_slice(z);
        all.push(S::cst(2.0));
        let p = crossing_poly_coeffs(&all, len);
        // Λ(u−1) = Λ(−u): flip odd coefficients
        let m: Vec<S> = p.iter().enumerate().map(|(k, &a)| if k % 2 == 1 { -a } else { a }).collect();
        (0..len)
            .map(|l| {
                let mut acc = S::cst(0.0);
                for k in 0..=l {
                    acc = acc + p[k] * m[l - k];
                }
                (acc - S::from_c(self.rhs[l])) / S::cst(self.scale)
            })
            .collect()
    }
}

/// Random seeds for [`solve_lambda_functional`]: each of the N unknown
/// coefficients is drawn uniformly from a disk whose radius follows the size
/// of the homogeneous-chain coefficients.
pub fn functional_seeds(params: &ModelParams, count: usize, rng_seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let scale = 2.0 * (1.0 + params.p.norm()) * (1.0 + params.q.norm()) * (1.0 + params.xi.norm());
    (0..count)
        .map(|_| {
            (1..=params.n)
                .map(|k| {
                    let binom = (1..=k).fold(1.0, |acc, i| acc * (params.n + 2 - i) as f64 / i as f64);
                    let r = scale * binom * rng.random::<f64>().sqrt();
                    C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
                })
                .collect()
        })
        .collect()
}

/// Solves the eigenvalue functional relations for Λ directly.
///
/// Inhomogeneous mode imposes `Λ(θ_j)Λ(θ_j−1) = Δ_q(θ_j)/((1−2θ_j)(1+2θ_j))`;
/// homogeneous mode imposes the Taylor conditions of
/// [`homogeneous_condition_residuals`] by Gauss–Newton. Seeds are processed in
/// parallel; candidates are reported in seed order with duplicates removed.
pub fn solve_lambda_functional(
    params: &ModelParams,
    mode: FunctionalMode,
    seeds: &[Vec<C64>],
) -> Result<FunctionalSolution> {
    match mode {
        FunctionalMode::Inhomogeneous => {
            if params.is_homogeneous() {
                return Err(OdbaError::InvalidParams("inhomogeneous mode needs distinct theta".into()));
            }
            params.check_functional_poles()?;
            run_functional(params, &InhomogeneousSystem::new(params), seeds)
        }
        FunctionalMode::Homogeneous => {
            if !params.is_homogeneous() {
                return Err(OdbaError::HomogeneousRequired);
            }
            run_functional(params, &HomogeneousSystem::new(params), seeds)
        }
    }
}

fn run_functional<F: ResidualMap + Sync>(
    params: &ModelParams,
    system: &F,
    seeds: &[Vec<C64>],
) -> Result<FunctionalSolution> {
    for (i, s) in seeds.iter().enumerate() {
        if s.len() != params.n {
            return Err(OdbaError::InvalidParams(format!("seed {i} has {} entries, expected {}", s.len(), params.n)));
        }
    }
    let opts = NewtonOptions { tol: 1e-12, ..NewtonOptions::default() };
    let c0 = lambda_at_zero(params);
    let outcomes: Vec<_> = seeds.par_iter().map(|s| newton::solve(system, s, &opts)).collect();
    let mut candidates: Vec<LambdaCandidate> = Vec::new();
    let mut failures = Vec::new();
    for (seed_index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(sol) => {
                let mut coeffs = vec![c0];
                coeffs.extend_from_slice(&sol.z);
                coeffs.push(cr(2.0));
                let poly = PolynomialC::from_crossing_coeffs(&coeffs);
                if candidates.iter().all(|c| c.poly.coeff_distance(&poly) > DUPLICATE_DISTANCE) {
                    let residuals = lambda_properties(&poly, params).functional;
                    candidates.push(LambdaCandidate { poly, residuals });
                }
            }
            Err(e) => failures.push(SeedFailure { seed_index, reason: e.to_string() }),
        }
    }
    Ok(FunctionalSolution { candidates, failures, seeds: seeds.len() })
}

/// For each oracle polynomial, the smallest coefficient distance to any
/// candidate.
pub fn oracle_coverage(oracle: &[LambdaCandidate], found: &[LambdaCandidate]) -> Vec<f64> {
    oracle
        .iter()
        .map(|o| found.iter().map(|f| o.poly.coeff_distance(&f.poly)).fold(f64::INFINITY, f64::min))
        .collect()
}
