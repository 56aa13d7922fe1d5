//! Catalog of algebraic identities, each checked by building both sides as
//! dense matrices and comparing them in relative Frobenius norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OdbaError, Result};
use crate::lattice::{
    double_row_on, extract_one_row_components, k_minus, k_plus, monodromy,
    monodromy_on, r_matrix, transfer_matrix, vacuum_state, xi_unitarity, DoubleRowComponents, ModelParams,
    MonodromyKind, OneRowComponents,
};
use crate::spectral::{a_tilde, d_tilde, functional_rhs, lambda_at_zero, vacuum_a, vacuum_d};
use crate::tensor::{c, cr, pauli, relative_residual, CMatrix, CVector, DenseOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Identity {
    Qybe,
    InitialR,
    Unitarity,
    CrossingR,
    PtSymmetry,
    Antisymmetry,
    Reflection,
    DualReflection,
    Rll1,
    Rll2,
    Rll3,
    HatCrossing,
    BExpansion,
    ExchBetaComm,
    ExchBg,
    ExchAb,
    ExchDb,
    DrExchange,
    CbRelation,
    AbRelation,
    DbarbRelation,
    TransferCrossing,
    TransferInitial,
    TransferAsymptotic,
    TransferCommute,
    OperatorFunctional,
}

impl Identity {
    pub const ALL: [Identity; 26] = [
        Identity::Qybe,
        Identity::InitialR,
        Identity::Unitarity,
        Identity::CrossingR,
        Identity::PtSymmetry,
        Identity::Antisymmetry,
        Identity::Reflection,
        Identity::DualReflection,
        Identity::Rll1,
        Identity::Rll2,
        Identity::Rll3,
        Identity::HatCrossing,
        Identity::BExpansion,
        Identity::ExchBetaComm,
        Identity::ExchBg,
        Identity::ExchAb,
        Identity::ExchDb,
        Identity::DrExchange,
        Identity::CbRelation,
        Identity::AbRelation,
        Identity::DbarbRelation,
        Identity::TransferCrossing,
        Identity::TransferInitial,
        Identity::TransferAsymptotic,
        Identity::TransferCommute,
        Identity::OperatorFunctional,
    ];

    /// Identities of the R-matrix, K-matrices and monodromy algebra (no
    /// transfer-matrix or vacuum statements).
    pub const ALGEBRA: [Identity; 18] = [
        Identity::Qybe,
        Identity::InitialR,
        Identity::Unitarity,
        Identity::CrossingR,
        Identity::PtSymmetry,
        Identity::Antisymmetry,
        Identity::Reflection,
        Identity::DualReflection,
        Identity::Rll1,
        Identity::Rll2,
        Identity::Rll3,
        Identity::HatCrossing,
        Identity::BExpansion,
        Identity::ExchBetaComm,
        Identity::ExchBg,
        Identity::ExchAb,
        Identity::ExchDb,
        Identity::DrExchange,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Identity::Qybe => "qybe",
            Identity::InitialR => "initial_r",
            Identity::Unitarity => "unitarity",
            Identity::CrossingR => "crossing_r",
            Identity::PtSymmetry => "pt_symmetry",
            Identity::Antisymmetry => "antisymmetry",
            Identity::Reflection => "reflection",
            Identity::DualReflection => "dual_reflection",
            Identity::Rll1 => "rll_1",
            Identity::Rll2 => "rll_2",
            Identity::Rll3 => "rll_3",
            Identity::HatCrossing => "hat_crossing",
            Identity::BExpansion => "b_expansion",
            Identity::ExchBetaComm => "exch_beta_comm",
            Identity::ExchBg => "exch_bg",
            Identity::ExchAb => "exch_ab",
            Identity::ExchDb => "exch_db",
            Identity::DrExchange => "dr_exchange",
            Identity::CbRelation => "cb_relation",
            Identity::AbRelation => "ab_relation",
            Identity::DbarbRelation => "dbarb_relation",
            Identity::TransferCrossing => "transfer_crossing",
            Identity::TransferInitial => "transfer_initial",
            Identity::TransferAsymptotic => "transfer_asymptotic",
            Identity::TransferCommute => "transfer_commute",
            Identity::OperatorFunctional => "operator_functional",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|i| i.id() == id)
            .ok_or_else(|| OdbaError::UnknownIdentity(id.to_string()))
    }

    pub fn points_needed(&self) -> usize {
        match self {
            Identity::Qybe => 3,
            Identity::InitialR
            | Identity::Antisymmetry
            | Identity::TransferInitial
            | Identity::TransferAsymptotic
            | Identity::OperatorFunctional => 0,
            Identity::Unitarity
            | Identity::CrossingR
            | Identity::PtSymmetry
            | Identity::HatCrossing
            | Identity::BExpansion
            | Identity::TransferCrossing => 1,
            _ => 2,
        }
    }

    /// 1e−9 for the double-row commutation relations (near-pole
    /// denominators), 1e−10 otherwise.
    pub fn default_tolerance(&self) -> f64 {
        match self {
            Identity::CbRelation | Identity::AbRelation | Identity::DbarbRelation => 1e-9,
            _ => 1e-10,
        }
    }

    /// Spectral-parameter combinations that appear in denominators.
    fn denominators(&self, pts: &[C64]) -> Vec<C64> {
        match self {
            Identity::ExchBg | Identity::ExchAb | Identity::ExchDb => vec![pts[0] - pts[1]],
            Identity::CbRelation | Identity::AbRelation | Identity::DbarbRelation => {
                let (l, m) = (pts[0], pts[1]);
                vec![l - m, l + m + 1.0, l * 2.0 + 1.0, m * 2.0 + 1.0]
            }
            _ => Vec::new(),
        }
    }
}

/// Minimum modulus of any spectral denominator in a sample.
pub const GUARD_BAND: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub params: ModelParams,
    pub points: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub identity_id: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub sample: Sample,
    pub diagnostic: Option<String>,
}

impl VerificationResult {
    fn new(id: &str, residual: f64, tolerance: f64, sample: Sample) -> Self {
        let finite = residual.is_finite();
        Self {
            identity_id: id.to_string(),
            residual,
            tolerance,
            passed: finite && residual <= tolerance,
            sample,
            diagnostic: (!finite).then(|| "non-finite residual".to_string()),
        }
    }
}

/// Draws spectral points from the unit disk, rejecting samples within
/// [`GUARD_BAND`] of a pole of the identity.
pub fn sample_points<R: Rng + ?Sized>(identity: Identity, rng: &mut R) -> Vec<C64> {
    loop {
        let pts: Vec<C64> = (0..identity.points_needed())
            .map(|_| C64::from_polar(rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        if identity.denominators(&pts).iter().all(|d| d.norm() >= GUARD_BAND) {
            return pts;
        }
    }
}

/// Checks one catalog identity.
pub fn verify_identity(identity_id: &str, params: &ModelParams, points: &[C64], tol: f64) -> Result<VerificationResult> {
    let identity = Identity::from_id(identity_id)?;
    params.validate()?;
    let needed = identity.points_needed();
    if points.len() < needed {
        return Err(OdbaError::NotEnoughPoints { id: identity_id.to_string(), needed, given: points.len() });
    }
    if identity == Identity::OperatorFunctional {
        params.check_functional_poles()?;
    }
    if let Some(d) = identity.denominators(points).iter().find(|d| d.norm() < GUARD_BAND) {
        return Err(OdbaError::Pole(format!("spectral denominator {d} inside the guard band")));
    }
    let pts = &points[..needed];
    let residual = residual_of(identity, params, pts);
    Ok(VerificationResult::new(
        identity.id(),
        residual,
        tol,
        Sample { params: params.clone(), points: pts.to_vec() },
    ))
}

/// Every catalog identity at its default tolerance, points drawn from
/// `rng_seed`. Results come back in catalog order.
pub fn verify_catalog(params: &ModelParams, identities: &[Identity], rng_seed: u64) -> Result<Vec<VerificationResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let jobs: Vec<(Identity, Vec<C64>)> = identities.iter().map(|&i| (i, sample_points(i, &mut rng))).collect();
    jobs.par_iter()
        .map(|(i, pts)| verify_identity(i.id(), params, pts, i.default_tolerance()))
        .collect()
}

fn rel(a: &DenseOperator, b: &DenseOperator) -> f64 {
    relative_residual(a.entries(), b.entries())
}

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn pair(op: CMatrix, i: usize, j: usize, n: usize) -> DenseOperator {
    DenseOperator::embed_pair(&op, i, j, n).expect("valid layout")
}

fn site(op: CMatrix, j: usize, n: usize) -> DenseOperator {
    DenseOperator::embed_site(&op, j, n).expect("valid layout")
}

fn one_row(u: C64, params: &ModelParams) -> OneRowComponents {
    extract_one_row_components(&monodromy(u, params, MonodromyKind::Forward)).expect("auxiliary factor")
}

fn double_row(u: C64, params: &ModelParams) -> DoubleRowComponents {
    crate::lattice::double_row_components(u, params)
}

fn residual_of(identity: Identity, params: &ModelParams, pts: &[C64]) -> f64 {
    let n = params.n;
    let big = n + 2;
    match identity {
        Identity::Qybe => {
            let (u1, u2, u3) = (pts[0], pts[1], pts[2]);
            let r12 = pair(r_matrix(u1 - u2), 1, 2, 3);
            let r13 = pair(r_matrix(u1 - u3), 1, 3, 3);
            let r23 = pair(r_matrix(u2 - u3), 2, 3, 3);
            rel(&(&(&r12 * &r13) * &r23), &(&(&r23 * &r13) * &r12))
        }
        Identity::InitialR => relative_residual(&r_matrix(cr(0.0)), &pauli::permutation()),
        Identity::Unitarity => {
            let u = pts[0];
            let lhs = &pair(r_matrix(u), 1, 2, 2) * &pair(r_matrix(-u), 2, 1, 2);
            let rhs = DenseOperator::identity(2).scale(-xi_unitarity(u));
            rel(&lhs, &rhs)
        }
        Identity::CrossingR => {
            let u = pts[0];
            let v1 = site(pauli::crossing_v(), 1, 2);
            let rt = pair(r_matrix(-u - 1.0), 1, 2, 2).partial_transpose(2).expect("factor 2");
            rel(&pair(r_matrix(u), 1, 2, 2), &(&(&v1 * &rt) * &v1))
        }
        Identity::PtSymmetry => {
            let u = pts[0];
            let r12 = pair(r_matrix(u), 1, 2, 2);
            let r21 = pair(r_matrix(u), 2, 1, 2);
            let rtt = r12.partial_transpose(1).and_then(|x| x.partial_transpose(2)).expect("two factors");
            rel(&r12, &r21).max(rel(&r12, &rtt))
        }
        Identity::Antisymmetry => relative_residual(&r_matrix(cr(-1.0)), &(pauli::antisymmetrizer() * cr(-2.0))),
        Identity::Reflection => {
            let (u1, u2) = (pts[0], pts[1]);
            let k1 = site(k_minus(u1, params), 1, 2);
            let k2 = site(k_minus(u2, params), 2, 2);
            let lhs = &(&(&pair(r_matrix(u1 - u2), 1, 2, 2) * &k1) * &pair(r_matrix(u1 + u2), 2, 1, 2)) * &k2;
            let rhs = &(&(&k2 * &pair(r_matrix(u1 + u2), 1, 2, 2)) * &k1) * &pair(r_matrix(u1 - u2), 2, 1, 2);
            rel(&lhs, &rhs)
        }
        Identity::DualReflection => {
            let (u1, u2) = (pts[0], pts[1]);
            let k1 = site(k_plus(u1, params), 1, 2);
            let k2 = site(k_plus(u2, params), 2, 2);
            let s = -u1 - u2 - 2.0;
            let lhs = &(&(&pair(r_matrix(u2 - u1), 1, 2, 2) * &k1) * &pair(r_matrix(s), 2, 1, 2)) * &k2;
            let rhs = &(&(&k2 * &pair(r_matrix(s), 1, 2, 2)) * &k1) * &pair(r_matrix(u2 - u1), 2, 1, 2);
            rel(&lhs, &rhs)
        }
        Identity::Rll1 | Identity::Rll2 | Identity::Rll3 => {
            let (u, v) = (pts[0], pts[1]);
            let mono = |x: C64, kind, aux| monodromy_on(x, params, kind, aux, 3, big).expect("valid layout");
            let (lhs, rhs) = match identity {
                Identity::Rll1 => {
                    let r = pair(r_matrix(u - v), 1, 2, big);
                    let t1 = mono(u, MonodromyKind::Forward, 1);
                    let t2 = mono(v, MonodromyKind::Forward, 2);
                    (&(&r * &t1) * &t2, &(&t2 * &t1) * &r)
                }
                Identity::Rll2 => {
                    let r = pair(r_matrix(v - u), 1, 2, big);
                    let h1 = mono(u, MonodromyKind::Hat, 1);
                    let h2 = mono(v, MonodromyKind::Hat, 2);
                    (&(&r * &h2) * &h1, &(&h1 * &h2) * &r)
                }
                _ => {
                    let r = pair(r_matrix(u + v), 1, 2, big);
                    let t1 = mono(u, MonodromyKind::Forward, 1);
                    let h2 = mono(v, MonodromyKind::Hat, 2);
                    (&(&h2 * &r) * &t1, &(&t1 * &r) * &h2)
                }
            };
            rel(&lhs, &rhs)
        }
        Identity::HatCrossing => {
            let u = pts[0];
            let hat = monodromy(u, params, MonodromyKind::Hat);
            let t = monodromy(-u - 1.0, params, MonodromyKind::Forward).partial_transpose(1).expect("aux");
            let v0 = site(pauli::crossing_v(), 1, n + 1);
            let rhs = (&(&v0 * &t) * &v0).scale(cr(sign(n - 1)));
            rel(&hat, &rhs)
        }
        Identity::BExpansion => {
            let l = pts[0];
            let b = double_row(l, params).b;
            let x = one_row(l, params);
            let y = one_row(-l - 1.0, params);
            let rhs = &(&x.alpha * &y.beta).scale(-(params.p + l)) + &(&x.beta * &y.alpha).scale(params.p - l);
            rel(&b, &rhs.scale(cr(sign(n))))
        }
        Identity::ExchBetaComm | Identity::ExchBg | Identity::ExchAb | Identity::ExchDb => {
            let (l, m) = (pts[0], pts[1]);
            let x = one_row(l, params);
            let y = one_row(m, params);
            let inv = (l - m).inv();
            match identity {
                Identity::ExchBetaComm => rel(&(&x.beta * &y.beta), &(&y.beta * &x.beta)),
                Identity::ExchBg => {
                    let corr = (&(&y.delta * &x.alpha) - &(&x.delta * &y.alpha)).scale(inv);
                    rel(&(&x.beta * &y.gamma), &(&(&y.gamma * &x.beta) + &corr))
                }
                Identity::ExchAb => {
                    let rhs = &(&y.beta * &x.alpha).scale((l - m - 1.0) * inv) + &(&x.beta * &y.alpha).scale(inv);
                    rel(&(&x.alpha * &y.beta), &rhs)
                }
                _ => {
                    let rhs = &(&y.beta * &x.delta).scale((l - m + 1.0) * inv) - &(&x.beta * &y.delta).scale(inv);
                    rel(&(&x.delta * &y.beta), &rhs)
                }
            }
        }
        Identity::DrExchange => {
            let (u1, u2) = (pts[0], pts[1]);
            let t1 = double_row_on(u1, params, 1, 3, big).expect("valid layout");
            let t2 = double_row_on(u2, params, 2, 3, big).expect("valid layout");
            let lhs = &(&(&pair(r_matrix(u1 - u2), 1, 2, big) * &t1) * &pair(r_matrix(u1 + u2), 2, 1, big)) * &t2;
            let rhs = &(&(&t2 * &pair(r_matrix(u1 + u2), 1, 2, big)) * &t1) * &pair(r_matrix(u1 - u2), 2, 1, big);
            rel(&lhs, &rhs)
        }
        Identity::CbRelation | Identity::AbRelation | Identity::DbarbRelation => {
            let (l, m) = (pts[0], pts[1]);
            let x = double_row(l, params);
            let y = double_row(m, params);
            let (lhs, rhs) = double_row_relation(identity, &x, &y, l, m);
            let states = random_states(n, 5);
            relative_residual(&(lhs.entries() * &states), &(rhs.entries() * &states))
        }
        Identity::TransferCrossing => {
            let u = pts[0];
            rel(&transfer_matrix(-u - 1.0, params), &transfer_matrix(u, params))
        }
        Identity::TransferInitial => {
            let t0 = transfer_matrix(cr(0.0), params);
            rel(&t0, &DenseOperator::identity(n).scale(lambda_at_zero(params)))
        }
        Identity::TransferAsymptotic => transfer_asymptotic_residual(params, asymptotic_radius(params)),
        Identity::TransferCommute => {
            let (u, v) = (pts[0], pts[1]);
            let a = transfer_matrix(u, params);
            let b = transfer_matrix(v, params);
            a.commutator(&b).frobenius_norm() / (a.frobenius_norm() * b.frobenius_norm()).max(1e-300)
        }
        Identity::OperatorFunctional => operator_functional_residuals(params).into_iter().fold(0.0, f64::max),
    }
}

/// Both sides of the double-row commutation relations for A, B, C, D̄.
fn double_row_relation(
    identity: Identity,
    x: &DoubleRowComponents,
    y: &DoubleRowComponents,
    l: C64,
    m: C64,
) -> (DenseOperator, DenseOperator) {
    let one = cr(1.0);
    match identity {
        Identity::CbRelation => {
            let lhs = &x.c * &y.b;
            let mut rhs = &y.b * &x.c;
            rhs = &rhs + &(&y.a * &x.d_bar).scale((l + m) / ((l + m + one) * (l - m) * (l * 2.0 + one)));
            rhs = &rhs + &(&y.a * &x.a).scale((l - m + one) * l * 2.0 / ((l + m + one) * (l - m) * (l * 2.0 + one)));
            let t = &(&x.a * &y.d_bar) + &(&x.a * &y.a);
            rhs = &rhs - &t.scale(l * 2.0 / ((l - m) * (l * 2.0 + one) * (m * 2.0 + one)));
            let t = &(&x.d_bar * &y.d_bar) + &(&x.d_bar * &y.a);
            rhs = &rhs - &t.scale(((l + m + one) * (l * 2.0 + one) * (m * 2.0 + one)).inv());
            (lhs, rhs)
        }
        Identity::AbRelation => {
            let lhs = &x.a * &y.b;
            let mut rhs = (&y.b * &x.a).scale((l + m) * (l - m - one) / ((l - m) * (l + m + one)));
            rhs = &rhs - &(&x.b * &y.d_bar).scale(((l + m + one) * (m * 2.0 + one)).inv());
            rhs = &rhs + &(&x.b * &y.a).scale(m * 2.0 / ((l - m) * (m * 2.0 + one)));
            (lhs, rhs)
        }
        _ => {
            let lhs = &x.d_bar * &y.b;
            let mut rhs = (&y.b * &x.d_bar).scale((l - m + one) * (l + m + 2.0) / ((l - m) * (l + m + one)));
            rhs = &rhs - &(&x.b * &y.d_bar).scale((l + one) * 2.0 / ((l - m) * (m * 2.0 + one)));
            rhs = &rhs + &(&x.b * &y.a).scale((l + one) * m * 4.0 / ((m * 2.0 + one) * (l + m + one)));
            (lhs, rhs)
        }
    }
}

fn random_states(n: usize, count: usize) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(5 + n as u64);
    CMatrix::from_fn(1usize << n, count, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Leading coefficient of the degree-(2N+2) polynomial `τ(u)`, read off a
/// discrete Fourier transform over a circle of radius `radius`, compared with
/// `2·id`. Exact up to rounding for any radius.
pub fn transfer_asymptotic_residual(params: &ModelParams, radius: f64) -> f64 {
    let deg = 2 * params.n + 2;
    let k = deg + 1;
    let dim = 1usize << params.n;
    let mut acc = CMatrix::zeros(dim, dim);
    for j in 0..k {
        let w = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / k as f64);
        let tau = transfer_matrix(w * radius, params).into_entries();
        acc += tau * w.powu(deg as u32).inv();
    }
    let lead = acc / cr(k as f64 * radius.powi(deg as i32));
    relative_residual(&lead, &(CMatrix::identity(dim, dim) * cr(2.0)))
}

/// Richardson-extrapolated `τ(u)/u^{2N+2}` from `u, 2u, 4u`, compared with
/// `2·id`. Leaves an `O(u⁻³)` error.
pub fn transfer_asymptotic_richardson(params: &ModelParams, u: f64) -> f64 {
    let deg = 2 * params.n as i32 + 2;
    let f = |x: f64| transfer_matrix(cr(x), params).into_entries() / cr(x.powi(deg));
    let (f1, f2, f4) = (f(u), f(2.0 * u), f(4.0 * u));
    let r1 = &f2 * cr(2.0) - &f1;
    let r2 = &f4 * cr(2.0) - &f2;
    let extrap = (r2 * cr(4.0) - r1) / cr(3.0);
    let dim = extrap.nrows();
    relative_residual(&extrap, &(CMatrix::identity(dim, dim) * cr(2.0)))
}

/// Contour radius for [`transfer_asymptotic_residual`].
pub fn asymptotic_radius(params: &ModelParams) -> f64 {
    2.0 + params.theta.iter().map(|t| t.norm()).fold(0.0, f64::max)
}

/// `τ(θ_j)τ(θ_j−1)` against `Δ_q(θ_j)/((1−2θ_j)(1+2θ_j))·id`, one residual per j.
pub fn operator_functional_residuals(params: &ModelParams) -> Vec<f64> {
    params
        .theta
        .iter()
        .map(|&t| {
            let lhs = &transfer_matrix(t, params) * &transfer_matrix(t - 1.0, params);
            rel(&lhs, &DenseOperator::identity(params.n).scale(functional_rhs(t, params)))
        })
        .collect()
}

/// `‖B(θ_j)B(θ_j−1)‖ / (‖B(θ_j)‖‖B(θ_j−1)‖)` for every j.
pub fn bb_vanishing_ratios(params: &ModelParams) -> Vec<f64> {
    params
        .theta
        .iter()
        .map(|&t| {
            let b1 = double_row(t, params).b;
            let b2 = double_row(t - 1.0, params).b;
            (&b1 * &b2).frobenius_norm() / (b1.frobenius_norm() * b2.frobenius_norm()).max(1e-300)
        })
        .collect()
}

/// Fixed spectral points used by the vacuum checks.
pub const VACUUM_POINTS: [C64; 3] = [C64 { re: 0.5, im: 0.0 }, C64 { re: 0.3, im: 0.2 }, C64 { re: -0.7, im: 0.1 }];

/// Vacuum-state relations: C|0⟩ = 0, the A and D̄ eigenvalues, the zeros of
/// a and d, the one-row relations at θ_j and θ_j − 1, the vanishing of
/// B(θ_j)B(θ_j−1), and both lines of the two-step reduction of
/// τ(θ_j)τ(θ_j−1)|0⟩.
pub fn verify_vacuum_relations(params: &ModelParams, tol: f64) -> Result<Vec<VerificationResult>> {
    params.validate()?;
    params.check_functional_poles()?;
    let n = params.n;
    let v0 = vacuum_state(n);
    let pts = VACUUM_POINTS.to_vec();
    let sample = |points: Vec<C64>| Sample { params: params.clone(), points };
    let mut out = Vec::new();
    let vrel = |a: &CVector, b: &CVector| -> f64 { (a - b).norm() / a.norm().max(b.norm()).max(1e-300) };

    let (mut rc, mut ra, mut rd) = (0.0f64, 0.0f64, 0.0f64);
    for &u in &pts {
        let x = double_row(u, params);
        rc = rc.max(x.c.apply(&v0).norm() / x.c.frobenius_norm().max(1e-300));
        ra = ra.max(vrel(&x.a.apply(&v0), &(&v0 * vacuum_a(u, params))));
        rd = rd.max(vrel(&x.d_bar.apply(&v0), &(&v0 * vacuum_d(u, params))));
    }
    out.push(VerificationResult::new("vacuum_c", rc, tol, sample(pts.clone())));
    out.push(VerificationResult::new("vacuum_a", ra, tol, sample(pts.clone())));
    out.push(VerificationResult::new("vacuum_dbar", rd, tol, sample(pts.clone())));

    let mut zeros = 0.0f64;
    for &t in &params.theta {
        let scale = vacuum_a(t, params).norm() + vacuum_d(t - 1.0, params).norm() + 1e-300;
        zeros = zeros.max(vacuum_a(t - 1.0, params).norm() / scale);
        zeros = zeros.max(vacuum_d(t, params).norm() / scale);
    }
    out.push(VerificationResult::new("vacuum_zeros", zeros, tol, sample(params.theta.clone())));

    // one-row relations at (θ_j, θ_j − 1)
    let mut app = [0.0f64; 6];
    let mut bb = 0.0f64;
    let mut six = 0.0f64;
    let mut fin = 0.0f64;
    let zero_ratio = |x: &DenseOperator, y: &DenseOperator| -> f64 {
        (x * y).apply(&v0).norm() / (x.frobenius_norm() * y.frobenius_norm()).max(1e-300)
    };
    for &t in &params.theta {
        let x = one_row(t, params);
        let y = one_row(t - 1.0, params);
        let ad = a_tilde(t, params) * d_tilde(t - 1.0, params);
        app[0] = app[0].max(zero_ratio(&x.alpha, &y.beta)).max(zero_ratio(&x.delta, &y.alpha));
        app[1] = app[1].max(zero_ratio(&x.alpha, &y.alpha)).max(zero_ratio(&x.delta, &y.delta));
        app[2] = app[2].max(vrel(&(&x.gamma * &y.beta).apply(&v0), &(&v0 * -ad)));
        app[3] = app[3].max(vrel(
            &(&x.delta * &y.beta).apply(&v0),
            &(x.beta.apply(&v0) * -d_tilde(t - 1.0, params)),
        ));
        app[4] = app[4].max(vrel(&(&x.alpha * &y.delta).apply(&v0), &(&v0 * ad)));
        app[5] = app[5].max(zero_ratio(&x.beta, &y.beta));

        let dx = double_row(t, params);
        let dy = double_row(t - 1.0, params);
        bb = bb.max((&dx.b * &dy.b).frobenius_norm() / (dx.b.frobenius_norm() * dy.b.frobenius_norm()).max(1e-300));

        let lhs = (&transfer_matrix(t, params) * &transfer_matrix(t - 1.0, params)).apply(&v0);
        let (q, xi) = (params.q, params.xi);
        let one = cr(1.0);
        let adp = vacuum_a(t, params) * vacuum_d(t - 1.0, params);
        let mut line = &v0 * ((t + q) * (t + one) * (q - t) * 2.0 / ((t * 2.0 + one) * (t * 2.0 - one)) * adp);
        line += (&dx.c * &dy.b).apply(&v0) * (xi * xi * t * (t + one));
        line += dx.b.apply(&v0) * (xi * (q - t) * (t + one) / (t * 2.0 - one) * vacuum_d(t - 1.0, params));
        line += (&dx.a * &dy.b).apply(&v0) * (xi * t * (t + q) * (t + one) * 2.0 / (t * 2.0 + one));
        line += (&dx.d_bar * &dy.b).apply(&v0) * (xi * t * (q - t - one) / (t * 2.0 + one));
        line += (&dx.b * &dy.b).apply(&v0) * (xi * xi * t * (t + one));
        six = six.max(vrel(&lhs, &line));
        let s = xi * xi + one;
        let reduced = &v0 * ((t + one) * (q * q - s * t * t) * 2.0 / ((t * 2.0 - one) * (t * 2.0 + one)) * adp);
        fin = fin.max(vrel(&lhs, &reduced));
    }
    let ids = [
        "vacuum_alpha_beta_delta_alpha",
        "vacuum_alpha_alpha_delta_delta",
        "vacuum_gamma_beta",
        "vacuum_delta_beta",
        "vacuum_alpha_delta",
        "vacuum_beta_beta",
    ];
    for (id, r) in ids.iter().zip(app) {
        out.push(VerificationResult::new(id, r, tol, sample(params.theta.clone())));
    }
    out.push(VerificationResult::new("bb_vanishing", bb, tol, sample(params.theta.clone())));
    out.push(VerificationResult::new("two_step_six_term", six, tol, sample(params.theta.clone())));
    out.push(VerificationResult::new("two_step_reduced", fin, tol, sample(params.theta.clone())));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> ModelParams {
        ModelParams::real(n, 1.7, 2.3, 0.8, &[0.13, 0.31, 0.22, 0.41][..n]).unwrap()
    }

    #[test]
    fn catalog_ids_round_trip() {
        for i in Identity::ALL {
            assert_eq!(Identity::from_id(i.id()).unwrap(), i);
        }
        assert_eq!(Identity::from_id("nope"), Err(OdbaError::UnknownIdentity("nope".into())));
    }

    #[test]
    fn whole_catalog_passes() {
        for n in 1..=3 {
            let res = verify_catalog(&params(n), &Identity::ALL, 11).unwrap();
            for r in res {
                assert!(r.passed, "N={n} {} residual {:.3e}", r.identity_id, r.residual);
            }
        }
    }

    #[test]
    fn qybe_example() {
        let pts = [c(0.3, 0.1), c(-0.2, 0.4), c(0.5, -0.3)];
        let r = verify_identity("qybe", &params(1), &pts, 1e-11).unwrap();
        assert!(r.passed && r.residual < 1e-14);
    }

    #[test]
    fn antisymmetry_exact() {
        let r = verify_identity("antisymmetry", &params(1), &[cr(-1.0)], 1e-13).unwrap();
        assert!(r.passed);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn point_count_and_guard_errors() {
        let p = params(2);
        assert!(matches!(
            verify_identity("qybe", &p, &[cr(0.1)], 1e-10),
            Err(OdbaError::NotEnoughPoints { needed: 3, given: 1, .. })
        ));
        assert!(matches!(verify_identity("exch_ab", &p, &[cr(0.1), cr(0.105)], 1e-10), Err(OdbaError::Pole(_))));
    }

    #[test]
    fn printed_b_sign_fails_for_odd_chains() {
        // the same combination without the (−1)^N factor
        let p = params(1);
        let l = c(0.3, 0.2);
        let b = double_row(l, &p).b;
        let x = one_row(l, &p);
        let y = one_row(-l - 1.0, &p);
        let printed = &(&x.alpha * &y.beta).scale(-(p.p + l)) + &(&x.beta * &y.alpha).scale(p.p - l);
        assert!(rel(&b, &printed) > 0.5);
    }

    #[test]
    fn vacuum_relations_pass() {
        for n in 1..=3 {
            for r in verify_vacuum_relations(&params(n), 1e-10).unwrap() {
                assert!(r.passed, "N={n} {} {:.3e}", r.identity_id, r.residual);
            }
        }
    }

    #[test]
    fn asymptotics_both_ways() {
        let p = params(3);
        assert!(transfer_asymptotic_richardson(&p, 1e3) < 1e-6);
        assert!(transfer_asymptotic_residual(&p, asymptotic_radius(&p)) < 1e-12);
    }

    #[test]
    fn operator_functional_every_j() {
        let res = operator_functional_residuals(&params(3));
        assert_eq!(res.len(), 3);
        assert!(res.iter().all(|&r| r < 1e-10));
    }
}
