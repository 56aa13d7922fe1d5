//! Model-defining objects: R-matrix, K-matrices, monodromies, transfer matrix
//! and Hamiltonian.
//!
//! In every operator built here the auxiliary space is tensor factor 1 and
//! site `j` of the chain is factor `j + 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OdbaError, Result};
use crate::tensor::{cr, pauli, CMatrix, CVector, DenseOperator, C64, MAX_FACTORS};

/// Crossing parameter. Fixed throughout.
pub const ETA: f64 = 1.0;

/// Largest chain length accepted by [`ModelParams::new`].
pub const MAX_SITES: usize = MAX_FACTORS - 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub p: C64,
    pub q: C64,
    pub xi: C64,
    pub theta: Vec<C64>,
}

impl ModelParams {
    pub fn new(n: usize, p: C64, q: C64, xi: C64, theta: Vec<C64>) -> Result<Self> {
        let params = Self { n, p, q, xi, theta };
        params.validate()?;
        Ok(params)
    }

    /// All inhomogeneities zero.
    pub fn homogeneous(n: usize, p: f64, q: f64, xi: f64) -> Result<Self> {
        Self::new(n, cr(p), cr(q), cr(xi), vec![cr(0.0); n])
    }

    pub fn real(n: usize, p: f64, q: f64, xi: f64, theta: &[f64]) -> Result<Self> {
        Self::new(n, cr(p), cr(q), cr(xi), theta.iter().map(|&t| cr(t)).collect())
    }

    /// Structural checks: site count, θ length, finiteness, distinct θ
    /// (unless the chain is homogeneous).
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_SITES {
            return Err(OdbaError::InvalidParams(format!("N must be in 1..={MAX_SITES}, got {}", self.n)));
        }
        if self.theta.len() != self.n {
            return Err(OdbaError::InvalidParams(format!(
                "theta has {} entries but N = {}",
                self.theta.len(),
                self.n
            )));
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        if !finite(&self.p) || !finite(&self.q) || !finite(&self.xi) || !self.theta.iter().all(finite) {
            return Err(OdbaError::InvalidParams("non-finite parameter".into()));
        }
        if !self.is_homogeneous() {
            for i in 0..self.n {
                for j in 0..i {
                    if (self.theta[i] - self.theta[j]).norm() < 1e-12 {
                        return Err(OdbaError::InvalidParams(format!("theta[{j}] and theta[{i}] coincide")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Pole rule of the functional relation: 1 ± 2θ_j must not vanish.
    pub fn check_functional_poles(&self) -> Result<()> {
        for (j, t) in self.theta.iter().enumerate() {
            if (cr(1.0) - t * 2.0).norm() < 1e-12 || (cr(1.0) + t * 2.0).norm() < 1e-12 {
                return Err(OdbaError::InvalidParams(format!(
                    "theta[{j}] = ±1/2 makes the factor (1-2θ)(1+2θ) vanish"
                )));
            }
        }
        Ok(())
    }

    /// Full genericity rules used by the default sampler: θ_j ∉ {0, ±1/2, ±1}
    /// and |θ_i ± θ_j| ∉ {0, 1}.
    pub fn check_generic(&self, guard: f64) -> Result<()> {
        self.check_functional_poles()?;
        for (j, t) in self.theta.iter().enumerate() {
            for bad in [0.0, 0.5, -0.5, 1.0, -1.0] {
                if (t - bad).norm() < guard {
                    return Err(OdbaError::InvalidParams(format!("theta[{j}] too close to {bad}")));
                }
            }
        }
        for i in 0..self.n {
            for j in 0..i {
                for s in [self.theta[i] - self.theta[j], self.theta[i] + self.theta[j]] {
                    for bad in [0.0, 1.0, -1.0] {
                        if (s - bad).norm() < guard {
                            return Err(OdbaError::InvalidParams(format!(
                                "theta[{i}] ± theta[{j}] too close to {bad}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.theta.iter().all(|t| t.norm() == 0.0)
    }

    /// `(h_N, h_1^x, h_1^z) = (1/p, ξ/q, 1/q)`.
    pub fn boundary_fields(&self) -> (C64, C64, C64) {
        (self.p.inv(), self.xi / self.q, self.q.inv())
    }

    pub fn with_theta(&self, theta: Vec<C64>) -> Result<Self> {
        Self::new(self.n, self.p, self.q, self.xi, theta)
    }

    pub fn with_xi(&self, xi: C64) -> Self {
        Self { xi, ..self.clone() }
    }

    /// Default sampler: p, q ∈ [0.7, 3], ξ ∈ [0, 2], θ_j ∈ (0.05, 0.45) with
    /// pairwise separation at least 0.03.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let p = rng.random_range(0.7..=3.0);
        let q = rng.random_range(0.7..=3.0);
        let xi = rng.random_range(0.0..=2.0);
        let mut theta: Vec<f64> = Vec::with_capacity(n);
        while theta.len() < n {
            let t = rng.random_range(0.05..0.45);
            if (0.05..0.45).contains(&t) && theta.iter().all(|s| (s - t).abs() >= 0.03) {
                theta.push(t);
            }
        }
        Self::real(n, p, q, xi, &theta).expect("sampler produces valid parameters")
    }

    /// Homogeneous sample with p, q, ξ from the default ranges.
    pub fn sample_homogeneous<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let p = rng.random_range(0.7..=3.0);
        let q = rng.random_range(0.7..=3.0);
        let xi = rng.random_range(0.0..=2.0);
        Self::homogeneous(n, p, q, xi).expect("sampler produces valid parameters")
    }
}

/// Rational six-vertex R-matrix.
pub fn r_matrix(u: C64) -> CMatrix {
    let z = cr(0.0);
    let one = cr(1.0);
    let a = u + ETA;
    CMatrix::from_row_slice(4, 4, &[a, z, z, z, z, u, one, z, z, one, u, z, z, z, z, a])
}

/// `(u + 1)(u − 1)`, the scalar of the unitarity relation. Not to be confused
/// with the boundary parameter `ModelParams::xi`.
pub fn xi_unitarity(u: C64) -> C64 {
    (u + 1.0) * (u - 1.0)
}

pub fn k_minus(u: C64, params: &ModelParams) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[params.p + u, cr(0.0), cr(0.0), params.p - u])
}

pub fn k_plus(u: C64, params: &ModelParams) -> CMatrix {
    let off = params.xi * (u + 1.0);
    CMatrix::from_row_slice(2, 2, &[params.q + u + 1.0, off, off, params.q - u - 1.0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonodromyKind {
    /// `R_{0N}(u−θ_N)···R_{01}(u−θ_1)`
    Forward,
    /// `R_{01}(u+θ_1)···R_{0N}(u+θ_N)`
    Hat,
}

/// One-row monodromy on N+1 factors (auxiliary = factor 1).
pub fn monodromy(u: C64, params: &ModelParams, kind: MonodromyKind) -> DenseOperator {
    monodromy_on(u, params, kind, 1, 2, params.n + 1).expect("factor layout is valid")
}

/// One-row monodromy with auxiliary factor `aux` and sites on factors
/// `first_site..first_site+N` of an `n_total`-factor space.
pub fn monodromy_on(
    u: C64,
    params: &ModelParams,
    kind: MonodromyKind,
    aux: usize,
    first_site: usize,
    n_total: usize,
) -> Result<DenseOperator> {
    let mut out = DenseOperator::identity(n_total);
    for (j, theta) in params.theta.iter().enumerate() {
        let site = first_site + j;
        match kind {
            MonodromyKind::Forward => out.apply_left(&r_matrix(u - theta), &[aux, site])?,
            MonodromyKind::Hat => out.apply_right(&r_matrix(u + theta), &[aux, site])?,
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct OneRowComponents {
    pub alpha: DenseOperator,
    pub beta: DenseOperator,
    pub gamma: DenseOperator,
    pub delta: DenseOperator,
}

pub fn extract_one_row_components(t: &DenseOperator) -> Result<OneRowComponents> {
    Ok(OneRowComponents {
        alpha: t.leading_block(0, 0)?,
        beta: t.leading_block(0, 1)?,
        gamma: t.leading_block(1, 0)?,
        delta: t.leading_block(1, 1)?,
    })
}

/// `𝕋(u) = T(u) K⁻(u) T̂(u)`.
pub fn double_row_monodromy(u: C64, params: &ModelParams) -> DenseOperator {
    double_row_on(u, params, 1, 2, params.n + 1).expect("factor layout is valid")
}

pub(crate) fn double_row_on(
    u: C64,
    params: &ModelParams,
    aux: usize,
    first_site: usize,
    n_total: usize,
) -> Result<DenseOperator> {
    let mut t = monodromy_on(u, params, MonodromyKind::Forward, aux, first_site, n_total)?;
    t.apply_right(&k_minus(u, params), &[aux])?;
    let hat = monodromy_on(u, params, MonodromyKind::Hat, aux, first_site, n_total)?;
    Ok(&t * &hat)
}

#[derive(Clone, Debug)]
pub struct DoubleRowComponents {
    pub a: DenseOperator,
    pub b: DenseOperator,
    pub c: DenseOperator,
    pub d: DenseOperator,
    /// `(2u + 1) D(u) − A(u)`
    pub d_bar: DenseOperator,
}

pub fn extract_double_row_components(tt: &DenseOperator, u: C64) -> Result<DoubleRowComponents> {
    let a = tt.leading_block(0, 0)?;
    let b = tt.leading_block(0, 1)?;
    let c = tt.leading_block(1, 0)?;
    let d = tt.leading_block(1, 1)?;
    let d_bar = &d.scale(u * 2.0 + 1.0) - &a;
    Ok(DoubleRowComponents { a, b, c, d, d_bar })
}

pub fn double_row_components(u: C64, params: &ModelParams) -> DoubleRowComponents {
    extract_double_row_components(&double_row_monodromy(u, params), u).expect("auxiliary factor present")
}

/// `τ(u) = tr_0(K⁺(u) 𝕋(u))`.
pub fn transfer_matrix(u: C64, params: &ModelParams) -> DenseOperator {
    let comps = double_row_components(u, params);
    let k = k_plus(u, params);
    let mut out = comps.a.scale(k[(0, 0)]);
    out = &out + &comps.c.scale(k[(0, 1)]);
    out = &out + &comps.b.scale(k[(1, 0)]);
    &out + &comps.d.scale(k[(1, 1)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianMode {
    Direct,
    FromTransfer,
}

/// Finite-difference step for [`HamiltonianMode::FromTransfer`].
pub const FROM_TRANSFER_STEP: f64 = 1e-3;

pub fn hamiltonian(params: &ModelParams, mode: HamiltonianMode) -> Result<DenseOperator> {
    match mode {
        HamiltonianMode::Direct => Ok(hamiltonian_direct(params)),
        HamiltonianMode::FromTransfer => hamiltonian_from_transfer(params, FROM_TRANSFER_STEP),
    }
}

fn hamiltonian_direct(params: &ModelParams) -> DenseOperator {
    let n = params.n;
    let heis = pauli::permutation() * cr(2.0) - CMatrix::identity(4, 4);
    let mut h = DenseOperator::zeros(n);
    for j in 1..n {
        h = &h + &DenseOperator::embed_pair(&heis, j, j + 1, n).expect("valid bond");
    }
    let right = pauli::z() * params.p.inv();
    let left = (pauli::z() + pauli::x() * params.xi) * params.q.inv();
    h = &h + &DenseOperator::embed_site(&right, n, n).expect("valid site");
    &h + &DenseOperator::embed_site(&left, 1, n).expect("valid site")
}

/// `τ(0)^{-1} τ'(0) − N`, with τ'(0) from fourth-order central differences,
/// then relabelled by the site reversal `j → N + 1 − j`. With the monodromy
/// ordering used here K⁻ acts next to site 1, so the raw log-derivative carries
/// the `1/p` field on site 1; the reversal puts it on site N.
pub fn hamiltonian_from_transfer(params: &ModelParams, h: f64) -> Result<DenseOperator> {
    if !params.is_homogeneous() {
        return Err(OdbaError::HomogeneousRequired);
    }
    let n = params.n;
    let t = |u: f64| transfer_matrix(cr(u), params).into_entries();
    let deriv = (t(-2.0 * h) - t(2.0 * h) + (t(h) - t(-h)) * cr(8.0)) / cr(12.0 * h);
    let t0 = transfer_matrix(cr(0.0), params);
    let (scale, _) = t0.identity_multiple();
    if scale.norm() == 0.0 {
        return Err(OdbaError::Pole("tau(0) vanishes".into()));
    }
    let raw = deriv / scale - CMatrix::identity(t0.dim(), t0.dim()) * cr(n as f64);
    let rev = site_reversal(n);
    DenseOperator::from_matrix(&rev * raw * &rev, n)
}

/// Permutation matrix of `j → N + 1 − j` (an involution).
pub fn site_reversal(n: usize) -> CMatrix {
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let rev = i.reverse_bits() >> (usize::BITS as usize - n);
        m[(rev, i)] = cr(1.0);
    }
    m
}

/// All spins up, the first basis vector.
pub fn vacuum_state(n: usize) -> CVector {
    let mut v = CVector::zeros(1usize << n);
    v[0] = cr(1.0);
    v
}

/// Total `Σ σ^z_j`.
pub fn total_sz(n: usize) -> DenseOperator {
    (1..=n).fold(DenseOperator::zeros(n), |acc, j| {
        &acc + &DenseOperator::embed_site(&pauli::z(), j, n).expect("valid site")
    })
}
