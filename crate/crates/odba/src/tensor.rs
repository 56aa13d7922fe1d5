//! Dense complex operators on tensor products of two-dimensional spaces.
//!
//! Factors are numbered from 1. Factor 1 is the leftmost Kronecker factor,
//! i.e. the most significant bit of a basis index. With `n` factors, factor
//! `f` sits at bit `n - f`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{OdbaError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Local dimension of every tensor factor.
pub const SPIN_DIM: usize = 2;

/// Largest chain length accepted by default.
pub const MAX_FACTORS: usize = 13;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A square complex matrix acting on `V^{⊗n}` with `dim V = 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    factor_dims: Vec<usize>,
    entries: CMatrix,
}

impl DenseOperator {
    pub fn identity(n_factors: usize) -> Self {
        let dim = 1usize << n_factors;
        Self {
            factor_dims: vec![SPIN_DIM; n_factors],
            entries: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(n_factors: usize) -> Self {
        let dim = 1usize << n_factors;
        Self {
            factor_dims: vec![SPIN_DIM; n_factors],
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn from_matrix(entries: CMatrix, n_factors: usize) -> Result<Self> {
        let dim = 1usize << n_factors;
        if entries.nrows() != dim {
            return Err(OdbaError::DimensionMismatch { expected: dim, found: entries.nrows() });
        }
        if entries.ncols() != dim {
            return Err(OdbaError::DimensionMismatch { expected: dim, found: entries.ncols() });
        }
        Ok(Self { factor_dims: vec![SPIN_DIM; n_factors], entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// `op2` on factor `j` of `n`, identity elsewhere.
    pub fn embed_site(op2: &CMatrix, j: usize, n: usize) -> Result<Self> {
        Self::embed_local(op2, &[j], n)
    }

    /// `op4` on factors `i` (first slot of `op4`) and `j` (second slot).
    pub fn embed_pair(op4: &CMatrix, i: usize, j: usize, n: usize) -> Result<Self> {
        Self::embed_local(op4, &[i, j], n)
    }

    /// Embeds a `2^k × 2^k` operator whose k tensor slots act on `targets`
    /// (in slot order).
    pub fn embed_local(op: &CMatrix, targets: &[usize], n: usize) -> Result<Self> {
        let layout = LocalLayout::new(targets, n)?;
        layout.check_op(op)?;
        let dim = 1usize << n;
        let mut out = CMatrix::zeros(dim, dim);
        let mut idx = vec![0usize; layout.sub_dim()];
        for base in layout.bases() {
            layout.fill(base, &mut idx);
            for (a, &ra) in idx.iter().enumerate() {
                for (b, &cb) in idx.iter().enumerate() {
                    out[(ra, cb)] = op[(a, b)];
                }
            }
        }
        Ok(Self { factor_dims: vec![SPIN_DIM; n], entries: out })
    }

    /// In place `self ← E · self` where `E` is `op` embedded on `targets`.
    pub fn apply_left(&mut self, op: &CMatrix, targets: &[usize]) -> Result<()> {
        let layout = LocalLayout::new(targets, self.n_factors())?;
        layout.check_op(op)?;
        let k = layout.sub_dim();
        let ncols = self.dim();
        let mut idx = vec![0usize; k];
        let mut gathered = vec![C64::new(0.0, 0.0); k];
        for base in layout.bases() {
            layout.fill(base, &mut idx);
            for col in 0..ncols {
                for (b, &rb) in idx.iter().enumerate() {
                    gathered[b] = self.entries[(rb, col)];
                }
                for (a, &ra) in idx.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (b, g) in gathered.iter().enumerate() {
                        acc += op[(a, b)] * g;
                    }
                    self.entries[(ra, col)] = acc;
                }
            }
        }
        Ok(())
    }

    /// In place `self ← self · E` where `E` is `op` embedded on `targets`.
    pub fn apply_right(&mut self, op: &CMatrix, targets: &[usize]) -> Result<()> {
        let layout = LocalLayout::new(targets, self.n_factors())?;
        layout.check_op(op)?;
        let k = layout.sub_dim();
        let nrows = self.dim();
        let mut idx = vec![0usize; k];
        let mut gathered = vec![C64::new(0.0, 0.0); k];
        for base in layout.bases() {
            layout.fill(base, &mut idx);
            for row in 0..nrows {
                for (a, &ca) in idx.iter().enumerate() {
                    gathered[a] = self.entries[(row, ca)];
                }
                for (b, &cb) in idx.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (a, g) in gathered.iter().enumerate() {
                        acc += g * op[(a, b)];
                    }
                    self.entries[(row, cb)] = acc;
                }
            }
        }
        Ok(())
    }

    /// Transposes the row and column indices of factor `k` only.
    pub fn partial_transpose(&self, k: usize) -> Result<Self> {
        let n = self.n_factors();
        check_factor(k, n)?;
        let mask = 1usize << (n - k);
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for r in 0..dim {
            for col in 0..dim {
                let (rs, cs) = swap_bit(r, col, mask);
                out[(r, col)] = self.entries[(rs, cs)];
            }
        }
        Ok(Self { factor_dims: self.factor_dims.clone(), entries: out })
    }

    /// Partial trace over `factors`; the result acts on the remaining factors
    /// in their original order. Tracing every factor yields a 1×1 operator.
    pub fn trace_factors(&self, factors: &[usize]) -> Result<Self> {
        let n = self.n_factors();
        if factors.is_empty() {
            return Err(OdbaError::IndexOutOfRange { index: 0, len: n });
        }
        let mut traced = vec![false; n + 1];
        for &f in factors {
            check_factor(f, n)?;
            if traced[f] {
                return Err(OdbaError::RepeatedFactor(f));
            }
            traced[f] = true;
        }
        let kept: Vec<usize> = (1..=n).filter(|&f| !traced[f]).collect();
        let gone: Vec<usize> = (1..=n).filter(|&f| traced[f]).collect();
        let kept_dim = 1usize << kept.len();
        let gone_dim = 1usize << gone.len();
        let mut out = CMatrix::zeros(kept_dim, kept_dim);
        let compose = |x: usize, z: usize| -> usize {
            scatter(x, &kept, n) | scatter(z, &gone, n)
        };
        for x in 0..kept_dim {
            for y in 0..kept_dim {
                let mut acc = C64::new(0.0, 0.0);
                for z in 0..gone_dim {
                    acc += self.entries[(compose(x, z), compose(y, z))];
                }
                out[(x, y)] = acc;
            }
        }
        Ok(Self { factor_dims: vec![SPIN_DIM; kept.len()], entries: out })
    }

    /// The `(row, col)` block with respect to factor 1, as an operator on the
    /// remaining factors.
    pub fn leading_block(&self, row: usize, col: usize) -> Result<Self> {
        let n = self.n_factors();
        if n == 0 {
            return Err(OdbaError::DimensionMismatch { expected: 2, found: 1 });
        }
        if row >= SPIN_DIM || col >= SPIN_DIM {
            return Err(OdbaError::IndexOutOfRange { index: row.max(col) + 1, len: SPIN_DIM });
        }
        let half = self.dim() / 2;
        let block = self.entries.view((row * half, col * half), (half, half)).into_owned();
        Ok(Self { factor_dims: vec![SPIN_DIM; n - 1], entries: block })
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        Self { factor_dims: dims, entries: self.entries.kronecker(&other.entries) }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { factor_dims: self.factor_dims.clone(), entries: &self.entries * s }
    }

    pub fn transpose(&self) -> Self {
        Self { factor_dims: self.factor_dims.clone(), entries: self.entries.transpose() }
    }

    pub fn adjoint(&self) -> Self {
        Self { factor_dims: self.factor_dims.clone(), entries: self.entries.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    /// Deviation from a multiple of the identity: returns the multiple
    /// (`trace / dim`) and the relative Frobenius distance to it.
    pub fn identity_multiple(&self) -> (C64, f64) {
        let lambda = self.trace() / self.dim() as f64;
        let target = Self::identity(self.n_factors()).scale(lambda);
        (lambda, relative_residual(self.entries(), target.entries()))
    }
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F, 1e−300)`.
pub fn relative_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b).norm();
    diff / a.norm().max(b.norm()).max(1e-300)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_factor(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(OdbaError::IndexOutOfRange { index: k, len: n })
    } else {
        Ok(())
    }
}

fn swap_bit(r: usize, c: usize, mask: usize) -> (usize, usize) {
    let rb = r & mask;
    let cb = c & mask;
    ((r & !mask) | cb, (c & !mask) | rb)
}

/// Places the bits of `x` (most significant first) on the given factors.
fn scatter(x: usize, factors: &[usize], n: usize) -> usize {
    let k = factors.len();
    factors.iter().enumerate().fold(0, |acc, (i, &f)| {
        let bit = (x >> (k - 1 - i)) & 1;
        acc | (bit << (n - f))
    })
}

struct LocalLayout {
    n: usize,
    targets: Vec<usize>,
    mask: usize,
}

impl LocalLayout {
    fn new(targets: &[usize], n: usize) -> Result<Self> {
        if n > MAX_FACTORS {
            return Err(OdbaError::IndexOutOfRange { index: n, len: MAX_FACTORS });
        }
        let mut mask = 0usize;
        for &t in targets {
            check_factor(t, n)?;
            let bit = 1usize << (n - t);
            if mask & bit != 0 {
                return Err(OdbaError::RepeatedFactor(t));
            }
            mask |= bit;
        }
        Ok(Self { n, targets: targets.to_vec(), mask })
    }

    fn sub_dim(&self) -> usize {
        1usize << self.targets.len()
    }

    fn check_op(&self, op: &CMatrix) -> Result<()> {
        let k = self.sub_dim();
        if op.nrows() != k || op.ncols() != k {
            return Err(OdbaError::DimensionMismatch { expected: k, found: op.nrows() });
        }
        Ok(())
    }

    fn bases(&self) -> impl Iterator<Item = usize> + '_ {
        (0..1usize << self.n).filter(move |b| b & self.mask == 0)
    }

    fn fill(&self, base: usize, idx: &mut [usize]) {
        for (s, slot) in idx.iter_mut().enumerate() {
            *slot = base | scatter(s, &self.targets, self.n);
        }
    }
}

impl Mul<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        DenseOperator { factor_dims: self.factor_dims.clone(), entries: &self.entries * &rhs.entries }
    }
}

impl Add<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        DenseOperator { factor_dims: self.factor_dims.clone(), entries: &self.entries + &rhs.entries }
    }
}

impl Sub<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        DenseOperator { factor_dims: self.factor_dims.clone(), entries: &self.entries - &rhs.entries }
    }
}

impl Sub<DenseOperator> for DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: DenseOperator) -> DenseOperator {
        &self - &rhs
    }
}

impl Add<DenseOperator> for DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: DenseOperator) -> DenseOperator {
        &self + &rhs
    }
}

impl Mul<C64> for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, s: C64) -> DenseOperator {
        self.scale(s)
    }
}

impl Neg for &DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Pauli matrices and a few fixed 2×2 / 4×4 operators.
pub mod pauli {
    use super::{c, cr, CMatrix};

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
    }

    /// Two-site permutation `P |a⟩|b⟩ = |b⟩|a⟩`.
    pub fn permutation() -> CMatrix {
        let mut p = CMatrix::zeros(4, 4);
        p[(0, 0)] = cr(1.0);
        p[(1, 2)] = cr(1.0);
        p[(2, 1)] = cr(1.0);
        p[(3, 3)] = cr(1.0);
        p
    }

    /// Antisymmetric projector `(1 − P)/2`.
    pub fn antisymmetrizer() -> CMatrix {
        (CMatrix::identity(4, 4) - permutation()) * cr(0.5)
    }

    /// `V = −iσ^y`.
    pub fn crossing_v() -> CMatrix {
        y() * c(0.0, -1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(v.len(), v.iter().map(|&x| cr(x))))
    }

    fn random_matrix(dim: usize, seed: u64) -> CMatrix {
        // small deterministic LCG, enough for structural tests
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        CMatrix::from_fn(dim, dim, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn embed_site_single_factor() {
        let op = DenseOperator::embed_site(&pauli::z(), 1, 1).unwrap();
        assert_eq!(op.entries(), &diag(&[1.0, -1.0]));
    }

    #[test]
    fn embed_site_kronecker_order() {
        let op = DenseOperator::embed_site(&pauli::z(), 1, 2).unwrap();
        assert_eq!(op.entries(), &diag(&[1.0, 1.0, -1.0, -1.0]));
        let op = DenseOperator::embed_site(&pauli::z(), 2, 2).unwrap();
        assert_eq!(op.entries(), &diag(&[1.0, -1.0, 1.0, -1.0]));
    }

    #[test]
    fn embed_identity_is_identity() {
        for n in 1..5 {
            for j in 1..=n {
                let op = DenseOperator::embed_site(&pauli::identity(), j, n).unwrap();
                assert_eq!(op, DenseOperator::identity(n));
            }
        }
    }

    #[test]
    fn embed_errors() {
        assert_eq!(
            DenseOperator::embed_site(&pauli::z(), 0, 2),
            Err(OdbaError::IndexOutOfRange { index: 0, len: 2 })
        );
        assert_eq!(
            DenseOperator::embed_site(&pauli::z(), 3, 2),
            Err(OdbaError::IndexOutOfRange { index: 3, len: 2 })
        );
        assert_eq!(
            DenseOperator::embed_pair(&pauli::permutation(), 2, 2, 3),
            Err(OdbaError::RepeatedFactor(2))
        );
        assert!(DenseOperator::embed_pair(&pauli::z(), 1, 2, 3).is_err());
    }

    #[test]
    fn embed_pair_permutation() {
        let p = DenseOperator::embed_pair(&pauli::permutation(), 1, 2, 2).unwrap();
        assert_eq!(p.entries(), &pauli::permutation());
        let p21 = DenseOperator::embed_pair(&pauli::permutation(), 2, 1, 2).unwrap();
        assert_eq!(p21, p);
    }

    #[test]
    fn embed_pair_swapped_slots_match_explicit_kronecker() {
        // op4 = a ⊗ b placed on (3, 1): explicit construction b ⊗ 1 ⊗ a
        let a = random_matrix(2, 1);
        let b = random_matrix(2, 2);
        let op4 = a.kronecker(&b);
        let got = DenseOperator::embed_pair(&op4, 3, 1, 3).unwrap();
        let expected = b.kronecker(&CMatrix::identity(2, 2)).kronecker(&a);
        assert!(relative_residual(got.entries(), &expected) < 1e-15);
    }

    #[test]
    fn embed_pair_factorizes() {
        let a = random_matrix(2, 3);
        let b = random_matrix(2, 4);
        let n = 4;
        for (i, j) in [(1, 2), (2, 4), (4, 1), (3, 2)] {
            let pair = DenseOperator::embed_pair(&a.kronecker(&b), i, j, n).unwrap();
            let prod = &DenseOperator::embed_site(&a, i, n).unwrap() * &DenseOperator::embed_site(&b, j, n).unwrap();
            assert!(relative_residual(pair.entries(), prod.entries()) < 1e-15);
        }
    }

    #[test]
    fn kronecker_convention_consistent() {
        let a = random_matrix(2, 5);
        let b = random_matrix(2, 6);
        let prod = &DenseOperator::embed_site(&a, 1, 2).unwrap() * &DenseOperator::embed_site(&b, 2, 2).unwrap();
        assert!(relative_residual(prod.entries(), &a.kronecker(&b)) < 1e-15);
    }

    #[test]
    fn apply_left_right_match_embedding() {
        let n = 4;
        let m = DenseOperator::from_matrix(random_matrix(16, 7), n).unwrap();
        let op = random_matrix(4, 8);
        let e = DenseOperator::embed_pair(&op, 3, 1, n).unwrap();
        let mut left = m.clone();
        left.apply_left(&op, &[3, 1]).unwrap();
        assert!(relative_residual(left.entries(), (&e * &m).entries()) < 1e-14);
        let mut right = m.clone();
        right.apply_right(&op, &[3, 1]).unwrap();
        assert!(relative_residual(right.entries(), (&m * &e).entries()) < 1e-14);
    }

    #[test]
    fn partial_transpose_of_product() {
        let a = random_matrix(2, 9);
        let b = random_matrix(2, 10);
        let x = DenseOperator::from_matrix(a.kronecker(&b), 2).unwrap();
        let t2 = x.partial_transpose(2).unwrap();
        assert!(relative_residual(t2.entries(), &a.kronecker(&b.transpose())) < 1e-15);
        let t1 = x.partial_transpose(1).unwrap();
        assert!(relative_residual(t1.entries(), &a.transpose().kronecker(&b)) < 1e-15);
        assert!(x.partial_transpose(3).is_err());
    }

    #[test]
    fn trace_factors_product_and_full() {
        let a = random_matrix(2, 11);
        let b = random_matrix(2, 12);
        let x = DenseOperator::from_matrix(a.kronecker(&b), 2).unwrap();
        let t = x.trace_factors(&[2]).unwrap();
        assert!(relative_residual(t.entries(), &(&a * b.trace())) < 1e-15);
        let id = DenseOperator::identity(3);
        let full = id.trace_factors(&[1, 2, 3]).unwrap();
        assert_eq!(full.dim(), 1);
        assert_eq!(full.entries()[(0, 0)], cr(8.0));
        assert!(id.trace_factors(&[]).is_err());
        assert!(id.trace_factors(&[4]).is_err());
        assert_eq!(id.trace_factors(&[2, 2]), Err(OdbaError::RepeatedFactor(2)));
    }

    #[test]
    fn trace_factors_pulls_out_right_factor() {
        // X acts on factors 1,2; Y on factor 2 only; tr_1(X (1⊗Y)) = tr_1(X) Y
        let x = DenseOperator::from_matrix(random_matrix(4, 13), 2).unwrap();
        let y = random_matrix(2, 14);
        let iy = DenseOperator::embed_site(&y, 2, 2).unwrap();
        let lhs = (&x * &iy).trace_factors(&[1]).unwrap();
        let rhs = x.trace_factors(&[1]).unwrap().entries() * &y;
        assert!(relative_residual(lhs.entries(), &rhs) < 1e-14);
    }

    #[test]
    fn leading_block_extracts_quadrants() {
        let m = random_matrix(8, 15);
        let op = DenseOperator::from_matrix(m.clone(), 3).unwrap();
        let b = op.leading_block(0, 1).unwrap();
        assert_eq!(b.n_factors(), 2);
        assert_eq!(b.entries()[(1, 2)], m[(1, 6)]);
        assert!(op.leading_block(2, 0).is_err());
    }

    proptest! {
        #[test]
        fn partial_transpose_is_involution(seed in 0u64..1000, k in 1usize..=3) {
            let x = DenseOperator::from_matrix(random_matrix(8, seed), 3).unwrap();
            let back = x.partial_transpose(k).unwrap().partial_transpose(k).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn pair_commutes_with_disjoint_site(seed in 0u64..1000, k in 3usize..=4) {
            let n = 4;
            let pair = DenseOperator::embed_pair(&random_matrix(4, seed), 1, 2, n).unwrap();
            let site = DenseOperator::embed_site(&random_matrix(2, seed + 1), k, n).unwrap();
            let comm = pair.commutator(&site);
            let scale = pair.frobenius_norm() * site.frobenius_norm();
            prop_assert!(comm.frobenius_norm() <= 1e-13 * scale);
        }

        #[test]
        fn trace_is_linear(seed in 0u64..1000, s in -2.0f64..2.0) {
            let a = DenseOperator::from_matrix(random_matrix(8, seed), 3).unwrap();
            let b = DenseOperator::from_matrix(random_matrix(8, seed + 7), 3).unwrap();
            let lhs = (&a + &b.scale(cr(s))).trace_factors(&[1, 3]).unwrap();
            let rhs = &a.trace_factors(&[1, 3]).unwrap() + &b.trace_factors(&[1, 3]).unwrap().scale(cr(s));
            prop_assert!(relative_residual(lhs.entries(), rhs.entries()) < 1e-14);
        }
    }
}
