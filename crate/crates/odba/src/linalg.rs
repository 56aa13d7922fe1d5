//! Dense eigen-decompositions used by the exact-diagonalization oracle.

use crate::error::{OdbaError, Result};
use crate::tensor::{cr, CMatrix, C64};

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Eigenvalues and unit eigenvectors of a general complex matrix through the
/// complex Schur form `M = Z T Z^H` and back-substitution on `T`.
///
/// Fails when two eigenvalues are closer than `sep · max|λ|` (the
/// back-substitution would divide by their difference) or when the Schur
/// factor is not triangular to working precision.
pub fn eigen_general(m: &CMatrix, sep: f64) -> Result<(Vec<C64>, CMatrix)> {
    let n = m.nrows();
    let (z, t) = m.clone().schur().unpack();
    let scale = t.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1e-300);
    for r in 0..n {
        for c in 0..r {
            if t[(r, c)].norm() > 1e-10 * scale {
                return Err(OdbaError::Singular("Schur factor is not triangular".into()));
            }
        }
    }
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let vmax = values.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1e-300);
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = cr(1.0);
        for i in (0..k).rev() {
            let mut acc = cr(0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let gap = t[(i, i)] - values[k];
            if gap.norm() < sep * vmax {
                return Err(OdbaError::Singular(format!("eigenvalues {i} and {k} nearly coincide")));
            }
            y[(i, k)] = -acc / gap;
        }
    }
    let mut vecs = z * y;
    for mut col in vecs.column_iter_mut() {
        let norm = col.norm();
        col /= cr(norm);
    }
    Ok((values, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::c;

    #[test]
    fn general_eigenpairs_satisfy_definition() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(1.0, 0.2), cr(2.0), c(0.0, 1.0), cr(0.5), c(-1.0, 0.0), cr(0.3), c(0.1, 0.1), cr(0.0), c(2.0, -1.0)],
        );
        let (vals, vecs) = eigen_general(&m, 1e-8).unwrap();
        for k in 0..3 {
            let v = vecs.column(k).into_owned();
            let r = &m * &v - &v * vals[k];
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_is_rejected() {
        let m = CMatrix::identity(3, 3);
        assert!(eigen_general(&m, 1e-8).is_err());
    }

    #[test]
    fn hermitian_sorted() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.0), c(0.0, 1.0), c(0.0, -1.0), cr(1.0)]);
        let (vals, _) = hermitian_eigen(&m);
        assert!((vals[0] - 0.0).abs() < 1e-14 && (vals[1] - 2.0).abs() < 1e-14);
    }
}
