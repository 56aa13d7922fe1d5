//! Open spin-1/2 XXX chain with unparallel boundary fields.
//!
//! The crate builds the lattice model (R- and K-matrices, monodromies,
//! transfer matrix, Hamiltonian) on dense tensor-product spaces, checks the
//! algebraic identities behind the off-diagonal Bethe ansatz numerically,
//! extracts transfer-matrix eigenvalues from exact diagonalization, and solves
//! both the eigenvalue functional relations and the Bethe equations of the
//! generalized T–Q relation.
//!
//! ```
//! use odba::lattice::{transfer_matrix, ModelParams};
//! use odba::tensor::cr;
//!
//! let params = ModelParams::real(2, 2.0, 3.0, 0.5, &[0.2, -0.4]).unwrap();
//! let (tau0, _) = transfer_matrix(cr(0.0), &params).identity_multiple();
//! assert!((tau0.re - 9.6768).abs() < 1e-12);
//! ```

pub mod assignment;
pub mod bae;
pub mod dual;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod newton;
pub mod poly;
pub mod spectral;
pub mod tensor;
pub mod verify;

pub use error::{OdbaError, Result};
pub use lattice::ModelParams;
pub use poly::PolynomialC;
pub use tensor::{DenseOperator, C64};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/tensors.md")]
    struct Tensors;
    #[doc = include_str!("../../../book/src/lattice.md")]
    struct Lattice;
    #[doc = include_str!("../../../book/src/identities.md")]
    struct Identities;
    #[doc = include_str!("../../../book/src/functional.md")]
    struct Functional;
    #[doc = include_str!("../../../book/src/bethe.md")]
    struct Bethe;
}
