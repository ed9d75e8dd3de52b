//! Exact dense linear algebra and polynomial arithmetic.
//!
//! All computations are over a [`Field`] chosen at runtime: GF(p) for a
//! session prime, or arbitrary-precision rationals. Subspaces are kept in
//! reduced row echelon form so that equal subspaces compare equal as values.

mod field;
mod matrix;
mod poly;
mod subspace;

pub use field::{Field, FieldError, FieldSpec, GfPrime, Rationals};
pub use matrix::Matrix;
pub use poly::{factor, minimal_polynomial, Poly};
pub use subspace::{image, kernel, Subspace};
