use std::fmt;

use super::field::Field;
use super::matrix::Matrix;

/// A subspace of K^n, stored as a reduced-row-echelon basis.
///
/// RREF with pivot columns in increasing row order is a canonical form, so
/// two values compare equal exactly when they are the same subspace.
#[derive(Clone, PartialEq, Eq)]
pub struct Subspace<F: Field> {
    ambient: usize,
    basis: Matrix<F>,
}

impl<F: Field> Subspace<F> {
    /// Span of the rows of `gens`.
    pub fn from_rows(gens: &Matrix<F>) -> Self {
        let r = gens.rref();
        let d = r.pivots.len();
        let mut basis = Matrix::zeros(gens.field().clone(), d, gens.cols());
        for i in 0..d {
            for j in 0..gens.cols() {
                basis.set(i, j, r.mat.get(i, j).clone());
            }
        }
        Subspace {
            ambient: gens.cols(),
            basis,
        }
    }

    /// Span of the columns of `gens` (the image of `gens` as a linear map).
    pub fn from_cols(gens: &Matrix<F>) -> Self {
        Subspace::from_rows(&gens.transpose())
    }

    pub fn zero(field: F, ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::zeros(field, 0, ambient),
        }
    }

    pub fn full(field: F, ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::identity(field, ambient),
        }
    }

    pub fn field(&self) -> &F {
        self.basis.field()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Canonical basis, one vector per row.
    pub fn basis(&self) -> &Matrix<F> {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    /// Membership of a column vector.
    pub fn contains_col(&self, v: &Matrix<F>) -> bool {
        assert_eq!(v.cols(), 1, "expected a column vector");
        assert_eq!(v.rows(), self.ambient, "ambient mismatch");
        self.basis.transpose().solvable(v)
    }

    pub fn contains(&self, other: &Subspace<F>) -> bool {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        self.basis.transpose().solvable(&other.basis.transpose())
    }

    /// Smallest subspace containing both.
    pub fn sum(&self, other: &Subspace<F>) -> Subspace<F> {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        Subspace::from_rows(&self.basis.vstack(&other.basis))
    }

    /// Intersection via the stacked kernel: a kernel vector (x, y) of
    /// [A^T | B^T] satisfies A^T x = -B^T y, and those common values span
    /// the intersection.
    pub fn intersect(&self, other: &Subspace<F>) -> Subspace<F> {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        let at = self.basis.transpose();
        let bt = other.basis.transpose();
        let k = at.hstack(&bt).kernel_basis();
        // First block of each kernel row gives coefficients in our basis.
        let f = self.field().clone();
        let coeff = Matrix::from_fn(f, k.rows(), self.dim(), |i, j| k.get(i, j).clone());
        Subspace::from_rows(&coeff.matmul(&self.basis))
    }

    /// Image { m v : v in self }; ambient becomes the row count of `m`.
    pub fn apply(&self, m: &Matrix<F>) -> Subspace<F> {
        assert_eq!(m.cols(), self.ambient, "ambient mismatch");
        Subspace::from_cols(&m.matmul(&self.basis.transpose()))
    }

    /// Preimage { v : m v in self } of this subspace under `m`; a kernel
    /// vector (v, y) of [m | -B^T] witnesses m v = B^T y in the span.
    pub fn preimage(&self, m: &Matrix<F>) -> Subspace<F> {
        assert_eq!(m.rows(), self.ambient, "ambient mismatch");
        let f = self.field().clone();
        let neg_bt = Matrix::from_fn(f.clone(), self.ambient, self.dim(), |i, j| {
            f.neg(self.basis.get(j, i))
        });
        let k = m.hstack(&neg_bt).kernel_basis();
        let proj = Matrix::from_fn(f, k.rows(), m.cols(), |i, j| k.get(i, j).clone());
        Subspace::from_rows(&proj)
    }
}

impl<F: Field> fmt::Debug for Subspace<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Subspace dim {} of K^{}: {:?}",
            self.dim(),
            self.ambient,
            self.basis
        )
    }
}

/// Column space of a matrix.
pub fn image<F: Field>(m: &Matrix<F>) -> Subspace<F> {
    Subspace::from_cols(m)
}

/// Null space of a matrix as a subspace of its column domain.
pub fn kernel<F: Field>(m: &Matrix<F>) -> Subspace<F> {
    Subspace::from_rows(&m.kernel_basis())
}
