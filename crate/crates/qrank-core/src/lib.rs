//! Exact computation with rank functions on rooted tree quivers.
//!
//! A rooted tree quiver is a finite tree with all arrows oriented toward a
//! single sink. This crate computes, entirely in exact arithmetic, the
//! combinatorial and homological data attached to such quivers:
//!
//! * [`exactlin`]: dense linear algebra over prime fields and rationals
//!   (canonical subspaces, kernels, preimages) plus univariate polynomial
//!   factorization over GF(p).
//! * [`poset`]: finite posets and lattices, order ideals, Mobius functions,
//!   products, and Galois adjunctions.
//! * [`quiver`]: rooted tree validation, root decomposition, subquivers,
//!   the complexity well-order, and morphisms of quivers over a base.
//! * [`rep`]: quiver representations and the functor calculus on them
//!   (hom spaces, tensor and direct sum, pullback and pushforward along
//!   quiver maps, the maximal epimorphic subrepresentation, global rank).
//! * [`rank`]: the lattice of rank functions at each vertex, reduced
//!   quivers and reduced representations, rank vectors, and the reduction
//!   of an arbitrary tree over a base to a canonical lattice element.
//! * [`ring`]: the representation ring up to iso classes of summands: a
//!   seeded exact direct-sum decomposition engine, support and fine
//!   idempotents, fine support, and the splitting and nilpotency verifiers.
//!
//! Scalars are chosen per session: every matrix carries a [`exactlin::Field`]
//! value, so GF(p) with a runtime prime and arbitrary-precision rationals
//! coexist in one process. The decomposition engine in [`ring`] is specified
//! over GF(p) only; rank computations run over either field.

pub mod exactlin;
pub mod poset;
pub mod quiver;
pub mod rank;
pub mod rep;
pub mod ring;
mod textio;

pub use exactlin::{Field, GfPrime, Rationals};
pub use quiver::{Quiver, RootedTree};
pub use rank::{LatticePoint, RankContext};
pub use ring::{ring_rank, RingContext, RingElement};

/// Default prime for session fields: large enough that randomized splitting
/// succeeds with high probability per round, small enough that products of
/// canonical representatives never overflow `u64`.
pub const DEFAULT_PRIME: u64 = 32003;

/// Matrix over the session prime field.
pub type GfMatrix = exactlin::Matrix<GfPrime>;
/// Subspace over the session prime field.
pub type GfSubspace = exactlin::Subspace<GfPrime>;
/// Representation over the session prime field.
pub type GfRep = rep::Rep<GfPrime>;
/// Matrix over the rationals.
pub type RatMatrix = exactlin::Matrix<Rationals>;
/// Subspace over the rationals.
pub type RatSubspace = exactlin::Subspace<Rationals>;
/// Representation over the rationals.
pub type RatRep = rep::Rep<Rationals>;
