//! Representations of rooted tree quivers and the functor calculus.
//!
//! A representation assigns a finite dimensional space to each vertex and
//! a linear map to each arrow, in the column vector convention: the matrix
//! of an arrow `x -> y` has `dim(y)` rows and `dim(x)` columns.
//!
//! Beyond the abelian operations (direct sum, tensor, hom spaces), this
//! module implements the calculus the rank theory is built from: pullback
//! and pushforward along quiver maps, the maximal subrepresentation all of
//! whose arrow maps are surjective ([`Rep::theta`]), the image functor
//! toward the root ([`Rep::delta`]), and the global rank at the root.
//!
//! The text format lives in the [`text`] submodule, re-exported here.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::exactlin::{Field, Matrix, Subspace};
use crate::poset::BitSet;
use crate::quiver::{QuiverMap, RootedTree, SubTree};

mod text;

pub use text::{parse_rep, RepFile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepError {
    #[error("expected {expected} vertex dimensions, got {got}")]
    WrongDimCount { expected: usize, got: usize },
    #[error("expected {expected} arrow matrices, got {got}")]
    WrongMatrixCount { expected: usize, got: usize },
    #[error("matrix for arrow {arrow:?} should be {}x{}, got {}x{}", expected.0, expected.1, got.0, got.1)]
    MatrixShape {
        arrow: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("arrow {arrow:?} joins nonzero dimensions but has no matrix")]
    MissingMatrix { arrow: String },
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("unknown arrow {0:?}")]
    UnknownArrow(String),
}

/// A representation of a rooted tree quiver over the field `F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rep<F: Field> {
    field: F,
    tree: Arc<RootedTree>,
    dims: Vec<usize>,
    mats: Vec<Matrix<F>>,
}

impl<F: Field> Rep<F> {
    pub fn new(
        field: F,
        tree: Arc<RootedTree>,
        dims: Vec<usize>,
        mats: Vec<Matrix<F>>,
    ) -> Result<Rep<F>, RepError> {
        let q = tree.quiver();
        if dims.len() != q.n_vertices() {
            return Err(RepError::WrongDimCount {
                expected: q.n_vertices(),
                got: dims.len(),
            });
        }
        if mats.len() != q.n_arrows() {
            return Err(RepError::WrongMatrixCount {
                expected: q.n_arrows(),
                got: mats.len(),
            });
        }
        for (a, m) in mats.iter().enumerate() {
            let arrow = q.arrow(a);
            let expected = (dims[arrow.head], dims[arrow.tail]);
            if (m.rows(), m.cols()) != expected {
                return Err(RepError::MatrixShape {
                    arrow: arrow.name.clone(),
                    expected,
                    got: (m.rows(), m.cols()),
                });
            }
        }
        Ok(Rep {
            field,
            tree,
            dims,
            mats,
        })
    }

    /// Builds from named dimensions and integer matrices. Unnamed vertices
    /// get dimension zero; a matrix may be omitted only when one of its
    /// endpoints has dimension zero.
    pub fn build(
        field: F,
        tree: &Arc<RootedTree>,
        dims_by_name: &[(&str, usize)],
        mats_by_name: &[(&str, &[&[i64]])],
    ) -> Result<Rep<F>, RepError> {
        let q = tree.quiver();
        let mut dims = vec![0usize; q.n_vertices()];
        for &(name, d) in dims_by_name {
            let v = q
                .vertex_index(name)
                .ok_or_else(|| RepError::UnknownVertex(name.to_string()))?;
            dims[v] = d;
        }
        let mut mats: Vec<Option<Matrix<F>>> = vec![None; q.n_arrows()];
        for &(name, rows) in mats_by_name {
            let a = q
                .arrow_index(name)
                .ok_or_else(|| RepError::UnknownArrow(name.to_string()))?;
            mats[a] = Some(Matrix::from_int_rows(field.clone(), rows));
        }
        let mats = mats
            .into_iter()
            .enumerate()
            .map(|(a, m)| {
                let arrow = q.arrow(a);
                let shape = (dims[arrow.head], dims[arrow.tail]);
                match m {
                    Some(m) if shape.0 == 0 || shape.1 == 0 => {
                        if m.rows() * m.cols() == 0 {
                            Ok(Matrix::zeros(field.clone(), shape.0, shape.1))
                        } else {
                            Err(RepError::MatrixShape {
                                arrow: arrow.name.clone(),
                                expected: shape,
                                got: (m.rows(), m.cols()),
                            })
                        }
                    }
                    Some(m) => Ok(m),
                    None if shape.0 == 0 || shape.1 == 0 => {
                        Ok(Matrix::zeros(field.clone(), shape.0, shape.1))
                    }
                    None => Err(RepError::MissingMatrix {
                        arrow: arrow.name.clone(),
                    }),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Rep::new(field, tree.clone(), dims, mats)
    }

    /// All dimensions zero.
    pub fn zero(field: F, tree: &Arc<RootedTree>) -> Rep<F> {
        let dims = vec![0; tree.n_vertices()];
        let mats = tree
            .quiver()
            .arrows()
            .iter()
            .map(|_| Matrix::zeros(field.clone(), 0, 0))
            .collect();
        Rep::new(field, tree.clone(), dims, mats).unwrap()
    }

    /// Dimension one everywhere, every arrow the identity: the tensor unit.
    pub fn one(field: F, tree: &Arc<RootedTree>) -> Rep<F> {
        let dims = vec![1; tree.n_vertices()];
        let mats = tree
            .quiver()
            .arrows()
            .iter()
            .map(|_| Matrix::identity(field.clone(), 1))
            .collect();
        Rep::new(field, tree.clone(), dims, mats).unwrap()
    }

    /// Dimension one at `v`, zero elsewhere.
    pub fn simple(field: F, tree: &Arc<RootedTree>, v: usize) -> Rep<F> {
        let mut dims = vec![0; tree.n_vertices()];
        dims[v] = 1;
        let q = tree.quiver();
        let mats = q
            .arrows()
            .iter()
            .map(|a| Matrix::zeros(field.clone(), dims[a.head], dims[a.tail]))
            .collect();
        Rep::new(field, tree.clone(), dims, mats).unwrap()
    }

    /// Uniformly random dimensions in `0..=max_dim` and random entries.
    pub fn random(field: F, tree: &Arc<RootedTree>, max_dim: usize, rng: &mut impl Rng) -> Rep<F> {
        let dims: Vec<usize> = (0..tree.n_vertices())
            .map(|_| rng.gen_range(0..=max_dim))
            .collect();
        Self::random_with_dims(field, tree, &dims, rng)
    }

    pub fn random_with_dims(
        field: F,
        tree: &Arc<RootedTree>,
        dims: &[usize],
        rng: &mut impl Rng,
    ) -> Rep<F> {
        let q = tree.quiver();
        let mats = q
            .arrows()
            .iter()
            .map(|a| {
                Matrix::from_fn(field.clone(), dims[a.head], dims[a.tail], |_, _| {
                    field.random_elem(rng)
                })
            })
            .collect();
        Rep::new(field, tree.clone(), dims.to_vec(), mats).unwrap()
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn tree(&self) -> &Arc<RootedTree> {
        &self.tree
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, v: usize) -> usize {
        self.dims[v]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn mat(&self, a: usize) -> &Matrix<F> {
        &self.mats[a]
    }

    /// Vertices with nonzero dimension.
    pub fn support(&self) -> BitSet {
        let mut s = BitSet::new(self.dims.len());
        for (v, &d) in self.dims.iter().enumerate() {
            s.set(v, d > 0);
        }
        s
    }

    pub fn dsum(&self, other: &Rep<F>) -> Rep<F> {
        assert_eq!(self.tree, other.tree, "direct sum needs a common quiver");
        let dims: Vec<usize> = (0..self.dims.len())
            .map(|v| self.dims[v] + other.dims[v])
            .collect();
        let q = self.tree.quiver();
        let mats = (0..q.n_arrows())
            .map(|a| {
                let arrow = q.arrow(a);
                let mut m = Matrix::zeros(
                    self.field.clone(),
                    dims[arrow.head],
                    dims[arrow.tail],
                );
                m.copy_block(0, 0, &self.mats[a]);
                m.copy_block(self.dims[arrow.head], self.dims[arrow.tail], &other.mats[a]);
                m
            })
            .collect();
        Rep::new(self.field.clone(), self.tree.clone(), dims, mats).unwrap()
    }

    /// Vertexwise tensor product; bases are ordered with this factor major.
    pub fn tensor(&self, other: &Rep<F>) -> Rep<F> {
        assert_eq!(self.tree, other.tree, "tensor needs a common quiver");
        let dims: Vec<usize> = (0..self.dims.len())
            .map(|v| self.dims[v] * other.dims[v])
            .collect();
        let mats = (0..self.mats.len())
            .map(|a| self.mats[a].kron(&other.mats[a]))
            .collect();
        Rep::new(self.field.clone(), self.tree.clone(), dims, mats).unwrap()
    }

    /// Basis of the space of morphisms `self -> other`, solved from the
    /// commuting conditions over all arrows.
    pub fn hom_space(&self, other: &Rep<F>) -> Vec<Morphism<F>> {
        assert_eq!(self.tree, other.tree, "hom needs a common quiver");
        let f = &self.field;
        let nv = self.dims.len();
        // Unknowns: block f_x of shape other.dim(x) x self.dim(x), row major.
        let mut off = vec![0usize; nv + 1];
        for v in 0..nv {
            off[v + 1] = off[v] + other.dims[v] * self.dims[v];
        }
        let unknowns = off[nv];
        let q = self.tree.quiver();
        let eqs: usize = (0..q.n_arrows())
            .map(|a| {
                let arrow = q.arrow(a);
                other.dims[arrow.head] * self.dims[arrow.tail]
            })
            .sum();
        let mut sys = Matrix::zeros(f.clone(), eqs, unknowns);
        let mut r = 0;
        for a in 0..q.n_arrows() {
            let arrow = q.arrow(a);
            let (t, h) = (arrow.tail, arrow.head);
            // f_h . V_a = W_a . f_t entrywise at (i, j).
            for i in 0..other.dims[h] {
                for j in 0..self.dims[t] {
                    for k in 0..self.dims[h] {
                        let col = off[h] + i * self.dims[h] + k;
                        let c = f.add(&sys[(r, col)], &self.mats[a][(k, j)]);
                        sys.set(r, col, c);
                    }
                    for l in 0..other.dims[t] {
                        let col = off[t] + l * self.dims[t] + j;
                        let c = f.sub(&sys[(r, col)], &other.mats[a][(i, l)]);
                        sys.set(r, col, c);
                    }
                    r += 1;
                }
            }
        }
        debug_assert_eq!(r, eqs);
        let kernel = sys.kernel_basis();
        (0..kernel.rows())
            .map(|s| {
                let blocks = (0..nv)
                    .map(|v| {
                        Matrix::from_fn(f.clone(), other.dims[v], self.dims[v], |i, k| {
                            kernel[(s, off[v] + i * self.dims[v] + k)].clone()
                        })
                    })
                    .collect();
                Morphism { blocks }
            })
            .collect()
    }

    pub fn hom_dim(&self, other: &Rep<F>) -> usize {
        self.hom_space(other).len()
    }

    /// Pullback along `f: source -> self.tree`: spaces and maps are reused
    /// at their image.
    pub fn pullback(&self, source: &Arc<RootedTree>, f: &QuiverMap) -> Rep<F> {
        assert!(
            f.check(source.quiver(), self.tree.quiver()),
            "pullback map must go from the given source quiver to this one"
        );
        let dims = f.vmap.iter().map(|&v| self.dims[v]).collect();
        let mats = f.amap.iter().map(|&a| self.mats[a].clone()).collect();
        Rep::new(self.field.clone(), source.clone(), dims, mats).unwrap()
    }

    /// Pushforward along `f: self.tree -> target`: the space at a target
    /// vertex is the direct sum over its fiber in vertex index order, and
    /// each arrow acts blockwise through the arrows over it.
    pub fn pushforward(&self, target: &Arc<RootedTree>, f: &QuiverMap) -> Rep<F> {
        assert!(
            f.check(self.tree.quiver(), target.quiver()),
            "pushforward map must go from this quiver to the given target"
        );
        let tq = target.quiver();
        let nv = tq.n_vertices();
        let mut fiber: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (x, &y) in f.vmap.iter().enumerate() {
            fiber[y].push(x);
        }
        let mut offset = vec![vec![]; nv];
        let mut dims = vec![0usize; nv];
        for y in 0..nv {
            for &x in &fiber[y] {
                offset[y].push(dims[y]);
                dims[y] += self.dims[x];
            }
        }
        let mats = (0..tq.n_arrows())
            .map(|a| {
                let arrow = tq.arrow(a);
                let (t, h) = (arrow.tail, arrow.head);
                let mut m = Matrix::zeros(self.field.clone(), dims[h], dims[t]);
                for (ti, &x) in fiber[t].iter().enumerate() {
                    let Some(b) = self.tree.out_arrow(x) else {
                        continue;
                    };
                    if f.amap[b] != a {
                        continue;
                    }
                    let xh = self.tree.parent(x).unwrap();
                    let hi = fiber[h].iter().position(|&z| z == xh).unwrap();
                    m.copy_block(offset[h][hi], offset[t][ti], &self.mats[b]);
                }
                m
            })
            .collect();
        Rep::new(self.field.clone(), target.clone(), dims, mats).unwrap()
    }

    /// Restriction to an embedded subtree.
    pub fn restrict(&self, sub: &SubTree) -> Rep<F> {
        self.pullback(&Arc::new(sub.tree.clone()), &sub.embedding())
    }

    /// The maximal subrepresentation whose arrow maps are all surjective,
    /// as one subspace per vertex.
    ///
    /// At each vertex `v`, bottom up: the space at `v` is the intersection
    /// of the images of the solutions for the branches; the spaces above
    /// `v` are the branch solutions cut down by the preimage of that
    /// intersection along the composite toward `v`.
    pub fn theta(&self) -> Vec<Subspace<F>> {
        let n = self.dims.len();
        let f = &self.field;
        let mut table: Vec<Vec<Option<Subspace<F>>>> = vec![vec![]; n];
        for v in self.tree.topo_leaves_first() {
            let mut tv: Vec<Option<Subspace<F>>> = vec![None; n];
            let mut z = Subspace::full(f.clone(), self.dims[v]);
            for &(c, a) in self.tree.children(v) {
                let image = table[c][c].as_ref().unwrap().apply(&self.mats[a]);
                z = z.intersect(&image);
            }
            for &(c, a) in self.tree.children(v) {
                // Pure preimages of z along composites, one arrow at a time.
                let mut pre: Vec<Option<Subspace<F>>> = vec![None; n];
                pre[c] = Some(z.preimage(&self.mats[a]));
                let mut stack = vec![c];
                while let Some(y) = stack.pop() {
                    let at_y = pre[y].clone().unwrap();
                    for &(d, b) in self.tree.children(y) {
                        pre[d] = Some(at_y.preimage(&self.mats[b]));
                        stack.push(d);
                    }
                    tv[y] = Some(
                        table[c][y]
                            .as_ref()
                            .unwrap()
                            .intersect(pre[y].as_ref().unwrap()),
                    );
                }
            }
            tv[v] = Some(z);
            table[v] = tv;
        }
        let out: Vec<Subspace<F>> = table[self.tree.root()]
            .iter()
            .map(|s| s.clone().unwrap())
            .collect();
        // Every arrow map of the result is onto the space at its head.
        for (a, arrow) in self.tree.quiver().arrows().iter().enumerate() {
            assert_eq!(
                out[arrow.tail].apply(&self.mats[a]),
                out[arrow.head],
                "arrow maps of the maximal epimorphic subrepresentation must be surjective"
            );
        }
        #[cfg(debug_assertions)]
        assert_eq!(out, self.theta_fixpoint(), "structural and fixpoint routes disagree");
        out
    }

    /// Independent route to [`Rep::theta`]: shrink the full spaces by
    /// intersecting each head with the image along every arrow and each
    /// tail with the preimage, until nothing changes. Any subrepresentation
    /// with surjective arrow maps survives every step, so the fixpoint is
    /// the maximal one.
    pub fn theta_fixpoint(&self) -> Vec<Subspace<F>> {
        let f = &self.field;
        let mut w: Vec<Subspace<F>> = self
            .dims
            .iter()
            .map(|&d| Subspace::full(f.clone(), d))
            .collect();
        let q = self.tree.quiver();
        loop {
            let mut changed = false;
            for a in 0..q.n_arrows() {
                let arrow = q.arrow(a);
                let image = w[arrow.tail].apply(&self.mats[a]);
                let head = w[arrow.head].intersect(&image);
                if head != w[arrow.head] {
                    w[arrow.head] = head;
                    changed = true;
                }
                let pre = w[arrow.head].preimage(&self.mats[a]);
                let tail = w[arrow.tail].intersect(&pre);
                if tail != w[arrow.tail] {
                    w[arrow.tail] = tail;
                    changed = true;
                }
            }
            if !changed {
                return w;
            }
        }
    }

    /// The subrepresentation spanned by the given subspaces, which must be
    /// invariant: each arrow must map the tail subspace into the head one.
    /// Arrow maps are rewritten in the subspace bases.
    pub fn subrep(&self, spaces: &[Subspace<F>]) -> Rep<F> {
        assert_eq!(spaces.len(), self.dims.len());
        let q = self.tree.quiver();
        let dims: Vec<usize> = spaces.iter().map(|s| s.dim()).collect();
        let mats = (0..q.n_arrows())
            .map(|a| {
                let arrow = q.arrow(a);
                let bt = spaces[arrow.tail].basis().transpose();
                let bh = spaces[arrow.head].basis().transpose();
                let rhs = self.mats[a].matmul(&bt);
                bh.solve(&rhs)
                    .expect("subspaces must be invariant under the arrow maps")
            })
            .collect();
        Rep::new(self.field.clone(), self.tree.clone(), dims, mats).unwrap()
    }

    /// The intersection over all branches of the images, at the root, of
    /// the spaces produced by the same recursion one level up. Equals the
    /// root space of [`Rep::theta`]; the two are cross-checked.
    pub fn rank_subspace(&self) -> Subspace<F> {
        fn at<F: Field>(rep: &Rep<F>, v: usize) -> Subspace<F> {
            let mut z = Subspace::full(rep.field.clone(), rep.dims[v]);
            for &(c, a) in rep.tree.children(v) {
                z = z.intersect(&at(rep, c).apply(&rep.mats[a]));
            }
            z
        }
        at(self, self.tree.root())
    }

    /// Dimension of the rank space at the root, computed both by the
    /// subspace recursion and by the maximal epimorphic subrepresentation.
    pub fn global_rank(&self) -> usize {
        let direct = self.rank_subspace();
        let via_theta = &self.theta()[self.tree.root()];
        assert_eq!(
            &direct, via_theta,
            "the two global rank routes must agree"
        );
        direct.dim()
    }

    /// The image functor toward the root: each vertex is replaced by the
    /// image of its composite map to the root, arrows by the inclusions of
    /// those images, written in their canonical bases.
    pub fn delta(&self) -> Rep<F> {
        let f = &self.field;
        let n = self.dims.len();
        let root = self.tree.root();
        let mut images: Vec<Option<Subspace<F>>> = vec![None; n];
        for v in 0..n {
            let mut m = Matrix::identity(f.clone(), self.dims[v]);
            for a in self.tree.path_to_root(v) {
                m = self.mats[a].matmul(&m);
            }
            images[v] = Some(Subspace::from_cols(&m));
        }
        debug_assert!(images[root].as_ref().unwrap().is_full());
        let dims: Vec<usize> = images.iter().map(|s| s.as_ref().unwrap().dim()).collect();
        let q = self.tree.quiver();
        let mats = (0..q.n_arrows())
            .map(|a| {
                let arrow = q.arrow(a);
                let bt = images[arrow.tail].as_ref().unwrap().basis().transpose();
                let bh = images[arrow.head].as_ref().unwrap().basis().transpose();
                bh.solve(&bt)
                    .expect("the image at a vertex embeds in the image at its parent")
            })
            .collect();
        Rep::new(f.clone(), self.tree.clone(), dims, mats).unwrap()
    }
}

/// A morphism of representations: one block per vertex, mapping the space
/// of the source to the space of the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism<F: Field> {
    pub blocks: Vec<Matrix<F>>,
}

impl<F: Field> Morphism<F> {
    pub fn zero(from: &Rep<F>, to: &Rep<F>) -> Morphism<F> {
        let blocks = (0..from.dims().len())
            .map(|v| Matrix::zeros(from.field().clone(), to.dim(v), from.dim(v)))
            .collect();
        Morphism { blocks }
    }

    pub fn identity(on: &Rep<F>) -> Morphism<F> {
        let blocks = (0..on.dims().len())
            .map(|v| Matrix::identity(on.field().clone(), on.dim(v)))
            .collect();
        Morphism { blocks }
    }

    pub fn block(&self, v: usize) -> &Matrix<F> {
        &self.blocks[v]
    }

    /// Whether all naturality squares commute for `from -> to`.
    pub fn commutes(&self, from: &Rep<F>, to: &Rep<F>) -> bool {
        let q = from.tree().quiver();
        (0..q.n_arrows()).all(|a| {
            let arrow = q.arrow(a);
            to.mat(a).matmul(&self.blocks[arrow.tail])
                == self.blocks[arrow.head].matmul(from.mat(a))
        })
    }

    /// `self: U -> V` followed by `after: V -> W`.
    pub fn then(&self, after: &Morphism<F>) -> Morphism<F> {
        let blocks = self
            .blocks
            .iter()
            .zip(&after.blocks)
            .map(|(f, g)| g.matmul(f))
            .collect();
        Morphism { blocks }
    }

    pub fn add(&self, other: &Morphism<F>) -> Morphism<F> {
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.add(b))
            .collect();
        Morphism { blocks }
    }

    pub fn scale(&self, c: &F::Elem) -> Morphism<F> {
        let blocks = self.blocks.iter().map(|b| b.scale(c)).collect();
        Morphism { blocks }
    }

    pub fn linear_combination(
        from: &Rep<F>,
        to: &Rep<F>,
        basis: &[Morphism<F>],
        coeffs: &[F::Elem],
    ) -> Morphism<F> {
        assert_eq!(basis.len(), coeffs.len());
        let mut acc = Morphism::zero(from, to);
        for (b, c) in basis.iter().zip(coeffs) {
            acc = acc.add(&b.scale(c));
        }
        acc
    }

    /// Square blocks of full rank at every vertex.
    pub fn is_isomorphism(&self, from: &Rep<F>, to: &Rep<F>) -> bool {
        (0..from.dims().len()).all(|v| {
            from.dim(v) == to.dim(v) && self.blocks[v].rank() == from.dim(v)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{GfPrime, Rationals};
    use crate::quiver::{
        families, random_over_tree, random_over_tree_at, random_rooted_tree, OverQuiver,
    };
    use crate::DEFAULT_PRIME;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf() -> GfPrime {
        GfPrime::new(DEFAULT_PRIME).unwrap()
    }

    fn arc(t: crate::quiver::RootedTree) -> Arc<crate::quiver::RootedTree> {
        Arc::new(t)
    }

    #[test]
    fn construction_checks_shapes() {
        let t = arc(families::chain(2));
        let bad = Rep::build(gf(), &t, &[("x1", 1), ("x2", 2)], &[("a1", &[&[1]])]);
        assert_eq!(
            bad.unwrap_err(),
            RepError::MatrixShape {
                arrow: "a1".into(),
                expected: (2, 1),
                got: (1, 1)
            }
        );
        let missing = Rep::build(gf(), &t, &[("x1", 1), ("x2", 2)], &[]);
        assert_eq!(
            missing.unwrap_err(),
            RepError::MissingMatrix { arrow: "a1".into() }
        );
        // Zero dimension at one end excuses the matrix.
        assert!(Rep::build(gf(), &t, &[("x2", 2)], &[]).is_ok());
    }

    #[test]
    fn unit_is_neutral_for_tensor() {
        let t = arc(families::subspace(2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = Rep::random(gf(), &t, 3, &mut rng);
        let one = Rep::one(gf(), &t);
        assert_eq!(v.tensor(&one), v);
        assert_eq!(one.tensor(&v), v);
        assert_eq!(v.dsum(&Rep::zero(gf(), &t)), v);
    }

    #[test]
    fn hom_dims_on_the_two_vertex_chain() {
        let t = arc(families::chain(2));
        let id_rep = Rep::build(gf(), &t, &[("x1", 1), ("x2", 1)], &[("a1", &[&[1]])]).unwrap();
        let zero_map = Rep::build(gf(), &t, &[("x1", 1), ("x2", 1)], &[("a1", &[&[0]])]).unwrap();
        let s_top = Rep::simple(gf(), &t, 0);
        assert_eq!(id_rep.hom_dim(&id_rep), 1);
        assert_eq!(id_rep.hom_dim(&zero_map), 1);
        assert_eq!(zero_map.hom_dim(&id_rep), 1);
        assert_eq!(s_top.hom_dim(&id_rep), 0);
        assert_eq!(id_rep.hom_dim(&s_top), 1);
        for m in id_rep.hom_space(&zero_map) {
            assert!(m.commutes(&id_rep, &zero_map));
        }
    }

    #[test]
    fn theta_examples() {
        let t = arc(families::chain(2));
        let id_rep = Rep::build(gf(), &t, &[("x1", 1), ("x2", 1)], &[("a1", &[&[1]])]).unwrap();
        let th = id_rep.theta();
        assert!(th.iter().all(|s| s.is_full()));
        assert_eq!(id_rep.global_rank(), 1);

        let zero_map =
            Rep::build(gf(), &t, &[("x1", 1), ("x2", 1)], &[("a1", &[&[0]])]).unwrap();
        let th = zero_map.theta();
        assert!(th[0].is_full());
        assert!(th[1].is_zero());
        assert_eq!(zero_map.global_rank(), 0);

        // Two independent lines into the plane meet only at zero.
        let s2 = arc(families::subspace(2));
        let lines = Rep::build(
            gf(),
            &s2,
            &[("u1", 1), ("u2", 1), ("s", 2)],
            &[("a1", &[&[1], &[0]]), ("a2", &[&[0], &[1]])],
        )
        .unwrap();
        assert!(lines.theta().iter().all(|s| s.is_zero()));
        assert_eq!(lines.global_rank(), 0);

        // The same two lines with a shared coordinate have rank one.
        let shared = Rep::build(
            gf(),
            &s2,
            &[("u1", 1), ("u2", 1), ("s", 1)],
            &[("a1", &[&[1]]), ("a2", &[&[1]])],
        )
        .unwrap();
        assert_eq!(shared.global_rank(), 1);

        // Three pairwise distinct lines in the plane: rank zero.
        let s3 = arc(families::subspace(3));
        let three = Rep::build(
            gf(),
            &s3,
            &[("u1", 1), ("u2", 1), ("u3", 1), ("s", 2)],
            &[
                ("a1", &[&[1], &[0]]),
                ("a2", &[&[0], &[1]]),
                ("a3", &[&[1], &[1]]),
            ],
        )
        .unwrap();
        assert_eq!(three.global_rank(), 0);
    }

    #[test]
    fn theta_is_idempotent() {
        let t = arc(families::ext_subspace(2));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let v = Rep::random(gf(), &t, 3, &mut rng);
            let th = v.theta();
            let sub = v.subrep(&th);
            assert!(sub.theta().iter().all(|s| s.is_full()));
        }
    }

    #[test]
    fn delta_flattens_to_images() {
        let t = arc(families::chain(3));
        let v = Rep::build(
            gf(),
            &t,
            &[("x1", 2), ("x2", 1), ("x3", 1)],
            &[("a1", &[&[1, 0]]), ("a2", &[&[1]])],
        )
        .unwrap();
        let d = v.delta();
        assert_eq!(d.dims(), &[1, 1, 1]);
        for a in 0..2 {
            assert_eq!(d.mat(a).rank(), 1);
        }
        // Images compose: each arrow map of the image rep is injective.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let w = Rep::random(gf(), &t, 3, &mut rng);
            let d = w.delta();
            assert_eq!(d.dim(t.root()), w.dim(t.root()));
            for a in 0..t.quiver().n_arrows() {
                assert_eq!(d.mat(a).rank(), d.mat(a).cols());
            }
        }
    }

    #[test]
    fn pushforward_of_a_fold_doubles_the_source() {
        let base = arc(families::chain(2));
        let doubled = families::subspace(2);
        let fold = QuiverMap {
            vmap: vec![0, 0, 1],
            amap: vec![0, 0],
        };
        let v = Rep::build(
            gf(),
            &arc(doubled),
            &[("u1", 1), ("u2", 1), ("s", 1)],
            &[("a1", &[&[2]]), ("a2", &[&[3]])],
        )
        .unwrap();
        let pushed = v.pushforward(&base, &fold);
        assert_eq!(pushed.dims(), &[2, 1]);
        assert_eq!(pushed.mat(0), &Matrix::from_int_rows(gf(), &[&[2, 3]]));
    }

    #[test]
    fn pushforward_of_the_unit_twists_by_the_fiber() {
        // (f_* 1) tensor V equals f_* f^* V on the nose, with the block
        // and Kronecker orders both major in the fiber index.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 2..6 {
            let base = arc(random_rooted_tree(&mut rng, n));
            let over = random_over_tree(&mut rng, &base, 2, 7);
            let otree = arc(over.tree.clone());
            let v = Rep::random(gf(), &base, 3, &mut rng);
            let unit = Rep::one(gf(), &otree);
            let lhs = unit.pushforward(&base, &over.map).tensor(&v);
            let rhs = v.pullback(&otree, &over.map).pushforward(&base, &over.map);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn rational_and_prime_fields_agree_on_integer_input() {
        let t = arc(families::subspace(3));
        let dims: &[(&str, usize)] = &[("u1", 1), ("u2", 1), ("u3", 1), ("s", 2)];
        let mats: &[(&str, &[&[i64]])] = &[
            ("a1", &[&[1], &[0]]),
            ("a2", &[&[0], &[1]]),
            ("a3", &[&[1], &[1]]),
        ];
        let over_gf = Rep::build(gf(), &t, dims, mats).unwrap();
        let over_q = Rep::build(Rationals, &t, dims, mats).unwrap();
        assert_eq!(over_gf.global_rank(), over_q.global_rank());
        assert_eq!(
            over_gf.hom_dim(&over_gf.clone()),
            over_q.hom_dim(&over_q.clone())
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn theta_matches_fixpoint(seed in 0u64..5000, n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = arc(random_rooted_tree(&mut rng, n));
            let v = Rep::random(gf(), &t, 3, &mut rng);
            prop_assert_eq!(v.theta(), v.theta_fixpoint());
        }

        #[test]
        fn global_rank_is_additive_and_multiplicative(seed in 0u64..5000, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = arc(random_rooted_tree(&mut rng, n));
            let v = Rep::random(gf(), &t, 2, &mut rng);
            let w = Rep::random(gf(), &t, 2, &mut rng);
            prop_assert_eq!(v.dsum(&w).global_rank(), v.global_rank() + w.global_rank());
            prop_assert_eq!(v.tensor(&w).global_rank(), v.global_rank() * w.global_rank());
        }

        #[test]
        fn hom_is_additive_in_the_source(seed in 0u64..5000, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = arc(random_rooted_tree(&mut rng, n));
            let u = Rep::random(gf(), &t, 2, &mut rng);
            let v = Rep::random(gf(), &t, 2, &mut rng);
            let w = Rep::random(gf(), &t, 2, &mut rng);
            prop_assert_eq!(u.dsum(&v).hom_dim(&w), u.hom_dim(&w) + v.hom_dim(&w));
            for m in u.hom_space(&w) {
                prop_assert!(m.commutes(&u, &w));
            }
        }

        #[test]
        fn pushforward_is_left_adjoint_to_pullback(seed in 0u64..5000, n in 1usize..5) {
            // The adjunction needs a root preserving map.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = arc(random_rooted_tree(&mut rng, n));
            let over = random_over_tree_at(&mut rng, &base, base.root(), 2, 6);
            let otree = arc(over.tree.clone());
            let v = Rep::random(gf(), &otree, 2, &mut rng);
            let w = Rep::random(gf(), &base, 2, &mut rng);
            let lhs = v.pushforward(&base, &over.map).hom_dim(&w);
            let rhs = v.hom_dim(&w.pullback(&otree, &over.map));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn identity_over_quiver_pushpull_is_identity(seed in 0u64..5000, n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = arc(random_rooted_tree(&mut rng, n));
            let id = OverQuiver::identity(&base);
            let v = Rep::random(gf(), &base, 3, &mut rng);
            prop_assert_eq!(v.pullback(&base, &id.map), v.clone());
            prop_assert_eq!(v.pushforward(&base, &id.map), v);
        }
    }
}
