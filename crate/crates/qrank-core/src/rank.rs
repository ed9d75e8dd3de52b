//! Rank functions on rooted tree representations.
//!
//! Every vertex `x` of a rooted tree carries a finite distributive lattice
//! `L(x)`, built bottom up: the lattice of a leaf has one element, and the
//! lattice of an inner vertex is the product over its children of the
//! order-ideal lattices of the child lattices. Each lattice element `M`
//! names a rank function: a reduced quiver `Q_M` over the tree together
//! with the assignment `V -> global rank of the pullback of V to Q_M`.
//! Rank functions are additive over direct sums and multiplicative over
//! tensor products, so they induce ring maps out of the representation
//! ring; [`RankContext`] computes them, reduces arbitrary quivers over the
//! tree to their unique rank-equivalent reduced quiver, and exposes the
//! Galois adjunction between the lattices of a reduced quiver and of the
//! base.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::exactlin::{Field, Subspace};
use crate::poset::{
    adjoint_pair, ideals, product, IdealLattice, Lattice, PosetError, ProductLattice,
};
use crate::quiver::{over_morphisms, OverQuiver, Quiver, QuiverMap, RootedTree};
use crate::rep::Rep;

/// Default ceiling on the size of any single vertex lattice. Iterated
/// ideal lattices grow like iterated Dedekind numbers, so deep trees with
/// wide gluings can explode; the guard turns that into an error.
pub const DEFAULT_LATTICE_GUARD: usize = 50_000;

/// An element of one of the per-vertex lattices: `elem` indexes into
/// `L(vertex)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint {
    pub vertex: usize,
    pub elem: usize,
}

/// The lattice at one vertex: a product over the children of the ideal
/// lattices of their own lattices. A leaf has no children and the empty
/// product, a single element.
#[derive(Debug)]
pub struct VertexLattice {
    product: ProductLattice,
    /// Ideal lattices of the child vertex lattices, in child order.
    child_ideals: Vec<IdealLattice>,
}

impl VertexLattice {
    pub fn lattice(&self) -> &Lattice {
        &self.product.lattice
    }

    pub fn size(&self) -> usize {
        self.product.lattice.n()
    }

    /// The per-child ideal indices of an element.
    pub fn tuple(&self, elem: usize) -> Vec<usize> {
        self.product.tuple(elem)
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        self.product.index(tuple)
    }

    pub fn child_ideals(&self) -> &[IdealLattice] {
        &self.child_ideals
    }
}

/// A reduced quiver: the canonical rooted tree over the base realizing one
/// lattice element. The root sits over `point.vertex` and carries, for
/// each child `c` of that vertex and each maximal element `T` of the
/// ideal chosen at `c`, one subtree which is the reduced quiver of `T`.
#[derive(Debug)]
pub struct ReducedQuiver {
    pub tree: Arc<RootedTree>,
    /// Structure map to the base quiver.
    pub map: QuiverMap,
    pub point: LatticePoint,
    /// The subtrees hanging off the root, in emission order.
    pub pieces: Vec<Piece>,
}

/// One root subtree of a reduced quiver. Its vertices and arrows occupy
/// contiguous index ranges laid out exactly like the standalone reduced
/// quiver of `max_elem`, so translating between the two is an offset.
#[derive(Debug, Clone, Copy)]
pub struct Piece {
    /// Position among the children of the home vertex.
    pub child_pos: usize,
    /// Element of the child's lattice this piece realizes.
    pub max_elem: usize,
    /// First vertex index of the piece.
    pub vstart: usize,
    /// Number of vertices in the piece.
    pub vcount: usize,
    /// First arrow index of the piece; the piece has `vcount - 1`
    /// internal arrows followed by the arrow connecting it to the root.
    pub astart: usize,
}

impl Piece {
    /// Index of the arrow from the piece root to the tree root.
    pub fn link_arrow(&self) -> usize {
        self.astart + self.vcount - 1
    }
}

impl ReducedQuiver {
    pub fn over(&self) -> OverQuiver {
        OverQuiver {
            tree: (*self.tree).clone(),
            map: self.map.clone(),
        }
    }

    /// Vertex image in the base, as a set.
    pub fn image(&self) -> crate::poset::BitSet {
        let mut set = crate::poset::BitSet::new(self.map.vmap.iter().max().map_or(0, |m| m + 1));
        for &v in &self.map.vmap {
            set.set(v, true);
        }
        set
    }
}

/// The result of reducing a quiver over the base: the lattice element it
/// is rank equivalent to, with an embedding of the reduced quiver and a
/// left inverse of it, both over the base.
#[derive(Debug)]
pub struct Reduction {
    pub point: LatticePoint,
    /// Map from the reduced quiver into the given quiver.
    pub section: QuiverMap,
    /// Map from the given quiver onto the reduced quiver;
    /// `retraction . section` is the identity.
    pub retraction: QuiverMap,
}

/// The Galois adjunction between the root lattice of a reduced quiver
/// `Q_M` and the lattice at `at.vertex` in the base. `lower` pushes a
/// root lattice element `A` of `Q_M` forward to the reduction of the
/// composite `Q_A -> Q_M -> Q`; `upper` is its upper adjoint.
#[derive(Debug)]
pub struct Adjunction {
    pub at: LatticePoint,
    /// Rank context of the reduced quiver `Q_at`.
    pub sub: RankContext,
    /// Root lattice of `sub` to lattice at `at.vertex`, elementwise.
    pub lower: Vec<usize>,
    /// Upper adjoint, the other direction.
    pub upper: Vec<usize>,
}

/// Per-tree tables for rank computations: one lattice per vertex and a
/// cache of reduced quivers.
#[derive(Debug)]
pub struct RankContext {
    tree: Arc<RootedTree>,
    verts: Vec<VertexLattice>,
    guard: usize,
    reduced: Mutex<HashMap<LatticePoint, Arc<ReducedQuiver>>>,
}

impl RankContext {
    pub fn new(tree: Arc<RootedTree>) -> Result<RankContext, PosetError> {
        RankContext::with_guard(tree, DEFAULT_LATTICE_GUARD)
    }

    /// Builds every vertex lattice bottom up, failing once any single
    /// lattice would exceed `guard` elements.
    pub fn with_guard(tree: Arc<RootedTree>, guard: usize) -> Result<RankContext, PosetError> {
        let n = tree.n_vertices();
        let mut verts: Vec<Option<VertexLattice>> = (0..n).map(|_| None).collect();
        for v in tree.topo_leaves_first() {
            let child_ideals = tree
                .children(v)
                .iter()
                .map(|&(c, _)| {
                    let child = verts[c].as_ref().expect("children precede parents");
                    ideals(child.lattice().poset(), guard)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let expected: usize = child_ideals.iter().map(|il| il.lattice.n()).product();
            if expected > guard {
                return Err(PosetError::SizeGuard { guard });
            }
            let factors: Vec<&Lattice> = child_ideals.iter().map(|il| &il.lattice).collect();
            let product = product(&factors)?;
            verts[v] = Some(VertexLattice {
                product,
                child_ideals,
            });
        }
        Ok(RankContext {
            tree,
            verts: verts.into_iter().map(Option::unwrap).collect(),
            guard,
            reduced: Mutex::new(HashMap::new()),
        })
    }

    pub fn tree(&self) -> &Arc<RootedTree> {
        &self.tree
    }

    pub fn vertex_lattice(&self, x: usize) -> &VertexLattice {
        &self.verts[x]
    }

    pub fn lattice(&self, x: usize) -> &Lattice {
        self.verts[x].lattice()
    }

    pub fn size(&self, x: usize) -> usize {
        self.verts[x].size()
    }

    /// Number of lattice points over all vertices; the rank of the
    /// reduced representation ring as a free abelian group.
    pub fn total_size(&self) -> usize {
        (0..self.verts.len()).map(|x| self.size(x)).sum()
    }

    pub fn points_at(&self, x: usize) -> Vec<LatticePoint> {
        (0..self.size(x))
            .map(|elem| LatticePoint { vertex: x, elem })
            .collect()
    }

    /// All lattice points, by vertex index then element index.
    pub fn points(&self) -> Vec<LatticePoint> {
        (0..self.verts.len())
            .flat_map(|x| self.points_at(x))
            .collect()
    }

    pub fn bottom(&self, x: usize) -> LatticePoint {
        LatticePoint {
            vertex: x,
            elem: self.lattice(x).bottom(),
        }
    }

    pub fn top(&self, x: usize) -> LatticePoint {
        LatticePoint {
            vertex: x,
            elem: self.lattice(x).top(),
        }
    }

    pub fn leq(&self, p: LatticePoint, q: LatticePoint) -> bool {
        assert_eq!(p.vertex, q.vertex, "points live in one vertex lattice");
        self.lattice(p.vertex).leq(p.elem, q.elem)
    }

    pub fn meet(&self, p: LatticePoint, q: LatticePoint) -> LatticePoint {
        assert_eq!(p.vertex, q.vertex, "points live in one vertex lattice");
        LatticePoint {
            vertex: p.vertex,
            elem: self.lattice(p.vertex).meet(p.elem, q.elem),
        }
    }

    pub fn join(&self, p: LatticePoint, q: LatticePoint) -> LatticePoint {
        assert_eq!(p.vertex, q.vertex, "points live in one vertex lattice");
        LatticePoint {
            vertex: p.vertex,
            elem: self.lattice(p.vertex).join(p.elem, q.elem),
        }
    }

    /// A canonical string for a lattice point, stable across runs and
    /// injective on each vertex lattice: a leaf element is `*`, and an
    /// inner element lists per child the sorted fingerprints of the
    /// maximal elements of its ideal.
    pub fn fingerprint(&self, p: LatticePoint) -> String {
        let kids = self.tree.children(p.vertex);
        if kids.is_empty() {
            return "*".into();
        }
        let vl = &self.verts[p.vertex];
        let tuple = vl.product.tuple(p.elem);
        let mut out = String::from("(");
        for (i, &(c, _)) in kids.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let mut parts: Vec<String> = vl.child_ideals[i]
                .max_antichain(tuple[i])
                .into_iter()
                .map(|s| self.fingerprint(LatticePoint { vertex: c, elem: s }))
                .collect();
            parts.sort();
            out.push('{');
            out.push_str(&parts.join(","));
            out.push('}');
        }
        out.push(')');
        out
    }

    /// The reduced quiver of a lattice point, cached. Vertex names are
    /// positional: the root is `r` and the root of the piece for child
    /// `i`, maximal element position `j`, extends its parent's name by
    /// `.c{i}s{j}`; each arrow is named after its tail.
    pub fn reduced_quiver(&self, p: LatticePoint) -> Arc<ReducedQuiver> {
        assert!(p.vertex < self.verts.len() && p.elem < self.size(p.vertex));
        if let Some(r) = self.reduced.lock().unwrap().get(&p) {
            return r.clone();
        }
        let base = self.tree.quiver();
        let mut q = Quiver::new(format!(
            "{}~red~{}~{}",
            base.name(),
            self.tree.vertex_name(p.vertex),
            p.elem
        ));
        let mut vmap = Vec::new();
        let mut amap = Vec::new();
        let mut pieces = Vec::new();
        self.emit(p, "r", &mut q, &mut vmap, &mut amap, Some(&mut pieces));
        let tree = Arc::new(RootedTree::new(q).expect("a reduced quiver is a rooted tree"));
        let map = QuiverMap { vmap, amap };
        debug_assert!(map.check(tree.quiver(), base));
        let out = Arc::new(ReducedQuiver {
            tree,
            map,
            point: p,
            pieces,
        });
        self.reduced
            .lock()
            .unwrap()
            .entry(p)
            .or_insert(out)
            .clone()
    }

    // Appends the reduced quiver of `p` to `q`, rooted at a new vertex
    // named `name`. Traversal order is fixed by child order and antichain
    // order, so any two emissions of the same point lay out identically.
    fn emit(
        &self,
        p: LatticePoint,
        name: &str,
        q: &mut Quiver,
        vmap: &mut Vec<usize>,
        amap: &mut Vec<usize>,
        mut toplevel: Option<&mut Vec<Piece>>,
    ) {
        q.add_vertex(name).expect("positional names are unique");
        vmap.push(p.vertex);
        let vl = &self.verts[p.vertex];
        let tuple = vl.product.tuple(p.elem);
        for (i, &(c, a)) in self.tree.children(p.vertex).iter().enumerate() {
            for (j, &s) in vl.child_ideals[i].max_antichain(tuple[i]).iter().enumerate() {
                let child_name = format!("{name}.c{i}s{j}");
                let vstart = q.n_vertices();
                let astart = q.n_arrows();
                self.emit(LatticePoint { vertex: c, elem: s }, &child_name, q, vmap, amap, None);
                let vcount = q.n_vertices() - vstart;
                q.add_arrow(&format!("e-{child_name}"), &child_name, name)
                    .expect("positional names are unique");
                amap.push(a);
                if let Some(pieces) = toplevel.as_deref_mut() {
                    pieces.push(Piece {
                        child_pos: i,
                        max_elem: s,
                        vstart,
                        vcount,
                        astart,
                    });
                }
            }
        }
    }

    /// The reduced representation of a lattice point: the pushforward of
    /// the one-dimensional constant representation along the structure
    /// map, a tree of 0/1 matrices.
    pub fn char_rep<F: Field>(&self, field: F, p: LatticePoint) -> Rep<F> {
        let red = self.reduced_quiver(p);
        Rep::one(field, &red.tree).pushforward(&self.tree, &red.map)
    }

    /// The rank subspace of `v` at a lattice point: the subspace of the
    /// space at `p.vertex` cut out by intersecting, over every maximal
    /// generator of every child ideal, the image of the generator's own
    /// rank subspace under the child arrow.
    pub fn rank_space<F: Field>(&self, v: &Rep<F>, p: LatticePoint) -> Subspace<F> {
        let mut memo = HashMap::new();
        self.rank_space_memo(v, p, &mut memo)
    }

    fn rank_space_memo<F: Field>(
        &self,
        v: &Rep<F>,
        p: LatticePoint,
        memo: &mut HashMap<LatticePoint, Subspace<F>>,
    ) -> Subspace<F> {
        if let Some(s) = memo.get(&p) {
            return s.clone();
        }
        let vl = &self.verts[p.vertex];
        let tuple = vl.product.tuple(p.elem);
        let mut space = Subspace::full(v.field().clone(), v.dim(p.vertex));
        for (i, &(c, a)) in self.tree.children(p.vertex).iter().enumerate() {
            for s in vl.child_ideals[i].max_antichain(tuple[i]) {
                let below = self.rank_space_memo(v, LatticePoint { vertex: c, elem: s }, memo);
                space = space.intersect(&below.apply(v.mat(a)));
            }
        }
        memo.insert(p, space.clone());
        space
    }

    /// The rank of `v` at a lattice point. Computed as the dimension of
    /// the rank subspace and, as a cross check, as the global rank of the
    /// pullback of `v` to the reduced quiver; the two routes must agree.
    pub fn rank_m<F: Field>(&self, v: &Rep<F>, p: LatticePoint) -> usize {
        assert_eq!(v.tree(), &self.tree, "representation lives on another tree");
        let via_spaces = self.rank_space(v, p).dim();
        let red = self.reduced_quiver(p);
        let via_pullback = v.pullback(&red.tree, &red.map).global_rank();
        assert_eq!(
            via_spaces, via_pullback,
            "rank routes disagree at vertex {} element {}",
            p.vertex, p.elem
        );
        via_spaces
    }

    /// Ranks of `v` at every lattice point, aligned with [`points`].
    /// One shared bottom-up pass; in debug builds every entry is checked
    /// against the pullback route.
    ///
    /// [`points`]: RankContext::points
    pub fn rank_vector<F: Field>(&self, v: &Rep<F>) -> Vec<usize> {
        assert_eq!(v.tree(), &self.tree, "representation lives on another tree");
        let mut memo = HashMap::new();
        self.points()
            .into_iter()
            .map(|p| {
                let d = self.rank_space_memo(v, p, &mut memo).dim();
                #[cfg(debug_assertions)]
                {
                    let red = self.reduced_quiver(p);
                    assert_eq!(d, v.pullback(&red.tree, &red.map).global_rank());
                }
                d
            })
            .collect()
    }

    /// Reduces a quiver over the base to the lattice point it is rank
    /// equivalent to, together with a section/retraction pair over the
    /// base witnessing the equivalence. The home vertex is wherever the
    /// root of `over` lands.
    ///
    /// Every branch of the root reduces recursively to an element of the
    /// lattice of the child it lies over; the per-child ideals generated
    /// by these elements form the answer. The section embeds each piece
    /// of the reduced quiver through a branch realizing its maximal
    /// element, and the retraction folds every branch onto a piece whose
    /// element dominates it, composing with a morphism between reduced
    /// quivers that exists exactly when the elements are comparable.
    pub fn reduce(&self, over: &OverQuiver) -> Reduction {
        let base = self.tree.quiver();
        assert!(over.is_over(base), "not a quiver over this base");
        let qt = &over.tree;
        let sroot = qt.root();
        let x = over.map.vmap[sroot];
        let kids = self.tree.children(x);
        let vl = &self.verts[x];

        struct Arm {
            child_pos: usize,
            sub: crate::quiver::SubTree,
            red: Reduction,
            /// Arrow into the root of the ambient over-tree.
            arrow: usize,
        }
        let mut arms: Vec<Arm> = Vec::new();
        for &(cq, aq) in qt.children(sroot) {
            let base_arrow = over.map.amap[aq];
            let child_pos = kids
                .iter()
                .position(|&(_, a)| a == base_arrow)
                .expect("arrow over an arrow into the home vertex");
            let sub = qt.subquiver_to(cq);
            let arm_over = OverQuiver {
                tree: sub.tree.clone(),
                map: sub.embedding().then(&over.map),
            };
            let red = self.reduce(&arm_over);
            debug_assert_eq!(red.point.vertex, kids[child_pos].0);
            arms.push(Arm {
                child_pos,
                sub,
                red,
                arrow: aq,
            });
        }

        let tuple: Vec<usize> = vl
            .child_ideals
            .iter()
            .enumerate()
            .map(|(i, il)| {
                let gens: Vec<usize> = arms
                    .iter()
                    .filter(|arm| arm.child_pos == i)
                    .map(|arm| arm.red.point.elem)
                    .collect();
                il.ideal_generated(&gens)
            })
            .collect();
        let point = LatticePoint {
            vertex: x,
            elem: vl.product.index(&tuple),
        };
        let red = self.reduced_quiver(point);
        let rq = red.tree.quiver();

        let mut gv = vec![usize::MAX; rq.n_vertices()];
        let mut ga = vec![usize::MAX; rq.n_arrows()];
        gv[red.tree.root()] = sroot;
        for piece in &red.pieces {
            let arm = arms
                .iter()
                .find(|arm| {
                    arm.child_pos == piece.child_pos && arm.red.point.elem == piece.max_elem
                })
                .expect("every maximal generator comes from a branch");
            for j in 0..piece.vcount {
                gv[piece.vstart + j] = arm.sub.vmap[arm.red.section.vmap[j]];
            }
            for j in 0..piece.vcount - 1 {
                ga[piece.astart + j] = arm.sub.amap[arm.red.section.amap[j]];
            }
            ga[piece.link_arrow()] = arm.arrow;
        }
        let section = QuiverMap { vmap: gv, amap: ga };

        let mut hv = vec![usize::MAX; qt.n_vertices()];
        let mut ha = vec![usize::MAX; qt.quiver().n_arrows()];
        hv[sroot] = red.tree.root();
        for arm in &arms {
            let c = kids[arm.child_pos].0;
            let cl = self.lattice(c);
            let piece = red
                .pieces
                .iter()
                .find(|pc| {
                    pc.child_pos == arm.child_pos && cl.leq(arm.red.point.elem, pc.max_elem)
                })
                .expect("a generator lies below some maximal element");
            let rho = if piece.max_elem == arm.red.point.elem {
                QuiverMap::identity(self.reduced_quiver(arm.red.point).tree.quiver())
            } else {
                let from = self.reduced_quiver(arm.red.point);
                let to = self.reduced_quiver(LatticePoint {
                    vertex: c,
                    elem: piece.max_elem,
                });
                over_morphisms(&from.over(), &to.over(), base)
                    .into_iter()
                    .next()
                    .expect("comparable reduced quivers admit a morphism over the base")
            };
            for (u, &qv) in arm.sub.vmap.iter().enumerate() {
                hv[qv] = piece.vstart + rho.vmap[arm.red.retraction.vmap[u]];
            }
            for (b, &qa) in arm.sub.amap.iter().enumerate() {
                ha[qa] = piece.astart + rho.amap[arm.red.retraction.amap[b]];
            }
            ha[arm.arrow] = piece.link_arrow();
        }
        let retraction = QuiverMap { vmap: hv, amap: ha };

        assert!(section.check(rq, qt.quiver()));
        assert!(retraction.check(qt.quiver(), rq));
        assert_eq!(section.then(&over.map), red.map, "section over the base");
        assert_eq!(retraction.then(&red.map), over.map, "retraction over the base");
        assert_eq!(
            section.then(&retraction),
            QuiverMap::identity(rq),
            "retraction must invert the section"
        );
        Reduction {
            point,
            section,
            retraction,
        }
    }

    /// The adjunction between the root lattice of the reduced quiver at
    /// `m` and the lattice at `m.vertex`: the lower map reduces each
    /// composite `Q_A -> Q_m -> Q`, and the upper map is its Galois
    /// adjoint. Join preservation and the Galois property are verified
    /// while building.
    pub fn adjunction(&self, m: LatticePoint) -> Result<Adjunction, PosetError> {
        let red = self.reduced_quiver(m);
        let sub = RankContext::with_guard(red.tree.clone(), self.guard)?;
        let sr = sub.tree.root();
        let lower: Vec<usize> = (0..sub.size(sr))
            .map(|a| {
                let ra = sub.reduced_quiver(LatticePoint { vertex: sr, elem: a });
                let composed = OverQuiver {
                    tree: (*ra.tree).clone(),
                    map: ra.map.then(&red.map),
                };
                let r = self.reduce(&composed);
                debug_assert_eq!(r.point.vertex, m.vertex);
                r.point.elem
            })
            .collect();
        let upper = adjoint_pair(sub.lattice(sr), self.lattice(m.vertex), &lower)?;
        Ok(Adjunction {
            at: m,
            sub,
            lower,
            upper,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{GfPrime, Rationals};
    use crate::quiver::{all_rooted_trees, families, random_over_tree, random_rooted_tree};
    use crate::rep::Rep;
    use crate::DEFAULT_PRIME;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf() -> GfPrime {
        GfPrime::new(DEFAULT_PRIME).unwrap()
    }

    fn ctx(t: RootedTree) -> RankContext {
        RankContext::new(Arc::new(t)).unwrap()
    }

    #[test]
    fn lattice_sizes_count_iterated_ideals() {
        // Three leaves into a middle vertex into the root: the middle
        // vertex sees the 8 subsets of its leaves, and the root the 20
        // ideals of that cube.
        let c = ctx(families::ext_subspace(3));
        let t = c.tree().quiver().vertex_index("t").unwrap();
        let s = c.tree().quiver().vertex_index("s").unwrap();
        assert_eq!(c.size(t), 8);
        assert_eq!(c.size(s), 20);
        assert_eq!(c.total_size(), 31);

        let c = ctx(families::subspace(3));
        assert_eq!(c.total_size(), 11);

        let c = ctx(families::chain(3));
        let sizes: Vec<usize> = (0..3).map(|v| c.size(v)).collect();
        assert_eq!(sizes, vec![1, 2, 3]);
    }

    #[test]
    fn root_lattice_of_subspace_quivers_is_boolean() {
        for n in 2..=5 {
            let c = ctx(families::subspace(n));
            let root = c.tree().root();
            let l = c.lattice(root);
            assert_eq!(l.n(), 1 << n, "n = {n}");
            assert_eq!(l.distributive(), Some(true), "n = {n}");
            let ji = l.join_irreducibles();
            assert_eq!(ji.len(), n, "n = {n}");
            for &a in &ji {
                for &b in &ji {
                    assert!(a == b || !l.leq(a, b), "irreducibles form an antichain");
                }
            }
        }
    }

    #[test]
    fn reduced_quivers_of_subspace_match_connected_subquivers() {
        let c = ctx(families::subspace(3));
        let mut images: Vec<crate::poset::BitSet> = c
            .points()
            .into_iter()
            .map(|p| {
                let mut set = crate::poset::BitSet::new(c.tree().n_vertices());
                for &v in &c.reduced_quiver(p).map.vmap {
                    set.set(v, true);
                }
                set
            })
            .collect();
        images.sort_unstable_by_key(|s| (s.count(), s.clone()));
        let expected = c.tree().connected_subquivers(1000).unwrap();
        assert_eq!(images, expected);
    }

    #[test]
    fn reduced_quiver_shapes_on_a_chain() {
        let c = ctx(families::chain(3));
        let root = c.tree().root();
        // Elements in order: the point, the two-vertex chain measuring
        // the last arrow, the full chain measuring the composite.
        let counts: Vec<usize> = c
            .points_at(root)
            .into_iter()
            .map(|p| c.reduced_quiver(p).tree.n_vertices())
            .collect();
        assert_eq!(counts, vec![1, 2, 3]);
        let top = c.reduced_quiver(c.top(root));
        assert_eq!(
            top.tree.complexity_key(),
            c.tree().complexity_key(),
            "top of the root lattice reproduces the whole tree"
        );
    }

    #[test]
    fn fingerprints_separate_points_and_are_stable() {
        let c = ctx(families::subspace(2));
        let root = c.tree().root();
        let fps: Vec<String> = c
            .points_at(root)
            .into_iter()
            .map(|p| c.fingerprint(p))
            .collect();
        assert_eq!(fps, vec!["({},{})", "({},{*})", "({*},{})", "({*},{*})"]);

        let c = ctx(families::ext_subspace(2));
        for x in 0..c.tree().n_vertices() {
            let fps: Vec<String> = c
                .points_at(x)
                .into_iter()
                .map(|p| c.fingerprint(p))
                .collect();
            let mut dedup = fps.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), fps.len(), "fingerprints collide at {x}");
        }
    }

    #[test]
    fn rank_of_unit_and_simple_reps() {
        let c = ctx(families::ext_subspace(2));
        let t = c.tree().clone();
        let one = Rep::one(gf(), &t);
        assert!(c.rank_vector(&one).iter().all(|&r| r == 1));

        let at_root = Rep::simple(gf(), &t, t.root());
        for p in c.points() {
            let expect = usize::from(p == c.bottom(t.root()));
            assert_eq!(c.rank_m(&at_root, p), expect);
        }
    }

    #[test]
    fn rank_matches_hand_computed_images_on_two_subspaces() {
        // Two lines in the plane: both arrow images are distinct axes,
        // so the intersection rank vanishes while each single image has
        // dimension one.
        let t = Arc::new(families::subspace(2));
        let v = Rep::build(
            gf(),
            &t,
            &[("u1", 1), ("u2", 1), ("s", 2)],
            &[("a1", &[&[1], &[0]]), ("a2", &[&[0], &[1]])],
        )
        .unwrap();
        let c = RankContext::new(t.clone()).unwrap();
        assert_eq!(c.rank_vector(&v), vec![1, 1, 2, 1, 1, 0]);
    }

    #[test]
    fn rank_of_char_reps_is_the_zeta_function() {
        for tree in [
            families::subspace(2),
            families::chain(3),
            families::ext_subspace(2),
        ] {
            let c = ctx(tree);
            for x in 0..c.tree().n_vertices() {
                for n in c.points_at(x) {
                    let xn = c.char_rep(gf(), n);
                    for m in c.points_at(x) {
                        let expect = usize::from(c.leq(m, n));
                        assert_eq!(c.rank_m(&xn, m), expect, "m={m:?} n={n:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn zeta_evaluation_holds_over_the_rationals() {
        let c = ctx(families::subspace(2));
        let root = c.tree().root();
        for n in c.points_at(root) {
            let xn = c.char_rep(Rationals, n);
            for m in c.points_at(root) {
                assert_eq!(c.rank_m(&xn, m), usize::from(c.leq(m, n)));
            }
        }
    }

    #[test]
    fn char_rep_support_is_the_reduced_quiver_image() {
        let c = ctx(families::ext_subspace(2));
        for p in c.points() {
            let rep = c.char_rep(gf(), p);
            let red = c.reduced_quiver(p);
            let mut image = crate::poset::BitSet::new(c.tree().n_vertices());
            for &v in &red.map.vmap {
                image.set(v, true);
            }
            assert_eq!(rep.support(), image);
        }
    }

    #[test]
    fn reduce_round_trips_every_reduced_quiver() {
        for tree in [
            families::subspace(3),
            families::ext_subspace(2),
            families::chain(4),
        ] {
            let c = ctx(tree);
            for p in c.points() {
                let red = c.reduced_quiver(p);
                let r = c.reduce(&red.over());
                assert_eq!(r.point, p);
            }
            let identity = OverQuiver::identity(c.tree());
            let r = c.reduce(&identity);
            assert_eq!(r.point, c.top(c.tree().root()));
        }
    }

    #[test]
    fn reduce_folds_parallel_arms() {
        // Two copies of the same branch measure the same rank as one.
        let base = ctx(families::chain(2));
        let mut q = Quiver::new("doubled");
        for v in ["w0", "w1", "w2"] {
            q.add_vertex(v).unwrap();
        }
        q.add_arrow("f1", "w1", "w0").unwrap();
        q.add_arrow("f2", "w2", "w0").unwrap();
        let over = OverQuiver {
            tree: RootedTree::new(q).unwrap(),
            map: QuiverMap {
                vmap: vec![1, 0, 0],
                amap: vec![0, 0],
            },
        };
        let r = base.reduce(&over);
        assert_eq!(r.point, base.top(base.tree().root()));
        // Both branches retract onto the single piece.
        assert_eq!(r.retraction.vmap[1], r.retraction.vmap[2]);
    }

    #[test]
    fn adjunction_tables_on_small_quivers() {
        for tree in [families::subspace(3), families::ext_subspace(2)] {
            let c = ctx(tree);
            for x in 0..c.tree().n_vertices() {
                let l = c.lattice(x);
                for m in c.points_at(x) {
                    let adj = c.adjunction(m).unwrap();
                    let sl = adj.sub.lattice(adj.sub.tree().root());
                    assert_eq!(adj.lower[sl.top()], m.elem, "top maps to m");
                    assert_eq!(adj.upper[m.elem], sl.top(), "m pulls back to top");
                    for n in 0..l.n() {
                        let meet = l.meet(m.elem, n);
                        assert_eq!(adj.lower[adj.upper[n]], meet, "round trip is meet");
                        assert_eq!(adj.upper[n], adj.upper[meet]);
                    }
                    // The lower map matches the coatoms of the reduced
                    // lattice with the elements covered by m.
                    let mut down: Vec<usize> =
                        sl.coatoms().into_iter().map(|a| adj.lower[a]).collect();
                    down.sort_unstable();
                    down.dedup();
                    let mut covered = l.poset().covers_down(m.elem);
                    covered.sort_unstable();
                    assert_eq!(down, covered, "coatom bijection at {m:?}");
                    assert_eq!(sl.coatoms().len(), covered.len());
                }
            }
        }
    }

    #[test]
    fn reduced_quivers_never_exceed_the_base_complexity() {
        for n in 1..=6 {
            for t in all_rooted_trees(n) {
                let c = ctx(t);
                let key = c.tree().complexity_key();
                let top = c.top(c.tree().root());
                for p in c.points() {
                    let rkey = c.reduced_quiver(p).tree.complexity_key();
                    assert!(rkey <= key, "{p:?}");
                    // Equality exactly at the identity structure map.
                    assert_eq!(rkey == key, p == top, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn vertex_lattices_are_self_dual() {
        for tree in [
            families::subspace(3),
            families::ext_subspace(2),
            families::chain(4),
        ] {
            let c = ctx(tree);
            for x in 0..c.tree().n_vertices() {
                assert!(
                    crate::poset::find_anti_automorphism(c.lattice(x).poset()).is_some(),
                    "no anti automorphism at vertex {x}"
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rank_vector_is_additive_and_multiplicative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = Arc::new(random_rooted_tree(&mut rng, 5));
            let c = RankContext::new(t.clone()).unwrap();
            let v = Rep::random(gf(), &t, 3, &mut rng);
            let w = Rep::random(gf(), &t, 3, &mut rng);
            let rv = c.rank_vector(&v);
            let rw = c.rank_vector(&w);
            let sum = c.rank_vector(&v.dsum(&w));
            let prod = c.rank_vector(&v.tensor(&w));
            for i in 0..rv.len() {
                prop_assert_eq!(sum[i], rv[i] + rw[i]);
                prop_assert_eq!(prod[i], rv[i] * rw[i]);
            }
        }

        #[test]
        fn rank_spaces_reverse_order_and_turn_joins_into_intersections(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = Arc::new(random_rooted_tree(&mut rng, 4));
            let c = RankContext::new(t.clone()).unwrap();
            let v = Rep::random(gf(), &t, 3, &mut rng);
            for x in 0..t.n_vertices() {
                let l = c.lattice(x);
                for m in c.points_at(x) {
                    for n in c.points_at(x) {
                        let rm = c.rank_space(&v, m);
                        let rn = c.rank_space(&v, n);
                        if c.leq(m, n) {
                            prop_assert!(rm.contains(&rn));
                        }
                        let join = LatticePoint { vertex: x, elem: l.join(m.elem, n.elem) };
                        let rj = c.rank_space(&v, join);
                        let both = rm.intersect(&rn);
                        prop_assert!(rj.contains(&both) && both.contains(&rj));
                    }
                }
            }
        }

        #[test]
        fn reduce_computes_the_rank_of_pullbacks(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = Arc::new(random_rooted_tree(&mut rng, 4));
            let c = RankContext::new(base.clone()).unwrap();
            let over = random_over_tree(&mut rng, &base, 2, 6);
            let r = c.reduce(&over);
            let over_tree = Arc::new(over.tree.clone());
            for _ in 0..2 {
                let v = Rep::random(gf(), &base, 3, &mut rng);
                let pulled = v.pullback(&over_tree, &over.map).global_rank();
                prop_assert_eq!(pulled, c.rank_m(&v, r.point));
            }
        }

        #[test]
        fn reduce_round_trips_on_random_over_trees(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = Arc::new(random_rooted_tree(&mut rng, 5));
            let c = RankContext::new(base.clone()).unwrap();
            let over = random_over_tree(&mut rng, &base, 2, 7);
            let r = c.reduce(&over);
            let red = c.reduced_quiver(r.point);
            let again = c.reduce(&red.over());
            prop_assert_eq!(again.point, r.point);
        }
    }
}
