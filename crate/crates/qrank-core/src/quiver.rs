//! Rooted tree quivers and maps between them.
//!
//! A rooted tree quiver has a unique sink (the root) and exactly one
//! outgoing arrow at every other vertex, so every vertex has a unique
//! directed path to the root. [`RootedTree`] validates this shape and
//! precomputes parent/child structure; [`RootShape`] splits a tree at
//! its root into either a single extension arrow or a gluing of arms;
//! [`over_morphisms`] enumerates maps between trees over a common base.
//!
//! The text format lives in the [`text`] submodule and is re-exported
//! here: `parse_quiver`, `format_quiver`, `quiver_dot`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use thiserror::Error;

use crate::poset::{BitSet, Poset};

mod text;

pub use crate::textio::ParseError;
pub use text::{format_quiver, parse_quiver, quiver_dot};

/// Guard on subquiver enumeration; trees past this size are out of scope.
pub const DEFAULT_SUBQUIVER_GUARD: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuiverError {
    #[error("duplicate vertex name {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate arrow name {0:?}")]
    DuplicateArrow(String),
    #[error("arrow {arrow:?} references unknown vertex {vertex:?}")]
    UnknownVertex { arrow: String, vertex: String },
    #[error("quiver has no vertices")]
    Empty,
    #[error("vertex {vertex:?} has {count} outgoing arrows; a rooted tree allows at most one")]
    MultipleOutgoing { vertex: String, count: usize },
    #[error("no sink: every vertex has an outgoing arrow, so there is a directed cycle")]
    NoSink,
    #[error("vertices {0:?} and {1:?} are both sinks; a rooted tree has exactly one")]
    TwoSinks(String, String),
    #[error("vertex {0:?} has no directed path to the sink")]
    Disconnected(String),
    #[error("more than {0} connected subquivers; raise the guard to enumerate them")]
    SubquiverGuard(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub name: String,
    pub tail: usize,
    pub head: usize,
}

/// A finite quiver with named vertices and arrows.
///
/// Vertex and arrow indices are positions in declaration order; all
/// derived structures and outputs are deterministic in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    name: String,
    vertices: Vec<String>,
    arrows: Vec<Arrow>,
    vindex: HashMap<String, usize>,
    aindex: HashMap<String, usize>,
}

impl Quiver {
    pub fn new(name: impl Into<String>) -> Quiver {
        Quiver {
            name: name.into(),
            vertices: Vec::new(),
            arrows: Vec::new(),
            vindex: HashMap::new(),
            aindex: HashMap::new(),
        }
    }

    /// Convenience constructor from vertex names and `(arrow, tail, head)`
    /// triples.
    pub fn build(
        name: &str,
        vertices: &[&str],
        arrows: &[(&str, &str, &str)],
    ) -> Result<Quiver, QuiverError> {
        let mut q = Quiver::new(name);
        for v in vertices {
            q.add_vertex(v)?;
        }
        for (a, t, h) in arrows {
            q.add_arrow(a, t, h)?;
        }
        Ok(q)
    }

    pub fn add_vertex(&mut self, name: &str) -> Result<usize, QuiverError> {
        if self.vindex.contains_key(name) {
            return Err(QuiverError::DuplicateVertex(name.to_string()));
        }
        let idx = self.vertices.len();
        self.vertices.push(name.to_string());
        self.vindex.insert(name.to_string(), idx);
        Ok(idx)
    }

    pub fn add_arrow(&mut self, name: &str, tail: &str, head: &str) -> Result<usize, QuiverError> {
        if self.aindex.contains_key(name) {
            return Err(QuiverError::DuplicateArrow(name.to_string()));
        }
        let lookup = |v: &str| {
            self.vindex
                .get(v)
                .copied()
                .ok_or_else(|| QuiverError::UnknownVertex {
                    arrow: name.to_string(),
                    vertex: v.to_string(),
                })
        };
        let (tail, head) = (lookup(tail)?, lookup(head)?);
        let idx = self.arrows.len();
        self.arrows.push(Arrow {
            name: name.to_string(),
            tail,
            head,
        });
        self.aindex.insert(name.to_string(), idx);
        Ok(idx)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn arrow(&self, a: usize) -> &Arrow {
        &self.arrows[a]
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vindex.get(name).copied()
    }

    pub fn arrow_index(&self, name: &str) -> Option<usize> {
        self.aindex.get(name).copied()
    }

    pub fn arrows_into(&self, v: usize) -> Vec<usize> {
        (0..self.arrows.len())
            .filter(|&a| self.arrows[a].head == v)
            .collect()
    }

    pub fn arrows_out_of(&self, v: usize) -> Vec<usize> {
        (0..self.arrows.len())
            .filter(|&a| self.arrows[a].tail == v)
            .collect()
    }
}

/// A validated rooted tree quiver.
///
/// The root is the unique sink; `children(v)` lists the tails of the
/// arrows into `v` in vertex index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    quiver: Quiver,
    root: usize,
    out_arrow: Vec<Option<usize>>,
    children: Vec<Vec<(usize, usize)>>,
    depth: Vec<usize>,
}

impl RootedTree {
    pub fn new(quiver: Quiver) -> Result<RootedTree, QuiverError> {
        let n = quiver.n_vertices();
        if n == 0 {
            return Err(QuiverError::Empty);
        }
        let mut out_arrow: Vec<Option<usize>> = vec![None; n];
        for (a, arrow) in quiver.arrows.iter().enumerate() {
            if out_arrow[arrow.tail].is_some() {
                return Err(QuiverError::MultipleOutgoing {
                    vertex: quiver.vertices[arrow.tail].clone(),
                    count: quiver.arrows_out_of(arrow.tail).len(),
                });
            }
            out_arrow[arrow.tail] = Some(a);
        }
        let sinks: Vec<usize> = (0..n).filter(|&v| out_arrow[v].is_none()).collect();
        let root = match sinks.as_slice() {
            [] => return Err(QuiverError::NoSink),
            [r] => *r,
            [a, b, ..] => {
                return Err(QuiverError::TwoSinks(
                    quiver.vertices[*a].clone(),
                    quiver.vertices[*b].clone(),
                ))
            }
        };
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (a, arrow) in quiver.arrows.iter().enumerate() {
            children[arrow.head].push((arrow.tail, a));
        }
        for list in &mut children {
            list.sort_unstable();
        }
        // BFS from the root against arrow direction reaches exactly the
        // vertices with a directed path to the root.
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(c, _) in &children[v] {
                if depth[c] == usize::MAX {
                    depth[c] = depth[v] + 1;
                    queue.push_back(c);
                }
            }
        }
        if let Some(v) = (0..n).find(|&v| depth[v] == usize::MAX) {
            return Err(QuiverError::Disconnected(quiver.vertices[v].clone()));
        }
        Ok(RootedTree {
            quiver,
            root,
            out_arrow,
            children,
            depth,
        })
    }

    pub fn quiver(&self) -> &Quiver {
        &self.quiver
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn n_vertices(&self) -> usize {
        self.quiver.n_vertices()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        self.quiver.vertex_name(v)
    }

    /// The unique outgoing arrow, `None` exactly at the root.
    pub fn out_arrow(&self, v: usize) -> Option<usize> {
        self.out_arrow[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.out_arrow[v].map(|a| self.quiver.arrows[a].head)
    }

    /// `(child vertex, arrow into v)` pairs in vertex index order.
    pub fn children(&self, v: usize) -> &[(usize, usize)] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Length in arrows of the longest path to the root.
    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap()
    }

    /// All vertices, each one before its parent.
    pub fn topo_leaves_first(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_vertices()).collect();
        order.sort_by_key(|&v| (Reverse(self.depth[v]), v));
        order
    }

    /// Arrow indices along the path from `v` to the root.
    pub fn path_to_root(&self, v: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = v;
        while let Some(a) = self.out_arrow[cur] {
            path.push(a);
            cur = self.quiver.arrows[a].head;
        }
        path
    }

    /// The vertex set of the subquiver of everything mapping to `x`:
    /// `x` together with all vertices whose path to the root passes
    /// through `x`.
    pub fn above(&self, x: usize) -> BitSet {
        let mut set = BitSet::new(self.n_vertices());
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            set.set(v, true);
            for &(c, _) in &self.children[v] {
                stack.push(c);
            }
        }
        set
    }

    /// The subtree of all vertices with a path to `x`, rooted at `x`.
    pub fn subquiver_to(&self, x: usize) -> SubTree {
        let name = format!("{}~to-{}", self.quiver.name, self.quiver.vertices[x]);
        self.induced(&self.above(x), &name)
    }

    /// The induced subquiver on a connected vertex set, as a rooted tree
    /// with the original vertex and arrow names.
    ///
    /// Panics if the set is empty or not connected.
    pub fn induced(&self, verts: &BitSet, name: &str) -> SubTree {
        let mut q = Quiver::new(name);
        let vmap: Vec<usize> = verts.iter_ones().collect();
        for &v in &vmap {
            q.add_vertex(&self.quiver.vertices[v]).unwrap();
        }
        let mut amap = Vec::new();
        for (a, arrow) in self.quiver.arrows.iter().enumerate() {
            if verts.get(arrow.tail) && verts.get(arrow.head) {
                q.add_arrow(
                    &arrow.name,
                    &self.quiver.vertices[arrow.tail],
                    &self.quiver.vertices[arrow.head],
                )
                .unwrap();
                amap.push(a);
            }
        }
        let tree = RootedTree::new(q).expect("induced set must be nonempty and connected");
        SubTree { tree, vmap, amap }
    }

    /// Splits the tree at its root by the number of arrows into it.
    pub fn decompose_root(&self) -> RootShape {
        let kids = &self.children[self.root];
        match kids.as_slice() {
            [] => RootShape::Point,
            [(c, a)] => RootShape::Extension {
                inner: self.subquiver_to(*c),
                tail: *c,
                arrow: *a,
            },
            _ => {
                let arms = kids
                    .iter()
                    .map(|&(c, _)| {
                        let mut verts = self.above(c);
                        verts.set(self.root, true);
                        let name =
                            format!("{}~arm-{}", self.quiver.name, self.quiver.vertices[c]);
                        self.induced(&verts, &name)
                    })
                    .collect();
                RootShape::Gluing { arms }
            }
        }
    }

    /// Vertex sets of all nonempty connected subquivers, sorted by size
    /// then content.
    pub fn connected_subquivers(&self, guard: usize) -> Result<Vec<BitSet>, QuiverError> {
        let mut all = Vec::new();
        for r in 0..self.n_vertices() {
            self.connected_at(r, guard, &mut all)?;
        }
        all.sort_unstable_by_key(|s| (s.count(), s.clone()));
        Ok(all)
    }

    // Connected sets whose vertex nearest the root is `r`: products of
    // an optional connected set per child of `r`.
    fn connected_at(&self, r: usize, guard: usize, out: &mut Vec<BitSet>) -> Result<(), QuiverError> {
        let mut base = BitSet::new(self.n_vertices());
        base.set(r, true);
        let mut acc = vec![base];
        for &(c, _) in &self.children[r] {
            let mut with_child = Vec::new();
            self.connected_at(c, guard, &mut with_child)?;
            let mut next = Vec::with_capacity(acc.len() * (1 + with_child.len()));
            for s in &acc {
                next.push(s.clone());
                for t in &with_child {
                    next.push(s.union(t));
                }
                if next.len() + out.len() > guard {
                    return Err(QuiverError::SubquiverGuard(guard));
                }
            }
            acc = next;
        }
        out.extend(acc);
        if out.len() > guard {
            return Err(QuiverError::SubquiverGuard(guard));
        }
        Ok(())
    }

    /// Total order key: trees compare first by height, then by their
    /// root branches sorted largest first, lexicographically. Equal keys
    /// mean isomorphic rooted trees.
    pub fn complexity_key(&self) -> CompKey {
        self.complexity_key_at(self.root)
    }

    fn complexity_key_at(&self, v: usize) -> CompKey {
        let mut branches: Vec<CompKey> = self.children[v]
            .iter()
            .map(|&(c, _)| self.complexity_key_at(c))
            .collect();
        branches.sort_unstable_by(|a, b| b.cmp(a));
        let height = branches.iter().map(|b| b.height + 1).max().unwrap_or(0);
        CompKey { height, branches }
    }
}

/// How a rooted tree meets its root: a lone vertex, one arrow into the
/// root (extension of the subtree at its tail), or at least two arms
/// glued along the root.
#[derive(Debug)]
pub enum RootShape {
    Point,
    Extension {
        inner: SubTree,
        /// Tail of the arrow into the root, in ambient indices.
        tail: usize,
        /// The arrow into the root, in ambient indices.
        arrow: usize,
    },
    Gluing {
        /// One arm per arrow into the root, each containing the root,
        /// in child vertex order.
        arms: Vec<SubTree>,
    },
}

/// A rooted subtree together with its embedding into the ambient tree.
#[derive(Debug, Clone)]
pub struct SubTree {
    pub tree: RootedTree,
    /// Sub vertex index to ambient vertex index.
    pub vmap: Vec<usize>,
    /// Sub arrow index to ambient arrow index.
    pub amap: Vec<usize>,
}

impl SubTree {
    pub fn embedding(&self) -> QuiverMap {
        QuiverMap {
            vmap: self.vmap.clone(),
            amap: self.amap.clone(),
        }
    }

    pub fn as_over(&self) -> OverQuiver {
        OverQuiver {
            tree: self.tree.clone(),
            map: self.embedding(),
        }
    }
}

/// Canonical comparison key for rooted trees; see
/// [`RootedTree::complexity_key`]. Derived ordering compares `height`
/// first, then `branches` lexicographically, which pads the shorter
/// branch list with empty entries since any key exceeds none at all.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CompKey {
    height: usize,
    branches: Vec<CompKey>,
}

/// A morphism of quivers given by vertex and arrow index maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuiverMap {
    pub vmap: Vec<usize>,
    pub amap: Vec<usize>,
}

impl QuiverMap {
    pub fn identity(q: &Quiver) -> QuiverMap {
        QuiverMap {
            vmap: (0..q.n_vertices()).collect(),
            amap: (0..q.n_arrows()).collect(),
        }
    }

    /// Whether this is a valid morphism `from -> to` (indices in range,
    /// arrow endpoints preserved).
    pub fn check(&self, from: &Quiver, to: &Quiver) -> bool {
        self.vmap.len() == from.n_vertices()
            && self.amap.len() == from.n_arrows()
            && self.vmap.iter().all(|&v| v < to.n_vertices())
            && self.amap.iter().all(|&a| a < to.n_arrows())
            && (0..from.n_arrows()).all(|a| {
                let src = from.arrow(a);
                let img = to.arrow(self.amap[a]);
                img.tail == self.vmap[src.tail] && img.head == self.vmap[src.head]
            })
    }

    /// `self` followed by `after`.
    pub fn then(&self, after: &QuiverMap) -> QuiverMap {
        QuiverMap {
            vmap: self.vmap.iter().map(|&v| after.vmap[v]).collect(),
            amap: self.amap.iter().map(|&a| after.amap[a]).collect(),
        }
    }
}

/// A rooted tree equipped with a morphism to a base quiver.
#[derive(Debug, Clone)]
pub struct OverQuiver {
    pub tree: RootedTree,
    pub map: QuiverMap,
}

impl OverQuiver {
    pub fn identity(tree: &RootedTree) -> OverQuiver {
        OverQuiver {
            tree: tree.clone(),
            map: QuiverMap::identity(tree.quiver()),
        }
    }

    pub fn is_over(&self, base: &Quiver) -> bool {
        self.map.check(self.tree.quiver(), base)
    }
}

/// All morphisms `f` from `lam.tree` to `gam.tree` commuting with the
/// maps to `base`, in a deterministic order.
///
/// Vertices of the source are assigned root first; a non-root vertex is
/// forced once its parent is chosen, up to the choice among parallel
/// arrows of the target lying over the same base arrow.
pub fn over_morphisms(lam: &OverQuiver, gam: &OverQuiver, base: &Quiver) -> Vec<QuiverMap> {
    assert!(
        lam.is_over(base) && gam.is_over(base),
        "over_morphisms requires both quivers to map to the given base"
    );
    let lt = &lam.tree;
    let gt = &gam.tree;
    let mut order = lt.topo_leaves_first();
    order.reverse();
    let mut vmap = vec![usize::MAX; lt.n_vertices()];
    let mut amap = vec![usize::MAX; lt.quiver().n_arrows()];
    let mut found = Vec::new();
    assign(
        lam, gam, gt, &order, 0, &mut vmap, &mut amap, &mut found,
    );
    return found;

    #[allow(clippy::too_many_arguments)]
    fn assign(
        lam: &OverQuiver,
        gam: &OverQuiver,
        gt: &RootedTree,
        order: &[usize],
        pos: usize,
        vmap: &mut Vec<usize>,
        amap: &mut Vec<usize>,
        found: &mut Vec<QuiverMap>,
    ) {
        if pos == order.len() {
            found.push(QuiverMap {
                vmap: vmap.clone(),
                amap: amap.clone(),
            });
            return;
        }
        let u = order[pos];
        match lam.tree.out_arrow(u) {
            None => {
                for w in 0..gt.n_vertices() {
                    if gam.map.vmap[w] == lam.map.vmap[u] {
                        vmap[u] = w;
                        assign(lam, gam, gt, order, pos + 1, vmap, amap, found);
                        vmap[u] = usize::MAX;
                    }
                }
            }
            Some(b) => {
                let parent = lam.tree.parent(u).unwrap();
                let fparent = vmap[parent];
                debug_assert_ne!(fparent, usize::MAX, "parents precede children");
                for &(c, a) in gt.children(fparent) {
                    if gam.map.amap[a] == lam.map.amap[b] {
                        vmap[u] = c;
                        amap[b] = a;
                        assign(lam, gam, gt, order, pos + 1, vmap, amap, found);
                        vmap[u] = usize::MAX;
                        amap[b] = usize::MAX;
                    }
                }
            }
        }
    }
}

/// Inclusion order on vertex sets of subquivers.
pub fn inclusion_poset(sets: &[BitSet]) -> Poset {
    Poset::new(sets.len(), |i, j| sets[i].is_subset(&sets[j]))
        .expect("set inclusion is a partial order")
}

/// Stock quivers used by the command line tool and throughout the tests.
pub mod families {
    use super::{Quiver, RootedTree};

    /// `n` sources `u1..un`, each with one arrow `ai` to the sink `s`.
    pub fn subspace(n: usize) -> RootedTree {
        let mut q = Quiver::new(format!("subspace-{n}"));
        for i in 1..=n {
            q.add_vertex(&format!("u{i}")).unwrap();
        }
        q.add_vertex("s").unwrap();
        for i in 1..=n {
            q.add_arrow(&format!("a{i}"), &format!("u{i}"), "s").unwrap();
        }
        RootedTree::new(q).unwrap()
    }

    /// Path `x1 -> x2 -> ... -> xn` with sink `xn`; `n >= 1`.
    pub fn chain(n: usize) -> RootedTree {
        assert!(n >= 1, "a chain needs at least one vertex");
        let mut q = Quiver::new(format!("chain-{n}"));
        for i in 1..=n {
            q.add_vertex(&format!("x{i}")).unwrap();
        }
        for i in 1..n {
            q.add_arrow(&format!("a{i}"), &format!("x{i}"), &format!("x{}", i + 1))
                .unwrap();
        }
        RootedTree::new(q).unwrap()
    }

    /// `n` sources `u1..un` into a middle vertex `t`, then one arrow
    /// `b: t -> s`: the one point extension of `subspace(n)`.
    pub fn ext_subspace(n: usize) -> RootedTree {
        let mut q = Quiver::new(format!("ext-subspace-{n}"));
        for i in 1..=n {
            q.add_vertex(&format!("u{i}")).unwrap();
        }
        q.add_vertex("t").unwrap();
        q.add_vertex("s").unwrap();
        for i in 1..=n {
            q.add_arrow(&format!("a{i}"), &format!("u{i}"), "t").unwrap();
        }
        q.add_arrow("b", "t", "s").unwrap();
        RootedTree::new(q).unwrap()
    }

    /// Looks up a family by its command line name.
    pub fn by_name(name: &str, n: usize) -> Option<RootedTree> {
        match name {
            "subspace" => Some(subspace(n)),
            "chain" if n >= 1 => Some(chain(n)),
            "ext-subspace" => Some(ext_subspace(n)),
            _ => None,
        }
    }
}

/// A uniformly random rooted tree on `n` vertices `v0..v{n-1}` with root
/// `v0`: each later vertex attaches below an earlier one.
pub fn random_rooted_tree(rng: &mut impl Rng, n: usize) -> RootedTree {
    assert!(n >= 1);
    let mut q = Quiver::new(format!("random-{n}"));
    for i in 0..n {
        q.add_vertex(&format!("v{i}")).unwrap();
    }
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        q.add_arrow(&format!("e{i}"), &format!("v{i}"), &format!("v{parent}"))
            .unwrap();
    }
    RootedTree::new(q).unwrap()
}

/// One rooted tree per isomorphism class with exactly `n` vertices, in
/// ascending complexity order. Counts over n = 1, 2, .. follow the rooted
/// tree series 1, 1, 2, 4, 9, 20, 48; factorial enumeration keeps this
/// practical for n up to about 9.
pub fn all_rooted_trees(n: usize) -> Vec<RootedTree> {
    assert!(n >= 1);
    // Every class admits a root-first labeling, so attaching vertex i to
    // some parent among 0..i covers all of them; equal complexity keys
    // identify the isomorphic duplicates.
    fn walk(i: usize, parents: &mut [usize], out: &mut BTreeMap<CompKey, RootedTree>) {
        let n = parents.len();
        if i == n {
            let mut q = Quiver::new(format!("tree-{n}"));
            for v in 0..n {
                q.add_vertex(&format!("v{v}")).unwrap();
            }
            for v in 1..n {
                q.add_arrow(&format!("e{v}"), &format!("v{v}"), &format!("v{}", parents[v]))
                    .unwrap();
            }
            let t = RootedTree::new(q).unwrap();
            out.entry(t.complexity_key()).or_insert(t);
            return;
        }
        for p in 0..i {
            parents[i] = p;
            walk(i + 1, parents, out);
        }
    }
    let mut out = BTreeMap::new();
    walk(1, &mut vec![0; n], &mut out);
    out.into_values().collect()
}

/// A random tree mapping to `base`, built root first: the new root lies
/// over an arbitrary base vertex, and every later vertex is spawned over
/// a child of its parent's image, so the result is over `base` by
/// construction. `max_fanout` bounds parallel copies of one base arrow;
/// `max_size` caps the vertex count.
pub fn random_over_tree(
    rng: &mut impl Rng,
    base: &RootedTree,
    max_fanout: usize,
    max_size: usize,
) -> OverQuiver {
    let at = rng.gen_range(0..base.n_vertices());
    random_over_tree_at(rng, base, at, max_fanout, max_size)
}

/// Like [`random_over_tree`], but with the new root over the given base
/// vertex. `random_over_tree_at(rng, base, base.root(), ..)` yields a
/// root preserving map.
pub fn random_over_tree_at(
    rng: &mut impl Rng,
    base: &RootedTree,
    root_over: usize,
    max_fanout: usize,
    max_size: usize,
) -> OverQuiver {
    assert!(max_size >= 1);
    let mut q = Quiver::new(format!("over-{}", base.quiver().name()));
    let mut vmap = Vec::new();
    let mut amap = Vec::new();
    q.add_vertex("w0").unwrap();
    vmap.push(root_over);
    let mut frontier = vec![0usize];
    while let Some(v) = frontier.pop() {
        for &(bc, ba) in base.children(vmap[v]) {
            let fanout = rng.gen_range(0..=max_fanout);
            for _ in 0..fanout {
                if vmap.len() >= max_size {
                    break;
                }
                let i = vmap.len();
                q.add_vertex(&format!("w{i}")).unwrap();
                q.add_arrow(&format!("f{i}"), &format!("w{i}"), &format!("w{v}"))
                    .unwrap();
                vmap.push(bc);
                amap.push(ba);
                frontier.push(i);
            }
        }
    }
    let over = OverQuiver {
        tree: RootedTree::new(q).unwrap(),
        map: QuiverMap { vmap, amap },
    };
    debug_assert!(over.is_over(base.quiver()));
    over
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subspace_structure() {
        let t = families::subspace(3);
        let q = t.quiver();
        assert_eq!(q.n_vertices(), 4);
        assert_eq!(q.n_arrows(), 3);
        assert_eq!(t.vertex_name(t.root()), "s");
        assert_eq!(t.children(t.root()).len(), 3);
        assert_eq!(t.height(), 1);
        let u2 = q.vertex_index("u2").unwrap();
        assert_eq!(t.parent(u2), Some(t.root()));
        assert_eq!(t.depth(u2), 1);
        assert_eq!(q.arrows_into(t.root()).len(), 3);
        assert_eq!(t.path_to_root(u2), vec![q.arrow_index("a2").unwrap()]);
    }

    #[test]
    fn validation_errors() {
        let two_sinks = Quiver::build("q", &["a", "b", "c"], &[("e", "a", "b")]).unwrap();
        assert_eq!(
            RootedTree::new(two_sinks).unwrap_err(),
            QuiverError::TwoSinks("b".into(), "c".into())
        );

        let cycle = Quiver::build("q", &["x", "y"], &[("a", "x", "y"), ("b", "y", "x")]).unwrap();
        assert_eq!(RootedTree::new(cycle).unwrap_err(), QuiverError::NoSink);

        let fork =
            Quiver::build("q", &["x", "y", "z"], &[("a", "x", "y"), ("b", "x", "z")]).unwrap();
        assert_eq!(
            RootedTree::new(fork).unwrap_err(),
            QuiverError::MultipleOutgoing {
                vertex: "x".into(),
                count: 2
            }
        );

        // A sink plus a 2-cycle: unique sink, but the cycle never reaches it.
        let stranded = Quiver::build(
            "q",
            &["s", "x", "y"],
            &[("a", "x", "y"), ("b", "y", "x")],
        )
        .unwrap();
        assert_eq!(
            RootedTree::new(stranded).unwrap_err(),
            QuiverError::Disconnected("x".into())
        );

        assert_eq!(
            RootedTree::new(Quiver::new("q")).unwrap_err(),
            QuiverError::Empty
        );

        let mut dup = Quiver::new("q");
        dup.add_vertex("v").unwrap();
        assert_eq!(
            dup.add_vertex("v").unwrap_err(),
            QuiverError::DuplicateVertex("v".into())
        );
        assert_eq!(
            dup.add_arrow("a", "v", "w").unwrap_err(),
            QuiverError::UnknownVertex {
                arrow: "a".into(),
                vertex: "w".into()
            }
        );
    }

    #[test]
    fn root_decomposition() {
        let point = families::chain(1);
        assert!(matches!(point.decompose_root(), RootShape::Point));

        let two = families::chain(2);
        match two.decompose_root() {
            RootShape::Extension { inner, tail, arrow } => {
                assert_eq!(inner.tree.n_vertices(), 1);
                assert_eq!(two.vertex_name(tail), "x1");
                assert_eq!(two.quiver().arrow(arrow).name, "a1");
            }
            other => panic!("expected extension, got {other:?}"),
        }

        let sub3 = families::subspace(3);
        match sub3.decompose_root() {
            RootShape::Gluing { arms } => {
                assert_eq!(arms.len(), 3);
                for (i, arm) in arms.iter().enumerate() {
                    assert_eq!(arm.tree.n_vertices(), 2);
                    assert_eq!(arm.tree.vertex_name(arm.tree.root()), "s");
                    assert_eq!(
                        arm.tree.quiver().vertex_names()[0],
                        format!("u{}", i + 1)
                    );
                }
            }
            other => panic!("expected gluing, got {other:?}"),
        }

        // The one point extension peels off to exactly the subspace tree.
        let ext = families::ext_subspace(3);
        match ext.decompose_root() {
            RootShape::Extension { inner, tail, .. } => {
                assert_eq!(ext.vertex_name(tail), "t");
                assert_eq!(
                    inner.tree.complexity_key(),
                    families::subspace(3).complexity_key()
                );
            }
            other => panic!("expected extension, got {other:?}"),
        }
    }

    #[test]
    fn subquiver_to_keeps_names() {
        let ext = families::ext_subspace(3);
        let t = ext.quiver().vertex_index("t").unwrap();
        let sub = ext.subquiver_to(t);
        assert_eq!(sub.tree.n_vertices(), 4);
        assert_eq!(sub.tree.vertex_name(sub.tree.root()), "t");
        for (i, &amb) in sub.vmap.iter().enumerate() {
            assert_eq!(sub.tree.vertex_name(i), ext.vertex_name(amb));
        }
        assert!(sub.embedding().check(sub.tree.quiver(), ext.quiver()));
    }

    // Independent count: filter all vertex subsets for connectivity in
    // the underlying undirected tree.
    fn connected_oracle(t: &RootedTree) -> Vec<BitSet> {
        let n = t.n_vertices();
        assert!(n <= 16);
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            let mut set = BitSet::new(n);
            for v in 0..n {
                set.set(v, mask >> v & 1 == 1);
            }
            let start = set.iter_ones().next().unwrap();
            let mut seen = BitSet::new(n);
            seen.set(start, true);
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                let mut step = |w: usize| {
                    if set.get(w) && !seen.get(w) {
                        seen.set(w, true);
                        stack.push(w);
                    }
                };
                if let Some(p) = t.parent(v) {
                    step(p);
                }
                for &(c, _) in t.children(v) {
                    step(c);
                }
            }
            if seen == set {
                out.push(set);
            }
        }
        out.sort_unstable_by_key(|s| (s.count(), s.clone()));
        out
    }

    #[test]
    fn connected_subquiver_counts() {
        let sub3 = families::subspace(3);
        let subs = sub3.connected_subquivers(DEFAULT_SUBQUIVER_GUARD).unwrap();
        assert_eq!(subs.len(), 11);
        assert_eq!(subs, connected_oracle(&sub3));

        // Containing the sink: any set of arms; otherwise a lone source.
        for n in 1..=5 {
            let t = families::subspace(n);
            let subs = t.connected_subquivers(DEFAULT_SUBQUIVER_GUARD).unwrap();
            assert_eq!(subs.len(), (1 << n) + n);
        }

        let chain4 = families::chain(4);
        let subs = chain4.connected_subquivers(DEFAULT_SUBQUIVER_GUARD).unwrap();
        assert_eq!(subs.len(), 10);
        assert_eq!(subs, connected_oracle(&chain4));

        assert_eq!(
            families::subspace(4).connected_subquivers(7).unwrap_err(),
            QuiverError::SubquiverGuard(7)
        );
    }

    #[test]
    fn inclusion_poset_shape() {
        let t = families::chain(3);
        let subs = t.connected_subquivers(DEFAULT_SUBQUIVER_GUARD).unwrap();
        let p = inclusion_poset(&subs);
        assert_eq!(p.maximal_elements(), vec![subs.len() - 1]);
        assert_eq!(p.minimal_elements().len(), 3);
    }

    #[test]
    fn complexity_orders_by_height_then_branches() {
        let keys: Vec<CompKey> = (1..=4).map(|n| families::chain(n).complexity_key()).collect();
        for w in keys.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(families::subspace(2).complexity_key() < families::subspace(3).complexity_key());
        // Height dominates branch count.
        assert!(families::subspace(5).complexity_key() < families::chain(3).complexity_key());
        assert!(
            families::subspace(3).complexity_key() < families::ext_subspace(2).complexity_key()
        );
    }

    #[test]
    fn complexity_is_isomorphism_invariant() {
        // Same tree declared in a different vertex order.
        let permuted = RootedTree::new(
            Quiver::build(
                "p",
                &["s", "w1", "w2", "w3"],
                &[("b2", "w2", "s"), ("b1", "w1", "s"), ("b3", "w3", "s")],
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            permuted.complexity_key(),
            families::subspace(3).complexity_key()
        );
        // Distinct shapes with equal vertex counts stay distinct.
        assert_ne!(
            families::chain(3).complexity_key(),
            families::subspace(2).complexity_key()
        );
        // ext_subspace(1) is the chain on 3 vertices in disguise.
        assert_eq!(
            families::ext_subspace(1).complexity_key(),
            families::chain(3).complexity_key()
        );
    }

    #[test]
    fn proper_subquivers_are_strictly_smaller() {
        for t in [families::subspace(3), families::ext_subspace(2)] {
            let key = t.complexity_key();
            let subs = t.connected_subquivers(DEFAULT_SUBQUIVER_GUARD).unwrap();
            for s in &subs {
                if s.count() == t.n_vertices() {
                    continue;
                }
                let sub = t.induced(s, "piece");
                assert!(sub.tree.complexity_key() < key);
            }
        }
    }

    #[test]
    fn over_morphisms_identity_and_doubling() {
        let a2 = families::chain(2);
        let id = OverQuiver::identity(&a2);
        let maps = over_morphisms(&id, &id, a2.quiver());
        assert_eq!(maps, vec![QuiverMap::identity(a2.quiver())]);

        // Two arms over one base arm: the single arm maps in two ways.
        let doubled = families::subspace(2);
        let fold = QuiverMap {
            vmap: vec![0, 0, 1],
            amap: vec![0, 0],
        };
        let gam = OverQuiver {
            tree: doubled.clone(),
            map: fold,
        };
        let maps = over_morphisms(&id, &gam, a2.quiver());
        assert_eq!(maps.len(), 2);
        for m in &maps {
            assert!(m.check(a2.quiver(), doubled.quiver()));
            assert_eq!(m.then(&gam.map), id.map);
        }
        // And folding back down is the unique morphism the other way.
        let back = over_morphisms(&gam, &id, a2.quiver());
        assert_eq!(back, vec![gam.map.clone()]);
    }

    #[test]
    fn random_trees_are_valid_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t1 = random_rooted_tree(&mut rng, 8);
        assert_eq!(t1.n_vertices(), 8);
        let mut rng2 = ChaCha8Rng::seed_from_u64(11);
        let t2 = random_rooted_tree(&mut rng2, 8);
        assert_eq!(t1, t2);
    }

    #[test]
    fn all_rooted_trees_matches_the_classical_counts() {
        let counts: Vec<usize> = (1..=6).map(|n| all_rooted_trees(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 20]);
        let six = all_rooted_trees(6);
        for t in &six {
            assert_eq!(t.n_vertices(), 6);
        }
        // One representative per class, returned strictly ascending.
        for w in six.windows(2) {
            assert!(w[0].complexity_key() < w[1].complexity_key());
        }
        // The stock families appear among the classes.
        for probe in [families::subspace(5), families::chain(6), families::ext_subspace(4)] {
            assert!(six.iter().any(|t| t.complexity_key() == probe.complexity_key()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn enumeration_matches_subset_oracle(seed in 0u64..1000, n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_rooted_tree(&mut rng, n);
            let subs = t.connected_subquivers(DEFAULT_SUBQUIVER_GUARD).unwrap();
            prop_assert_eq!(subs, connected_oracle(&t));
        }

        #[test]
        fn complexity_total_on_random_pairs(seed in 0u64..1000, n in 1usize..8, m in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_rooted_tree(&mut rng, n);
            let b = random_rooted_tree(&mut rng, m);
            let (ka, kb) = (a.complexity_key(), b.complexity_key());
            // Antisymmetric and total by construction; keys agree with
            // themselves after a rebuild.
            prop_assert_eq!(ka.cmp(&kb), kb.cmp(&ka).reverse());
            prop_assert_eq!(&a.complexity_key(), &ka);
        }
    }
}
