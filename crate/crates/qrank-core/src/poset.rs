//! Finite posets, lattices, order ideals, and Galois adjunctions.
//!
//! Elements are indices `0..n`. A poset stores its full down-sets and
//! up-sets as bitsets, so order tests, meets, and joins are word operations.
//! Lattices verify on construction that every pair has a unique greatest
//! lower bound and least upper bound.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Enumeration ceiling for ideal lattices.
pub const DEFAULT_IDEAL_GUARD: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PosetError {
    #[error("relation is not reflexive at {0}")]
    NotReflexive(usize),
    #[error("relation is not antisymmetric on ({0}, {1})")]
    NotAntisymmetric(usize, usize),
    #[error("relation is not transitive on ({0}, {1}, {2})")]
    NotTransitive(usize, usize, usize),
    #[error("no {1} for pair ({x}, {y})", x = .0 .0, y = .0 .1)]
    NotALattice((usize, usize), &'static str),
    #[error("ideal enumeration exceeded guard of {guard} elements")]
    SizeGuard { guard: usize },
    #[error("map is not join-preserving: breaks at pair ({0}, {1})")]
    NotJoinPreserving(usize, usize),
    #[error("map does not send bottom to bottom")]
    BottomNotPreserved,
}

/// Fixed-width bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    nbits: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(nbits: usize) -> Self {
        BitSet {
            nbits,
            words: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.nbits);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.nbits);
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union(&self, rhs: &BitSet) -> BitSet {
        debug_assert_eq!(self.nbits, rhs.nbits);
        BitSet {
            nbits: self.nbits,
            words: self
                .words
                .iter()
                .zip(&rhs.words)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub fn intersect(&self, rhs: &BitSet) -> BitSet {
        debug_assert_eq!(self.nbits, rhs.nbits);
        BitSet {
            nbits: self.nbits,
            words: self
                .words
                .iter()
                .zip(&rhs.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn is_subset(&self, rhs: &BitSet) -> bool {
        debug_assert_eq!(self.nbits, rhs.nbits);
        self.words.iter().zip(&rhs.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(move |i| self.get(*i))
    }
}

impl std::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter_ones().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Finite poset on indices `0..n`, validated at construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poset {
    n: usize,
    down: Vec<BitSet>,
    up: Vec<BitSet>,
}

impl Poset {
    pub fn new(n: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Self, PosetError> {
        let mut down = vec![BitSet::new(n); n];
        let mut up = vec![BitSet::new(n); n];
        for i in 0..n {
            for j in 0..n {
                if leq(i, j) {
                    down[j].set(i, true);
                    up[i].set(j, true);
                }
            }
        }
        for i in 0..n {
            if !down[i].get(i) {
                return Err(PosetError::NotReflexive(i));
            }
            for j in 0..n {
                if i != j && down[i].get(j) && down[j].get(i) {
                    return Err(PosetError::NotAntisymmetric(i, j));
                }
            }
        }
        for j in 0..n {
            for i in down[j].clone().iter_ones() {
                // i <= j needs down[i] within down[j].
                if !down[i].is_subset(&down[j]) {
                    let k = down[i]
                        .iter_ones()
                        .find(|k| !down[j].get(*k))
                        .expect("witness exists");
                    return Err(PosetError::NotTransitive(k, i, j));
                }
            }
        }
        Ok(Poset { n, down, up })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.down[b].get(a)
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.leq(a, b)
    }

    pub fn down_set(&self, a: usize) -> &BitSet {
        &self.down[a]
    }

    pub fn up_set(&self, a: usize) -> &BitSet {
        &self.up[a]
    }

    /// Upper covers of `a`: minimal elements strictly above it.
    pub fn covers_up(&self, a: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&b| {
                self.lt(a, b) && !(0..self.n).any(|c| self.lt(a, c) && self.lt(c, b))
            })
            .collect()
    }

    pub fn covers_down(&self, a: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&b| {
                self.lt(b, a) && !(0..self.n).any(|c| self.lt(b, c) && self.lt(c, a))
            })
            .collect()
    }

    pub fn maximal_elements(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&a| !(0..self.n).any(|b| self.lt(a, b)))
            .collect()
    }

    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&a| !(0..self.n).any(|b| self.lt(b, a)))
            .collect()
    }

    /// Maximal elements of an arbitrary subset.
    pub fn max_of(&self, set: &BitSet) -> Vec<usize> {
        set.iter_ones()
            .filter(|&a| !set.iter_ones().any(|b| self.lt(a, b)))
            .collect()
    }

    /// Downward closure of a subset.
    pub fn down_closure(&self, set: &BitSet) -> BitSet {
        let mut out = BitSet::new(self.n);
        for a in set.iter_ones() {
            out = out.union(&self.down[a]);
        }
        out
    }

    pub fn is_antichain(&self, set: &BitSet) -> bool {
        set.iter_ones()
            .all(|a| !set.iter_ones().any(|b| self.lt(a, b)))
    }

    pub fn is_ideal(&self, set: &BitSet) -> bool {
        set.iter_ones().all(|a| self.down[a].is_subset(set))
    }

    /// Dual poset with the order reversed.
    pub fn dual(&self) -> Poset {
        Poset {
            n: self.n,
            down: self.up.clone(),
            up: self.down.clone(),
        }
    }

    /// Indices in a linear extension (topological) order.
    pub fn linear_extension(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&a| (self.down[a].count(), a));
        order
    }

    pub fn chain(n: usize) -> Poset {
        Poset::new(n, |a, b| a <= b).expect("chain is a poset")
    }

    pub fn antichain(n: usize) -> Poset {
        Poset::new(n, |a, b| a == b).expect("antichain is a poset")
    }
}

/// Lattice: a poset in which meets and joins exist, tabulated and verified.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Lattice {
    poset: Poset,
    meet: Vec<u32>,
    join: Vec<u32>,
    bottom: usize,
    top: usize,
    distributive: Option<bool>,
}

/// Exhaustive distributivity checks are skipped above this size; the two
/// lattice constructors that are distributive by theorem mark themselves.
const DISTRIBUTIVITY_CHECK_LIMIT: usize = 256;

impl Lattice {
    /// Builds from a poset, verifying every pair has a unique greatest lower
    /// bound and least upper bound: m is the glb of (x, y) exactly when
    /// down(m) = down(x) meet down(y), and dually for lubs.
    pub fn from_poset(poset: Poset) -> Result<Self, PosetError> {
        let n = poset.n;
        if n == 0 {
            return Err(PosetError::NotALattice((0, 0), "bottom"));
        }
        let mut by_down: HashMap<&BitSet, usize> = HashMap::new();
        let mut by_up: HashMap<&BitSet, usize> = HashMap::new();
        for i in 0..n {
            by_down.insert(&poset.down[i], i);
            by_up.insert(&poset.up[i], i);
        }
        let mut meet = vec![0u32; n * n];
        let mut join = vec![0u32; n * n];
        for x in 0..n {
            for y in x..n {
                let lower = poset.down[x].intersect(&poset.down[y]);
                let m = *by_down
                    .get(&lower)
                    .ok_or(PosetError::NotALattice((x, y), "greatest lower bound"))?;
                let upper = poset.up[x].intersect(&poset.up[y]);
                let j = *by_up
                    .get(&upper)
                    .ok_or(PosetError::NotALattice((x, y), "least upper bound"))?;
                meet[x * n + y] = m as u32;
                meet[y * n + x] = m as u32;
                join[x * n + y] = j as u32;
                join[y * n + x] = j as u32;
            }
        }
        let bottom = (0..n)
            .find(|&a| poset.down[a].count() == 1)
            .ok_or(PosetError::NotALattice((0, 0), "bottom"))?;
        let top = (0..n)
            .find(|&a| poset.up[a].count() == 1)
            .ok_or(PosetError::NotALattice((0, 0), "top"))?;
        let mut l = Lattice {
            poset,
            meet,
            join,
            bottom,
            top,
            distributive: None,
        };
        if n <= DISTRIBUTIVITY_CHECK_LIMIT {
            l.distributive = Some(l.check_distributive());
        }
        Ok(l)
    }

    fn check_distributive(&self) -> bool {
        let n = self.poset.n;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let lhs = self.meet(x, self.join(y, z));
                    let rhs = self.join(self.meet(x, y), self.meet(x, z));
                    if lhs != rhs {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn n(&self) -> usize {
        self.poset.n
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.poset.leq(a, b)
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a * self.poset.n + b] as usize
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a * self.poset.n + b] as usize
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn atoms(&self) -> Vec<usize> {
        self.poset.covers_up(self.bottom)
    }

    pub fn coatoms(&self) -> Vec<usize> {
        self.poset.covers_down(self.top)
    }

    /// Elements with exactly one lower cover.
    pub fn join_irreducibles(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&a| self.poset.covers_down(a).len() == 1)
            .collect()
    }

    /// `Some(true)` / `Some(false)` when known; `None` above the exhaustive
    /// check limit for lattices not distributive by construction.
    pub fn distributive(&self) -> Option<bool> {
        self.distributive
    }

    pub fn join_all(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.bottom, |a, b| self.join(a, b))
    }

    pub fn meet_all(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.top, |a, b| self.meet(a, b))
    }
}

/// The lattice of order ideals of a poset, with each element's underlying
/// downward-closed subset.
#[derive(Clone, Debug)]
pub struct IdealLattice {
    pub lattice: Lattice,
    pub ideal_sets: Vec<BitSet>,
    pub base: Poset,
}

impl IdealLattice {
    /// Index of an ideal given its subset.
    pub fn index_of(&self, set: &BitSet) -> Option<usize> {
        self.ideal_sets.binary_search(set).ok().or_else(|| {
            self.ideal_sets.iter().position(|s| s == set)
        })
    }

    /// Maximal elements of the ideal at `idx`, as base-poset indices.
    pub fn max_antichain(&self, idx: usize) -> Vec<usize> {
        self.base.max_of(&self.ideal_sets[idx])
    }

    /// Index of the ideal generated by a base-poset antichain.
    pub fn ideal_generated(&self, antichain: &[usize]) -> usize {
        let mut set = BitSet::new(self.base.n());
        for &a in antichain {
            set.set(a, true);
        }
        let closure = self.base.down_closure(&set);
        self.index_of(&closure).expect("closure is an ideal")
    }

    /// Index of the principal ideal of a single base element.
    pub fn principal(&self, a: usize) -> usize {
        self.ideal_generated(&[a])
    }
}

/// Enumerates all order ideals of `p` by breadth-first closure, failing once
/// more than `guard` ideals appear. Elements are sorted by size then content,
/// which is a linear extension of inclusion.
pub fn ideals(p: &Poset, guard: usize) -> Result<IdealLattice, PosetError> {
    let n = p.n();
    let empty = BitSet::new(n);
    let mut seen: HashMap<BitSet, ()> = HashMap::new();
    seen.insert(empty.clone(), ());
    let mut frontier = vec![empty];
    while let Some(cur) = frontier.pop() {
        for a in 0..n {
            if cur.get(a) {
                continue;
            }
            // a is admissible when everything strictly below it is present.
            let mut below = p.down_set(a).clone();
            below.set(a, false);
            if !below.is_subset(&cur) {
                continue;
            }
            let mut next = cur.clone();
            next.set(a, true);
            if !seen.contains_key(&next) {
                if seen.len() >= guard {
                    return Err(PosetError::SizeGuard { guard });
                }
                seen.insert(next.clone(), ());
                frontier.push(next);
            }
        }
    }
    let mut ideal_sets: Vec<BitSet> = seen.into_keys().collect();
    ideal_sets.sort_by_key(|s| (s.count(), s.clone()));
    let poset = Poset::new(ideal_sets.len(), |a, b| {
        ideal_sets[a].is_subset(&ideal_sets[b])
    })?;
    let lattice = Lattice::from_poset(poset).map(|mut l| {
        l.distributive = Some(l.distributive.unwrap_or(true));
        l
    })?;
    Ok(IdealLattice {
        lattice,
        ideal_sets,
        base: p.clone(),
    })
}

/// A product of lattices with componentwise order. Tuple indices are mixed
/// radix over the factor sizes, with the leftmost factor most significant.
#[derive(Clone, Debug)]
pub struct ProductLattice {
    pub lattice: Lattice,
    pub sizes: Vec<usize>,
}

impl ProductLattice {
    pub fn index(&self, tuple: &[usize]) -> usize {
        assert_eq!(tuple.len(), self.sizes.len());
        let mut idx = 0;
        for (t, s) in tuple.iter().zip(&self.sizes) {
            assert!(t < s);
            idx = idx * s + t;
        }
        idx
    }

    pub fn tuple(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for (slot, s) in out.iter_mut().zip(&self.sizes).rev() {
            *slot = idx % s;
            idx /= s;
        }
        out
    }

    /// Embedding of factor `k`: the tuple with `a` in slot `k` and bottoms
    /// elsewhere.
    pub fn embed(&self, factors: &[&Lattice], k: usize, a: usize) -> usize {
        let tuple: Vec<usize> = factors
            .iter()
            .enumerate()
            .map(|(i, l)| if i == k { a } else { l.bottom() })
            .collect();
        self.index(&tuple)
    }
}

/// Componentwise product of lattices.
pub fn product(factors: &[&Lattice]) -> Result<ProductLattice, PosetError> {
    let sizes: Vec<usize> = factors.iter().map(|l| l.n()).collect();
    let total: usize = sizes.iter().product();
    let unpack = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; sizes.len()];
        for (slot, s) in out.iter_mut().zip(&sizes).rev() {
            *slot = idx % s;
            idx /= s;
        }
        out
    };
    let poset = Poset::new(total, |a, b| {
        let (ta, tb) = (unpack(a), unpack(b));
        ta.iter()
            .zip(&tb)
            .zip(factors)
            .all(|((x, y), l)| l.leq(*x, *y))
    })?;
    let mut lattice = Lattice::from_poset(poset)?;
    if lattice.distributive.is_none() && factors.iter().all(|l| l.distributive() == Some(true)) {
        lattice.distributive = Some(true);
    }
    Ok(ProductLattice { lattice, sizes })
}

/// Mobius function of a poset, as a dense signed matrix.
pub struct Mobius {
    n: usize,
    mu: Vec<i64>,
}

impl Mobius {
    pub fn get(&self, a: usize, b: usize) -> i64 {
        self.mu[a * self.n + b]
    }

    /// Zeta matrix entry: 1 when a <= b.
    pub fn zeta(p: &Poset, a: usize, b: usize) -> i64 {
        i64::from(p.leq(a, b))
    }
}

/// Computes the Mobius function by interval recursion over a linear
/// extension: mu(x, x) = 1 and sum of mu(x, z) over x <= z <= y is zero
/// for x < y.
pub fn mobius(p: &Poset) -> Mobius {
    let n = p.n();
    let mut mu = vec![0i64; n * n];
    let order = p.linear_extension();
    for x in 0..n {
        mu[x * n + x] = 1;
        for &y in &order {
            if !p.lt(x, y) {
                continue;
            }
            let mut acc = 0i64;
            for z in p.down_set(y).iter_ones() {
                if z != y && p.leq(x, z) {
                    acc += mu[x * n + z];
                }
            }
            mu[x * n + y] = -acc;
        }
    }
    Mobius { n, mu }
}

/// Checks that `lambda` (a map of element indices from `a` to `b`) preserves
/// bottom and all binary joins, and returns its upper Galois adjoint
/// rho(y) = max { x : lambda(x) <= y }. The Galois property is verified for
/// every pair before returning.
pub fn adjoint_pair(
    a: &Lattice,
    b: &Lattice,
    lambda: &[usize],
) -> Result<Vec<usize>, PosetError> {
    assert_eq!(lambda.len(), a.n(), "map length mismatch");
    if lambda[a.bottom()] != b.bottom() {
        return Err(PosetError::BottomNotPreserved);
    }
    for x in 0..a.n() {
        for y in 0..a.n() {
            if lambda[a.join(x, y)] != b.join(lambda[x], lambda[y]) {
                return Err(PosetError::NotJoinPreserving(x, y));
            }
        }
    }
    let rho: Vec<usize> = (0..b.n())
        .map(|y| a.join_all((0..a.n()).filter(|&x| b.leq(lambda[x], y))))
        .collect();
    for x in 0..a.n() {
        for (y, r) in rho.iter().enumerate() {
            assert_eq!(
                b.leq(lambda[x], y),
                a.leq(x, *r),
                "galois property failed at ({x}, {y})"
            );
        }
    }
    Ok(rho)
}

/// Searches for an order isomorphism from `p` to `q` by backtracking on
/// degree profiles. Returns the image vector when found.
pub fn find_order_isomorphism(p: &Poset, q: &Poset) -> Option<Vec<usize>> {
    if p.n() != q.n() {
        return None;
    }
    let n = p.n();
    let profile = |r: &Poset, a: usize| {
        (
            r.down_set(a).count(),
            r.up_set(a).count(),
            r.covers_up(a).len(),
            r.covers_down(a).len(),
        )
    };
    let pp: Vec<_> = (0..n).map(|a| profile(p, a)).collect();
    let qp: Vec<_> = (0..n).map(|a| profile(q, a)).collect();
    {
        let mut ps = pp.clone();
        let mut qs = qp.clone();
        ps.sort_unstable();
        qs.sort_unstable();
        if ps != qs {
            return None;
        }
    }
    // Assign elements in order of fewest candidates.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| qp.iter().filter(|t| **t == pp[a]).count());
    let mut img = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn go(
        k: usize,
        order: &[usize],
        p: &Poset,
        q: &Poset,
        pp: &[(usize, usize, usize, usize)],
        qp: &[(usize, usize, usize, usize)],
        img: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if k == order.len() {
            return true;
        }
        let a = order[k];
        for b in 0..q.n() {
            if used[b] || qp[b] != pp[a] {
                continue;
            }
            let consistent = order[..k].iter().all(|&a2| {
                p.leq(a, a2) == q.leq(b, img[a2]) && p.leq(a2, a) == q.leq(img[a2], b)
            });
            if !consistent {
                continue;
            }
            img[a] = b;
            used[b] = true;
            if go(k + 1, order, p, q, pp, qp, img, used) {
                return true;
            }
            img[a] = usize::MAX;
            used[b] = false;
        }
        false
    }
    go(0, &order, p, q, &pp, &qp, &mut img, &mut used).then_some(img)
}

/// Searches for an order-reversing bijection of `p` onto itself.
pub fn find_anti_automorphism(p: &Poset) -> Option<Vec<usize>> {
    find_order_isomorphism(p, &p.dual())
}

/// Hasse diagram in DOT format. Cover edges point from the smaller element
/// down to the larger, so minimal elements render at the top.
pub fn hasse_dot(p: &Poset, name: &str, label: impl Fn(usize) -> String) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {:?} {{", name);
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  node [shape=box];");
    for a in 0..p.n() {
        let _ = writeln!(out, "  n{} [label={:?}];", a, label(a));
    }
    for a in 0..p.n() {
        for b in p.covers_up(a) {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
    }
    out.push_str("}\n");
    out
}
