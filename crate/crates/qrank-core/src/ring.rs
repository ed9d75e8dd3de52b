//! The representation ring: integer combinations of isomorphism classes of
//! indecomposables, added by direct sum and multiplied by tensor product.
//!
//! Indecomposables are interned as canonical labels by a seeded
//! Krull-Schmidt engine. Every positive split is certified exactly: the
//! engine returns per-summand idempotent endomorphisms that are verified to
//! square to themselves, compose to zero pairwise, and sum to the identity.
//! Only the *absence* of a further split is randomized (confidence by
//! repetition over random endomorphisms).
//!
//! On top of the label arithmetic sit the support idempotents (one per
//! connected subquiver), the fine idempotents (one per lattice element at
//! the root), the fine support of a representation, and verifiers for the
//! tensor-power splitting principle and for nilpotency of classes that the
//! canonical ones do not account for.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exactlin::{factor, kernel, minimal_polynomial, Field, GfPrime, Matrix, Poly, Subspace};
use crate::poset::{mobius, BitSet, Mobius, Poset, PosetError};
use crate::quiver::{inclusion_poset, QuiverError, RootedTree};
use crate::rank::{LatticePoint, RankContext};
use crate::rep::{Morphism, Rep};

/// Default bound on the total dimension a single decomposition may touch.
pub const DEFAULT_DIM_GUARD: usize = 512;

/// Default number of random endomorphisms tried (after the hom basis
/// itself) before a representation is declared indecomposable.
pub const DEFAULT_SPLIT_ROUNDS: usize = 8;

/// Bound on the number of connected subquivers enumerated for the support
/// idempotents.
const SUBQUIVER_GUARD: usize = 4096;

/// Seed for the deterministic internal randomness of label interning and
/// idempotent construction.
const INTERNAL_SEED: u64 = 0x5eed_1ab7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RingError {
    #[error("total dimension {dim} exceeds the engine guard {guard}")]
    Guard { dim: usize, guard: usize },
    #[error("the decomposition worklist exceeded {limit} steps")]
    Runaway { limit: usize },
    #[error("the representation has no summand supported at the root")]
    ZeroAtRoot,
}

/// Index of an interned isomorphism class of an indecomposable.
pub type LabelId = usize;

/// An interned isomorphism class. Dimension vector and rank vector are the
/// cheap invariants that narrow candidates during lookup; the certificate
/// of equality is an explicit invertible morphism to the stored witness.
#[derive(Debug, Clone)]
pub struct Label {
    pub dims: Vec<usize>,
    pub rank_vector: Vec<usize>,
    /// Position among labels sharing both invariants.
    pub tie_break: usize,
    witness: Rep<GfPrime>,
}

impl Label {
    pub fn witness(&self) -> &Rep<GfPrime> {
        &self.witness
    }
}

#[derive(Default)]
struct LabelTable {
    labels: Vec<Label>,
    by_invariants: HashMap<(Vec<usize>, Vec<usize>), Vec<LabelId>>,
    /// Pairs with equal invariants where no isomorphism was found within
    /// the trial budget; kept separate rather than merged.
    ambiguities: Vec<(LabelId, LabelId)>,
}

/// An integer combination of indecomposable labels. No zero coefficients
/// are stored, so equality of maps is equality of ring elements.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RingElement {
    coeffs: BTreeMap<LabelId, i64>,
}

impl RingElement {
    pub fn zero() -> RingElement {
        RingElement::default()
    }

    pub fn from_label(id: LabelId) -> RingElement {
        RingElement {
            coeffs: BTreeMap::from([(id, 1)]),
        }
    }

    pub fn from_summands(summands: &[(LabelId, usize)]) -> RingElement {
        let mut coeffs = BTreeMap::new();
        for &(id, m) in summands {
            *coeffs.entry(id).or_insert(0) += m as i64;
        }
        RingElement::from_map(coeffs)
    }

    fn from_map(coeffs: BTreeMap<LabelId, i64>) -> RingElement {
        RingElement {
            coeffs: coeffs.into_iter().filter(|(_, c)| *c != 0).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, id: LabelId) -> i64 {
        self.coeffs.get(&id).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (LabelId, i64)> + '_ {
        self.coeffs.iter().map(|(id, c)| (*id, *c))
    }

    pub fn add(&self, other: &RingElement) -> RingElement {
        let mut coeffs = self.coeffs.clone();
        for (id, c) in other.iter() {
            *coeffs.entry(id).or_insert(0) += c;
        }
        RingElement::from_map(coeffs)
    }

    pub fn sub(&self, other: &RingElement) -> RingElement {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, c: i64) -> RingElement {
        RingElement::from_map(self.coeffs.iter().map(|(id, v)| (*id, v * c)).collect())
    }
}

/// Result of the decomposition engine: multiplicities per label plus one
/// idempotent endomorphism of the input per summand instance, aligned with
/// the summand order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub summands: Vec<(LabelId, usize)>,
    pub idempotents: Vec<(LabelId, Morphism<GfPrime>)>,
}

impl Decomposition {
    pub fn class(&self) -> RingElement {
        RingElement::from_summands(&self.summands)
    }

    pub fn multiplicity(&self, id: LabelId) -> usize {
        self.summands
            .iter()
            .find(|(l, _)| *l == id)
            .map_or(0, |(_, m)| *m)
    }
}

/// Outcome of the tensor-power splitting check at one maximal element of
/// the root lattice where the rank of the input is nonzero: the least
/// power whose decomposition contains the canonical class with exactly the
/// forced multiplicity while the complement has rank zero there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplittingReport {
    pub at: LatticePoint,
    pub rank: usize,
    pub level: Option<usize>,
    pub checked_up_to: usize,
}

/// Outcome of the nilpotency check: powers of (fine idempotent at `at`)
/// times the class of the input, in the root-projected ring. `vanished_at`
/// is the least vanishing power, `None` when the budget ran out without
/// one (inconclusive, not a failure). `rank_at` is the companion rank of
/// the input at `at`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotencyReport {
    pub at: LatticePoint,
    pub rank_at: usize,
    pub vanished_at: Option<usize>,
    pub checked_up_to: usize,
}

enum IsoSearch {
    Found,
    Impossible,
    Exhausted,
}

/// Searches for an invertible morphism between representations with equal
/// dimension vectors: the hom basis elements first, then random
/// combinations. When the two are isomorphic, a random combination is
/// invertible with probability about 1 - dim/p, so the budget is ample at
/// the session prime.
fn find_isomorphism(
    a: &Rep<GfPrime>,
    b: &Rep<GfPrime>,
    rounds: usize,
    rng: &mut ChaCha8Rng,
) -> IsoSearch {
    let hom = a.hom_space(b);
    if hom.is_empty() || hom.len() != b.hom_dim(a) {
        return IsoSearch::Impossible;
    }
    let field = a.field();
    for k in 0..hom.len() + rounds {
        let y = if k < hom.len() {
            hom[k].clone()
        } else {
            let coeffs: Vec<u64> = hom.iter().map(|_| field.random_elem(&mut *rng)).collect();
            Morphism::linear_combination(a, b, &hom, &coeffs)
        };
        if y.is_isomorphism(a, b) {
            return IsoSearch::Found;
        }
    }
    IsoSearch::Exhausted
}

fn poly_pow(p: &Poly, e: usize) -> Poly {
    let mut out = Poly::one(p.field());
    for _ in 0..e {
        out = out.mul(p);
    }
    out
}

/// Shared state for ring arithmetic on one rooted tree: the label table,
/// memoized label products, the connected-subquiver poset, and the Mobius
/// function of the root lattice. All caches sit behind mutexes, so one
/// context can serve verification batches running in parallel.
pub struct RingContext {
    rank: Arc<RankContext>,
    field: GfPrime,
    dim_guard: usize,
    rounds: usize,
    labels: Mutex<LabelTable>,
    pair_products: Mutex<HashMap<(LabelId, LabelId), Vec<(LabelId, usize)>>>,
    char_labels: Mutex<HashMap<LatticePoint, LabelId>>,
    identity_labels: Mutex<HashMap<usize, LabelId>>,
    subquivers: Vec<BitSet>,
    sub_poset: Poset,
    sub_mobius: Mobius,
    root_mobius: Mobius,
}

impl RingContext {
    pub fn new(rank: Arc<RankContext>, field: GfPrime) -> Result<RingContext, QuiverError> {
        Self::with_guards(rank, field, DEFAULT_DIM_GUARD, DEFAULT_SPLIT_ROUNDS)
    }

    pub fn with_guards(
        rank: Arc<RankContext>,
        field: GfPrime,
        dim_guard: usize,
        rounds: usize,
    ) -> Result<RingContext, QuiverError> {
        let subquivers = rank.tree().connected_subquivers(SUBQUIVER_GUARD)?;
        let sub_poset = inclusion_poset(&subquivers);
        let sub_mobius = mobius(&sub_poset);
        let root_mobius = mobius(rank.lattice(rank.tree().root()).poset());
        Ok(RingContext {
            rank,
            field,
            dim_guard,
            rounds,
            labels: Mutex::new(LabelTable::default()),
            pair_products: Mutex::new(HashMap::new()),
            char_labels: Mutex::new(HashMap::new()),
            identity_labels: Mutex::new(HashMap::new()),
            subquivers,
            sub_poset,
            sub_mobius,
            root_mobius,
        })
    }

    pub fn rank(&self) -> &Arc<RankContext> {
        &self.rank
    }

    pub fn field(&self) -> GfPrime {
        self.field
    }

    /// Connected subquivers as vertex sets, the index space of
    /// [`RingContext::support_idempotent`].
    pub fn subquivers(&self) -> &[BitSet] {
        &self.subquivers
    }

    pub fn subquiver_poset(&self) -> &Poset {
        &self.sub_poset
    }

    pub fn n_labels(&self) -> usize {
        self.labels.lock().unwrap().labels.len()
    }

    pub fn label(&self, id: LabelId) -> Label {
        self.labels.lock().unwrap().labels[id].clone()
    }

    /// Label pairs with equal invariants where no isomorphism was found
    /// within the trial budget. Nonempty means the label map may be finer
    /// than isomorphism; callers decide whether that is acceptable.
    pub fn ambiguities(&self) -> Vec<(LabelId, LabelId)> {
        self.labels.lock().unwrap().ambiguities.clone()
    }

    /// Splits a representation into indecomposable summands.
    ///
    /// Endomorphisms are drawn from the hom basis and then at random; each
    /// is factored through its minimal polynomial, and coprime factor
    /// powers yield kernel summands. The returned idempotents come from the
    /// polynomial Bezout identity and are re-verified exactly before the
    /// result is returned. A piece is declared indecomposable when its
    /// endomorphism space is spanned by the identity, or when the whole
    /// budget of attempts produced only single-irreducible-power minimal
    /// polynomials.
    pub fn decompose(&self, v: &Rep<GfPrime>, seed: u64) -> Result<Decomposition, RingError> {
        assert_eq!(
            v.tree(),
            self.rank.tree(),
            "the representation must live on the context tree"
        );
        assert_eq!(*v.field(), self.field, "field mismatch");
        let dim = v.total_dim();
        if dim > self.dim_guard {
            return Err(RingError::Guard {
                dim,
                guard: self.dim_guard,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut instances: Vec<(LabelId, Morphism<GfPrime>)> = Vec::new();
        let mut work: Vec<(Rep<GfPrime>, Morphism<GfPrime>, Morphism<GfPrime>)> = Vec::new();
        if dim > 0 {
            work.push((v.clone(), Morphism::identity(v), Morphism::identity(v)));
        }
        let limit = 64 * (dim + 1);
        let mut steps = 0usize;
        while let Some((w, incl, proj)) = work.pop() {
            steps += 1;
            if steps > limit {
                return Err(RingError::Runaway { limit });
            }
            let end = w.hom_space(&w);
            let mut split = None;
            if end.len() > 1 {
                for k in 0..end.len() + self.rounds {
                    let y = if k < end.len() {
                        end[k].clone()
                    } else {
                        let coeffs: Vec<u64> =
                            end.iter().map(|_| self.field.random_elem(&mut rng)).collect();
                        Morphism::linear_combination(&w, &w, &end, &coeffs)
                    };
                    if let Some(parts) = self.try_split(&w, &y, &mut rng) {
                        split = Some(parts);
                        break;
                    }
                }
            }
            match split {
                Some(parts) => {
                    for (piece, pin, pout) in parts {
                        work.push((piece, pin.then(&incl), proj.then(&pout)));
                    }
                }
                None => {
                    let id = self.intern(&w, &mut rng);
                    instances.push((id, proj.then(&incl)));
                }
            }
        }
        instances.sort_by_key(|(id, _)| *id);
        let mut summands: Vec<(LabelId, usize)> = Vec::new();
        for (id, _) in &instances {
            match summands.last_mut() {
                Some((last, m)) if last == id => *m += 1,
                _ => summands.push((*id, 1)),
            }
        }
        let dec = Decomposition {
            summands,
            idempotents: instances,
        };
        self.verify_certificates(v, &dec);
        Ok(dec)
    }

    /// One splitting attempt along the endomorphism `y`: factors the
    /// minimal polynomial and, when at least two coprime factor powers
    /// appear, carves out the corresponding kernel summands together with
    /// inclusion/retraction pairs. Returns `None` when the minimal
    /// polynomial is a power of a single irreducible.
    fn try_split(
        &self,
        w: &Rep<GfPrime>,
        y: &Morphism<GfPrime>,
        rng: &mut ChaCha8Rng,
    ) -> Option<Vec<(Rep<GfPrime>, Morphism<GfPrime>, Morphism<GfPrime>)>> {
        let blocks: Vec<&Matrix<GfPrime>> = y.blocks.iter().collect();
        let m = minimal_polynomial(&blocks);
        let facs = factor(&m, rng);
        if facs.len() < 2 {
            if let [(p, _)] = facs.as_slice() {
                // A single irreducible makes every vertex space a module
                // over the field it generates, so each dimension must be a
                // multiple of its degree; anything else is an engine bug.
                let d = p.deg().expect("irreducible factors are nonconstant");
                assert!(
                    w.dims().iter().all(|dv| dv % d == 0),
                    "dimensions must be multiples of the residue field degree"
                );
            }
            return None;
        }
        let mut parts = Vec::new();
        for (p, e) in &facs {
            let q = poly_pow(p, *e);
            let cof = m.exact_div(&q);
            let a = cof
                .inv_mod(&q)
                .expect("distinct factor powers of the minimal polynomial are coprime");
            // g = a*cof is 1 modulo q and 0 modulo the other factor powers,
            // so g(y) is the projection onto ker q(y) along the rest.
            let g = a.mul(&cof).rem(&m);
            let spaces: Vec<Subspace<GfPrime>> = (0..w.dims().len())
                .map(|v| kernel(&q.eval_matrix(y.block(v))))
                .collect();
            let piece = w.subrep(&spaces);
            let incl = Morphism {
                blocks: spaces.iter().map(|s| s.basis().transpose()).collect(),
            };
            let proj = Morphism {
                blocks: (0..w.dims().len())
                    .map(|v| {
                        let img = g.eval_matrix(y.block(v));
                        incl.block(v)
                            .solve(&img)
                            .expect("the projection image lies in the kernel summand")
                    })
                    .collect(),
            };
            assert_eq!(
                incl.then(&proj),
                Morphism::identity(&piece),
                "the retraction must restore the summand"
            );
            parts.push((piece, incl, proj));
        }
        Some(parts)
    }

    /// Exact certificate check: the per-summand endomorphisms commute with
    /// the structure maps, square to themselves, compose to zero pairwise,
    /// and sum to the identity; summand dimensions add up to the input.
    fn verify_certificates(&self, v: &Rep<GfPrime>, dec: &Decomposition) {
        let mut total = Morphism::zero(v, v);
        for (_, e) in &dec.idempotents {
            assert!(e.commutes(v, v), "certificates must be endomorphisms");
            assert_eq!(e.then(e), *e, "certificates must be idempotent");
            total = total.add(e);
        }
        for (i, (_, a)) in dec.idempotents.iter().enumerate() {
            for (_, b) in dec.idempotents.iter().skip(i + 1) {
                let z = Morphism::zero(v, v);
                assert_eq!(a.then(b), z, "distinct certificates must be orthogonal");
                assert_eq!(b.then(a), z, "distinct certificates must be orthogonal");
            }
        }
        assert_eq!(
            total,
            Morphism::identity(v),
            "certificates must sum to the identity"
        );
        let mut dims = vec![0usize; v.dims().len()];
        let table = self.labels.lock().unwrap();
        for &(id, m) in &dec.summands {
            for (x, d) in table.labels[id].dims.iter().enumerate() {
                dims[x] += m * d;
            }
        }
        assert_eq!(dims.as_slice(), v.dims(), "summand dimensions must add up");
    }

    /// Canonical label of an indecomposable: candidates are narrowed by
    /// the dimension and rank vectors, then certified by an explicit
    /// isomorphism to a stored witness. Candidates with equal invariants
    /// but no isomorphism found in the budget are recorded as ambiguous
    /// and never merged.
    fn intern(&self, w: &Rep<GfPrime>, rng: &mut ChaCha8Rng) -> LabelId {
        let dims = w.dims().to_vec();
        let rank_vector = self.rank.rank_vector(w);
        let key = (dims.clone(), rank_vector.clone());
        let mut table = self.labels.lock().unwrap();
        let candidates = table.by_invariants.get(&key).cloned().unwrap_or_default();
        let mut unresolved = Vec::new();
        for id in candidates {
            match find_isomorphism(w, &table.labels[id].witness, self.rounds, rng) {
                IsoSearch::Found => return id,
                IsoSearch::Impossible => {}
                IsoSearch::Exhausted => unresolved.push(id),
            }
        }
        let id = table.labels.len();
        let tie_break = table.by_invariants.get(&key).map_or(0, Vec::len);
        table.labels.push(Label {
            dims,
            rank_vector,
            tie_break,
            witness: w.clone(),
        });
        table.by_invariants.entry(key).or_default().push(id);
        for old in unresolved {
            table.ambiguities.push((old, id));
        }
        id
    }

    /// Label of the canonical indecomposable attached to a lattice point.
    pub fn char_label(&self, p: LatticePoint) -> LabelId {
        if let Some(id) = self.char_labels.lock().unwrap().get(&p) {
            return *id;
        }
        let rep = self.rank.char_rep(self.field, p);
        let mut rng = ChaCha8Rng::seed_from_u64(INTERNAL_SEED);
        let id = self.intern(&rep, &mut rng);
        self.char_labels.lock().unwrap().insert(p, id);
        id
    }

    /// The multiplicative unit: the class of the all-ones representation,
    /// which is the canonical class at the top of the root lattice.
    pub fn one(&self) -> RingElement {
        let root = self.rank.tree().root();
        RingElement::from_label(self.char_label(self.rank.top(root)))
    }

    /// Image of a representation in the ring: its decomposition multiset.
    pub fn class_of(&self, v: &Rep<GfPrime>, seed: u64) -> Result<RingElement, RingError> {
        Ok(self.decompose(v, seed)?.class())
    }

    /// Product of two labels: the decomposition of the tensor product of
    /// their witnesses, memoized per unordered pair (the tensor commutes
    /// up to isomorphism, which the label map identifies).
    fn label_product(&self, a: LabelId, b: LabelId) -> Result<Vec<(LabelId, usize)>, RingError> {
        let key = (a.min(b), a.max(b));
        if let Some(hit) = self.pair_products.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let (wa, wb) = {
            let table = self.labels.lock().unwrap();
            (
                table.labels[key.0].witness.clone(),
                table.labels[key.1].witness.clone(),
            )
        };
        let seed = INTERNAL_SEED ^ ((key.0 as u64) << 32) ^ key.1 as u64;
        let dec = self.decompose(&wa.tensor(&wb), seed)?;
        self.pair_products
            .lock()
            .unwrap()
            .insert(key, dec.summands.clone());
        Ok(dec.summands)
    }

    /// Tensor multiplication extended bilinearly to label combinations.
    pub fn mul(&self, a: &RingElement, b: &RingElement) -> Result<RingElement, RingError> {
        let mut out: BTreeMap<LabelId, i64> = BTreeMap::new();
        for (la, ca) in a.iter() {
            for (lb, cb) in b.iter() {
                for &(l, m) in &self.label_product(la, lb)? {
                    *out.entry(l).or_insert(0) += ca * cb * m as i64;
                }
            }
        }
        Ok(RingElement::from_map(out))
    }

    /// k-th multiplicative power, k >= 1.
    pub fn pow(&self, a: &RingElement, k: usize) -> Result<RingElement, RingError> {
        assert!(k >= 1, "powers start at one");
        let mut out = a.clone();
        for _ in 1..k {
            out = self.mul(&out, a)?;
        }
        Ok(out)
    }

    /// Projection onto the part of the ring spanned by labels whose
    /// support contains the root.
    pub fn sigma_part(&self, a: &RingElement) -> RingElement {
        let root = self.rank.tree().root();
        let table = self.labels.lock().unwrap();
        RingElement::from_map(
            a.iter()
                .filter(|(id, _)| table.labels[*id].dims[root] > 0)
                .collect(),
        )
    }

    /// Product followed by the root projection: the multiplication of the
    /// root-supported quotient ring.
    pub fn mul_sigma(&self, a: &RingElement, b: &RingElement) -> Result<RingElement, RingError> {
        Ok(self.sigma_part(&self.mul(a, b)?))
    }

    /// Linear extension of the rank vector to label combinations, indexed
    /// like [`RankContext::points`].
    pub fn rank_of_element(&self, a: &RingElement) -> Vec<i64> {
        let mut out = vec![0i64; self.rank.total_size()];
        let table = self.labels.lock().unwrap();
        for (id, c) in a.iter() {
            for (i, r) in table.labels[id].rank_vector.iter().enumerate() {
                out[i] += c * *r as i64;
            }
        }
        out
    }

    /// The representation with a one-dimensional space and identity maps
    /// on the given vertex set and zero elsewhere.
    pub fn identity_rep(&self, sub: &BitSet) -> Rep<GfPrime> {
        let tree = self.rank.tree();
        let q = tree.quiver();
        let dims: Vec<usize> = (0..q.n_vertices()).map(|v| sub.get(v) as usize).collect();
        let mats = (0..q.n_arrows())
            .map(|a| {
                let arrow = q.arrow(a);
                if sub.get(arrow.tail) && sub.get(arrow.head) {
                    Matrix::identity(self.field, 1)
                } else {
                    Matrix::zeros(self.field, dims[arrow.head], dims[arrow.tail])
                }
            })
            .collect();
        Rep::new(self.field, tree.clone(), dims, mats).unwrap()
    }

    /// Label of the identity representation on a connected subquiver,
    /// indexed into [`RingContext::subquivers`].
    pub fn identity_label(&self, s: usize) -> LabelId {
        if let Some(id) = self.identity_labels.lock().unwrap().get(&s) {
            return *id;
        }
        let rep = self.identity_rep(&self.subquivers[s]);
        let mut rng = ChaCha8Rng::seed_from_u64(INTERNAL_SEED);
        let id = self.intern(&rep, &mut rng);
        self.identity_labels.lock().unwrap().insert(s, id);
        id
    }

    /// Mobius-alternating combination of identity classes over the
    /// subquivers contained in the given one: the projector onto classes
    /// supported exactly there. Distinct ones multiply to zero.
    pub fn support_idempotent(&self, s: usize) -> RingElement {
        let mut coeffs = BTreeMap::new();
        for t in 0..self.subquivers.len() {
            if !self.sub_poset.leq(t, s) {
                continue;
            }
            let mu = self.sub_mobius.get(t, s);
            if mu != 0 {
                *coeffs.entry(self.identity_label(t)).or_insert(0) += mu;
            }
        }
        RingElement::from_map(coeffs)
    }

    /// Mobius-alternating combination of the canonical classes at the
    /// root, taken over the lattice elements below the given one: the
    /// projector onto the factor of the root-projected ring where that
    /// element is the fine support.
    pub fn fine_idempotent(&self, elem: usize) -> RingElement {
        let root = self.rank.tree().root();
        let lat = self.rank.lattice(root);
        let mut coeffs = BTreeMap::new();
        for e in 0..lat.n() {
            if !lat.leq(e, elem) {
                continue;
            }
            let mu = self.root_mobius.get(e, elem);
            if mu != 0 {
                *coeffs.entry(self.char_label(LatticePoint { vertex: root, elem: e }))
                    .or_insert(0) += mu;
            }
        }
        RingElement::from_map(coeffs)
    }

    /// Least root-lattice element whose canonical class absorbs the given
    /// representation in the root-projected ring. The absorbing set is a
    /// filter, so the minimum is reached by descending through covers from
    /// the top while absorption persists.
    pub fn fine_support(&self, v: &Rep<GfPrime>, seed: u64) -> Result<LatticePoint, RingError> {
        let base = self.sigma_part(&self.class_of(v, seed)?);
        if base.is_zero() {
            return Err(RingError::ZeroAtRoot);
        }
        let root = self.rank.tree().root();
        let lat = self.rank.lattice(root);
        let mut cur = lat.top();
        'descend: loop {
            for c in lat.poset().covers_down(cur) {
                let x = RingElement::from_label(self.char_label(LatticePoint {
                    vertex: root,
                    elem: c,
                }));
                if self.mul_sigma(&x, &base)? == base {
                    cur = c;
                    continue 'descend;
                }
            }
            return Ok(LatticePoint {
                vertex: root,
                elem: cur,
            });
        }
    }

    fn point_index(&self, p: LatticePoint) -> usize {
        (0..p.vertex).map(|x| self.rank.size(x)).sum::<usize>() + p.elem
    }

    /// For every maximal root-lattice element where the rank of `v` is
    /// nonzero: the least power `l <= l_max` such that the decomposition
    /// of the l-th tensor power contains the canonical class with
    /// multiplicity exactly rank^l while the remaining summands have rank
    /// zero there. The two conditions are equivalent by multiplicativity
    /// and both are computed.
    pub fn verify_splitting(
        &self,
        v: &Rep<GfPrime>,
        l_max: usize,
        seed: u64,
    ) -> Result<Vec<SplittingReport>, RingError> {
        let root = self.rank.tree().root();
        let lat = self.rank.lattice(root);
        let ranks: Vec<usize> = (0..lat.n())
            .map(|e| self.rank.rank_m(v, LatticePoint { vertex: root, elem: e }))
            .collect();
        let nonzero: Vec<usize> = (0..lat.n()).filter(|e| ranks[*e] > 0).collect();
        if nonzero.is_empty() {
            return Err(RingError::ZeroAtRoot);
        }
        let mut reports = Vec::new();
        for &n in nonzero
            .iter()
            .filter(|&&e| nonzero.iter().all(|&o| o == e || !lat.leq(e, o)))
        {
            let at = LatticePoint { vertex: root, elem: n };
            let target = self.char_label(at);
            let n_index = self.point_index(at);
            let mut level = None;
            let mut checked = 0;
            let mut power = v.clone();
            for l in 1..=l_max {
                if l > 1 {
                    power = power.tensor(v);
                }
                let dec = self.decompose(&power, seed ^ ((l as u64) << 8))?;
                checked = l;
                let complement: i64 = {
                    let table = self.labels.lock().unwrap();
                    dec.summands
                        .iter()
                        .filter(|(id, _)| *id != target)
                        .map(|(id, m)| *m as i64 * table.labels[*id].rank_vector[n_index] as i64)
                        .sum()
                };
                if dec.multiplicity(target) == ranks[n].pow(l as u32) && complement == 0 {
                    level = Some(l);
                    break;
                }
            }
            reports.push(SplittingReport {
                at,
                rank: ranks[n],
                level,
                checked_up_to: checked,
            });
        }
        Ok(reports)
    }

    /// Powers of (fine idempotent at `elem`) times the class of `v` in the
    /// root-projected ring, reporting the least vanishing power within the
    /// budget together with the companion rank of `v` at `elem`.
    pub fn verify_nilpotency(
        &self,
        v: &Rep<GfPrime>,
        elem: usize,
        k_max: usize,
        seed: u64,
    ) -> Result<NilpotencyReport, RingError> {
        let root = self.rank.tree().root();
        let at = LatticePoint { vertex: root, elem };
        let f = self.fine_idempotent(elem);
        let cls = self.sigma_part(&self.class_of(v, seed)?);
        let g = self.mul_sigma(&f, &cls)?;
        let mut vanished_at = None;
        let mut acc = g.clone();
        let mut checked = 0;
        for k in 1..=k_max {
            checked = k;
            if acc.is_zero() {
                vanished_at = Some(k);
                break;
            }
            if k < k_max {
                acc = self.mul_sigma(&acc, &g)?;
            }
        }
        Ok(NilpotencyReport {
            at,
            rank_at: self.rank.rank_m(v, at),
            vanished_at,
            checked_up_to: checked,
        })
    }
}

/// Total number of lattice points over all vertices: the free rank of the
/// quotient of the ring by its nilpotent classes.
pub fn ring_rank(tree: &Arc<RootedTree>) -> Result<usize, PosetError> {
    Ok(RankContext::new(tree.clone())?.total_size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::Rationals;
    use crate::quiver::families;
    use crate::DEFAULT_PRIME;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeSet, HashSet};

    fn gf() -> GfPrime {
        GfPrime::new(DEFAULT_PRIME).unwrap()
    }

    fn ctx(tree: crate::quiver::RootedTree) -> RingContext {
        let rank = Arc::new(RankContext::new(Arc::new(tree)).unwrap());
        RingContext::new(rank, gf()).unwrap()
    }

    fn root_point(r: &RingContext, elem: usize) -> LatticePoint {
        LatticePoint {
            vertex: r.rank().tree().root(),
            elem,
        }
    }

    /// Two distinct lines in the plane over the two-subspace quiver.
    fn two_lines(r: &RingContext) -> Rep<GfPrime> {
        Rep::build(
            gf(),
            r.rank().tree(),
            &[("u1", 1), ("u2", 1), ("s", 2)],
            &[("a1", &[&[1], &[0]]), ("a2", &[&[0], &[1]])],
        )
        .unwrap()
    }

    /// Three pairwise distinct lines in the plane over the three-subspace
    /// quiver: indecomposable but not a canonical class.
    fn three_lines(r: &RingContext) -> Rep<GfPrime> {
        Rep::build(
            gf(),
            r.rank().tree(),
            &[("u1", 1), ("u2", 1), ("u3", 1), ("s", 2)],
            &[
                ("a1", &[&[1], &[0]]),
                ("a2", &[&[0], &[1]]),
                ("a3", &[&[1], &[1]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_decomposes_with_multiplicity_two() {
        let r = ctx(families::subspace(2));
        let one = Rep::one(gf(), r.rank().tree());
        let v = one.dsum(&one);
        let dec = r.decompose(&v, 7).unwrap();
        assert_eq!(dec.summands.len(), 1);
        assert_eq!(dec.summands[0].1, 2);
        assert_eq!(r.label(dec.summands[0].0).dims, vec![1, 1, 1]);
        assert_eq!(dec.idempotents.len(), 2);
        // Same seed, same result, certificates included.
        assert_eq!(r.decompose(&v, 7).unwrap(), dec);
    }

    #[test]
    fn canonical_classes_are_indecomposable_and_distinct() {
        let r = ctx(families::subspace(3));
        let mut seen = HashSet::new();
        for p in r.rank().points() {
            let x = r.rank().char_rep(gf(), p);
            let dec = r.decompose(&x, 11).unwrap();
            assert_eq!(dec.summands, vec![(r.char_label(p), 1)], "{p:?}");
            assert!(seen.insert(dec.summands[0].0), "{p:?}");
        }
        assert!(r.ambiguities().is_empty());
    }

    #[test]
    fn direct_sums_decompose_into_multiset_unions() {
        let r = ctx(families::subspace(3));
        for seed in 0..8u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = Rep::random(gf(), r.rank().tree(), 2, &mut rng);
            let w = Rep::random(gf(), r.rank().tree(), 2, &mut rng);
            let dv = r.class_of(&v, seed).unwrap();
            let dw = r.class_of(&w, seed + 100).unwrap();
            let ds = r.class_of(&v.dsum(&w), seed + 200).unwrap();
            assert_eq!(ds, dv.add(&dw), "seed {seed}");
        }
    }

    #[test]
    fn decomposition_certificates_are_complete() {
        let r = ctx(families::ext_subspace(2));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = Rep::random(gf(), r.rank().tree(), 3, &mut rng);
        let dec = r.decompose(&v, 5).unwrap();
        let n: usize = dec.summands.iter().map(|(_, m)| m).sum();
        assert_eq!(dec.idempotents.len(), n);
        let mut total = Morphism::zero(&v, &v);
        for (_, e) in &dec.idempotents {
            total = total.add(e);
        }
        assert_eq!(total, Morphism::identity(&v));
        for x in 0..v.dims().len() {
            let s: usize = dec
                .summands
                .iter()
                .map(|(id, m)| m * r.label(*id).dims[x])
                .sum();
            assert_eq!(s, v.dim(x));
        }
    }

    #[test]
    fn products_of_canonical_classes_follow_the_meet() {
        let r = ctx(families::subspace(2));
        let rank = r.rank().clone();
        for x in 0..rank.tree().n_vertices() {
            for a in 0..rank.size(x) {
                for b in 0..rank.size(x) {
                    let pa = LatticePoint { vertex: x, elem: a };
                    let pb = LatticePoint { vertex: x, elem: b };
                    let t = rank.char_rep(gf(), pa).tensor(&rank.char_rep(gf(), pb));
                    let dec = r.decompose(&t, 3).unwrap();
                    let home: Vec<(LabelId, usize)> = dec
                        .summands
                        .iter()
                        .copied()
                        .filter(|(id, _)| r.label(*id).dims[x] > 0)
                        .collect();
                    assert_eq!(
                        home,
                        vec![(r.char_label(rank.meet(pa, pb)), 1)],
                        "{pa:?} {pb:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn support_idempotents_multiply_orthogonally() {
        for tree in [families::chain(3), families::subspace(2)] {
            let r = ctx(tree);
            let n = r.subquivers().len();
            assert_eq!(n, 6);
            for s in 0..n {
                for t in 0..n {
                    let prod = r
                        .mul(&r.support_idempotent(s), &r.support_idempotent(t))
                        .unwrap();
                    let want = if s == t {
                        r.support_idempotent(s)
                    } else {
                        RingElement::zero()
                    };
                    assert_eq!(prod, want, "{s} {t}");
                }
            }
            for s in 0..n {
                // The idempotents below a subquiver sum back to its
                // identity class.
                let mut sum = RingElement::zero();
                for t in 0..n {
                    if r.subquiver_poset().leq(t, s) {
                        sum = sum.add(&r.support_idempotent(t));
                    }
                }
                assert_eq!(sum, RingElement::from_label(r.identity_label(s)));
                // On a single vertex the idempotent is the simple class.
                if r.subquivers()[s].count() == 1 {
                    let v = r.subquivers()[s].iter_ones().next().unwrap();
                    let simple = r
                        .class_of(&Rep::simple(gf(), r.rank().tree(), v), 1)
                        .unwrap();
                    assert_eq!(r.support_idempotent(s), simple);
                }
            }
        }
    }

    #[test]
    fn support_idempotents_kill_classes_missing_their_subquiver() {
        let r = ctx(families::subspace(2));
        let root = r.rank().tree().root();
        let cls = r
            .class_of(&Rep::simple(gf(), r.rank().tree(), root), 1)
            .unwrap();
        let full = (0..r.subquivers().len())
            .find(|&s| r.subquivers()[s].count() == 3)
            .unwrap();
        assert!(r.mul(&r.support_idempotent(full), &cls).unwrap().is_zero());
        let single = (0..r.subquivers().len())
            .find(|&s| r.subquivers()[s].count() == 1 && r.subquivers()[s].get(root))
            .unwrap();
        assert!(!r.mul(&r.support_idempotent(single), &cls).unwrap().is_zero());
    }

    #[test]
    fn fine_idempotents_are_orthogonal_and_absorb_canonical_classes() {
        let r = ctx(families::subspace(2));
        let root = r.rank().tree().root();
        let lat = r.rank().lattice(root).clone();
        assert_eq!(lat.n(), 4);
        let fs: Vec<RingElement> = (0..lat.n()).map(|e| r.fine_idempotent(e)).collect();
        for a in 0..lat.n() {
            for b in 0..lat.n() {
                let prod = r.mul_sigma(&fs[a], &fs[b]).unwrap();
                let want = if a == b { fs[a].clone() } else { RingElement::zero() };
                assert_eq!(prod, want, "{a} {b}");
                let xb = RingElement::from_label(r.char_label(root_point(&r, b)));
                let absorbed = r.mul_sigma(&fs[a], &xb).unwrap();
                let want = if lat.leq(a, b) { fs[a].clone() } else { RingElement::zero() };
                assert_eq!(absorbed, want, "{a} {b}");
            }
        }
        // At the bottom the Mobius sum has a single term.
        let bottom = r.rank().bottom(root).elem;
        assert_eq!(
            fs[bottom],
            RingElement::from_label(r.char_label(root_point(&r, bottom)))
        );
        // All idempotents together sum to the unit, which absorbs the
        // root-projected class of any representation.
        let mut sum = RingElement::zero();
        for f in &fs {
            sum = sum.add(f);
        }
        assert_eq!(sum, r.one());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..3u64 {
            let v = Rep::random(gf(), r.rank().tree(), 2, &mut rng);
            let cls = r.sigma_part(&r.class_of(&v, seed).unwrap());
            assert_eq!(r.mul_sigma(&r.one(), &cls).unwrap(), cls, "seed {seed}");
        }
    }

    #[test]
    fn fine_idempotents_pull_back_to_the_reduced_top() {
        let r = ctx(families::subspace(2));
        let root = r.rank().tree().root();
        let lat = r.rank().lattice(root).clone();
        let mu = mobius(lat.poset());
        for elem in 0..lat.n() {
            let red = r.rank().reduced_quiver(root_point(&r, elem));
            let sub_rank = Arc::new(RankContext::new(red.tree.clone()).unwrap());
            let sub = RingContext::new(sub_rank.clone(), gf()).unwrap();
            let mut pulled = RingElement::zero();
            for e in 0..lat.n() {
                if !lat.leq(e, elem) || mu.get(e, elem) == 0 {
                    continue;
                }
                let x = r.rank().char_rep(gf(), root_point(&r, e));
                let back = x.pullback(&red.tree, &red.map);
                pulled = pulled.add(&sub.class_of(&back, 17).unwrap().scale(mu.get(e, elem)));
            }
            let top = sub_rank.top(red.tree.root()).elem;
            assert_eq!(pulled, sub.fine_idempotent(top), "{elem}");
        }
    }

    #[test]
    fn fine_support_finds_canonical_classes_joins_and_meets() {
        let r = ctx(families::subspace(3));
        for e in 0..r.rank().size(r.rank().tree().root()) {
            let x = r.rank().char_rep(gf(), root_point(&r, e));
            assert_eq!(r.fine_support(&x, 3).unwrap(), root_point(&r, e));
        }
        let s = ctx(families::subspace(2));
        let root = s.rank().tree().root();
        let lat = s.rank().lattice(root).clone();
        for a in 0..lat.n() {
            for b in 0..lat.n() {
                let xa = s.rank().char_rep(gf(), root_point(&s, a));
                let xb = s.rank().char_rep(gf(), root_point(&s, b));
                let sum = s.fine_support(&xa.dsum(&xb), 5).unwrap();
                assert_eq!(sum.elem, lat.join(a, b), "{a} {b}");
                let prod = s.fine_support(&xa.tensor(&xb), 5).unwrap();
                assert_eq!(prod.elem, lat.meet(a, b), "{a} {b}");
            }
        }
        // No summand supported at the root: no fine support.
        let stray = Rep::simple(gf(), s.rank().tree(), 0);
        assert_eq!(s.fine_support(&stray, 1), Err(RingError::ZeroAtRoot));
    }

    #[test]
    fn splitting_reports_on_plane_arrangements() {
        let r = ctx(families::subspace(2));
        let root = r.rank().tree().root();
        let lat = r.rank().lattice(root).clone();

        let one = Rep::one(gf(), r.rank().tree());
        let reports = r.verify_splitting(&one, 2, 21).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].at, r.rank().top(root));
        assert_eq!((reports[0].rank, reports[0].level), (1, Some(1)));

        // Two distinct lines: both atoms are maximal with rank one and the
        // canonical summands split off at the first power.
        let v = two_lines(&r);
        let reports = r.verify_splitting(&v, 2, 22).unwrap();
        let mut at: Vec<usize> = reports.iter().map(|rep| rep.at.elem).collect();
        at.sort_unstable();
        assert_eq!(at, lat.atoms());
        for rep in &reports {
            assert_eq!((rep.rank, rep.level), (1, Some(1)), "{:?}", rep.at);
        }

        // A root simple plus a stray leaf simple: only the bottom element
        // has nonzero rank, and the simple splits off immediately.
        let w = Rep::simple(gf(), r.rank().tree(), root).dsum(&Rep::simple(
            gf(),
            r.rank().tree(),
            0,
        ));
        let reports = r.verify_splitting(&w, 2, 23).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].at, r.rank().bottom(root));
        assert_eq!((reports[0].rank, reports[0].level), (1, Some(1)));
    }

    #[test]
    fn nilpotency_of_the_generic_triple_and_idempotent_control() {
        let r = ctx(families::subspace(3));
        let root = r.rank().tree().root();
        let top = r.rank().top(root);
        let v = three_lines(&r);
        // Indecomposable (scalar endomorphisms only), absorbed only by the
        // whole lattice, yet not the canonical top class.
        assert_eq!(v.hom_dim(&v), 1);
        assert_eq!(r.fine_support(&v, 31).unwrap(), top);
        assert_eq!(r.rank().rank_m(&v, top), 0);
        let report = r.verify_nilpotency(&v, top.elem, 4, 31).unwrap();
        assert_eq!(report.rank_at, 0);
        assert!(report.vanished_at.is_some());

        // Control: the canonical class is fixed by its own idempotent, so
        // the product stays idempotent instead of vanishing.
        let x = r.rank().char_rep(gf(), top);
        let control = r.verify_nilpotency(&x, top.elem, 3, 32).unwrap();
        assert_eq!(control.vanished_at, None);
        let f = r.fine_idempotent(top.elem);
        let g = r
            .mul_sigma(&f, &r.sigma_part(&r.class_of(&x, 33).unwrap()))
            .unwrap();
        assert_eq!(g, f);
        assert_eq!(r.mul_sigma(&g, &g).unwrap(), g);
    }

    #[test]
    fn products_match_tensor_rank_vectors() {
        let r = ctx(families::subspace(3));
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for seed in 0..4u64 {
            let v = Rep::random(gf(), r.rank().tree(), 2, &mut rng);
            let w = Rep::random(gf(), r.rank().tree(), 2, &mut rng);
            let cls = r
                .mul(
                    &r.class_of(&v, seed).unwrap(),
                    &r.class_of(&w, seed + 50).unwrap(),
                )
                .unwrap();
            let want: Vec<i64> = r
                .rank()
                .rank_vector(&v)
                .iter()
                .zip(r.rank().rank_vector(&w))
                .map(|(a, b)| (a * b) as i64)
                .collect();
            assert_eq!(r.rank_of_element(&cls), want, "seed {seed}");
        }
    }

    #[test]
    fn classes_with_zero_rank_vector_are_nilpotent() {
        let r = ctx(families::subspace(3));
        let v = three_lines(&r);
        // The canonical classes restrict to a unimodular basis of rank
        // vectors, so the matching combination has integer coefficients.
        let points = r.rank().points();
        let q = Rationals;
        let a = Matrix::from_fn(q, points.len(), points.len(), |i, j| {
            q.from_int(r.label(r.char_label(points[j])).rank_vector[i] as i64)
        });
        let rv = r.rank().rank_vector(&v);
        let b = Matrix::from_fn(q, points.len(), 1, |i, _| q.from_int(rv[i] as i64));
        let sol = a.solve(&b).unwrap();
        let mut z = r.class_of(&v, 55).unwrap();
        for (j, p) in points.iter().enumerate() {
            let c = sol.get(j, 0);
            assert!(c.is_integer(), "{p:?}");
            let c: i64 = c.to_integer().try_into().unwrap();
            z = z.sub(&RingElement::from_label(r.char_label(*p)).scale(c));
        }
        assert!(!z.is_zero());
        assert_eq!(r.rank_of_element(&z), vec![0i64; points.len()]);
        let mut acc = z.clone();
        let mut vanished = None;
        for k in 1..=4 {
            if acc.is_zero() {
                vanished = Some(k);
                break;
            }
            acc = r.mul(&acc, &z).unwrap();
        }
        assert!(vanished.is_some());
    }

    #[test]
    fn tensor_power_label_sets_stabilize() {
        let r = ctx(families::subspace(2));
        let v = two_lines(&r);
        let mut seen = BTreeSet::new();
        let mut snapshots = Vec::new();
        let mut power = v.clone();
        for i in 1..=6u64 {
            if i > 1 {
                power = power.tensor(&v);
            }
            for (id, _) in r.decompose(&power, 60 + i).unwrap().summands {
                seen.insert(id);
            }
            snapshots.push(seen.clone());
        }
        assert_eq!(snapshots[2], snapshots[5]);
    }

    #[test]
    fn ring_rank_counts_lattice_points() {
        assert_eq!(ring_rank(&Arc::new(families::chain(2))).unwrap(), 3);
        for n in 2..=4 {
            assert_eq!(
                ring_rank(&Arc::new(families::subspace(n))).unwrap(),
                n + (1 << n)
            );
        }
        assert_eq!(ring_rank(&Arc::new(families::ext_subspace(3))).unwrap(), 31);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        /// The class of any representation carries the same rank vector as
        /// the representation itself: ranks are additive over summands.
        #[test]
        fn prop_class_rank_matches_rank_vector(seed in 0u64..1000) {
            let r = ctx(families::chain(2));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = Rep::random(gf(), r.rank().tree(), 3, &mut rng);
            let cls = r.class_of(&v, seed).unwrap();
            let want: Vec<i64> = r.rank().rank_vector(&v).iter().map(|x| *x as i64).collect();
            prop_assert_eq!(r.rank_of_element(&cls), want);
        }
    }
}
