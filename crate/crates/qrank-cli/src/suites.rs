//! Verification suites over one rooted tree. Each suite expands into a
//! fixed list of check cases; cases are pure functions of (shared context,
//! per-case seed), so they can run on any number of worker threads and
//! still assemble into byte-identical reports.

use std::sync::{Arc, Mutex};

use anyhow::Context as _;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qrank_core::exactlin::Matrix;
use qrank_core::quiver::{random_over_tree_at, RootedTree};
use qrank_core::rep::Rep;
use qrank_core::ring::RingElement;
use qrank_core::{
    GfPrime, LatticePoint, RankContext, Rationals, RingContext, DEFAULT_PRIME,
};

use crate::report::{digest, element_signature, summands_signature, CheckRow, Verdict};

/// Pairwise checks on lattices larger than this are skipped as
/// inconclusive rather than silently sampled.
const ZETA_CAP: usize = 128;
const SUPPORT_CAP: usize = 64;
const FINE_CAP: usize = 64;
const TENSOR_CAP: usize = 32;
const RING_RANK_CAP: usize = 64;
const ADJUNCTION_PAIR_CAP: usize = 65536;
/// At most this many per-element adjunction cases are enumerated.
const ADJUNCTION_CASE_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Rank-vector homomorphism, canonical-class ranks, idempotent
    /// orthogonality and completeness, both adjunctions.
    Lemmas,
    /// Tensor products of canonical classes follow the lattice meet.
    Tensor,
    /// Tensor powers split off the forced canonical summands.
    Splitting,
    /// Non-canonical classes are nilpotent after fine projection, and the
    /// canonical classes are linearly independent.
    #[value(name = "mainthm")]
    MainThm,
    /// Everything above, in that order.
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Tensor => "tensor",
            Suite::Splitting => "splitting",
            Suite::MainThm => "mainthm",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: u64,
    pub jobs: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub instances: usize,
    pub max_dim: usize,
}

/// Shared, thread-safe state for one verification run.
pub struct SuiteCtx {
    pub tree: Arc<RootedTree>,
    pub rank: Arc<RankContext>,
    pub ring: Arc<RingContext>,
}

impl SuiteCtx {
    pub fn new(tree: RootedTree) -> anyhow::Result<SuiteCtx> {
        let name = tree.quiver().name().to_string();
        let tree = Arc::new(tree);
        let rank = Arc::new(
            RankContext::new(tree.clone())
                .with_context(|| format!("building the lattices of quiver {name:?}"))?,
        );
        let field = GfPrime::new(DEFAULT_PRIME).expect("default prime is prime");
        let ring = Arc::new(
            RingContext::new(rank.clone(), field)
                .with_context(|| format!("building the ring tables of quiver {name:?}"))?,
        );
        Ok(SuiteCtx { tree, rank, ring })
    }
}

#[derive(Debug, Clone, Copy)]
enum CaseKind {
    RankHom,
    Zeta { vertex: usize },
    SupportOrtho,
    FineComplete,
    LatticeAdjunction { elem: usize },
    HomAdjunction,
    TensorMeet { vertex: usize },
    Splitting,
    Nilpotency,
    RingRank,
}

fn case_list(suite: Suite, ctx: &SuiteCtx, cfg: &SuiteConfig) -> Vec<CaseKind> {
    let mut cases = Vec::new();
    let nv = ctx.tree.n_vertices();
    let root = ctx.tree.root();
    match suite {
        Suite::Lemmas => {
            for _ in 0..cfg.instances {
                cases.push(CaseKind::RankHom);
            }
            for vertex in 0..nv {
                cases.push(CaseKind::Zeta { vertex });
            }
            cases.push(CaseKind::SupportOrtho);
            cases.push(CaseKind::FineComplete);
            for elem in 0..ctx.rank.size(root).min(ADJUNCTION_CASE_CAP) {
                cases.push(CaseKind::LatticeAdjunction { elem });
            }
            for _ in 0..cfg.instances {
                cases.push(CaseKind::HomAdjunction);
            }
        }
        Suite::Tensor => {
            for vertex in 0..nv {
                cases.push(CaseKind::TensorMeet { vertex });
            }
        }
        Suite::Splitting => {
            for _ in 0..cfg.instances {
                cases.push(CaseKind::Splitting);
            }
        }
        Suite::MainThm => {
            for _ in 0..cfg.instances {
                cases.push(CaseKind::Nilpotency);
            }
            cases.push(CaseKind::RingRank);
        }
        Suite::All => {
            for s in [Suite::Lemmas, Suite::Tensor, Suite::Splitting, Suite::MainThm] {
                cases.extend(case_list(s, ctx, cfg));
            }
        }
    }
    cases
}

/// Runs one suite. Case `i` always gets seed `base + i` and lands in row
/// `i`, so the report does not depend on `jobs`.
pub fn run_suite(ctx: &SuiteCtx, suite: Suite, cfg: &SuiteConfig) -> Vec<CheckRow> {
    let cases = case_list(suite, ctx, cfg);
    let jobs = cfg.jobs.max(1).min(cases.len().max(1));
    let rows: Vec<Option<CheckRow>> = if jobs == 1 {
        cases
            .iter()
            .enumerate()
            .map(|(i, kind)| Some(run_case(ctx, *kind, cfg, cfg.seed.wrapping_add(i as u64))))
            .collect()
    } else {
        let slots = Mutex::new(vec![None; cases.len()]);
        std::thread::scope(|scope| {
            for t in 0..jobs {
                let cases = &cases;
                let slots = &slots;
                scope.spawn(move || {
                    for i in (t..cases.len()).step_by(jobs) {
                        let row = run_case(ctx, cases[i], cfg, cfg.seed.wrapping_add(i as u64));
                        slots.lock().unwrap()[i] = Some(row);
                    }
                });
            }
        });
        slots.into_inner().unwrap()
    };
    rows.into_iter().map(|r| r.expect("every case ran")).collect()
}

fn run_case(ctx: &SuiteCtx, kind: CaseKind, cfg: &SuiteConfig, seed: u64) -> CheckRow {
    match kind {
        CaseKind::RankHom => rank_hom_case(ctx, cfg, seed),
        CaseKind::Zeta { vertex } => zeta_case(ctx, vertex, seed),
        CaseKind::SupportOrtho => support_ortho_case(ctx, seed),
        CaseKind::FineComplete => fine_complete_case(ctx, seed),
        CaseKind::LatticeAdjunction { elem } => lattice_adjunction_case(ctx, elem, seed),
        CaseKind::HomAdjunction => hom_adjunction_case(ctx, cfg, seed),
        CaseKind::TensorMeet { vertex } => tensor_meet_case(ctx, vertex, seed),
        CaseKind::Splitting => splitting_case(ctx, cfg, seed),
        CaseKind::Nilpotency => nilpotency_case(ctx, cfg, seed),
        CaseKind::RingRank => ring_rank_case(ctx, seed),
    }
}

fn row(
    claim: &str,
    instance: String,
    parameters: serde_json::Value,
    seed: u64,
    verdict: Verdict,
    evidence: &str,
) -> CheckRow {
    CheckRow {
        claim: claim.to_string(),
        instance,
        parameters,
        seed,
        verdict,
        certificate_digest: digest(evidence),
    }
}

fn skip(claim: &str, instance: String, seed: u64, why: &str) -> CheckRow {
    row(
        claim,
        instance,
        json!({ "skipped": why }),
        seed,
        Verdict::Inconclusive,
        why,
    )
}

fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Rank vectors add over direct sums and multiply over tensor products.
fn rank_hom_case(ctx: &SuiteCtx, cfg: &SuiteConfig, seed: u64) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gf = ctx.ring.field();
    let v = Rep::random(gf, &ctx.tree, cfg.max_dim, &mut rng);
    let w = Rep::random(gf, &ctx.tree, cfg.max_dim, &mut rng);
    let rv = ctx.rank.rank_vector(&v);
    let rw = ctx.rank.rank_vector(&w);
    let rsum = ctx.rank.rank_vector(&v.dsum(&w));
    let rprod = ctx.rank.rank_vector(&v.tensor(&w));
    let ok = (0..rv.len()).all(|i| rsum[i] == rv[i] + rw[i] && rprod[i] == rv[i] * rw[i]);
    row(
        "rank-dsum-tensor",
        format!("dims {:?} and {:?}", v.dims(), w.dims()),
        json!({ "max-dim": cfg.max_dim }),
        seed,
        verdict_of(ok),
        &format!("{rv:?}\n{rw:?}\n{rsum:?}\n{rprod:?}"),
    )
}

/// The rank of a canonical class at a lattice point is the order
/// relation: `rank_m(X_n) = 1` iff `m <= n`, else `0`.
fn zeta_case(ctx: &SuiteCtx, vertex: usize, seed: u64) -> CheckRow {
    let claim = "zeta-canonical";
    let pts = ctx.rank.points_at(vertex);
    let instance = format!(
        "vertex {} ({} elements)",
        ctx.tree.vertex_name(vertex),
        pts.len()
    );
    if pts.len() > ZETA_CAP {
        return skip(claim, instance, seed, "lattice above the pairwise-check cap");
    }
    let gf = ctx.ring.field();
    let mut ok = true;
    let mut bits = String::new();
    for &n in &pts {
        let x = ctx.rank.char_rep(gf, n);
        for &m in &pts {
            let r = ctx.rank.rank_m(&x, m);
            if r != usize::from(ctx.rank.leq(m, n)) {
                ok = false;
            }
            bits.push(if r > 0 { '1' } else { '0' });
        }
        bits.push('\n');
    }
    row(claim, instance, json!({}), seed, verdict_of(ok), &bits)
}

/// Support idempotents are pairwise orthogonal and sum, over the
/// subquivers below a fixed one, to that subquiver's identity class.
fn support_ortho_case(ctx: &SuiteCtx, seed: u64) -> CheckRow {
    let claim = "support-orthogonality";
    let n = ctx.ring.subquivers().len();
    let instance = format!("{n} connected subquivers");
    if n > SUPPORT_CAP {
        return skip(claim, instance, seed, "subquiver count above the pairwise-check cap");
    }
    let es: Vec<RingElement> = (0..n).map(|s| ctx.ring.support_idempotent(s)).collect();
    let mut ok = true;
    for s in 0..n {
        for t in 0..n {
            let expect = if s == t { es[s].clone() } else { RingElement::zero() };
            match ctx.ring.mul(&es[s], &es[t]) {
                Ok(p) => {
                    if p != expect {
                        ok = false;
                    }
                }
                Err(e) => return skip(claim, instance, seed, &format!("product budget: {e}")),
            }
        }
        let mut sum = RingElement::zero();
        for t in 0..n {
            if ctx.ring.subquiver_poset().leq(t, s) {
                sum = sum.add(&es[t]);
            }
        }
        if sum != RingElement::from_label(ctx.ring.identity_label(s)) {
            ok = false;
        }
    }
    let evidence: Vec<String> = es.iter().map(|e| element_signature(&ctx.ring, e)).collect();
    row(claim, instance, json!({}), seed, verdict_of(ok), &evidence.join("\n--\n"))
}

/// Fine idempotents of the root lattice are orthogonal idempotents in the
/// root-projected ring and sum to the identity class.
fn fine_complete_case(ctx: &SuiteCtx, seed: u64) -> CheckRow {
    let claim = "fine-partition-of-unity";
    let root = ctx.tree.root();
    let n = ctx.rank.size(root);
    let instance = format!("{n} root lattice elements");
    if n > FINE_CAP {
        return skip(claim, instance, seed, "root lattice above the pairwise-check cap");
    }
    let fs: Vec<RingElement> = (0..n).map(|e| ctx.ring.fine_idempotent(e)).collect();
    let mut ok = true;
    let mut sum = RingElement::zero();
    for a in 0..n {
        sum = sum.add(&fs[a]);
        for b in 0..n {
            let expect = if a == b { fs[a].clone() } else { RingElement::zero() };
            match ctx.ring.mul_sigma(&fs[a], &fs[b]) {
                Ok(p) => {
                    if p != expect {
                        ok = false;
                    }
                }
                Err(e) => return skip(claim, instance, seed, &format!("product budget: {e}")),
            }
        }
    }
    if sum != ctx.ring.one() {
        ok = false;
    }
    let evidence: Vec<String> = fs.iter().map(|f| element_signature(&ctx.ring, f)).collect();
    row(claim, instance, json!({}), seed, verdict_of(ok), &evidence.join("\n--\n"))
}

/// The reduction adjunction at one root lattice element: a Galois
/// connection whose closure is the meet and whose lower map restricts to
/// a bijection from coatoms of the reduced lattice onto lower covers.
fn lattice_adjunction_case(ctx: &SuiteCtx, elem: usize, seed: u64) -> CheckRow {
    let claim = "lattice-adjunction";
    let root = ctx.tree.root();
    let instance = format!("element {elem} at {}", ctx.tree.vertex_name(root));
    let adj = match ctx.rank.adjunction(LatticePoint { vertex: root, elem }) {
        Ok(a) => a,
        Err(e) => return skip(claim, instance, seed, &format!("reduced lattice budget: {e}")),
    };
    let sub_root = adj.sub.tree().root();
    let sub_lat = adj.sub.lattice(sub_root);
    let base_lat = ctx.rank.lattice(root);
    let (na, nb) = (sub_lat.n(), base_lat.n());
    if na * nb > ADJUNCTION_PAIR_CAP {
        return skip(claim, instance, seed, "lattice pair above the pairwise-check cap");
    }
    let mut ok = true;
    for a in 0..na {
        for b in 0..nb {
            if base_lat.leq(adj.lower[a], b) != sub_lat.leq(a, adj.upper[b]) {
                ok = false;
            }
        }
    }
    for b in 0..nb {
        if adj.lower[adj.upper[b]] != base_lat.meet(elem, b) {
            ok = false;
        }
    }
    let mut images: Vec<usize> = sub_lat.coatoms().iter().map(|&a| adj.lower[a]).collect();
    let total = images.len();
    images.sort_unstable();
    images.dedup();
    let mut covers = base_lat.poset().covers_down(elem);
    covers.sort_unstable();
    if images != covers || total != covers.len() {
        ok = false;
    }
    row(
        claim,
        instance,
        json!({}),
        seed,
        verdict_of(ok),
        &format!("lower {:?}\nupper {:?}", adj.lower, adj.upper),
    )
}

/// Pushforward along a root-preserving map over the base is left adjoint
/// to pullback on hom spaces.
fn hom_adjunction_case(ctx: &SuiteCtx, cfg: &SuiteConfig, seed: u64) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let over = random_over_tree_at(&mut rng, &ctx.tree, ctx.tree.root(), 2, 6);
    let otree = Arc::new(over.tree.clone());
    let gf = ctx.ring.field();
    let v = Rep::random(gf, &otree, cfg.max_dim, &mut rng);
    let w = Rep::random(gf, &ctx.tree, cfg.max_dim, &mut rng);
    let lhs = v.pushforward(&ctx.tree, &over.map).hom_dim(&w);
    let rhs = v.hom_dim(&w.pullback(&otree, &over.map));
    row(
        "hom-adjunction",
        format!("over {} vertices, dims {:?}", otree.n_vertices(), v.dims()),
        json!({ "max-dim": cfg.max_dim }),
        seed,
        verdict_of(lhs == rhs),
        &format!("{:?}|{:?}|{lhs}|{rhs}", v.dims(), w.dims()),
    )
}

/// Tensor products of canonical classes at one vertex: the part supported
/// at that vertex is the class of the meet, once.
fn tensor_meet_case(ctx: &SuiteCtx, vertex: usize, seed: u64) -> CheckRow {
    let claim = "tensor-meet";
    let pts = ctx.rank.points_at(vertex);
    let instance = format!(
        "vertex {} ({} elements)",
        ctx.tree.vertex_name(vertex),
        pts.len()
    );
    if pts.len() > TENSOR_CAP {
        return skip(claim, instance, seed, "lattice above the pairwise-check cap");
    }
    let gf = ctx.ring.field();
    let mut ok = true;
    let mut evidence = String::new();
    for &m in &pts {
        let xm = ctx.rank.char_rep(gf, m);
        for &n in &pts {
            let xn = ctx.rank.char_rep(gf, n);
            let d = match ctx.ring.decompose(&xm.tensor(&xn), seed) {
                Ok(d) => d,
                Err(e) => return skip(claim, instance, seed, &format!("decomposition budget: {e}")),
            };
            let meet = ctx.ring.char_label(ctx.rank.meet(m, n));
            let home: Vec<(usize, usize)> = d
                .summands
                .iter()
                .copied()
                .filter(|&(id, _)| ctx.ring.label(id).dims[vertex] > 0)
                .collect();
            if home != vec![(meet, 1)] {
                ok = false;
            }
            evidence.push_str(&summands_signature(&ctx.ring, &d.summands));
            evidence.push('\n');
        }
    }
    row(claim, instance, json!({}), seed, verdict_of(ok), &evidence)
}

/// Tensor powers of a representation split off each forced canonical
/// class: at every maximal root element of nonzero rank r, some power
/// `l` has the class with multiplicity exactly `r^l` and a complement of
/// rank zero there.
fn splitting_case(ctx: &SuiteCtx, cfg: &SuiteConfig, seed: u64) -> CheckRow {
    let claim = "tensor-splitting";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = ctx.tree.root();
    let max_dim = cfg.max_dim.max(1);
    let mut dims: Vec<usize> = (0..ctx.tree.n_vertices())
        .map(|_| rng.gen_range(0..=max_dim))
        .collect();
    // A representation that vanishes at the root has nothing to split.
    dims[root] = rng.gen_range(1..=max_dim);
    let v = Rep::random_with_dims(ctx.ring.field(), &ctx.tree, &dims, &mut rng);
    let instance = format!("dims {dims:?}");
    let params = json!({ "l-max": cfg.l_max, "max-dim": cfg.max_dim });
    match ctx.ring.verify_splitting(&v, cfg.l_max, seed) {
        Ok(reports) => {
            let all_split = reports.iter().all(|r| r.level.is_some());
            let evidence: Vec<String> = reports
                .iter()
                .map(|r| {
                    format!(
                        "elem {} rank {} level {:?} up-to {}",
                        r.at.elem, r.rank, r.level, r.checked_up_to
                    )
                })
                .collect();
            let verdict = if all_split {
                Verdict::Pass
            } else {
                Verdict::Inconclusive
            };
            row(claim, instance, params, seed, verdict, &evidence.join("\n"))
        }
        Err(e) => skip(claim, instance, seed, &format!("splitting budget: {e}")),
    }
}

/// Indecomposable summands that share fine support with a canonical class
/// without being one die after finitely many powers in the root-projected
/// ring, once multiplied by their fine idempotent.
fn nilpotency_case(ctx: &SuiteCtx, cfg: &SuiteConfig, seed: u64) -> CheckRow {
    let claim = "nilpotency";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = Rep::random(ctx.ring.field(), &ctx.tree, cfg.max_dim, &mut rng);
    let instance = format!("dims {:?}", v.dims());
    let params = json!({ "k-max": cfg.k_max, "max-dim": cfg.max_dim });
    let d = match ctx.ring.decompose(&v, seed) {
        Ok(d) => d,
        Err(e) => return skip(claim, instance, seed, &format!("decomposition budget: {e}")),
    };
    let root = ctx.tree.root();
    let mut evidence = String::new();
    for &(id, _) in &d.summands {
        let label = ctx.ring.label(id);
        if label.dims[root] == 0 {
            continue;
        }
        let fsupp = match ctx.ring.fine_support(label.witness(), seed) {
            Ok(p) => p,
            Err(e) => return skip(claim, instance, seed, &format!("fine-support budget: {e}")),
        };
        if ctx.ring.char_label(fsupp) == id {
            // Canonical classes are idempotent after fine projection;
            // they are outside the claim.
            continue;
        }
        match ctx.ring.verify_nilpotency(label.witness(), fsupp.elem, cfg.k_max, seed) {
            Ok(r) => {
                evidence.push_str(&format!(
                    "dims {:?} elem {} vanished {:?} up-to {}\n",
                    label.dims, r.at.elem, r.vanished_at, r.checked_up_to
                ));
                if r.vanished_at.is_none() {
                    return row(claim, instance, params, seed, Verdict::Inconclusive, &evidence);
                }
            }
            Err(e) => return skip(claim, instance, seed, &format!("nilpotency budget: {e}")),
        }
    }
    if evidence.is_empty() {
        evidence.push_str("no qualifying summands\n");
    }
    row(claim, instance, params, seed, Verdict::Pass, &evidence)
}

/// Canonical classes are linearly independent: the matrix of their ranks
/// at all lattice points has full rank over the rationals.
fn ring_rank_case(ctx: &SuiteCtx, seed: u64) -> CheckRow {
    let claim = "ring-rank";
    let pts = ctx.rank.points();
    let n = pts.len();
    if n > RING_RANK_CAP {
        return skip(
            claim,
            format!("{n} lattice points"),
            seed,
            "lattice above the pairwise-check cap",
        );
    }
    let gf = ctx.ring.field();
    let mut rows_i64: Vec<Vec<i64>> = vec![vec![0; n]; n];
    for (j, &q) in pts.iter().enumerate() {
        let x = ctx.rank.char_rep(gf, q);
        for (i, &p) in pts.iter().enumerate() {
            rows_i64[i][j] = ctx.rank.rank_m(&x, p) as i64;
        }
    }
    let refs: Vec<&[i64]> = rows_i64.iter().map(|r| r.as_slice()).collect();
    let rank = Matrix::from_int_rows(Rationals, &refs).rank();
    let evidence: Vec<String> = rows_i64.iter().map(|r| format!("{r:?}")).collect();
    row(
        claim,
        format!("ring rank = {rank} on {n} lattice points"),
        json!({}),
        seed,
        verdict_of(rank == n),
        &evidence.join("\n"),
    )
}
