use num::{BigUint, One};
use rand::Rng;

use super::field::{Field, GfPrime};
use super::matrix::Matrix;

/// Univariate polynomial over GF(p), dense coefficients by ascending degree.
///
/// The coefficient vector never has a trailing zero, so the zero polynomial
/// is the empty vector and `deg` is the vector length minus one.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    field: GfPrime,
    coeffs: Vec<u64>,
}

impl Poly {
    pub fn new(field: GfPrime, mut coeffs: Vec<u64>) -> Self {
        for c in &mut coeffs {
            *c = field.elem(*c);
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Poly { field, coeffs }
    }

    pub fn zero(field: GfPrime) -> Self {
        Poly {
            field,
            coeffs: vec![],
        }
    }

    pub fn one(field: GfPrime) -> Self {
        Poly::new(field, vec![1])
    }

    pub fn x(field: GfPrime) -> Self {
        Poly::new(field, vec![0, 1])
    }

    pub fn field(&self) -> GfPrime {
        self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn deg(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> u64 {
        *self.coeffs.last().expect("leading coefficient of zero polynomial")
    }

    pub fn add(&self, rhs: &Poly) -> Poly {
        let f = self.field;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![0u64; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = rhs.coeffs.get(i).copied().unwrap_or(0);
            *slot = f.add(&a, &b);
        }
        Poly::new(f, out)
    }

    pub fn sub(&self, rhs: &Poly) -> Poly {
        let f = self.field;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![0u64; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = rhs.coeffs.get(i).copied().unwrap_or(0);
            *slot = f.sub(&a, &b);
        }
        Poly::new(f, out)
    }

    pub fn mul(&self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(self.field);
        }
        let f = self.field;
        let mut out = vec![0u64; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                let t = f.mul(a, b);
                out[i + j] = f.add(&out[i + j], &t);
            }
        }
        Poly::new(f, out)
    }

    pub fn scale(&self, s: u64) -> Poly {
        let f = self.field;
        Poly::new(f, self.coeffs.iter().map(|c| f.mul(c, &s)).collect())
    }

    /// Quotient and remainder; the divisor may be non-monic.
    pub fn div_rem(&self, rhs: &Poly) -> (Poly, Poly) {
        assert!(!rhs.is_zero(), "division by the zero polynomial");
        let f = self.field;
        let lead_inv = f.inv(&rhs.lead()).expect("nonzero lead");
        let dlen = rhs.coeffs.len();
        if self.coeffs.len() < dlen {
            return (Poly::zero(f), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quo = vec![0u64; self.coeffs.len() - dlen + 1];
        for k in (0..quo.len()).rev() {
            let c = f.mul(&rem[k + dlen - 1], &lead_inv);
            if c == 0 {
                continue;
            }
            quo[k] = c;
            for (j, b) in rhs.coeffs.iter().enumerate() {
                let t = f.mul(&c, b);
                rem[k + j] = f.sub(&rem[k + j], &t);
            }
        }
        (Poly::new(f, quo), Poly::new(f, rem))
    }

    pub fn rem(&self, rhs: &Poly) -> Poly {
        self.div_rem(rhs).1
    }

    pub fn exact_div(&self, rhs: &Poly) -> Poly {
        let (q, r) = self.div_rem(rhs);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, rhs: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = rhs.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Inverse of `self` modulo `m`, when the two are coprime.
    pub fn inv_mod(&self, m: &Poly) -> Option<Poly> {
        let f = self.field;
        let mut r0 = m.clone();
        let mut r1 = self.rem(m);
        let mut t0 = Poly::zero(f);
        let mut t1 = Poly::one(f);
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1);
            let t = t0.sub(&q.mul(&t1));
            r0 = r1;
            r1 = r;
            t0 = t1;
            t1 = t;
        }
        if r0.deg() != Some(0) {
            return None;
        }
        let inv = f.inv(&r0.lead()).expect("nonzero lead");
        Some(t0.scale(inv).rem(m))
    }

    pub fn monic(&self) -> Poly {
        assert!(!self.is_zero(), "monic of zero polynomial");
        let inv = self.field.inv(&self.lead()).expect("nonzero lead");
        self.scale(inv)
    }

    pub fn derivative(&self) -> Poly {
        let f = self.field;
        if self.coeffs.len() <= 1 {
            return Poly::zero(f);
        }
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| f.mul(&f.elem(i as u64), c))
            .collect();
        Poly::new(f, out)
    }

    pub fn eval(&self, x: u64) -> u64 {
        let f = self.field;
        let mut acc = 0u64;
        for c in self.coeffs.iter().rev() {
            acc = f.add(&f.mul(&acc, &x), c);
        }
        acc
    }

    /// self^exp modulo `m`, by binary exponentiation over big exponents.
    pub fn pow_mod(&self, exp: &BigUint, m: &Poly) -> Poly {
        let mut result = Poly::one(self.field);
        let mut base = self.rem(m);
        let bits = exp.bits();
        for i in 0..bits {
            if exp.bit(i) {
                result = result.mul(&base).rem(m);
            }
            if i + 1 < bits {
                base = base.mul(&base).rem(m);
            }
        }
        result
    }

    /// Evaluates the polynomial at a square matrix.
    pub fn eval_matrix(&self, m: &Matrix<GfPrime>) -> Matrix<GfPrime> {
        assert_eq!(m.rows(), m.cols(), "matrix evaluation needs a square matrix");
        let f = *m.field();
        let mut acc = Matrix::zeros(f, m.rows(), m.cols());
        for c in self.coeffs.iter().rev() {
            acc = acc.matmul(m);
            for i in 0..m.rows() {
                let v = f.add(acc.get(i, i), c);
                acc.set(i, i, v);
            }
        }
        acc
    }
}

/// p-th root of a polynomial whose only terms are at exponents divisible by
/// p; over the prime field the coefficients are their own p-th roots.
fn pth_root(f: &Poly) -> Poly {
    let p = f.field().modulus() as usize;
    let coeffs: Vec<u64> = f
        .coeffs()
        .iter()
        .step_by(p)
        .copied()
        .collect();
    Poly::new(f.field(), coeffs)
}

/// Squarefree decomposition: pairs (g, m) of monic squarefree g with the
/// multiplicities m, whose product of g^m is the monic part of f.
fn squarefree_parts(f: &Poly) -> Vec<(Poly, usize)> {
    let field = f.field();
    let p = field.modulus() as usize;
    let mut out: Vec<(Poly, usize)> = Vec::new();
    let f = f.monic();
    if f.deg() == Some(0) {
        return out;
    }
    let deriv = f.derivative();
    if deriv.is_zero() {
        // f = g(x^p) = g(x)^p over the prime field.
        for (g, m) in squarefree_parts(&pth_root(&f)) {
            merge_factor(&mut out, g, m * p);
        }
        return out;
    }
    let mut c = f.gcd(&deriv);
    let mut w = f.exact_div(&c);
    let mut i = 1usize;
    while w.deg() != Some(0) {
        let y = w.gcd(&c);
        let z = w.exact_div(&y);
        if z.deg().unwrap_or(0) > 0 {
            merge_factor(&mut out, z.monic(), i);
        }
        w = y;
        c = c.exact_div(&w);
        i += 1;
    }
    // What is left of the cofactor is the part whose multiplicities are
    // divisible by p, hence a p-th power.
    if c.deg() != Some(0) {
        for (g, m) in squarefree_parts(&pth_root(&c)) {
            merge_factor(&mut out, g, m * p);
        }
    }
    out
}

fn merge_factor(out: &mut Vec<(Poly, usize)>, g: Poly, m: usize) {
    for (h, k) in out.iter_mut() {
        if *h == g {
            *k += m;
            return;
        }
    }
    out.push((g, m));
}

/// Distinct-degree split of a monic squarefree polynomial: pairs
/// (product-of-irreducibles, shared degree).
fn distinct_degree(f: &Poly) -> Vec<(Poly, usize)> {
    let field = f.field();
    let p = BigUint::from(field.modulus());
    let mut out = Vec::new();
    let mut g = f.clone();
    let mut h = Poly::x(field);
    let mut d = 0usize;
    while g.deg().unwrap_or(0) >= 1 {
        d += 1;
        if 2 * d > g.deg().unwrap() {
            out.push((g.clone(), g.deg().unwrap()));
            break;
        }
        h = h.pow_mod(&p, &g);
        let probe = h.sub(&Poly::x(field));
        let factor = g.gcd(&probe);
        if factor.deg().unwrap_or(0) > 0 {
            out.push((factor.clone(), d));
            g = g.exact_div(&factor);
            h = h.rem(&g);
        }
    }
    out
}

/// Cantor-Zassenhaus equal-degree splitting: factors a monic squarefree
/// polynomial all of whose irreducible factors have degree d.
fn equal_degree(f: &Poly, d: usize, rng: &mut impl Rng) -> Vec<Poly> {
    let field = f.field();
    let n = f.deg().expect("nonzero");
    if n == d {
        return vec![f.monic()];
    }
    let p = field.modulus();
    loop {
        let r = Poly::new(
            field,
            (0..n).map(|_| rng.gen_range(0..p)).collect(),
        );
        if r.deg().is_none() {
            continue;
        }
        let s = if p == 2 {
            // Trace map sum r^(2^i) for i < d splits over GF(2).
            let mut acc = r.clone();
            let mut t = r.clone();
            for _ in 1..d {
                t = t.mul(&t).rem(f);
                acc = acc.add(&t);
            }
            acc
        } else {
            let exp = (BigUint::from(p).pow(d as u32) - BigUint::one()) >> 1;
            r.pow_mod(&exp, f).sub(&Poly::one(field))
        };
        let g = f.gcd(&s);
        let k = g.deg().unwrap_or(0);
        if k > 0 && k < n {
            let mut out = equal_degree(&g, d, rng);
            out.extend(equal_degree(&f.exact_div(&g), d, rng));
            return out;
        }
    }
}

/// Full factorization of a nonzero polynomial over GF(p) into monic
/// irreducibles with multiplicities, sorted by degree then coefficients.
/// The unit leading coefficient is dropped.
pub fn factor(f: &Poly, rng: &mut impl Rng) -> Vec<(Poly, usize)> {
    assert!(!f.is_zero(), "factoring the zero polynomial");
    let mut out: Vec<(Poly, usize)> = Vec::new();
    for (sqfree, mult) in squarefree_parts(f) {
        for (prod, d) in distinct_degree(&sqfree) {
            for irr in equal_degree(&prod, d, rng) {
                merge_factor(&mut out, irr, mult);
            }
        }
    }
    out.sort_by(|(a, _), (b, _)| {
        a.deg()
            .cmp(&b.deg())
            .then_with(|| a.coeffs().iter().rev().cmp(b.coeffs().iter().rev()))
    });
    out
}

/// Minimal polynomial of a block-diagonal operator given its square blocks:
/// the least-degree monic polynomial annihilating every block.
///
/// Found by flattening successive powers of the blocks into vectors and
/// detecting the first linear dependence.
pub fn minimal_polynomial(blocks: &[&Matrix<GfPrime>]) -> Poly {
    let field = blocks
        .first()
        .map(|m| *m.field())
        .unwrap_or_else(|| GfPrime::new(2).unwrap());
    for b in blocks {
        assert_eq!(b.rows(), b.cols(), "minimal polynomial needs square blocks");
    }
    let dim_total: usize = blocks.iter().map(|b| b.rows()).sum();
    if dim_total == 0 {
        return Poly::one(field);
    }
    let vec_len: usize = blocks.iter().map(|b| b.rows() * b.rows()).sum();
    let flatten = |pows: &[Matrix<GfPrime>]| -> Vec<u64> {
        let mut v = Vec::with_capacity(vec_len);
        for m in pows {
            for i in 0..m.rows() {
                v.extend_from_slice(m.row(i));
            }
        }
        v
    };

    // Reduced rows seen so far, each with the power-coordinates that built it.
    let mut reduced: Vec<(Vec<u64>, usize, Vec<u64>)> = Vec::new(); // (row, pivot, coords)
    let mut pows: Vec<Matrix<GfPrime>> = blocks
        .iter()
        .map(|b| Matrix::identity(field, b.rows()))
        .collect();
    for k in 0..=dim_total {
        let mut row = flatten(&pows);
        let mut coords = vec![0u64; k + 1];
        coords[k] = 1;
        for (r, pivot, rc) in &reduced {
            let c = row[*pivot];
            if c == 0 {
                continue;
            }
            for (i, v) in r.iter().enumerate() {
                let t = field.mul(&c, v);
                row[i] = field.sub(&row[i], &t);
            }
            for (i, v) in rc.iter().enumerate() {
                let t = field.mul(&c, v);
                coords[i] = field.sub(&coords[i], &t);
            }
        }
        match row.iter().position(|v| *v != 0) {
            None => {
                // Dependence: sum coords[i] * y^i = 0 and coords[k] != 0.
                return Poly::new(field, coords).monic();
            }
            Some(pivot) => {
                let inv = field.inv(&row[pivot]).expect("nonzero pivot");
                for v in &mut row {
                    *v = field.mul(v, &inv);
                }
                for v in &mut coords {
                    *v = field.mul(v, &inv);
                }
                reduced.push((row, pivot, coords));
            }
        }
        for (pw, b) in pows.iter_mut().zip(blocks) {
            *pw = pw.matmul(b);
        }
    }
    unreachable!("a dependence must occur by the total dimension");
}
