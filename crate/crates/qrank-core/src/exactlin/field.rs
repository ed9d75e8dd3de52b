use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

/// Errors from field construction and parsing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} out of range (need 2 <= p < 2^31)")]
    ModulusRange(u64),
    #[error("unrecognized field spec {0:?} (expected gf:<prime> or q)")]
    BadSpec(String),
}

/// An exact field of scalars.
///
/// Elements do not know their field; every operation takes the field value.
/// This keeps GF(p) elements a bare `u64` while still allowing the prime to
/// be picked at runtime, and lets distinct primes coexist in one process.
pub trait Field: Clone + PartialEq + Eq + fmt::Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Eq + fmt::Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    /// Canonical image of a signed integer.
    fn from_int(&self, n: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse; `None` exactly for zero.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn display(&self, a: &Self::Elem) -> String;
    /// A random element, uniform for finite fields.
    fn random_elem(&self, rng: &mut dyn rand::RngCore) -> Self::Elem;

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }

    /// Image of the fraction `num/den`; `None` when `den` maps to zero.
    fn from_ratio(&self, num: i64, den: i64) -> Option<Self::Elem> {
        self.div(&self.from_int(num), &self.from_int(den))
    }
}

/// The prime field GF(p), elements canonical in `0..p`.
///
/// The modulus is capped below 2^31 so that a product of two canonical
/// representatives fits in `u64` before reduction.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GfPrime {
    p: u64,
}

impl fmt::Debug for GfPrime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.p)
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl GfPrime {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if !(2..1u64 << 31).contains(&p) {
            return Err(FieldError::ModulusRange(p));
        }
        if !is_prime_u64(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(GfPrime { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Canonical element from an unsigned residue.
    pub fn elem(&self, v: u64) -> u64 {
        v % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            exp >>= 1;
        }
        acc
    }
}

impl Field for GfPrime {
    type Elem = u64;

    #[inline]
    fn zero(&self) -> u64 {
        0
    }

    #[inline]
    fn one(&self) -> u64 {
        1 % self.p
    }

    #[inline]
    fn from_int(&self, n: i64) -> u64 {
        let r = n.rem_euclid(self.p as i64);
        r as u64
    }

    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }

    fn inv(&self, a: &u64) -> Option<u64> {
        if *a == 0 {
            return None;
        }
        // Fermat: a^(p-2). The modulus is prime by construction.
        Some(self.pow(*a, self.p - 2))
    }

    #[inline]
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }

    fn display(&self, a: &u64) -> String {
        a.to_string()
    }

    fn random_elem(&self, rng: &mut dyn rand::RngCore) -> u64 {
        rand::Rng::gen_range(rng, 0..self.p)
    }
}

/// The field of rationals with arbitrary-precision entries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rationals;

impl fmt::Debug for Rationals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q")
    }
}

impl Rationals {
    pub fn ratio(&self, num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }

    fn one(&self) -> BigRational {
        BigRational::one()
    }

    fn from_int(&self, n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }

    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }

    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }

    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }

    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }

    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }

    fn display(&self, a: &BigRational) -> String {
        if a.denom().is_one() {
            a.numer().to_string()
        } else if a.denom().is_negative() {
            // BigRational keeps the denominator positive; guard anyway.
            format!("{}/{}", -a.numer(), -a.denom())
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }

    /// Small numerators and denominators keep downstream arithmetic cheap
    /// while still exercising non-integer entries.
    fn random_elem(&self, rng: &mut dyn rand::RngCore) -> BigRational {
        let num = rand::Rng::gen_range(rng, -4i64..=4);
        let den = rand::Rng::gen_range(rng, 1i64..=3);
        self.ratio(num, den)
    }
}

/// A session's field choice, as parsed from CLI flags or rep files.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FieldSpec {
    Gf(u64),
    Rationals,
}

impl FieldSpec {
    /// Parses `gf:<p>` or `q` (case-insensitive).
    pub fn parse(s: &str) -> Result<Self, FieldError> {
        let t = s.trim().to_ascii_lowercase();
        if t == "q" {
            return Ok(FieldSpec::Rationals);
        }
        if let Some(num) = t.strip_prefix("gf:") {
            let p: u64 = num
                .parse()
                .map_err(|_| FieldError::BadSpec(s.to_string()))?;
            GfPrime::new(p)?;
            return Ok(FieldSpec::Gf(p));
        }
        Err(FieldError::BadSpec(s.to_string()))
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Gf(p) => write!(f, "gf:{p}"),
            FieldSpec::Rationals => write!(f, "q"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_validation() {
        assert!(GfPrime::new(2).is_ok());
        assert!(GfPrime::new(32003).is_ok());
        assert_eq!(GfPrime::new(32004), Err(FieldError::NotPrime(32004)));
        assert_eq!(GfPrime::new(1), Err(FieldError::ModulusRange(1)));
        assert_eq!(
            GfPrime::new(1 << 31),
            Err(FieldError::ModulusRange(1 << 31))
        );
    }

    #[test]
    fn gf7_arithmetic_table() {
        let f = GfPrime::new(7).unwrap();
        // Exhaustive check of field axioms on all 7 residues.
        for a in 0..7u64 {
            assert_eq!(f.add(&a, &f.neg(&a)), 0);
            if a != 0 {
                let ai = f.inv(&a).unwrap();
                assert_eq!(f.mul(&a, &ai), 1);
            }
            for b in 0..7u64 {
                assert_eq!(f.add(&a, &b), (a + b) % 7);
                assert_eq!(f.mul(&a, &b), (a * b) % 7);
                assert_eq!(f.sub(&a, &b), (a + 7 - b) % 7);
            }
        }
        assert_eq!(f.inv(&0), None);
    }

    #[test]
    fn from_int_canonicalizes_negatives() {
        let f = GfPrime::new(32003).unwrap();
        assert_eq!(f.from_int(-1), 32002);
        assert_eq!(f.from_int(-32003), 0);
        assert_eq!(f.from_int(32003), 0);
        let q = Rationals;
        assert_eq!(q.from_int(-3), q.ratio(-3, 1));
    }

    #[test]
    fn rational_inverse_and_display() {
        let q = Rationals;
        let x = q.ratio(-3, 4);
        let xi = q.inv(&x).unwrap();
        assert!(q.is_zero(&q.sub(&q.mul(&x, &xi), &q.one())));
        assert_eq!(q.display(&x), "-3/4");
        assert_eq!(q.display(&q.from_int(5)), "5");
        assert_eq!(q.inv(&q.zero()), None);
    }

    #[test]
    fn field_spec_parsing() {
        assert_eq!(FieldSpec::parse("gf:32003"), Ok(FieldSpec::Gf(32003)));
        assert_eq!(FieldSpec::parse("Q"), Ok(FieldSpec::Rationals));
        assert_eq!(
            FieldSpec::parse("gf:6"),
            Err(FieldError::NotPrime(6))
        );
        assert!(FieldSpec::parse("f64").is_err());
    }
}
