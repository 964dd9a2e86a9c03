use super::{big_pow, is_squarefree, legendre_u64, sqrt_mod_prime, val_int, val_p, Rational, Valuation};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Q or a quadratic field Q(sqrt d) with `d` squarefree and `d != 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldDesc {
    Rationals,
    Quadratic(i64),
}

/// How a rational prime behaves in a quadratic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

impl FieldDesc {
    pub fn quadratic(d: i64) -> Result<Self> {
        if d == 1 || !is_squarefree(d) {
            return Err(Error::InvalidPlace(format!("{d} is not a squarefree non-square")));
        }
        Ok(FieldDesc::Quadratic(d))
    }

    /// Field from a discriminant: 1 gives Q, otherwise the squarefree part.
    pub fn from_disc(disc: i64) -> Result<Self> {
        if disc == 1 {
            return Ok(FieldDesc::Rationals);
        }
        if disc == 0 {
            return Err(Error::InvalidPlace("discriminant 0".into()));
        }
        let d = squarefree_part(disc);
        let field = FieldDesc::quadratic(d)?;
        if field.disc() != disc {
            return Err(Error::InvalidPlace(format!("{disc} is not a fundamental discriminant")));
        }
        Ok(field)
    }

    pub fn degree(self) -> u32 {
        match self {
            FieldDesc::Rationals => 1,
            FieldDesc::Quadratic(_) => 2,
        }
    }

    pub fn disc(self) -> i64 {
        match self {
            FieldDesc::Rationals => 1,
            FieldDesc::Quadratic(d) if d.rem_euclid(4) == 1 => d,
            FieldDesc::Quadratic(d) => 4 * d,
        }
    }

    pub fn splitting(self, p: u64) -> Option<Splitting> {
        let FieldDesc::Quadratic(d) = self else {
            return None;
        };
        Some(splitting_of(d, p))
    }

    /// The primes of this field above `p`.
    pub fn primes_above(self, p: u64) -> Vec<PrimeIdealData> {
        let d = match self {
            FieldDesc::Rationals => return vec![PrimeIdealData::rational(p)],
            FieldDesc::Quadratic(d) => d,
        };
        match splitting_of(d, p) {
            Splitting::Inert => vec![PrimeIdealData {
                p,
                e: 1,
                f: 2,
                root: None,
            }],
            Splitting::Ramified => vec![PrimeIdealData {
                p,
                e: 2,
                f: 1,
                root: None,
            }],
            Splitting::Split if p == 2 => [1, 3]
                .iter()
                .map(|&r| PrimeIdealData {
                    p,
                    e: 1,
                    f: 1,
                    root: Some(r),
                })
                .collect(),
            Splitting::Split => {
                let r = sqrt_mod_prime(d.rem_euclid(p as i64) as u64, p).unwrap();
                let mut roots = vec![r, p - r];
                roots.sort_unstable();
                roots
                    .into_iter()
                    .map(|r| PrimeIdealData {
                        p,
                        e: 1,
                        f: 1,
                        root: Some(r),
                    })
                    .collect()
            }
        }
    }

    pub fn elem(self, a: Rational, b: Rational) -> Result<FieldElem> {
        match self {
            FieldDesc::Rationals if b.is_zero() => Ok(FieldElem::Rat(a)),
            FieldDesc::Rationals => Err(Error::FieldMismatch("irrational element of Q".into())),
            FieldDesc::Quadratic(d) => Ok(FieldElem::Quad(QuadElem::new(d, a, b))),
        }
    }
}

impl fmt::Display for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldDesc::Rationals => write!(f, "Q"),
            FieldDesc::Quadratic(d) => write!(f, "Q(sqrt({d}))"),
        }
    }
}

pub(crate) fn splitting_of(d: i64, p: u64) -> Splitting {
    if p == 2 {
        match d.rem_euclid(8) {
            1 => Splitting::Split,
            5 => Splitting::Inert,
            _ => Splitting::Ramified,
        }
    } else {
        match legendre_u64(d.rem_euclid(p as i64) as u64, p) {
            0 => Splitting::Ramified,
            1 => Splitting::Split,
            _ => Splitting::Inert,
        }
    }
}

/// Squarefree part of a nonzero integer, keeping the sign.
pub fn squarefree_part(n: i64) -> i64 {
    let mut out = n.signum();
    for (p, e) in super::factorize(n.unsigned_abs()) {
        if e % 2 == 1 {
            out *= p as i64;
        }
    }
    out
}

/// `a + b sqrt(d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadElem {
    pub d: i64,
    pub a: Rational,
    pub b: Rational,
}

impl QuadElem {
    pub fn new(d: i64, a: Rational, b: Rational) -> Self {
        QuadElem { d, a, b }
    }

    pub fn from_rational(d: i64, a: Rational) -> Self {
        QuadElem::new(d, a, Rational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn conj(&self) -> Self {
        QuadElem::new(self.d, self.a.clone(), -self.b.clone())
    }

    pub fn norm(&self) -> Rational {
        &self.a * &self.a - Rational::from_integer(BigInt::from(self.d)) * &self.b * &self.b
    }

    pub fn trace(&self) -> Rational {
        &self.a + &self.a
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        let c = self.conj();
        Some(QuadElem::new(self.d, c.a / &n, c.b / &n))
    }

    pub fn pow(&self, e: i64) -> Option<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = QuadElem::from_rational(self.d, Rational::one());
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        Some(acc)
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.b.is_zero().then_some(&self.a)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.d, other.d, "mixing elements of different quadratic fields");
    }
}

impl Add for &QuadElem {
    type Output = QuadElem;
    fn add(self, o: &QuadElem) -> QuadElem {
        self.check(o);
        QuadElem::new(self.d, &self.a + &o.a, &self.b + &o.b)
    }
}

impl Sub for &QuadElem {
    type Output = QuadElem;
    fn sub(self, o: &QuadElem) -> QuadElem {
        self.check(o);
        QuadElem::new(self.d, &self.a - &o.a, &self.b - &o.b)
    }
}

impl Mul for &QuadElem {
    type Output = QuadElem;
    fn mul(self, o: &QuadElem) -> QuadElem {
        self.check(o);
        let d = Rational::from_integer(BigInt::from(self.d));
        QuadElem::new(
            self.d,
            &self.a * &o.a + d * &self.b * &o.b,
            &self.a * &o.b + &self.b * &o.a,
        )
    }
}

impl Neg for &QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        QuadElem::new(self.d, -self.a.clone(), -self.b.clone())
    }
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = super::format_rational(&self.a);
        if self.b.is_zero() {
            return write!(f, "{a}");
        }
        let b = super::format_rational(&self.b);
        write!(f, "{a} + ({b})*sqrt({})", self.d)
    }
}

/// An element of Q or of a quadratic field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldElem {
    Rat(Rational),
    Quad(QuadElem),
}

impl FieldElem {
    pub fn one() -> Self {
        FieldElem::Rat(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElem::Rat(x) => x.is_zero(),
            FieldElem::Quad(x) => x.is_zero(),
        }
    }

    /// The rational value, if the element lies in Q.
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            FieldElem::Rat(x) => Some(x),
            FieldElem::Quad(x) => x.as_rational(),
        }
    }

    fn sqrt_param(&self) -> Option<i64> {
        match self {
            FieldElem::Rat(_) => None,
            FieldElem::Quad(q) => Some(q.d),
        }
    }

    fn lift(&self, d: i64) -> QuadElem {
        match self {
            FieldElem::Rat(x) => QuadElem::from_rational(d, x.clone()),
            FieldElem::Quad(q) => q.clone(),
        }
    }

    pub fn mul(&self, other: &FieldElem) -> Result<FieldElem> {
        match (self.sqrt_param(), other.sqrt_param()) {
            (None, None) => Ok(FieldElem::Rat(
                self.as_rational().unwrap() * other.as_rational().unwrap(),
            )),
            (Some(d1), Some(d2)) if d1 != d2 => Err(Error::FieldMismatch(format!("Q(sqrt({d1})) and Q(sqrt({d2}))"))),
            (Some(d), _) | (_, Some(d)) => Ok(FieldElem::Quad(&self.lift(d) * &other.lift(d))),
        }
    }

    pub fn square(&self) -> FieldElem {
        self.mul(self).unwrap()
    }

    pub fn neg(&self) -> FieldElem {
        match self {
            FieldElem::Rat(x) => FieldElem::Rat(-x.clone()),
            FieldElem::Quad(q) => FieldElem::Quad(-q),
        }
    }

    pub fn inv(&self) -> Option<FieldElem> {
        match self {
            FieldElem::Rat(x) if x.is_zero() => None,
            FieldElem::Rat(x) => Some(FieldElem::Rat(x.recip())),
            FieldElem::Quad(q) => q.inv().map(FieldElem::Quad),
        }
    }

    /// Whether the element lies in `field`.
    pub fn lies_in(&self, field: FieldDesc) -> bool {
        match (self, field) {
            (_, FieldDesc::Rationals) => self.as_rational().is_some(),
            (FieldElem::Rat(_), FieldDesc::Quadratic(_)) => true,
            (FieldElem::Quad(q), FieldDesc::Quadratic(d)) => q.d == d || q.b.is_zero(),
        }
    }
}

impl Serialize for FieldElem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElem::Rat(x) => write!(f, "{}", super::format_rational(x)),
            FieldElem::Quad(q) => write!(f, "{q}"),
        }
    }
}

/// A prime of Q or of a quadratic field, by its ramification index and
/// residue degree. For split primes `root` is the residue of sqrt(d) that
/// picks out the prime: mod p for odd p, mod 4 (1 or 3) for p = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeIdealData {
    pub p: u64,
    pub e: u8,
    pub f: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<u64>,
}

impl PrimeIdealData {
    pub fn rational(p: u64) -> Self {
        PrimeIdealData {
            p,
            e: 1,
            f: 1,
            root: None,
        }
    }

    pub fn local_degree(&self) -> u32 {
        self.e as u32 * self.f as u32
    }

    /// Checks the ideal data against Q(sqrt d), returning the splitting type.
    pub fn validate(&self, d: i64) -> Result<Splitting> {
        let bad = |why: &str| Err(Error::InvalidPlace(format!("{self:?} in Q(sqrt({d})): {why}")));
        if self.e == 0 || self.f == 0 || self.e as u32 * self.f as u32 > 2 {
            return bad("e*f must be 1 or 2");
        }
        let s = splitting_of(d, self.p);
        match (s, self.e, self.f) {
            (Splitting::Split, 1, 1) => {
                if let Some(r) = self.root {
                    let ok = if self.p == 2 {
                        r == 1 || r == 3
                    } else {
                        r < self.p
                            && (r as u128 * r as u128 % self.p as u128) as i128
                                == (d as i128).rem_euclid(self.p as i128)
                    };
                    if !ok {
                        return bad("root is not a square root of d");
                    }
                }
                Ok(s)
            }
            (Splitting::Inert, 1, 2) | (Splitting::Ramified, 2, 1) => Ok(s),
            _ => bad("e and f do not match the splitting of p"),
        }
    }
}

/// Normalised valuation of `x` at the prime `ideal` of Q(sqrt(x.d)).
pub fn val_quad(x: &QuadElem, ideal: &PrimeIdealData) -> Result<Valuation> {
    let s = ideal.validate(x.d)?;
    if x.is_zero() {
        return Ok(Valuation::Infinite);
    }
    let p = ideal.p;
    let vn = val_p(&x.norm(), p).finite().unwrap();
    match s {
        Splitting::Ramified => Ok(Valuation::Finite(vn)),
        Splitting::Inert => Ok(Valuation::Finite(vn / 2)),
        Splitting::Split => Ok(Valuation::Finite(split_valuation(x, p, ideal.root))),
    }
}

fn split_valuation(x: &QuadElem, p: u64, root: Option<u64>) -> i64 {
    let den = x.a.denom().lcm(x.b.denom());
    let big_a = (&x.a * Rational::from_integer(den.clone())).to_integer();
    let big_b = (&x.b * Rational::from_integer(den.clone())).to_integer();
    let norm = &big_a * &big_a - BigInt::from(x.d) * &big_b * &big_b;
    // v(A + B r) + v(A - B r) = v(norm), so precision v(norm) + 1 is exact.
    let prec = val_int(&norm, p).finite().unwrap() as u32 + 1;
    let r = padic_sqrt(x.d, p, root, prec);
    let modulus = big_pow(p, prec);
    let t = (big_a + big_b * r).mod_floor(&modulus);
    let vt = val_int(&t, p).finite().expect("precision bound");
    vt - val_int(&den, p).finite().unwrap()
}

/// A square root of `d` in Z_p, correct modulo `p^prec`, on the branch
/// selected by `root`.
pub(crate) fn padic_sqrt(d: i64, p: u64, root: Option<u64>, prec: u32) -> BigInt {
    let d_big = BigInt::from(d);
    if p == 2 {
        let mut r = BigInt::from(root.unwrap_or(1));
        let top = prec.max(3);
        for k in 3..=top {
            let m = big_pow(2, k + 1);
            if (&r * &r - &d_big).mod_floor(&m) != BigInt::zero() {
                r += big_pow(2, k - 1);
            }
        }
        return r.mod_floor(&big_pow(2, prec));
    }
    let r0 = match root {
        Some(r) => r,
        None => sqrt_mod_prime(d.rem_euclid(p as i64) as u64, p).expect("split prime"),
    };
    let mut r = BigInt::from(r0);
    let mut k = 1u32;
    while k < prec {
        k = (2 * k).min(prec);
        let m = big_pow(p, k);
        let two_r: BigInt = (&r * 2u32).mod_floor(&m);
        let inv = two_r.extended_gcd(&m).x.mod_floor(&m);
        r = (&r - (&r * &r - &d_big) * inv).mod_floor(&m);
    }
    r.mod_floor(&big_pow(p, prec))
}

/// Valuation of a field element at a prime of `field`.
pub fn val_field(x: &FieldElem, field: FieldDesc, ideal: &PrimeIdealData) -> Result<Valuation> {
    match field {
        FieldDesc::Rationals => {
            if ideal.e != 1 || ideal.f != 1 {
                return Err(Error::InvalidPlace(format!("{ideal:?} over Q")));
            }
            match x.as_rational() {
                Some(r) => Ok(val_p(r, ideal.p)),
                None => Err(Error::FieldMismatch(format!("{x} is not rational"))),
            }
        }
        FieldDesc::Quadratic(d) => {
            if !x.lies_in(field) {
                return Err(Error::FieldMismatch(format!("{x} is not in {field}")));
            }
            let q = match x {
                FieldElem::Rat(r) => QuadElem::from_rational(d, r.clone()),
                FieldElem::Quad(q) => QuadElem::new(d, q.a.clone(), q.b.clone()),
            };
            val_quad(&q, ideal)
        }
    }
}
