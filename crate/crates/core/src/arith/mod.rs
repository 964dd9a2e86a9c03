//! Exact arithmetic: rationals, valuations, Legendre symbols, quadratic
//! fields and residue fields.

mod fq;
mod local;
mod quad;

pub use fq::{residue_symbol_fq, Fq, ResidueField};
pub use local::{qp_quadratic_type, qp_square_class, QpQuadType, SquareClass};
pub(crate) use quad::padic_sqrt;
pub use quad::{squarefree_part, val_field, val_quad, FieldDesc, FieldElem, PrimeIdealData, QuadElem, Splitting};


use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use std::fmt;

pub type Rational = num_rational::BigRational;

/// A valuation, with `Infinite` reserved for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"n"` or `"n/d"` with optional sign and surrounding whitespace.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::parse("rational", format!("not a rational: {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = parse_int(n).ok_or_else(bad)?;
    let d: BigInt = parse_int(d).ok_or_else(bad)?;
    if d.is_zero() {
        return Err(Error::parse("rational", format!("zero denominator: {s:?}")));
    }
    Ok(Rational::new(n, d))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

pub fn format_rational(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn val_int(n: &BigInt, p: u64) -> Valuation {
    if n.is_zero() {
        return Valuation::Infinite;
    }
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return Valuation::Finite(v);
        }
        n = q;
        v += 1;
    }
}

/// p-adic valuation of a rational; `p` must be prime.
pub fn val_p(x: &Rational, p: u64) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinite;
    }
    let vn = val_int(x.numer(), p).finite().unwrap();
    let vd = val_int(x.denom(), p).finite().unwrap();
    Valuation::Finite(vn - vd)
}

/// Splits a nonzero rational as `p^v * u` with `u` a p-adic unit.
pub fn split_unit(x: &Rational, p: u64) -> (i64, Rational) {
    let v = val_p(x, p).finite().expect("split_unit of zero");
    let pk = Rational::from_integer(BigInt::from(p).pow(v.unsigned_abs() as u32));
    let u = if v >= 0 { x / pk } else { x * pk };
    (v, u)
}

/// Reduces a p-integral rational modulo `m`; `None` if the denominator is not
/// invertible mod `m`.
pub fn rational_mod(x: &Rational, m: u64) -> Option<u64> {
    let mb = BigInt::from(m);
    let d = x.denom().mod_floor(&mb).to_u64()?;
    let dinv = mod_inv(d, m)?;
    let n = x.numer().mod_floor(&mb).to_u64()?;
    Some(mul_mod(n, dinv, m))
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

pub fn mod_inv(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let g = (a as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}

pub fn reduce_mod(a: i64, m: u64) -> u64 {
    (a as i128).rem_euclid(m as i128) as u64
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    // Deterministic Miller-Rabin for 64-bit inputs.
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&i| sieve[i]).map(|i| i as u64).collect()
}

/// Prime factorisation by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn is_squarefree(d: i64) -> bool {
    d != 0 && factorize(d.unsigned_abs()).iter().all(|&(_, e)| e == 1)
}

/// Exponent of `p` in `n`.
pub fn val_u64(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n != 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Legendre symbol via Euler's criterion.
pub fn legendre(a: &BigInt, p: u64) -> Result<i8> {
    if p == 2 {
        return Err(Error::UnsupportedPrime(2));
    }
    let r = a.mod_floor(&BigInt::from(p)).to_u64().unwrap();
    Ok(legendre_u64(r, p))
}

pub(crate) fn legendre_u64(a: u64, p: u64) -> i8 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Legendre symbol of a p-adic unit given as a rational.
pub(crate) fn legendre_rat(u: &Rational, p: u64) -> i8 {
    legendre_u64(rational_mod(u, p).expect("p-adic unit"), p)
}

/// Smallest quadratic non-residue mod an odd prime.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre_u64(a, p) == -1).expect("odd prime")
}

/// Square root modulo an odd prime (Tonelli-Shanks). `None` for non-residues.
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if legendre_u64(a, p) != 1 {
        return None;
    }
    let (mut q, mut s) = (p - 1, 0);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = least_nonresidue(p);
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

pub(crate) fn big_pow(p: u64, k: u32) -> BigInt {
    BigInt::from(p).pow(k)
}
