//! Dirichlet characters stored by their values on a canonical generating set
//! of (Z/M)^x.
//!
//! Generators follow the Conrey convention: the least primitive root modulo
//! each odd prime power, and -1 (plus 5 from 2^3 on) modulo powers of 2, each
//! lifted to be 1 modulo the other prime powers.

use crate::arith::{factorize, mod_inv, mul_mod, rat, reduce_mod, FieldDesc, FieldElem, QuadElem};
use crate::{Error, Result};
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::fmt;

/// The root of unity e(num/den) = exp(2 pi i num/den), kept reduced with
/// `0 <= num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootOfUnity {
    num: u64,
    den: u64,
}

impl RootOfUnity {
    pub fn new(num: i64, den: u64) -> Self {
        assert!(den > 0, "root of unity with zero denominator");
        let n = reduce_mod(num, den);
        let g = n.gcd(&den);
        RootOfUnity {
            num: n / g,
            den: den / g,
        }
    }

    pub fn one() -> Self {
        RootOfUnity { num: 0, den: 1 }
    }

    pub fn minus_one() -> Self {
        RootOfUnity { num: 1, den: 2 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    /// Also the multiplicative order.
    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.den == 1
    }

    pub fn mul(&self, o: &RootOfUnity) -> RootOfUnity {
        let den = self.den.lcm(&o.den);
        let num = self.num * (den / self.den) + o.num * (den / o.den);
        RootOfUnity::new(num as i64, den)
    }

    pub fn inv(&self) -> RootOfUnity {
        RootOfUnity::new(-(self.num as i64), self.den)
    }

    pub fn pow(&self, e: i64) -> RootOfUnity {
        let n = (self.num as i128 * e as i128).rem_euclid(self.den as i128);
        RootOfUnity::new(n as i64, self.den)
    }

    /// +1 or -1 when the order is at most 2.
    pub fn sign(&self) -> Option<i8> {
        match self.den {
            1 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// The value as an element of `field`, when it lies there.
    pub fn in_field(&self, field: FieldDesc) -> Option<FieldElem> {
        if let Some(s) = self.sign() {
            return Some(FieldElem::Rat(rat(s as i64, 1)));
        }
        let FieldDesc::Quadratic(d) = field else {
            return None;
        };
        let (a, b) = match (self.den, self.num, d) {
            (4, 1, -1) => (rat(0, 1), rat(1, 1)),
            (4, 3, -1) => (rat(0, 1), rat(-1, 1)),
            (3, 1, -3) => (rat(-1, 2), rat(1, 2)),
            (3, 2, -3) => (rat(-1, 2), rat(-1, 2)),
            (6, 1, -3) => (rat(1, 2), rat(1, 2)),
            (6, 5, -3) => (rat(1, 2), rat(-1, 2)),
            _ => return None,
        };
        Some(FieldElem::Quad(QuadElem::new(d, a, b)))
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign() {
            Some(1) => write!(f, "1"),
            Some(_) => write!(f, "-1"),
            None => write!(f, "e({}/{})", self.num, self.den),
        }
    }
}

/// One generator of (Z/M)^x, attached to the prime power `prime^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharGenerator {
    /// Residue mod M: the local generator at `prime^exponent`, 1 elsewhere.
    pub value: u64,
    /// The local generator mod `prime^exponent` (-1 is stored as 2^e - 1).
    pub local: u64,
    pub prime: u64,
    pub exponent: u32,
    pub order: u64,
}

pub fn canonical_generators(modulus: u64) -> Vec<CharGenerator> {
    let mut gens = Vec::new();
    for (p, k) in factorize(modulus) {
        let q = p.pow(k);
        let lift = |g: u64| crt_lift(g, q, modulus);
        if p == 2 {
            if k >= 2 {
                gens.push(CharGenerator {
                    value: lift(q - 1),
                    local: q - 1,
                    prime: 2,
                    exponent: k,
                    order: 2,
                });
            }
            if k >= 3 {
                let order = 1 << (k - 2);
                gens.push(CharGenerator {
                    value: lift(5),
                    local: 5,
                    prime: 2,
                    exponent: k,
                    order,
                });
            }
        } else {
            let phi = (p - 1) * p.pow(k - 1);
            let g = (2..q).find(|&g| multiplicative_order(g, q) == Some(phi)).unwrap();
            gens.push(CharGenerator {
                value: lift(g),
                local: g,
                prime: p,
                exponent: k,
                order: phi,
            });
        }
    }
    gens
}

fn crt_lift(g: u64, q: u64, modulus: u64) -> u64 {
    let rest = modulus / q;
    // x = g mod q, x = 1 mod rest
    let inv = mod_inv(rest % q, q).unwrap_or(0);
    let t = mul_mod(reduce_mod(g as i64 - 1, q), inv, q);
    (1 + rest * t) % modulus.max(1)
}

/// Order of `a` in (Z/m)^x, or `None` if not a unit.
pub fn multiplicative_order(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(1);
    }
    if a.gcd(&m) != 1 {
        return None;
    }
    let mut x = a % m;
    let mut k = 1;
    while x != 1 {
        x = mul_mod(x, a, m);
        k += 1;
    }
    Some(k)
}

/// Exponents of `a` with respect to the canonical generators.
fn discrete_logs(gens: &[CharGenerator], a: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(gens.len());
    let mut i = 0;
    while i < gens.len() {
        let g = gens[i];
        let q = g.prime.pow(g.exponent);
        let mut r = a % q;
        if g.prime == 2 {
            let neg = r % 4 == 3;
            out.push(neg as u64);
            if i + 1 < gens.len() && gens[i + 1].prime == 2 {
                if neg {
                    r = q - r;
                }
                out.push(log_base(5, r, q));
                i += 1;
            }
        } else {
            out.push(log_base(g.local, r, q));
        }
        i += 1;
    }
    out
}

fn log_base(g: u64, a: u64, q: u64) -> u64 {
    let mut x = 1 % q;
    let mut j = 0;
    while x != a % q {
        x = mul_mod(x, g, q);
        j += 1;
        assert!(j <= q, "{a} is not a power of {g} mod {q}");
    }
    j
}

/// A Dirichlet character modulo `modulus`, by its values on
/// [`canonical_generators`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirichletCharacter {
    modulus: u64,
    images: Vec<RootOfUnity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conrey: Option<u64>,
}

impl DirichletCharacter {
    pub fn new(modulus: u64, images: Vec<RootOfUnity>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::parse("character.modulus", "modulus must be positive"));
        }
        let gens = canonical_generators(modulus);
        if gens.len() != images.len() {
            return Err(Error::parse(
                "character.images",
                format!("expected {} images, got {}", gens.len(), images.len()),
            ));
        }
        for (g, im) in gens.iter().zip(&images) {
            if g.order % im.den() != 0 {
                return Err(Error::parse(
                    "character.images",
                    format!("image {im} of generator {} has order not dividing {}", g.value, g.order),
                ));
            }
        }
        Ok(DirichletCharacter {
            modulus,
            images,
            conrey: None,
        })
    }

    pub fn trivial(modulus: u64) -> Self {
        let n = canonical_generators(modulus).len();
        DirichletCharacter {
            modulus,
            images: vec![RootOfUnity::one(); n],
            conrey: Some(1),
        }
    }

    /// The character with Conrey label `modulus.n`.
    pub fn from_conrey(modulus: u64, n: u64) -> Result<Self> {
        if modulus == 0 || n.gcd(&modulus) != 1 || (n >= modulus && modulus > 1) {
            return Err(Error::parse(
                "character.conrey",
                format!("no Conrey character {modulus}.{n}"),
            ));
        }
        let gens = canonical_generators(modulus);
        let logs = discrete_logs(&gens, n % modulus.max(1));
        let images = gens
            .iter()
            .zip(&logs)
            .map(|(g, &l)| RootOfUnity::new(l as i64, g.order))
            .collect();
        Ok(DirichletCharacter {
            modulus,
            images,
            conrey: Some(n % modulus.max(1)).map(|c| c.max(1)),
        })
    }

    /// Parses a Conrey label "M.n".
    pub fn parse_label(label: &str) -> Result<Self> {
        let bad = || Error::parse("character", format!("bad Conrey label {label:?}"));
        let (m, n) = label.split_once('.').ok_or_else(bad)?;
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !digits(m) || !digits(n) {
            return Err(bad());
        }
        let m: u64 = m.parse().map_err(|_| bad())?;
        let n: u64 = n.parse().map_err(|_| bad())?;
        if m > 1_000_000 {
            return Err(Error::Unsupported(format!("modulus {m} too large")));
        }
        Self::from_conrey(m, n)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn images(&self) -> &[RootOfUnity] {
        &self.images
    }

    pub fn conrey(&self) -> Option<u64> {
        self.conrey
    }

    pub fn generators(&self) -> Vec<CharGenerator> {
        canonical_generators(self.modulus)
    }

    pub fn is_trivial(&self) -> bool {
        self.images.iter().all(RootOfUnity::is_one)
    }

    pub fn order(&self) -> u64 {
        self.images.iter().fold(1, |acc, im| acc.lcm(&im.den()))
    }

    pub fn evaluate(&self, a: i64) -> Result<RootOfUnity> {
        let m = self.modulus;
        let r = reduce_mod(a, m.max(1));
        if m > 1 && r.gcd(&m) != 1 {
            return Err(Error::NotCoprime { a, modulus: m });
        }
        let gens = canonical_generators(m);
        let logs = discrete_logs(&gens, r);
        Ok(self
            .images
            .iter()
            .zip(&logs)
            .fold(RootOfUnity::one(), |acc, (im, &l)| acc.mul(&im.pow(l as i64))))
    }

    pub fn inverse(&self) -> Self {
        DirichletCharacter {
            modulus: self.modulus,
            images: self.images.iter().map(RootOfUnity::inv).collect(),
            conrey: self.conrey.map(|n| mod_inv(n, self.modulus).unwrap_or(1).max(1)),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.modulus != other.modulus {
            return Err(Error::parse("character", "moduli differ"));
        }
        Ok(DirichletCharacter {
            modulus: self.modulus,
            images: self.images.iter().zip(&other.images).map(|(a, b)| a.mul(b)).collect(),
            conrey: match (self.conrey, other.conrey) {
                (Some(a), Some(b)) => Some(mul_mod(a, b, self.modulus).max(1)),
                _ => None,
            },
        })
    }

    /// Exponent of `p` in the conductor.
    pub fn conductor_exponent(&self, p: u64) -> u32 {
        let gens = canonical_generators(self.modulus);
        let local: Vec<(CharGenerator, RootOfUnity)> = gens
            .into_iter()
            .zip(self.images.iter().copied())
            .filter(|(g, _)| g.prime == p)
            .collect();
        if local.iter().all(|(_, im)| im.is_one()) {
            return 0;
        }
        if p == 2 {
            return match local.get(1) {
                Some((_, five)) if !five.is_one() => five.den().trailing_zeros() + 2,
                _ => 2,
            };
        }
        let (g, im) = local[0];
        let o = im.den();
        (1..=g.exponent)
            .find(|&j| ((p - 1) * p.pow(j - 1)) % o == 0)
            .expect("image order divides the group order")
    }

    pub fn conductor(&self) -> u64 {
        factorize(self.modulus)
            .into_iter()
            .map(|(p, _)| p.pow(self.conductor_exponent(p)))
            .product()
    }

    /// Splits into the p-part (modulus a power of p) and the prime-to-p part.
    pub fn p_decompose(&self, p: u64) -> (Self, Self) {
        let k = crate::arith::val_u64(self.modulus, p);
        let q = p.pow(k);
        let rest = self.modulus / q;
        let gens = canonical_generators(self.modulus);
        let (mut at_p, mut away) = (Vec::new(), Vec::new());
        for (g, im) in gens.iter().zip(&self.images) {
            if g.prime == p {
                at_p.push(*im);
            } else {
                away.push(*im);
            }
        }
        let conrey = |m: u64| self.conrey.map(|n| (n % m).max(1));
        (
            DirichletCharacter {
                modulus: q,
                images: at_p,
                conrey: conrey(q),
            },
            DirichletCharacter {
                modulus: rest,
                images: away,
                conrey: conrey(rest),
            },
        )
    }

    /// The value on the idele class of p^m u: eps'(p)^m eps_p(u)^(-1).
    pub fn idelic_local(&self, p: u64, m: i64, u: i64) -> Result<RootOfUnity> {
        let (eps_p, eps_prime) = self.p_decompose(p);
        if u.rem_euclid(p as i64) == 0 {
            return Err(Error::NotCoprime { a: u, modulus: p });
        }
        let at_p = eps_prime.evaluate(p as i64)?.pow(m);
        Ok(at_p.mul(&eps_p.evaluate(u)?.inv()))
    }
}

impl fmt::Display for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.conrey {
            Some(n) => write!(f, "{}.{}", self.modulus, n),
            None => {
                let ims: Vec<String> = self.images.iter().map(|i| i.to_string()).collect();
                write!(f, "chi mod {} [{}]", self.modulus, ims.join(", "))
            }
        }
    }
}
