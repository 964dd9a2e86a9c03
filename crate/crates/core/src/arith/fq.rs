use super::{factorize, least_nonresidue, mod_inv, mul_mod};
use crate::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;

/// The finite field F_p[x]/(g) for a monic irreducible `g` of degree f.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueField {
    p: u64,
    /// Monic modulus, coefficients from the constant term up.
    modulus: Vec<u64>,
}

/// An element of a [`ResidueField`], as a polynomial of degree < f.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fq(pub Vec<u64>);

impl ResidueField {
    pub fn prime(p: u64) -> Self {
        ResidueField { p, modulus: vec![0, 1] }
    }

    /// F_p, or F_{p^2} modelled as F_p[y]/(y^2 - n) with n the least
    /// non-residue (y^2 + y + 1 when p = 2).
    pub fn builtin(p: u64, f: u32) -> Result<Self> {
        match f {
            1 => Ok(Self::prime(p)),
            2 if p == 2 => Ok(ResidueField {
                p,
                modulus: vec![1, 1, 1],
            }),
            2 => {
                let n = least_nonresidue(p);
                Ok(ResidueField {
                    p,
                    modulus: vec![p - n, 0, 1],
                })
            }
            _ => Err(Error::Unsupported(format!(
                "no built-in model of F_{p}^{f}; pass an irreducible modulus"
            ))),
        }
    }

    /// Field with an explicit monic modulus (constant term first).
    pub fn with_modulus(p: u64, modulus: &[u64]) -> Result<Self> {
        let modulus: Vec<u64> = modulus.iter().map(|c| c % p).collect();
        if modulus.len() < 2 || *modulus.last().unwrap() != 1 {
            return Err(Error::InvalidPlace("modulus must be monic of degree >= 1".into()));
        }
        let field = ResidueField { p, modulus };
        if !field.modulus_is_irreducible() {
            return Err(Error::InvalidPlace("modulus is reducible".into()));
        }
        Ok(field)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn order(&self) -> BigUint {
        BigUint::from(self.p).pow(self.degree() as u32)
    }

    /// The constant n with y^2 = n for the generator y of the built-in
    /// quadratic model.
    pub fn builtin_square(&self) -> Option<u64> {
        (self.degree() == 2 && self.modulus[1] == 0).then(|| (self.p - self.modulus[0]) % self.p)
    }

    pub fn elem(&self, coeffs: &[i64]) -> Fq {
        let p = self.p as i64;
        let v: Vec<u64> = coeffs.iter().map(|c| c.rem_euclid(p) as u64).collect();
        Fq(poly_rem(&trim(v), &self.modulus, self.p).resize_to(self.degree()))
    }

    pub fn from_u64(&self, a: u64) -> Fq {
        let mut v = vec![0; self.degree()];
        v[0] = a % self.p;
        Fq(v)
    }

    pub fn one(&self) -> Fq {
        self.from_u64(1)
    }

    pub fn add(&self, a: &Fq, b: &Fq) -> Fq {
        Fq(a.0.iter().zip(&b.0).map(|(x, y)| (x + y) % self.p).collect())
    }

    pub fn mul(&self, a: &Fq, b: &Fq) -> Fq {
        let prod = poly_mul(&a.0, &b.0, self.p);
        Fq(poly_rem(&prod, &self.modulus, self.p).resize_to(self.degree()))
    }

    pub fn pow(&self, a: &Fq, e: &BigUint) -> Fq {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    pub fn is_zero(&self, a: &Fq) -> bool {
        a.0.iter().all(|&c| c == 0)
    }

    // Rabin's test: g | x^(p^f) - x and gcd(x^(p^(f/q)) - x, g) = 1 for
    // every prime q | f.
    fn modulus_is_irreducible(&self) -> bool {
        let f = self.degree();
        if f == 1 {
            return true;
        }
        let x = {
            let mut v = vec![0; f];
            v[1] = 1;
            Fq(v)
        };
        let frob = |k: usize| {
            let mut y = x.clone();
            for _ in 0..k {
                y = self.pow(&y, &BigUint::from(self.p));
            }
            y
        };
        if frob(f) != x {
            return false;
        }
        for (q, _) in factorize(f as u64) {
            let mut h = frob(f / q as usize).0;
            h[1] = (h[1] + self.p - 1) % self.p;
            let g = poly_gcd(trim(h), self.modulus.clone(), self.p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}

/// Quadratic residue symbol a^((q-1)/2) in F_q; 0 for a = 0.
pub fn residue_symbol_fq(a: &Fq, field: &ResidueField) -> Result<i8> {
    if field.p == 2 {
        return Err(Error::UnsupportedPrime(2));
    }
    if field.is_zero(a) {
        return Ok(0);
    }
    let e = (field.order() - BigUint::one()) >> 1;
    let r = field.pow(a, &e);
    if r == field.one() {
        Ok(1)
    } else {
        Ok(-1)
    }
}

trait ResizeTo {
    fn resize_to(self, n: usize) -> Vec<u64>;
}

impl ResizeTo for Vec<u64> {
    fn resize_to(mut self, n: usize) -> Vec<u64> {
        self.resize(n, 0);
        self
    }
}

fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    trim(out)
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = trim(a.to_vec());
    let m = trim(m.to_vec());
    let lead_inv = mod_inv(*m.last().unwrap(), p).unwrap();
    while r.len() >= m.len() && !r.is_empty() {
        let shift = r.len() - m.len();
        let c = mul_mod(*r.last().unwrap(), lead_inv, p);
        for (i, &mc) in m.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - mul_mod(c, mc, p)) % p;
        }
        r = trim(r);
    }
    r
}

fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}
