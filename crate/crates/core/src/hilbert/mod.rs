//! Local quadratic (Hilbert) symbols.
//!
//! At odd residue characteristic the symbol is computed from valuations and
//! residue symbols of unit parts, relative to a declared uniformizer. Over Q_2
//! the classical closed formula is used, and at the real place the sign rule.

use crate::arith::{
    factorize, padic_sqrt, qp_square_class, rational_mod, residue_symbol_fq, split_unit, val_int, val_p, FieldDesc,
    FieldElem, Fq, PrimeIdealData, Rational, ResidueField, Splitting,
};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Which uniformizer the decomposition x = pi^v(x) x' is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Uniformizer {
    /// pi = p (unramified places).
    RationalPrime,
    /// pi = sqrt(d) in F = Q(sqrt d), at odd p dividing d.
    SqrtD,
}

impl fmt::Display for Uniformizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Uniformizer::RationalPrime => write!(f, "pi = p"),
            Uniformizer::SqrtD => write!(f, "pi = sqrt(d_F)"),
        }
    }
}

/// A finite place of F (Q or quadratic) at which symbols are evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolPlace {
    pub field: FieldDesc,
    pub ideal: PrimeIdealData,
    pub uniformizer: Uniformizer,
    residue: ResidueField,
    /// For inert places: c with sqrt(d) = c*y in the residue model y^2 = n.
    sqrt_d_coeff: Option<u64>,
}

impl SymbolPlace {
    pub fn rational(p: u64) -> Self {
        Self::new(FieldDesc::Rationals, PrimeIdealData::rational(p)).expect("Q_p")
    }

    pub fn new(field: FieldDesc, ideal: PrimeIdealData) -> Result<Self> {
        let p = ideal.p;
        if !crate::arith::is_prime(p) {
            return Err(Error::InvalidPlace(format!("{p} is not prime")));
        }
        let splitting = match field {
            FieldDesc::Rationals if ideal.e == 1 && ideal.f == 1 => None,
            FieldDesc::Rationals => return Err(Error::InvalidPlace(format!("{ideal:?} over Q"))),
            FieldDesc::Quadratic(d) => Some(ideal.validate(d)?),
        };
        let uniformizer = match (splitting, field) {
            (Some(Splitting::Ramified), FieldDesc::Quadratic(d)) if d % p as i64 == 0 => Uniformizer::SqrtD,
            (Some(Splitting::Ramified), _) => {
                return Err(Error::Unsupported(format!(
                    "local symbols at ramified places above {p}"
                )))
            }
            _ => Uniformizer::RationalPrime,
        };
        let residue = ResidueField::builtin(p, ideal.f as u32)?;
        let sqrt_d_coeff = match (splitting, field) {
            (Some(Splitting::Inert), FieldDesc::Quadratic(d)) if p != 2 => {
                let n = residue.builtin_square().unwrap();
                let target =
                    crate::arith::mul_mod(crate::arith::reduce_mod(d, p), crate::arith::mod_inv(n, p).unwrap(), p);
                crate::arith::sqrt_mod_prime(target, p)
            }
            _ => None,
        };
        Ok(SymbolPlace {
            field,
            ideal,
            uniformizer,
            residue,
            sqrt_d_coeff,
        })
    }

    pub fn p(&self) -> u64 {
        self.ideal.p
    }

    pub fn e(&self) -> u32 {
        self.ideal.e as u32
    }

    pub fn f(&self) -> u32 {
        self.ideal.f as u32
    }

    /// [F_v : Q_p].
    pub fn local_degree(&self) -> u32 {
        self.e() * self.f()
    }

    pub fn residue_field(&self) -> &ResidueField {
        &self.residue
    }

    /// Whether the rational `d` is a square in F_v.
    pub fn is_square(&self, d: &Rational) -> bool {
        let p = self.p();
        if qp_square_class(d, p).is_square() {
            return true;
        }
        match (self.field, self.local_degree()) {
            (FieldDesc::Quadratic(df), 2) => {
                let prod = d * Rational::from_integer(BigInt::from(df));
                qp_square_class(&prod, p).is_square()
            }
            _ => false,
        }
    }
}

impl fmt::Display for SymbolPlace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v | {} in {} (e={}, f={}", self.p(), self.field, self.e(), self.f())?;
        if let Some(r) = self.ideal.root {
            write!(f, ", sqrt(d) = {r}")?;
        }
        write!(f, ")")
    }
}

/// A nonzero element of F_v as (valuation, residue of the unit part).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalElem {
    pub val: i64,
    pub unit: Fq,
}

impl LocalElem {
    pub fn from_rational(x: &Rational, place: &SymbolPlace) -> Result<Self> {
        Self::from_field_elem(&FieldElem::Rat(x.clone()), place)
    }

    pub fn from_field_elem(x: &FieldElem, place: &SymbolPlace) -> Result<Self> {
        let p = place.p();
        if p == 2 {
            return Err(Error::UnsupportedPrime(2));
        }
        if x.is_zero() {
            return Err(Error::ZeroCoefficient("local element of zero".into()));
        }
        if !x.lies_in(place.field) {
            return Err(Error::FieldMismatch(format!("{x} is not in {}", place.field)));
        }
        let rf = &place.residue;
        if let Some(r) = x.as_rational() {
            let (v, u) = split_unit(r, p);
            let res = rf.from_u64(rational_mod(&u, p).unwrap());
            return Ok(match place.uniformizer {
                Uniformizer::RationalPrime => LocalElem { val: v, unit: res },
                Uniformizer::SqrtD => {
                    // p = pi^2 * (p/d_F) and p/d_F is a unit.
                    let FieldDesc::Quadratic(d) = place.field else {
                        unreachable!()
                    };
                    let c = Rational::new(BigInt::from(p), BigInt::from(d));
                    let c_res = rf.from_u64(rational_mod(&c, p).unwrap());
                    let mut unit = res;
                    let pow = if v >= 0 { c_res } else { inv_fp(&c_res, rf) };
                    for _ in 0..v.unsigned_abs() {
                        unit = rf.mul(&unit, &pow);
                    }
                    LocalElem { val: 2 * v, unit }
                }
            });
        }
        let FieldElem::Quad(q) = x else { unreachable!() };
        let d = q.d;
        match place.ideal.validate(d)? {
            Splitting::Ramified => {
                let w = val_p(&q.norm(), p).finite().unwrap();
                let k = w.div_euclid(2);
                let dk = Rational::from_integer(BigInt::from(d)).pow(k as i32);
                let res = if w % 2 == 0 { &q.a / &dk } else { &q.b / &dk };
                Ok(LocalElem {
                    val: w,
                    unit: rf.from_u64(rational_mod(&res, p).unwrap()),
                })
            }
            Splitting::Inert => {
                let w = val_p(&q.norm(), p).finite().unwrap() / 2;
                let pw = Rational::from_integer(BigInt::from(p)).pow(w as i32);
                let a = rational_mod(&(&q.a / &pw), p).unwrap();
                let b = rational_mod(&(&q.b / &pw), p).unwrap();
                let c = place.sqrt_d_coeff.expect("inert model");
                let unit = Fq(vec![a, crate::arith::mul_mod(b, c, p)]);
                Ok(LocalElem { val: w, unit })
            }
            Splitting::Split => {
                let den = q.a.denom().lcm(q.b.denom());
                let big_a = (&q.a * Rational::from_integer(den.clone())).to_integer();
                let big_b = (&q.b * Rational::from_integer(den.clone())).to_integer();
                let norm = &big_a * &big_a - BigInt::from(d) * &big_b * &big_b;
                let prec = val_int(&norm, p).finite().unwrap() as u32 + 1;
                let r = padic_sqrt(d, p, place.ideal.root, prec);
                let t = (big_a + big_b * r).mod_floor(&BigInt::from(p).pow(prec));
                let vt = val_int(&t, p).finite().unwrap();
                let vd = val_int(&den, p).finite().unwrap();
                let unit = Rational::new(
                    t / BigInt::from(p).pow(vt as u32),
                    &den / BigInt::from(p).pow(vd as u32),
                );
                Ok(LocalElem {
                    val: vt - vd,
                    unit: rf.from_u64(rational_mod(&unit, p).unwrap()),
                })
            }
        }
    }
}

fn inv_fp(x: &Fq, rf: &ResidueField) -> Fq {
    let p = rf.p();
    rf.from_u64(crate::arith::mod_inv(x.0[0], p).unwrap())
}

fn to_sign(parity: u64) -> i8 {
    if parity % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The tame symbol at an odd place:
/// (-1)^(v(a) v(b) (Nv-1)/2) (b'/v)^v(a) (a'/v)^v(b).
pub fn symbol_odd(a: &LocalElem, b: &LocalElem, place: &SymbolPlace) -> Result<i8> {
    let p = place.p();
    if p == 2 {
        return Err(Error::WrongCase("p = 2: use symbol_two".into()));
    }
    let rf = &place.residue;
    let ra = residue_symbol_fq(&a.unit, rf)?;
    let rb = residue_symbol_fq(&b.unit, rf)?;
    if ra == 0 || rb == 0 {
        return Err(Error::Inconsistent("unit part with zero residue".into()));
    }
    // (Nv - 1)/2 is odd iff p = 3 mod 4 and f is odd.
    let half_nv_minus_one_odd = p % 4 == 3 && place.f() % 2 == 1;
    let mut sign = 1i8;
    if half_nv_minus_one_odd && (a.val * b.val) % 2 != 0 {
        sign = -sign;
    }
    if a.val % 2 != 0 {
        sign *= rb;
    }
    if b.val % 2 != 0 {
        sign *= ra;
    }
    Ok(sign)
}

fn two_adic_parts(x: &Rational) -> (i64, u64) {
    let (v, u) = split_unit(x, 2);
    (v, rational_mod(&u, 8).unwrap())
}

/// The Hilbert symbol over Q_2.
pub fn symbol_two(a: &Rational, b: &Rational) -> i8 {
    assert!(!a.is_zero() && !b.is_zero(), "Hilbert symbol of zero");
    let (alpha, u) = two_adic_parts(a);
    let (beta, w) = two_adic_parts(b);
    let eps = |u: u64| (u % 4 == 3) as u64;
    let omega = |u: u64| (u == 3 || u == 5) as u64;
    let e = eps(u) * eps(w) + (alpha.rem_euclid(2) as u64) * omega(w) + (beta.rem_euclid(2) as u64) * omega(u);
    to_sign(e)
}

pub fn symbol_real(a: &Rational, b: &Rational) -> i8 {
    if a.is_negative() && b.is_negative() {
        -1
    } else {
        1
    }
}

/// A place of Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QPlace {
    Finite(u64),
    Infinity,
}

/// The Hilbert symbol of two nonzero rationals at a place of Q.
pub fn hilbert_symbol(a: &Rational, b: &Rational, place: QPlace) -> i8 {
    match place {
        QPlace::Infinity => symbol_real(a, b),
        QPlace::Finite(2) => symbol_two(a, b),
        QPlace::Finite(p) => {
            let v = SymbolPlace::rational(p);
            let la = LocalElem::from_rational(a, &v).unwrap();
            let lb = LocalElem::from_rational(b, &v).unwrap();
            symbol_odd(&la, &lb, &v).unwrap()
        }
    }
}

/// (a, b)_v for rationals a, b at a place v of F, via (a,b)_v = (a,b)_p^[F_v:Q_p].
pub fn rational_symbol_at(a: &Rational, b: &Rational, place: &SymbolPlace) -> i8 {
    let s = hilbert_symbol(a, b, QPlace::Finite(place.p()));
    if place.local_degree() % 2 == 0 {
        1
    } else {
        s
    }
}

/// (a, b)_v for elements of F. At p = 2 both arguments must be rational.
pub fn symbol_at(a: &FieldElem, b: &FieldElem, place: &SymbolPlace) -> Result<i8> {
    if place.p() == 2 {
        return match (a.as_rational(), b.as_rational()) {
            (Some(x), Some(y)) => Ok(rational_symbol_at(x, y, place)),
            _ => Err(Error::Unsupported("symbols of irrational elements above 2".into())),
        };
    }
    let la = LocalElem::from_field_elem(a, place)?;
    let lb = LocalElem::from_field_elem(b, place)?;
    symbol_odd(&la, &lb, place)
}

/// Norm-residue symbol (x, F_v(sqrt d) | F_v): +1 iff x is a norm.
pub fn norm_symbol(x: &FieldElem, d: &Rational, place: &SymbolPlace) -> Result<i8> {
    if d.is_zero() || place.is_square(d) {
        return Err(Error::NotQuadratic(format!(
            "{} at {place}",
            crate::arith::format_rational(d)
        )));
    }
    symbol_at(x, &FieldElem::Rat(d.clone()), place)
}

/// Norm-residue symbol over Q_p.
pub fn norm_symbol_qp(x: &Rational, d: &Rational, p: u64) -> Result<i8> {
    norm_symbol(&FieldElem::Rat(x.clone()), d, &SymbolPlace::rational(p))
}

/// Residue symbol of the unit part of pi^2 for a uniformizer pi of a
/// ramified quadratic extension at p = 3 mod 4; it equals (-1/v) = (-1)^f_v.
pub fn residue_unit_of_pi_squared(p: u64, f_v: u32) -> Result<i8> {
    if p % 4 != 3 {
        return Err(Error::WrongCase(format!("p = {p} is not 3 mod 4")));
    }
    Ok(to_sign(f_v as u64))
}

fn prime_divisors(x: &BigInt) -> Vec<u64> {
    let n = x.abs().to_u64().expect("product formula check needs 64-bit heights");
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

/// The places of Q at which (a, b) can be nontrivial: infinity, 2 and the odd
/// primes dividing numerators or denominators.
pub fn bad_places(a: &Rational, b: &Rational) -> Vec<QPlace> {
    let mut ps = vec![2u64];
    for x in [a.numer(), a.denom(), b.numer(), b.denom()] {
        ps.extend(prime_divisors(x));
    }
    ps.sort_unstable();
    ps.dedup();
    let mut out: Vec<QPlace> = ps.into_iter().map(QPlace::Finite).collect();
    out.push(QPlace::Infinity);
    out
}

/// Whether the product of all local symbols of (a, b) is +1.
pub fn product_formula_check(a: &Rational, b: &Rational) -> bool {
    bad_places(a, b)
        .into_iter()
        .map(|v| hilbert_symbol(a, b, v) as i32)
        .product::<i32>()
        == 1
}

#[cfg(test)]
mod tests;
