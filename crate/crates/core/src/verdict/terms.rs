//! The companion slope m_v and the error-term symbols.

use super::inputs::{DescriptorKind, ErrorTermData, InertialDescriptor};
use super::{ErrorParity, Provenance, Trace};
use crate::arith::{
    format_rational, qp_quadratic_type, qp_square_class, rat_int, val_field, FieldDesc, FieldElem, QpQuadType,
    Rational, Valuation,
};
use crate::hilbert::{norm_symbol, rational_symbol_at, symbol_at, symbol_two, SymbolPlace};
use crate::newform::{NewformData, Place};
use crate::{Error, Result};
use serde::Serialize;

/// m_v together with the element whose valuation it measures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slope {
    pub m_v: i64,
    pub value: FieldElem,
    pub p_prime: u64,
}

impl Slope {
    pub fn parity(&self) -> u8 {
        self.m_v.rem_euclid(2) as u8
    }
}

fn parity_of(sign: i8) -> u8 {
    (sign < 0) as u8
}

/// Moves an element of E into F, failing if it does not lie there.
pub fn into_f(x: &FieldElem, f_field: FieldDesc) -> Result<FieldElem> {
    if !x.lies_in(f_field) {
        return Err(Error::FieldMismatch(format!("{x} is not in F = {f_field}")));
    }
    Ok(match (f_field, x.as_rational()) {
        (FieldDesc::Rationals, Some(r)) | (FieldDesc::Quadratic(_), Some(r)) => FieldElem::Rat(r.clone()),
        _ => x.clone(),
    })
}

/// a_q^2 eps(q)^-1 as an element of F.
pub fn twisted_square(f: &NewformData, q: u64) -> Result<FieldElem> {
    let a = f.require_coefficient(q)?;
    if a.is_zero() {
        return Err(Error::ZeroCoefficient(format!("a_{q} = 0")));
    }
    let eps = f.nebentypus.evaluate(q as i64)?;
    let eps_inv = eps
        .inv()
        .in_field(f.hecke_field)
        .ok_or_else(|| Error::FieldMismatch(format!("eps({q}) = {eps} is not in {}", f.hecke_field)))?;
    into_f(&a.square().mul(&eps_inv)?, f.f_field)
}

/// a_q^2 as an element of F.
fn coefficient_square(f: &NewformData, q: u64) -> Result<FieldElem> {
    let a = f.require_coefficient(q)?;
    into_f(&a.square(), f.f_field)
}

/// m_v = f_v * w(a_p'^2 eps(p')^-1) with w the normalised valuation at v.
pub fn companion_slope(f: &NewformData, place: &Place, p_prime: u64) -> Result<Slope> {
    let value = twisted_square(f, p_prime)?;
    match val_field(&value, f.f_field, &place.ideal())? {
        Valuation::Finite(w) => Ok(Slope {
            m_v: place.f_v as i64 * w,
            value,
            p_prime,
        }),
        Valuation::Infinite => Err(Error::ZeroCoefficient(format!("a_{p_prime} = 0"))),
    }
}

/// How KF_v sits over F_v.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KRelation {
    Contained,
    Unramified,
    Ramified,
}

pub fn k_relation(k_disc: i64, place: &SymbolPlace) -> Result<KRelation> {
    let d = rat_int(k_disc);
    let p = place.p();
    if p == 2 {
        if place.local_degree() != 1 {
            return Err(Error::Unsupported("K F_v over F_v at 2 with F_v != Q_2".into()));
        }
        return Ok(match qp_quadratic_type(&d, 2) {
            QpQuadType::Trivial => KRelation::Contained,
            QpQuadType::Unramified => KRelation::Unramified,
            QpQuadType::Ramified { .. } => KRelation::Ramified,
        });
    }
    if place.is_square(&d) {
        return Ok(KRelation::Contained);
    }
    let v = crate::arith::val_p(&d, p).finite().unwrap_or(0);
    Ok(if (place.e() as i64 * v) % 2 != 0 {
        KRelation::Ramified
    } else {
        KRelation::Unramified
    })
}

/// Checks that F_v(sqrt pi^2) = K F_v.
fn check_pi_squared(pi2: &Rational, k_disc: i64, place: &SymbolPlace) -> Result<()> {
    let prod = pi2 * rat_int(k_disc);
    if place.is_square(&prod) {
        Ok(())
    } else {
        Err(Error::Inconsistent(format!(
            "pi^2 = {} does not generate K F_v = F_v(sqrt {k_disc})",
            format_rational(pi2)
        )))
    }
}

/// Not an odd multiple of (p+1)/2.
pub fn is_good(p: u64, l: i64) -> bool {
    let h = ((p + 1) / 2) as i64;
    !(l > 0 && l % h == 0 && (l / h) % 2 == 1)
}

/// Cases where the goodness hypothesis holds whatever l is.
pub fn is_good_shortcut(p: u64, c_p: u32) -> Option<bool> {
    match (p % 4, c_p) {
        (1, 0) | (3, 1) => Some(true),
        _ => None,
    }
}

fn k_disc_of(desc: &InertialDescriptor) -> Result<i64> {
    desc.k_disc
        .ok_or_else(|| Error::InsufficientData("descriptor.k_disc".into()))
}

/// n_v at a p = 3 mod 4 ramified prime with K F_v | F_v ramified, from the
/// norm-symbol class ((-1)^k a_p''^2 eps(p'')^-1, K F_v | F_v).
///
/// That class is the whole of [X_v], so n_v is its parity plus `m_parity`.
/// When `pi_squared` is given the raw symbol (pi^2, a_p''^2)_v is evaluated
/// as well and must agree.
pub fn error_term_odd_ramified(
    f: &NewformData,
    place: &SymbolPlace,
    desc: &InertialDescriptor,
    p_dprime: u64,
    k: u32,
    m_parity: u8,
    pi_squared: Option<&Rational>,
) -> Result<(ErrorParity, Trace)> {
    let p = place.p();
    if p % 4 != 3 || desc.kind != DescriptorKind::DihedralRamified {
        return Err(Error::WrongCase(format!(
            "needs p = 3 mod 4 and ramified K, got p = {p}, {:?}",
            desc.kind
        )));
    }
    let d = k_disc_of(desc)?;
    if k_relation(d, place)? != KRelation::Ramified {
        return Err(Error::WrongCase("K F_v | F_v is not ramified".into()));
    }
    let mut trace = Trace::default();
    let mut x = twisted_square(f, p_dprime)?;
    if k % 2 == 1 {
        x = x.neg();
    }
    trace.push(
        format!("(-1)^k a_{p_dprime}^2 eps({p_dprime})^-1"),
        x.to_string(),
        Provenance::Computed,
    );
    let class = norm_symbol(&x, &rat_int(d), place)?;
    trace.push(
        format!("({x}, F_v(sqrt {d}) | F_v)"),
        class.to_string(),
        Provenance::Computed,
    );
    let n = parity_of(class) ^ m_parity;
    trace.push("n_v = class + m_v mod 2", n.to_string(), Provenance::Computed);

    if let Some(pi2) = pi_squared {
        check_pi_squared(pi2, d, place)?;
        let a2 = f.require_coefficient(p_dprime)?.square();
        match into_f(&a2, f.f_field) {
            Ok(a2) => {
                let raw = symbol_at(&FieldElem::Rat(pi2.clone()), &a2, place)?;
                trace.push(
                    format!("(pi^2, a_{p_dprime}^2)_v = ({}, {a2})_v", format_rational(pi2)),
                    raw.to_string(),
                    Provenance::Computed,
                );
                if parity_of(raw) != n {
                    return Err(Error::Inconsistent(format!(
                        "raw symbol gives n_v = {}, norm-symbol form gives {n}",
                        parity_of(raw)
                    )));
                }
            }
            Err(_) => trace.push("raw symbol", "skipped: a_p''^2 not in F", Provenance::Computed),
        }
    }
    if place.f() % 2 == 0 && n != 0 {
        return Err(Error::Inconsistent(format!("f_v = {} is even but n_v = 1", place.f())));
    }
    Ok((ErrorParity::Known(n), trace))
}

/// (t, c)_v at a bad level-zero unramified prime.
pub fn error_term_odd_bad(place: &SymbolPlace, err: &ErrorTermData) -> Result<(ErrorParity, Trace)> {
    let mut trace = Trace::default();
    match (&err.t, &err.c) {
        (Some(t), Some(c)) => {
            let s = rational_symbol_at(t, c, place);
            trace.push(
                format!("(t, c)_v = ({}, {})_v", format_rational(t), format_rational(c)),
                s.to_string(),
                Provenance::ErrorTerms,
            );
            Ok((ErrorParity::Known(parity_of(s)), trace))
        }
        _ => {
            let missing: Vec<String> = [("t", err.t.is_none()), ("c", err.c.is_none())]
                .into_iter()
                .filter(|(_, absent)| *absent)
                .map(|(n, _)| n.to_string())
                .collect();
            Ok((ErrorParity::unknown(missing, "(t, c)_v"), trace))
        }
    }
}

/// zeta_{2^j} when it is rational.
fn zeta_two_power(j: i64) -> Result<Rational> {
    match j {
        ..=0 => Ok(rat_int(1)),
        1 => Ok(rat_int(-1)),
        _ => Err(Error::Unsupported(format!("zeta_(2^{j}) is not rational"))),
    }
}

/// (zeta_{2^s} + zeta_{2^s}^-1)^2, via T_s^2 = 2 + T_{s-1} from T_2 = 0.
pub fn t_s_squared(s: u32) -> Result<Rational> {
    match s {
        0 | 1 => Ok(rat_int(4)),
        2 => Ok(rat_int(0)),
        3 => Ok(rat_int(2)),
        _ => Err(Error::Unsupported(format!(
            "(zeta_(2^{s}) + zeta_(2^{s})^-1)^2 is not rational"
        ))),
    }
}

/// Whether d0 = a_p'''^2 may be assumed for this K (F = Q only).
pub fn d0_from_p_tprime(f: &NewformData, k_disc: i64) -> bool {
    let c = qp_square_class(&rat_int(k_disc), 2);
    f.f_field == FieldDesc::Rationals && c != qp_square_class(&rat_int(2), 2) && c != qp_square_class(&rat_int(-6), 2)
}

/// The error term r_v at a dihedral p = 2, for F_v = Q_2.
pub fn error_term_p2_dihedral(
    f: &NewformData,
    place: &SymbolPlace,
    desc: &InertialDescriptor,
    err: &ErrorTermData,
    p_dagger: Option<u64>,
    p_tprime: Option<u64>,
) -> Result<(ErrorParity, Trace)> {
    if place.p() != 2 || !desc.is_dihedral() {
        return Err(Error::WrongCase("needs a dihedral descriptor at p = 2".into()));
    }
    let d = k_disc_of(desc)?;
    let ramified = match k_relation(d, place)? {
        KRelation::Ramified => true,
        KRelation::Unramified => false,
        KRelation::Contained => unreachable!("K is quadratic over Q_2 = F_v"),
    };
    let mut trace = Trace::default();
    let mut missing = Vec::new();
    let mut factors: Vec<String> = Vec::new();
    let mut sign = 1i8;
    let mut eval = |trace: &mut Trace, label: String, a: &Rational, b: &Rational, prov: Provenance| {
        let s = symbol_two(a, b);
        trace.push(
            format!("{label} = ({}, {})_2", format_rational(a), format_rational(b)),
            s.to_string(),
            prov,
        );
        sign *= s;
    };

    if desc.s != 2 {
        let zeta = zeta_two_power(desc.r as i64 - 1)?;
        factors.push(format!("(t1, {})_v", format_rational(&zeta)));
        if zeta == rat_int(1) {
            trace.push("(t1, zeta_(2^(r-1)))_v", "1 (zeta = 1)", Provenance::Computed);
        } else if let Some(t1) = &err.t1 {
            eval(
                &mut trace,
                "(t1, zeta_(2^(r-1)))_v".into(),
                t1,
                &zeta,
                Provenance::ErrorTerms,
            );
        } else {
            missing.push("t1".to_string());
        }
        let ts2 = t_s_squared(desc.s)?;
        factors.push(format!("(t2, {})_v", format_rational(&ts2)));
        if qp_square_class(&ts2, 2).is_square() {
            trace.push(
                "(t2, T_s^2)_v",
                format!("1 (T_s^2 = {} is a square)", format_rational(&ts2)),
                Provenance::Computed,
            );
        } else if let Some(t2) = &err.t2 {
            eval(&mut trace, "(t2, T_s^2)_v".into(), t2, &ts2, Provenance::ErrorTerms);
        } else {
            missing.push("t2".to_string());
        }
    } else {
        factors.push("(t2, a_p-dagger^2)_v".into());
        let a2 = match p_dagger {
            Some(q) => {
                let a2 = coefficient_square(f, q)?;
                let r = a2
                    .as_rational()
                    .cloned()
                    .ok_or_else(|| Error::FieldMismatch(format!("a_{q}^2 = {a2}")))?;
                Some((q, r))
            }
            None => {
                missing.push("p_dagger".to_string());
                None
            }
        };
        match (&err.t2, a2) {
            (Some(t2), Some((q, a2))) => eval(&mut trace, format!("(t2, a_{q}^2)_v"), t2, &a2, Provenance::ErrorTerms),
            (None, _) => missing.push("t2".to_string()),
            _ => {}
        }
    }

    if ramified {
        factors.push("(pi^2, d0)_v".into());
        let d0 = match (&err.d0, p_tprime) {
            (Some(d0), _) => Some(d0.clone()),
            (None, Some(q)) if d0_from_p_tprime(f, d) => {
                let a2 = coefficient_square(f, q)?;
                let r = a2
                    .as_rational()
                    .cloned()
                    .ok_or_else(|| Error::FieldMismatch(format!("a_{q}^2 = {a2}")))?;
                trace.push("d0", format!("a_{q}^2 = {}", format_rational(&r)), Provenance::Computed);
                Some(r)
            }
            (None, _) => {
                missing.push(if d0_from_p_tprime(f, d) { "p_tprime" } else { "d0" }.to_string());
                None
            }
        };
        if err.pi_squared.is_none() {
            missing.push("pi_squared".to_string());
        }
        if let (Some(pi2), Some(d0)) = (&err.pi_squared, d0) {
            check_pi_squared(pi2, d, place)?;
            eval(&mut trace, "(pi^2, d0)_v".into(), pi2, &d0, Provenance::ErrorTerms);
        }
    }

    let residual = factors.join(" * ");
    if missing.is_empty() {
        trace.push(
            format!("r_v from {residual}"),
            parity_of(sign).to_string(),
            Provenance::Computed,
        );
        Ok((ErrorParity::Known(parity_of(sign)), trace))
    } else {
        Ok((ErrorParity::unknown(missing, residual), trace))
    }
}

/// The sign D(-1)^[F_v:Q_2] (2, D_K')_v for an exceptional prime at 2.
/// Odd weight uses eps(-1) for D(-1); even weight needs it supplied.
/// Returns `None` in place of the sign when D(-1) is missing.
pub fn exceptional_sign(
    f: &NewformData,
    place: &SymbolPlace,
    desc: &InertialDescriptor,
    k: u32,
) -> Result<(Option<i8>, Trace)> {
    if place.p() != 2 || desc.kind != DescriptorKind::Exceptional {
        return Err(Error::WrongCase("needs an exceptional descriptor at p = 2".into()));
    }
    let mut trace = Trace::default();
    let dk = desc
        .d_kprime
        .ok_or_else(|| Error::InsufficientData("descriptor.d_kprime".into()))?;
    let d_minus_one = if k % 2 == 1 {
        let e = f.nebentypus.evaluate(-1)?.sign().expect("eps(-1) = +-1");
        trace.push("D(-1) = eps(-1)", e.to_string(), Provenance::Fixture);
        Some(e)
    } else {
        desc.d_minus_one
            .inspect(|&e| trace.push("D(-1)", e.to_string(), Provenance::Descriptor))
    };
    let sym = rational_symbol_at(&rat_int(2), &rat_int(dk), place);
    trace.push(format!("(2, {dk})_v"), sym.to_string(), Provenance::Computed);
    let deg = place.local_degree();
    trace.push("[F_v:Q_2]", deg.to_string(), Provenance::Computed);
    Ok((d_minus_one.map(|e| if deg % 2 == 0 { 1 } else { e } * sym), trace))
}
