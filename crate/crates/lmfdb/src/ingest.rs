//! Conversion of raw LMFDB records into [`NewformData`].
//!
//! Only data that LMFDB stores explicitly is read (level, weight, Hecke
//! field, coefficients, Conrey orbit). Everything derived, i.e. which Conrey
//! index matches the chosen embedding, the inner twists and the field F, is
//! recomputed from the coefficients so that it agrees with this crate's
//! conventions whatever LMFDB's own normalisation is.

use crate::{LmfdbError, Result};
use num_bigint::BigInt;
use scbrauer::arith::{primes_up_to, squarefree_part, FieldDesc, FieldElem, QuadElem, Rational};
use scbrauer::dirichlet::{DirichletCharacter, RootOfUnity};
use scbrauer::newform::{InnerTwist, NewformData, TwistAuto};
use scbrauer::Error as EngineError;
use serde_json::Value;
use std::collections::BTreeMap;

/// Primes used when matching characters against coefficients.
const CHECK_PRIMES: u64 = 1000;

/// Inner twists are found by trying every character mod N, so ingestion is
/// limited to levels where that is cheap.
pub const MAX_LEVEL: u64 = 10_000;

/// Largest `maxp` accepted before sieving.
const MAX_PRIME_BOUND: u64 = 10_000_000;

fn get_field<'a>(record: &'a Value, path: &str, key: &str) -> Result<&'a Value> {
    record
        .get(key)
        .filter(|v| !v.is_null())
        .ok_or_else(|| LmfdbError::schema(format!("{path}.{key}"), "missing"))
}

fn as_u64(v: &Value, path: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| LmfdbError::schema(path, format!("expected a non-negative integer, got {v}")))
}

/// An exact integer: a JSON integer or a string of digits. Floats are
/// rejected since they may have lost precision upstream.
pub fn parse_integer(v: &Value, path: &str) -> Result<BigInt> {
    match v {
        Value::Number(n) if n.is_i64() => Ok(BigInt::from(n.as_i64().unwrap())),
        Value::Number(n) if n.is_u64() => Ok(BigInt::from(n.as_u64().unwrap())),
        Value::String(s) => {
            let t = s.strip_prefix('-').unwrap_or(s);
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(LmfdbError::schema(path, format!("{s:?} is not an integer")));
            }
            Ok(s.parse().expect("digits parse"))
        }
        other => Err(LmfdbError::schema(
            path,
            format!("expected an exact integer, got {other}"),
        )),
    }
}

fn integer_list(v: &Value, path: &str) -> Result<Vec<BigInt>> {
    let arr = v
        .as_array()
        .ok_or_else(|| LmfdbError::schema(path, "expected a list"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| parse_integer(x, &format!("{path}[{i}]")))
        .collect()
}

fn small(x: &BigInt, path: &str) -> Result<i64> {
    i64::try_from(x).map_err(|_| LmfdbError::schema(path, "integer out of range"))
}

/// How coefficient vectors are to be read: coordinates on a basis given by
/// (rational, sqrt d)-pairs, or sums of c * zeta_m^e.
#[derive(Debug, Clone)]
enum Basis {
    Linear {
        field: FieldDesc,
        basis: Vec<(Rational, Rational)>,
    },
    Cyclotomic {
        field: FieldDesc,
        m: u64,
    },
}

impl Basis {
    fn field(&self) -> FieldDesc {
        match self {
            Basis::Linear { field, .. } | Basis::Cyclotomic { field, .. } => *field,
        }
    }

    fn element(&self, v: &Value, path: &str) -> Result<FieldElem> {
        let (mut a, mut b) = (Rational::from_integer(0.into()), Rational::from_integer(0.into()));
        match self {
            Basis::Linear { basis, .. } => {
                let coords = integer_list(v, path)?;
                if coords.len() != basis.len() {
                    return Err(LmfdbError::schema(
                        path,
                        format!("expected {} coordinates", basis.len()),
                    ));
                }
                for (c, (x, y)) in coords.iter().zip(basis) {
                    let c = Rational::from_integer(c.clone());
                    a += &c * x;
                    b += &c * y;
                }
            }
            Basis::Cyclotomic { field, m } => {
                let terms = v
                    .as_array()
                    .ok_or_else(|| LmfdbError::schema(path, "expected a list of [c, e] pairs"))?;
                for (i, t) in terms.iter().enumerate() {
                    let tp = format!("{path}[{i}]");
                    let pair = integer_list(t, &tp)?;
                    let [c, e] = pair.as_slice() else {
                        return Err(LmfdbError::schema(tp, "expected [c, e]"));
                    };
                    let zeta = RootOfUnity::new(small(e, &tp)?, *m)
                        .in_field(*field)
                        .expect("roots of unity of order 3, 4, 6 lie in the field");
                    let (x, y) = coords(&zeta);
                    let c = Rational::from_integer(c.clone());
                    a += &c * x;
                    b += &c * y;
                }
            }
        }
        match self.field() {
            FieldDesc::Rationals => Ok(FieldElem::Rat(a)),
            FieldDesc::Quadratic(d) => Ok(FieldElem::Quad(QuadElem::new(d, a, b))),
        }
    }
}

fn coords(x: &FieldElem) -> (Rational, Rational) {
    match x {
        FieldElem::Rat(r) => (r.clone(), Rational::from_integer(0.into())),
        FieldElem::Quad(q) => (q.a.clone(), q.b.clone()),
    }
}

/// Equality of values; `Rat(x)` and `Quad(x + 0 sqrt d)` are the same number.
fn same(x: &FieldElem, y: &FieldElem) -> bool {
    coords(x) == coords(y)
}

fn conj(x: &FieldElem) -> FieldElem {
    match x {
        FieldElem::Rat(_) => x.clone(),
        FieldElem::Quad(q) => FieldElem::Quad(q.conj()),
    }
}

/// The field and root nu of `field_poly` (coefficients from the constant
/// term up). For x^2 + c1 x + c0 with c1^2 - 4 c0 = s^2 d we take
/// nu = -c1/2 + (s/2) sqrt d.
fn field_from_poly(poly: &[BigInt], path: &str) -> Result<(FieldDesc, (Rational, Rational))> {
    let half = |n: &BigInt| Rational::new(n.clone(), BigInt::from(2));
    match poly.len() {
        2 if poly[1] == BigInt::from(1) => Ok((
            FieldDesc::Rationals,
            (
                Rational::from_integer(-poly[0].clone()),
                Rational::from_integer(0.into()),
            ),
        )),
        3 if poly[2] == BigInt::from(1) => {
            let (c0, c1) = (&poly[0], &poly[1]);
            let disc = small(&(c1 * c1 - BigInt::from(4) * c0), path)?;
            if disc == 0 {
                return Err(LmfdbError::schema(path, "polynomial is not separable"));
            }
            let d = squarefree_part(disc);
            let s = small(&BigInt::from(disc / d).sqrt(), path)?;
            if s * s * d != disc {
                return Err(LmfdbError::schema(path, "discriminant factorisation failed"));
            }
            if d == 1 {
                return Err(LmfdbError::schema(path, "polynomial is reducible"));
            }
            let field = FieldDesc::quadratic(d).map_err(LmfdbError::Engine)?;
            Ok((field, (half(&-c1), half(&BigInt::from(s)))))
        }
        n if n > 3 => Err(LmfdbError::Engine(EngineError::Unsupported(format!(
            "Hecke fields of degree {}",
            n - 1
        )))),
        _ => Err(LmfdbError::schema(path, "expected a monic polynomial of degree 1 or 2")),
    }
}

fn basis_from_records(newform: &Value, hecke: &Value) -> Result<Basis> {
    let dim = as_u64(get_field(newform, "newform", "dim")?, "newform.dim")?;
    if dim > 2 {
        return Err(LmfdbError::Engine(EngineError::Unsupported(format!(
            "Hecke fields of degree {dim}"
        ))));
    }
    let poly_v = hecke
        .get("field_poly")
        .filter(|v| !v.is_null())
        .or_else(|| newform.get("field_poly"));
    let poly = match poly_v {
        Some(v) if !v.is_null() => integer_list(v, "field_poly")?,
        _ if dim == 1 => vec![BigInt::from(0), BigInt::from(1)],
        _ => return Err(LmfdbError::schema("field_poly", "missing")),
    };
    if poly.len() as u64 != dim + 1 {
        return Err(LmfdbError::schema(
            "field_poly",
            format!("degree does not match dim {dim}"),
        ));
    }
    let (field, nu) = field_from_poly(&poly, "field_poly")?;

    let cyc = hecke
        .get("hecke_ring_cyclotomic_generator")
        .and_then(Value::as_u64)
        .unwrap_or(0);
    if cyc > 0 {
        let d = match cyc {
            4 => -1,
            3 | 6 => -3,
            m => {
                return Err(LmfdbError::Engine(EngineError::Unsupported(format!(
                    "cyclotomic coefficient format with m = {m}"
                ))))
            }
        };
        if field != FieldDesc::Quadratic(d) {
            return Err(LmfdbError::schema(
                "hecke_ring_cyclotomic_generator",
                format!("zeta_{cyc} is not in {field}"),
            ));
        }
        return Ok(Basis::Cyclotomic { field, m: cyc });
    }

    let zero = || Rational::from_integer(0.into());
    let one = || Rational::from_integer(1.into());
    let power_basis = || -> Vec<(Rational, Rational)> {
        if dim == 1 {
            vec![(one(), zero())]
        } else {
            vec![(one(), zero()), nu.clone()]
        }
    };
    let basis = match hecke.get("hecke_ring_numerators").filter(|v| !v.is_null()) {
        None => power_basis(),
        Some(nums) => {
            let nums = nums
                .as_array()
                .ok_or_else(|| LmfdbError::schema("hecke_ring_numerators", "expected a list"))?;
            let dens = integer_list(
                get_field(hecke, "hecke_nf", "hecke_ring_denominators")?,
                "hecke_ring_denominators",
            )?;
            if nums.len() as u64 != dim || dens.len() as u64 != dim {
                return Err(LmfdbError::schema(
                    "hecke_ring_numerators",
                    "basis size does not match dim",
                ));
            }
            let mut out = Vec::new();
            for (i, (num, den)) in nums.iter().zip(&dens).enumerate() {
                let path = format!("hecke_ring_numerators[{i}]");
                if den == &BigInt::from(0) {
                    return Err(LmfdbError::schema(
                        format!("hecke_ring_denominators[{i}]"),
                        "zero denominator",
                    ));
                }
                let num = integer_list(num, &path)?;
                if num.is_empty() || num.len() as u64 > dim {
                    return Err(LmfdbError::schema(path, "bad length"));
                }
                let den = Rational::from_integer(den.clone());
                let c0 = Rational::from_integer(num[0].clone()) / &den;
                let c1 = num
                    .get(1)
                    .map(|c| Rational::from_integer(c.clone()) / &den)
                    .unwrap_or_else(zero);
                out.push((c0 + &c1 * &nu.0, &c1 * &nu.1));
            }
            out
        }
    };
    Ok(Basis::Linear { field, basis })
}

/// The coefficients stored in an `mf_hecke_nf` record: a_n for n up to
/// the length of `an`, and a_p for primes up to `maxp`. Returns the map and
/// the largest prime covered.
fn coefficients(hecke: &Value, basis: &Basis) -> Result<(BTreeMap<u64, FieldElem>, u64)> {
    let mut out = BTreeMap::new();
    if let Some(an) = hecke.get("an").filter(|v| !v.is_null()) {
        let an = an
            .as_array()
            .ok_or_else(|| LmfdbError::schema("an", "expected a list"))?;
        for (i, v) in an.iter().enumerate() {
            out.insert(i as u64 + 1, basis.element(v, &format!("an[{i}]"))?);
        }
    }
    let an_len = out.len() as u64;
    let mut bound = an_len;
    if let Some(ap) = hecke.get("ap").filter(|v| !v.is_null()) {
        let ap = ap
            .as_array()
            .ok_or_else(|| LmfdbError::schema("ap", "expected a list"))?;
        let maxp = match hecke.get("maxp").filter(|v| !v.is_null()) {
            Some(v) => as_u64(v, "maxp")?,
            None => primes_up_to(ap.len() as u64 * 20)
                .get(ap.len().saturating_sub(1))
                .copied()
                .unwrap_or(1),
        };
        if maxp > MAX_PRIME_BOUND {
            return Err(LmfdbError::schema("maxp", format!("{maxp} exceeds {MAX_PRIME_BOUND}")));
        }
        let primes = primes_up_to(maxp);
        if primes.len() != ap.len() {
            return Err(LmfdbError::schema(
                "ap",
                format!("{} entries but {} primes up to maxp", ap.len(), primes.len()),
            ));
        }
        for (i, (&p, v)) in primes.iter().zip(ap).enumerate() {
            let path = format!("ap[{i}]");
            let a = basis.element(v, &path)?;
            match out.get(&p) {
                Some(prev) if !same(prev, &a) => {
                    return Err(LmfdbError::schema(
                        path,
                        format!("a_{p} disagrees with an: {a} vs {prev}"),
                    ));
                }
                _ => {
                    out.insert(p, a);
                }
            }
        }
        bound = bound.max(maxp);
    }
    match out.get(&1) {
        Some(a1) if same(a1, &FieldElem::one()) => Ok((out, bound)),
        _ => Err(LmfdbError::schema("an[0]", "a_1 must be 1")),
    }
}

/// Primes p not dividing N with a_p stored, up to [`CHECK_PRIMES`].
fn check_primes(level: u64, coeffs: &BTreeMap<u64, FieldElem>) -> Vec<(u64, &FieldElem)> {
    primes_up_to(CHECK_PRIMES)
        .into_iter()
        .filter(|p| level % p != 0)
        .filter_map(|p| coeffs.get(&p).map(|a| (p, a)))
        .collect()
}

/// Whether gamma(a_p) = chi(p) a_p for every checked prime.
fn twists_by(chi: &DirichletCharacter, auto: TwistAuto, field: FieldDesc, primes: &[(u64, &FieldElem)]) -> bool {
    primes.iter().all(|&(p, a)| {
        let image = match auto {
            TwistAuto::Id => a.clone(),
            TwistAuto::Conj => conj(a),
        };
        if a.is_zero() {
            return true;
        }
        let Ok(value) = chi.evaluate(p as i64) else {
            return false;
        };
        match value.in_field(field) {
            Some(v) => a.mul(&v).map(|x| same(&x, &image)).unwrap_or(false),
            None => false,
        }
    })
}

fn all_characters(modulus: u64) -> Vec<DirichletCharacter> {
    (1..modulus.max(2))
        .filter_map(|n| DirichletCharacter::from_conrey(modulus, n).ok())
        .collect()
}

/// The nebentypus among the Conrey orbit: complex conjugation acts on
/// the coefficients as conj(a_p) = eps(p)^-1 a_p.
fn choose_nebentypus(
    level: u64,
    weight: u32,
    candidates: &[u64],
    field: FieldDesc,
    primes: &[(u64, &FieldElem)],
) -> Result<DirichletCharacter> {
    let complex_conj = match field {
        FieldDesc::Quadratic(d) if d < 0 => TwistAuto::Conj,
        _ => TwistAuto::Id,
    };
    for &n in candidates {
        let eps = DirichletCharacter::from_conrey(level, n)
            .map_err(|e| LmfdbError::schema("conrey_indexes", e.to_string()))?;
        if twists_by(&eps.inverse(), complex_conj, field, primes) {
            let parity = eps.evaluate(-1).ok().and_then(|r| r.sign());
            let expected = if weight % 2 == 0 { 1 } else { -1 };
            if parity != Some(expected) {
                return Err(LmfdbError::schema(
                    "conrey_indexes",
                    format!("eps(-1) != (-1)^{weight} for {level}.{n}"),
                ));
            }
            return Ok(eps);
        }
    }
    Err(LmfdbError::schema(
        "conrey_indexes",
        "no character in the orbit matches the coefficients",
    ))
}

/// Builds validated newform data from the `mf_newforms` and `mf_hecke_nf`
/// records of one form.
pub fn newform_from_records(newform: &Value, hecke: &Value) -> Result<NewformData> {
    let label = get_field(newform, "newform", "label")?
        .as_str()
        .ok_or_else(|| LmfdbError::schema("newform.label", "expected a string"))?
        .to_string();
    if newform.get("is_cm").and_then(Value::as_bool).unwrap_or(false) {
        return Err(LmfdbError::Engine(EngineError::CmNotSupported));
    }
    let level = as_u64(get_field(newform, "newform", "level")?, "newform.level")?;
    let weight = as_u64(get_field(newform, "newform", "weight")?, "newform.weight")?;
    let weight = u32::try_from(weight).map_err(|_| LmfdbError::schema("newform.weight", "out of range"))?;
    if level == 0 {
        return Err(LmfdbError::schema("newform.level", "must be positive"));
    }
    if level > MAX_LEVEL {
        return Err(LmfdbError::Engine(EngineError::Unsupported(format!(
            "ingesting level {level} > {MAX_LEVEL}"
        ))));
    }

    let basis = basis_from_records(newform, hecke)?;
    let hecke_field = basis.field();
    let (coefficients, coeff_bound) = coefficients(hecke, &basis)?;
    let primes = check_primes(level, &coefficients);

    let candidates: Vec<u64> = match newform.get("conrey_indexes").filter(|v| !v.is_null()) {
        Some(v) => integer_list(v, "newform.conrey_indexes")?
            .iter()
            .enumerate()
            .map(|(i, n)| {
                u64::try_from(n).map_err(|_| LmfdbError::schema(format!("newform.conrey_indexes[{i}]"), "out of range"))
            })
            .collect::<Result<_>>()?,
        None => (1..level.max(2)).collect(),
    };
    let nebentypus = choose_nebentypus(level, weight, &candidates, hecke_field, &primes)?;

    let autos: &[TwistAuto] = match hecke_field {
        FieldDesc::Rationals => &[TwistAuto::Id],
        FieldDesc::Quadratic(_) => &[TwistAuto::Id, TwistAuto::Conj],
    };
    let mut inner_twists = Vec::new();
    for &auto in autos {
        for chi in all_characters(level) {
            if twists_by(&chi, auto, hecke_field, &primes) {
                inner_twists.push(InnerTwist::new(auto, chi));
            }
        }
    }

    let eps_rational = primes.iter().all(|&(p, a)| {
        if a.is_zero() {
            return true;
        }
        let Some(eps_inv) = nebentypus
            .evaluate(p as i64)
            .ok()
            .and_then(|e| e.inv().in_field(hecke_field))
        else {
            return false;
        };
        a.square().mul(&eps_inv).ok().is_some_and(|x| x.as_rational().is_some())
    });
    let f_field = if eps_rational {
        FieldDesc::Rationals
    } else {
        hecke_field
    };

    // LMFDB records twist-minimality for the whole form only.
    let mut p_minimal = BTreeMap::new();
    if newform.get("is_twist_minimal").and_then(Value::as_bool) == Some(true) {
        for (p, _) in scbrauer::arith::factorize(level) {
            p_minimal.insert(p, true);
        }
    }

    let f = NewformData {
        label,
        level,
        weight,
        nebentypus,
        hecke_field,
        coefficients,
        coeff_bound,
        inner_twists,
        f_field,
        is_cm: false,
        p_minimal,
    };
    f.validate()?;
    Ok(f)
}

/// Reads `{"newform": .., "hecke_nf": ..}` as stored in a cache entry.
pub fn newform_from_payload(payload: &Value) -> Result<NewformData> {
    let newform = get_field(payload, "payload", "newform")?;
    let hecke = get_field(payload, "payload", "hecke_nf")?;
    newform_from_records(newform, hecke)
}
