//! Expert-supplied local data: the inertial descriptor and error-term inputs.

use crate::arith::{format_rational, parse_rational, qp_quadratic_type, rat_int, QpQuadType, Rational};
use crate::{Error, Result};
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    DihedralUnramified,
    DihedralRamified,
    Exceptional,
}

/// Local Langlands data at p that the q-expansion does not determine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertialDescriptor {
    pub kind: DescriptorKind,
    /// K = Q_p(sqrt k_disc); absent for exceptional descriptors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_disc: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_chi: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<i64>,
    #[serde(default)]
    pub r: u32,
    #[serde(default)]
    pub s: u32,
    #[serde(default)]
    pub level_zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_kprime: Option<i64>,
    /// D(-1), needed for exceptional primes of even weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_minus_one: Option<i8>,
}

impl InertialDescriptor {
    pub fn dihedral(kind: DescriptorKind, k_disc: i64, a_chi: u32) -> Self {
        InertialDescriptor {
            kind,
            k_disc: Some(k_disc),
            a_chi: Some(a_chi),
            l: None,
            r: 0,
            s: 0,
            level_zero: false,
            d_kprime: None,
            d_minus_one: None,
        }
    }

    pub fn exceptional(d_kprime: i64) -> Self {
        InertialDescriptor {
            kind: DescriptorKind::Exceptional,
            k_disc: None,
            a_chi: None,
            l: None,
            r: 0,
            s: 0,
            level_zero: false,
            d_kprime: Some(d_kprime),
            d_minus_one: None,
        }
    }

    pub fn is_dihedral(&self) -> bool {
        self.kind != DescriptorKind::Exceptional
    }

    /// The type of K over Q_p, checked against the declared kind.
    pub fn k_type(&self, p: u64) -> Result<Option<QpQuadType>> {
        let Some(d) = self.k_disc else { return Ok(None) };
        let t = qp_quadratic_type(&rat_int(d), p);
        match (self.kind, t) {
            (_, QpQuadType::Trivial) => Err(Error::NotQuadratic(format!("{d} is a square in Q_{p}"))),
            (DescriptorKind::DihedralUnramified, QpQuadType::Unramified)
            | (DescriptorKind::DihedralRamified, QpQuadType::Ramified { .. }) => Ok(Some(t)),
            _ => Err(Error::ConsistencyViolation(format!(
                "kind {:?} but Q_{p}(sqrt {d}) is {t:?}",
                self.kind
            ))),
        }
    }

    /// Structural checks that need no level information. Fields that are
    /// merely absent are not errors here; `decide` reports them as missing.
    pub fn validate(&self, p: u64) -> Result<()> {
        let path = |f: &str| format!("descriptor.{f}");
        match self.kind {
            DescriptorKind::Exceptional => {
                if p != 2 {
                    return Err(Error::parse(path("kind"), format!("exceptional descriptor at p = {p}")));
                }
                if self.k_disc.is_some() {
                    return Err(Error::parse(path("k_disc"), "exceptional descriptors carry no K"));
                }
                if self.d_kprime == Some(0) {
                    return Err(Error::parse(path("d_kprime"), "zero discriminant"));
                }
            }
            _ => {
                if self.d_kprime.is_some() {
                    return Err(Error::parse(
                        path("d_kprime"),
                        "only exceptional descriptors carry D_K'",
                    ));
                }
                self.k_type(p)?;
            }
        }
        if let Some(x) = self.d_minus_one {
            if x != 1 && x != -1 {
                return Err(Error::parse(path("d_minus_one"), format!("{x} is not a sign")));
            }
        }
        if p == 2 {
            if self.level_zero {
                return Err(Error::parse(path("level_zero"), "level zero is an odd-p notion"));
            }
        } else if self.r != 0 || self.s != 0 {
            return Err(Error::parse(path("r"), "r and s are 2-adic exponents"));
        }
        if self.level_zero && self.kind != DescriptorKind::DihedralUnramified {
            return Err(Error::parse(path("level_zero"), "level zero needs unramified K"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_json(path.as_ref())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        parse_json(text)
    }
}

/// The exponent a(Ind chi) predicted by the descriptor at 2: v_2(disc K) + f(K) a(chi).
pub fn predicted_n2(desc: &InertialDescriptor) -> Result<u32> {
    let (Some(_), Some(a)) = (desc.k_disc, desc.a_chi) else {
        return Err(Error::InsufficientData("k_disc and a_chi are both needed".into()));
    };
    Ok(match desc.k_type(2)? {
        Some(QpQuadType::Unramified) => 2 * a,
        Some(QpQuadType::Ramified { disc_val }) => disc_val + a,
        _ => unreachable!("k_type rejects trivial K"),
    })
}

/// Checks a dihedral descriptor at 2 against the level exponent N_2.
pub fn check_conductor(desc: &InertialDescriptor, n_2: u32) -> Result<()> {
    if !desc.is_dihedral() {
        return Err(Error::WrongCase(
            "conductor formula applies to dihedral descriptors".into(),
        ));
    }
    desc.validate(2)?;
    let violation = |what: String| Err(Error::ConsistencyViolation(what));
    let predicted = predicted_n2(desc)?;
    if predicted != n_2 {
        return violation(format!("N_2 = {n_2} but the descriptor gives {predicted}"));
    }
    let unramified = desc.kind == DescriptorKind::DihedralUnramified;
    let a = desc.a_chi.unwrap_or(0);
    if n_2 == 2 && !(unramified && a == 1) {
        return violation(format!(
            "N_2 = 2 needs unramified K with a(chi) = 1, got {:?} with a(chi) = {a}",
            desc.kind
        ));
    }
    if unramified && n_2 % 2 != 0 {
        return violation(format!("unramified K forces N_2 even, got {n_2}"));
    }
    // chi_1, chi_2 have 2-power order, so they vanish on tame inertia.
    let tame = unramified && a <= 1;
    if tame && (desc.r, desc.s) != (0, 0) {
        return violation(format!(
            "a(chi) = {a} leaves no room for r = {}, s = {}",
            desc.r, desc.s
        ));
    }
    if !tame && desc.r >= desc.s {
        return violation(format!("r < s is required, got r = {}, s = {}", desc.r, desc.s));
    }
    Ok(())
}

/// Whether a dihedral descriptor is consistent with N_2.
pub fn conductor_consistency(desc: &InertialDescriptor, n_2: u32) -> bool {
    check_conductor(desc, n_2).is_ok()
}

/// Quadratic-extension data cut out by the error-term characters, plus the
/// image of pi^2 in F_v. Values are stated relative to `uniformizer`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorTermData {
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub t: Option<Rational>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub t1: Option<Rational>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub t2: Option<Rational>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub c: Option<Rational>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub d0: Option<Rational>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub pi_squared: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniformizer: Option<String>,
}

impl ErrorTermData {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("t", &self.t),
            ("t1", &self.t1),
            ("t2", &self.t2),
            ("c", &self.c),
            ("d0", &self.d0),
            ("pi_squared", &self.pi_squared),
        ];
        for (name, v) in fields {
            if v.as_ref().is_some_and(|x| x.is_zero()) {
                return Err(Error::parse(format!("error_terms.{name}"), "must be nonzero"));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let e: Self = load_json(path.as_ref())?;
        e.validate()?;
        Ok(e)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let e: Self = parse_json(text)?;
        e.validate()?;
        Ok(e)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(path, e.into_inner().to_string())
    })
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}

mod opt_rational {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(r) => s.serialize_str(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Int(n)) => Ok(Some(rat_int(n))),
            Some(Raw::Str(s)) => parse_rational(&s).map(Some).map_err(serde::de::Error::custom),
        }
    }
}
