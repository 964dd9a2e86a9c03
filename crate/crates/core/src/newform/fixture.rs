//! The JSON fixture format.
//!
//! Rationals are "num/den" strings and Hecke-field elements are coordinate
//! pairs in the basis (1, sqrt d). The `disc` of a quadratic field may be
//! given as the squarefree d or as the field discriminant; both name the
//! same field and d is written back.

use super::{InnerTwist, NewformData, TwistAuto};
use crate::arith::{format_rational, parse_rational, squarefree_part, FieldDesc, FieldElem};
use crate::dirichlet::{DirichletCharacter, RootOfUnity};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureFile {
    label: String,
    level: u64,
    weight: u32,
    #[serde(rename = "char")]
    character: CharJson,
    hecke_field: FieldJson,
    an: Vec<CoeffJson>,
    coeff_bound: u64,
    #[serde(default)]
    inner_twists: Vec<TwistJson>,
    #[serde(rename = "F")]
    f_field: FieldJson,
    is_cm: bool,
    #[serde(default)]
    is_p_minimal: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CharJson {
    modulus: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conrey: Option<u64>,
    /// Exponents x of e(x) on the canonical generators, as "num/den".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values_on_gens: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldJson {
    degree: u32,
    disc: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffJson {
    n: u64,
    a: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwistJson {
    auto: TwistAuto,
    #[serde(rename = "char")]
    character: CharJson,
    ramified: bool,
}

fn field_from_json(f: &FieldJson, path: &str) -> Result<FieldDesc> {
    match f.degree {
        1 if f.disc == 1 => Ok(FieldDesc::Rationals),
        1 => Err(Error::parse(format!("{path}.disc"), "degree 1 requires disc 1")),
        2 => {
            if f.disc == 0 {
                return Err(Error::parse(format!("{path}.disc"), "zero discriminant"));
            }
            let d = squarefree_part(f.disc);
            let field = FieldDesc::quadratic(d).map_err(|e| Error::parse(format!("{path}.disc"), e.to_string()))?;
            if f.disc != d && f.disc != field.disc() {
                return Err(Error::parse(
                    format!("{path}.disc"),
                    format!("{} is neither d nor a discriminant", f.disc),
                ));
            }
            Ok(field)
        }
        n => Err(Error::Unsupported(format!("{path}: degree {n} fields"))),
    }
}

fn field_to_json(f: FieldDesc) -> FieldJson {
    match f {
        FieldDesc::Rationals => FieldJson { degree: 1, disc: 1 },
        FieldDesc::Quadratic(d) => FieldJson { degree: 2, disc: d },
    }
}

/// Levels and moduli above this are refused; character arithmetic is
/// linear in the modulus.
pub const MAX_MODULUS: u64 = 1_000_000;

fn char_from_json(c: &CharJson, path: &str) -> Result<DirichletCharacter> {
    if c.modulus > MAX_MODULUS {
        return Err(Error::Unsupported(format!(
            "{path}.modulus {} exceeds {MAX_MODULUS}",
            c.modulus
        )));
    }
    let wrap = |sub: &str, e: Error| match e {
        Error::Parse { msg, .. } => Error::parse(format!("{path}.{sub}"), msg),
        other => Error::parse(format!("{path}.{sub}"), other.to_string()),
    };
    let from_conrey = c
        .conrey
        .map(|n| DirichletCharacter::from_conrey(c.modulus, n).map_err(|e| wrap("conrey", e)))
        .transpose()?;
    let from_values =
        match &c.values_on_gens {
            Some(vals) => {
                let mut images = Vec::with_capacity(vals.len());
                for (i, v) in vals.iter().enumerate() {
                    let x = parse_rational(v).map_err(|e| wrap(&format!("values_on_gens[{i}]"), e))?;
                    let den: u64 =
                        x.denom().try_into().ok().filter(|&d| d <= MAX_MODULUS).ok_or_else(|| {
                            Error::parse(format!("{path}.values_on_gens[{i}]"), "denominator too large")
                        })?;
                    let num: i64 = (x.numer() % x.denom()).try_into().unwrap();
                    images.push(RootOfUnity::new(num, den));
                }
                Some(DirichletCharacter::new(c.modulus, images).map_err(|e| wrap("values_on_gens", e))?)
            }
            None => None,
        };
    match (from_conrey, from_values) {
        (Some(a), Some(b)) if a.images() != b.images() => Err(Error::parse(
            format!("{path}.values_on_gens"),
            "disagrees with the Conrey label",
        )),
        (Some(a), _) => Ok(a),
        (None, Some(b)) => Ok(b),
        (None, None) => Err(Error::parse(path, "needs conrey or values_on_gens")),
    }
}

fn char_to_json(c: &DirichletCharacter) -> CharJson {
    match c.conrey() {
        Some(n) => CharJson {
            modulus: c.modulus(),
            conrey: Some(n),
            values_on_gens: None,
        },
        None => CharJson {
            modulus: c.modulus(),
            conrey: None,
            values_on_gens: Some(c.images().iter().map(|r| format!("{}/{}", r.num(), r.den())).collect()),
        },
    }
}

fn to_newform(file: FixtureFile) -> Result<NewformData> {
    if file.is_cm {
        return Err(Error::CmNotSupported);
    }
    if file.level > MAX_MODULUS {
        return Err(Error::Unsupported(format!(
            "level {} exceeds {MAX_MODULUS}",
            file.level
        )));
    }
    let hecke_field = field_from_json(&file.hecke_field, "hecke_field")?;
    let f_field = field_from_json(&file.f_field, "F")?;
    let nebentypus = char_from_json(&file.character, "char")?;
    if file.an.is_empty() {
        return Err(Error::parse("an", "empty coefficient list"));
    }
    let mut coefficients = BTreeMap::new();
    let mut last = 0;
    for (i, c) in file.an.iter().enumerate() {
        let path = format!("an[{i}]");
        if c.n <= last {
            return Err(Error::parse(
                format!("{path}.n"),
                "indices must be strictly increasing and positive",
            ));
        }
        last = c.n;
        if c.a.len() != hecke_field.degree() as usize {
            return Err(Error::parse(
                format!("{path}.a"),
                format!("expected {} coordinates, got {}", hecke_field.degree(), c.a.len()),
            ));
        }
        let mut coords = Vec::with_capacity(2);
        for (j, s) in c.a.iter().enumerate() {
            coords.push(
                parse_rational(s).map_err(|_| Error::parse(format!("{path}.a[{j}]"), format!("bad rational {s:?}")))?,
            );
        }
        let b = coords.get(1).cloned().unwrap_or_default();
        coefficients.insert(c.n, hecke_field.elem(coords[0].clone(), b)?);
    }
    let mut inner_twists = Vec::with_capacity(file.inner_twists.len());
    for (i, t) in file.inner_twists.iter().enumerate() {
        let chi = char_from_json(&t.character, &format!("inner_twists[{i}].char"))?;
        inner_twists.push(InnerTwist {
            auto: t.auto,
            chi,
            ramified: t.ramified,
        });
    }
    let mut p_minimal = BTreeMap::new();
    for (k, v) in &file.is_p_minimal {
        let p: u64 = k
            .parse()
            .map_err(|_| Error::parse(format!("is_p_minimal.{k}"), "key is not an integer"))?;
        p_minimal.insert(p, *v);
    }
    let f = NewformData {
        label: file.label,
        level: file.level,
        weight: file.weight,
        nebentypus,
        hecke_field,
        coefficients,
        coeff_bound: file.coeff_bound,
        inner_twists,
        f_field,
        is_cm: false,
        p_minimal,
    };
    f.validate()?;
    Ok(f)
}

fn to_file(f: &NewformData, metadata: Option<serde_json::Value>) -> FixtureFile {
    let coord = |x: &FieldElem| -> Vec<String> {
        match (x, f.hecke_field) {
            (FieldElem::Rat(r), FieldDesc::Rationals) => vec![format_rational(r)],
            (FieldElem::Rat(r), FieldDesc::Quadratic(_)) => vec![format_rational(r), "0".into()],
            (FieldElem::Quad(q), FieldDesc::Rationals) => vec![format_rational(&q.a)],
            (FieldElem::Quad(q), FieldDesc::Quadratic(_)) => vec![format_rational(&q.a), format_rational(&q.b)],
        }
    };
    FixtureFile {
        label: f.label.clone(),
        level: f.level,
        weight: f.weight,
        character: char_to_json(&f.nebentypus),
        hecke_field: field_to_json(f.hecke_field),
        an: f
            .coefficients
            .iter()
            .map(|(&n, a)| CoeffJson { n, a: coord(a) })
            .collect(),
        coeff_bound: f.coeff_bound,
        inner_twists: f
            .inner_twists
            .iter()
            .map(|t| TwistJson {
                auto: t.auto,
                character: char_to_json(&t.chi),
                ramified: t.ramified,
            })
            .collect(),
        f_field: field_to_json(f.f_field),
        is_cm: f.is_cm,
        is_p_minimal: f.p_minimal.iter().map(|(p, v)| (p.to_string(), *v)).collect(),
        metadata,
    }
}

/// Parses and validates a fixture from JSON text.
pub fn from_json_str(text: &str) -> Result<NewformData> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: FixtureFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(path, e.into_inner().to_string())
    })?;
    to_newform(file)
}

pub fn to_json_string(f: &NewformData) -> String {
    to_json_string_with_metadata(f, None)
}

/// Like [`to_json_string`], attaching an opaque `metadata` object.
pub fn to_json_string_with_metadata(f: &NewformData, metadata: Option<serde_json::Value>) -> String {
    serde_json::to_string_pretty(&to_file(f, metadata)).expect("fixture serialises")
}

pub fn load_fixture(path: impl AsRef<Path>) -> Result<NewformData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_json_str(&text)
}

pub fn save_fixture(f: &NewformData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(f) + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
