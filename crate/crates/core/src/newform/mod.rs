//! Newform data, local decomposition at a prime, supercuspidal
//! classification and places of F.

mod fixture;

pub use fixture::{
    from_json_str, load_fixture, save_fixture, to_json_string, to_json_string_with_metadata, MAX_MODULUS,
};

use crate::arith::{factorize, val_u64, FieldDesc, FieldElem, PrimeIdealData};
use crate::dirichlet::DirichletCharacter;
use crate::hilbert::SymbolPlace;
use crate::{Error, Result};
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The field automorphism attached to an inner twist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwistAuto {
    Id,
    Conj,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerTwist {
    pub auto: TwistAuto,
    pub chi: DirichletCharacter,
    /// Derived from the conductor of `chi`: ramified iff cond > 1.
    pub ramified: bool,
}

impl InnerTwist {
    pub fn new(auto: TwistAuto, chi: DirichletCharacter) -> Self {
        let ramified = chi.conductor() > 1;
        InnerTwist { auto, chi, ramified }
    }
}

/// A normalised non-CM newform with exact coefficients up to `coeff_bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewformData {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub nebentypus: DirichletCharacter,
    pub hecke_field: FieldDesc,
    pub coefficients: BTreeMap<u64, FieldElem>,
    pub coeff_bound: u64,
    pub inner_twists: Vec<InnerTwist>,
    /// The field generated by a_p^2 eps(p)^-1.
    pub f_field: FieldDesc,
    pub is_cm: bool,
    pub p_minimal: BTreeMap<u64, bool>,
}

impl NewformData {
    pub fn coefficient(&self, n: u64) -> Option<&FieldElem> {
        self.coefficients.get(&n)
    }

    /// a_n, or `InsufficientData` when it is not stored.
    pub fn require_coefficient(&self, n: u64) -> Result<&FieldElem> {
        self.coefficient(n).ok_or_else(|| {
            Error::InsufficientData(format!(
                "a_{n} is not stored for {} (coefficients known up to {})",
                self.label, self.coeff_bound
            ))
        })
    }

    pub fn is_p_minimal(&self, p: u64) -> Option<bool> {
        self.p_minimal.get(&p).copied()
    }

    /// Checks the structural invariants; fixtures are validated on load.
    pub fn validate(&self) -> Result<()> {
        if self.is_cm {
            return Err(Error::CmNotSupported);
        }
        if self.level == 0 {
            return Err(Error::parse("level", "level must be positive"));
        }
        if self.weight < 2 {
            return Err(Error::parse("weight", "weight must be at least 2"));
        }
        if self.nebentypus.modulus() != self.level {
            return Err(Error::parse("char.modulus", "nebentypus modulus must equal the level"));
        }
        match self.coefficients.get(&1) {
            Some(a1) if a1.as_rational().is_some_and(|x| x.is_one()) => {}
            Some(_) => return Err(Error::parse("an", "a_1 must be 1")),
            None => return Err(Error::parse("an", "a_1 is missing")),
        }
        if let Some((&n, _)) = self.coefficients.iter().next_back() {
            if n > self.coeff_bound {
                return Err(Error::parse("coeff_bound", format!("a_{n} stored beyond the bound")));
            }
        }
        for (&n, a) in &self.coefficients {
            if !a.lies_in(self.hecke_field) {
                return Err(Error::parse(
                    format!("an[n={n}]"),
                    format!("{a} is not in {}", self.hecke_field),
                ));
            }
        }
        let level_primes: Vec<u64> = factorize(self.level).into_iter().map(|(p, _)| p).collect();
        for (i, tw) in self.inner_twists.iter().enumerate() {
            let path = format!("inner_twists[{i}]");
            let m = tw.chi.modulus();
            if factorize(m).iter().any(|(p, _)| !level_primes.contains(p)) {
                return Err(Error::parse(
                    format!("{path}.char.modulus"),
                    format!("modulus {m} does not divide a power of the level"),
                ));
            }
            if tw.ramified != (tw.chi.conductor() > 1) {
                return Err(Error::parse(
                    format!("{path}.ramified"),
                    format!("flag {} disagrees with conductor {}", tw.ramified, tw.chi.conductor()),
                ));
            }
            if tw.auto == TwistAuto::Conj && self.hecke_field == FieldDesc::Rationals {
                return Err(Error::parse(
                    format!("{path}.auto"),
                    "conjugation on a rational Hecke field",
                ));
            }
        }
        match (self.f_field, self.hecke_field) {
            (FieldDesc::Quadratic(_), FieldDesc::Rationals) => {
                return Err(Error::parse("F", "F is larger than the Hecke field"))
            }
            (FieldDesc::Quadratic(a), FieldDesc::Quadratic(b)) if a != b => {
                return Err(Error::parse("F", "a quadratic F must equal the Hecke field"))
            }
            _ => {}
        }
        for &p in self.p_minimal.keys() {
            if !crate::arith::is_prime(p) {
                return Err(Error::parse(format!("is_p_minimal.{p}"), "key is not a prime"));
            }
        }
        Ok(())
    }
}

/// Assembles a [`NewformData`] in code, e.g. for synthetic test cases.
#[derive(Debug, Clone)]
pub struct NewformBuilder {
    f: NewformData,
}

impl NewformBuilder {
    pub fn new(label: impl Into<String>, level: u64, weight: u32) -> Self {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(1, FieldElem::one());
        NewformBuilder {
            f: NewformData {
                label: label.into(),
                level,
                weight,
                nebentypus: DirichletCharacter::trivial(level),
                hecke_field: FieldDesc::Rationals,
                coefficients,
                coeff_bound: 1,
                inner_twists: Vec::new(),
                f_field: FieldDesc::Rationals,
                is_cm: false,
                p_minimal: BTreeMap::new(),
            },
        }
    }

    pub fn nebentypus(mut self, chi: DirichletCharacter) -> Self {
        self.f.nebentypus = chi;
        self
    }

    pub fn hecke_field(mut self, field: FieldDesc) -> Self {
        self.f.hecke_field = field;
        self
    }

    pub fn f_field(mut self, field: FieldDesc) -> Self {
        self.f.f_field = field;
        self
    }

    pub fn coefficient(mut self, n: u64, a: FieldElem) -> Self {
        self.f.coeff_bound = self.f.coeff_bound.max(n);
        self.f.coefficients.insert(n, a);
        self
    }

    /// Sets a_n = value(n) for every n <= bound not already set.
    pub fn fill(mut self, bound: u64, value: impl Fn(u64) -> FieldElem) -> Self {
        for n in 2..=bound {
            self.f.coefficients.entry(n).or_insert_with(|| value(n));
        }
        self.f.coeff_bound = self.f.coeff_bound.max(bound);
        self
    }

    pub fn twist(mut self, auto: TwistAuto, chi: DirichletCharacter) -> Self {
        self.f.inner_twists.push(InnerTwist::new(auto, chi));
        self
    }

    pub fn p_minimal(mut self, p: u64, flag: bool) -> Self {
        self.f.p_minimal.insert(p, flag);
        self
    }

    pub fn build(self) -> Result<NewformData> {
        self.f.validate()?;
        Ok(self.f)
    }
}

/// N = p^N_p N' and the conductor exponent of the p-part of the nebentypus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeLocalData {
    pub p: u64,
    pub n_p: u32,
    pub n_prime: u64,
    pub c_p: u32,
    pub a_p: Option<FieldElem>,
}

pub fn local_decompose(f: &NewformData, p: u64) -> PrimeLocalData {
    let n_p = val_u64(f.level, p);
    let n_prime = f.level / p.pow(n_p);
    let (eps_p, _) = f.nebentypus.p_decompose(p);
    PrimeLocalData {
        p,
        n_p,
        n_prime,
        c_p: eps_p.conductor_exponent(p),
        a_p: f.coefficient(p).cloned(),
    }
}

/// C_p < N_p, N_p >= 2 and a_p = 0.
pub fn is_supercuspidal(local: &PrimeLocalData) -> Result<bool> {
    let a_p = local
        .a_p
        .as_ref()
        .ok_or_else(|| Error::InsufficientData(format!("a_{} is outside the stored coefficient range", local.p)))?;
    Ok(local.c_p < local.n_p && local.n_p >= 2 && a_p.is_zero())
}

/// The supercuspidal primes of `f` (all divide the level).
pub fn supercuspidal_primes(f: &NewformData) -> Result<Vec<PrimeLocalData>> {
    let mut out = Vec::new();
    for (p, _) in factorize(f.level) {
        let local = local_decompose(f, p);
        if is_supercuspidal(&local)? {
            out.push(local);
        }
    }
    Ok(out)
}

/// A place v of F above p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Place {
    pub field: FieldDesc,
    pub p: u64,
    pub e_v: u8,
    pub f_v: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<u64>,
}

impl Place {
    pub fn from_ideal(field: FieldDesc, ideal: PrimeIdealData) -> Self {
        Place {
            field,
            p: ideal.p,
            e_v: ideal.e,
            f_v: ideal.f,
            root: ideal.root,
        }
    }

    pub fn ideal(&self) -> PrimeIdealData {
        PrimeIdealData {
            p: self.p,
            e: self.e_v,
            f: self.f_v,
            root: self.root,
        }
    }

    pub fn local_degree(&self) -> u32 {
        self.e_v as u32 * self.f_v as u32
    }

    pub fn symbol_place(&self) -> Result<SymbolPlace> {
        SymbolPlace::new(self.field, self.ideal())
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "v | {} of {} (e_v={}, f_v={}",
            self.p, self.field, self.e_v, self.f_v
        )?;
        if let Some(r) = self.root {
            write!(f, ", sqrt = {r}")?;
        }
        write!(f, ")")
    }
}

pub fn places_above(f: &NewformData, p: u64) -> Vec<Place> {
    f.f_field
        .primes_above(p)
        .into_iter()
        .map(|i| Place::from_ideal(f.f_field, i))
        .collect()
}
