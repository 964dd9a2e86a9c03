//! Per-place decision of the local Brauer class of the endomorphism algebra.
//!
//! [`decide`] dispatches on the prime and the inertial descriptor, runs the
//! auxiliary-prime sieves it needs, and combines the slope parity with the
//! relevant error term. Inputs the engine cannot derive from coefficients
//! make the verdict `Undetermined` instead of being guessed.

mod inputs;
mod terms;

pub use inputs::{
    check_conductor, conductor_consistency, predicted_n2, DescriptorKind, ErrorTermData, InertialDescriptor,
};
pub use terms::{
    companion_slope, d0_from_p_tprime, error_term_odd_bad, error_term_odd_ramified, error_term_p2_dihedral,
    exceptional_sign, into_f, is_good, is_good_shortcut, k_relation, t_s_squared, twisted_square, KRelation, Slope,
};

use crate::auxprimes::{find_p_dagger, find_p_dprime, find_p_prime, find_p_tprime, AuxKind};
use crate::newform::{is_supercuspidal, local_decompose, NewformData, Place, PrimeLocalData};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Ramified,
    MatrixAlgebra,
    Undetermined,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Which statement the verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "Thm3.2")]
    Thm3_2,
    #[serde(rename = "Thm3.4")]
    Thm3_4,
    #[serde(rename = "Thm3.5")]
    Thm3_5,
    #[serde(rename = "Cor3.6")]
    Cor3_6,
    #[serde(rename = "Thm3.7")]
    Thm3_7,
    #[serde(rename = "Cor3.8")]
    Cor3_8,
    #[serde(rename = "Cor6.9")]
    Cor6_9,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        f.write_str(s.as_str().unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Fixture,
    Descriptor,
    ErrorTerms,
    Sieve,
    Computed,
    Metadata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: String,
    pub value: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace(pub Vec<TraceStep>);

impl Trace {
    pub fn push(&mut self, step: impl Into<String>, value: impl Into<String>, provenance: Provenance) {
        self.0.push(TraceStep {
            step: step.into(),
            value: value.into(),
            provenance,
        });
    }

    pub fn extend(&mut self, other: Trace) {
        self.0.extend(other.0);
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.0
    }
}

/// An error-term parity, or what is still needed to compute it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorParity {
    Known(u8),
    Unknown { missing: Vec<String>, residual: String },
}

impl ErrorParity {
    pub fn unknown(missing: Vec<String>, residual: impl Into<String>) -> Self {
        ErrorParity::Unknown {
            missing,
            residual: residual.into(),
        }
    }

    pub fn known(&self) -> Option<u8> {
        match self {
            ErrorParity::Known(n) => Some(*n),
            ErrorParity::Unknown { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub place: Place,
    pub status: Status,
    pub m_v: Option<i64>,
    pub error_parity: Option<u8>,
    /// Absent only when the dispatch itself awaits inputs.
    pub theorem: Option<Theorem>,
    pub aux_primes: BTreeMap<String, u64>,
    pub trace: Vec<TraceStep>,
    pub missing_inputs: Vec<String>,
    /// The symbolic expression still to be evaluated, when undetermined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    /// The sign of the class, for the exceptional formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
}

impl Verdict {
    fn base(place: Place, theorem: Option<Theorem>, aux: &AuxPrimes, trace: Trace) -> Self {
        Verdict {
            place,
            status: Status::Undetermined,
            m_v: None,
            error_parity: None,
            theorem,
            aux_primes: aux.0.clone(),
            trace: trace.0,
            missing_inputs: Vec::new(),
            residual: None,
            sign: None,
        }
    }

    /// Status from the parity of m_v + error term.
    fn from_parities(
        place: Place,
        theorem: Theorem,
        m_v: i64,
        err: ErrorParity,
        aux: &AuxPrimes,
        trace: Trace,
    ) -> Self {
        let mut v = Verdict::base(place, Some(theorem), aux, trace);
        v.m_v = Some(m_v);
        match err {
            ErrorParity::Known(e) => {
                v.error_parity = Some(e);
                v.status = if (m_v.rem_euclid(2) as u8 + e) % 2 == 1 {
                    Status::Ramified
                } else {
                    Status::MatrixAlgebra
                };
            }
            ErrorParity::Unknown { missing, residual } => {
                v.residual = Some(format!("(-1)^(m_v) * {residual} with m_v = {m_v}"));
                v.missing_inputs = missing;
            }
        }
        v
    }

    fn matrix_algebra(place: Place, m_v: i64, aux: &AuxPrimes, trace: Trace) -> Self {
        let mut v = Verdict::base(place, Some(Theorem::Cor6_9), aux, trace);
        v.m_v = Some(m_v);
        v.status = Status::MatrixAlgebra;
        v
    }

    fn undetermined(
        place: Place,
        theorem: Option<Theorem>,
        m_v: Option<i64>,
        missing: Vec<String>,
        residual: String,
        aux: &AuxPrimes,
        trace: Trace,
    ) -> Self {
        let mut v = Verdict::base(place, theorem, aux, trace);
        v.m_v = m_v;
        v.missing_inputs = missing;
        v.residual = Some(residual);
        v
    }

    /// The structural invariants every verdict satisfies.
    pub fn is_coherent(&self) -> bool {
        let undetermined = self.status == Status::Undetermined;
        if undetermined != !self.missing_inputs.is_empty() || undetermined != self.residual.is_some() {
            return false;
        }
        match (self.m_v, self.error_parity, self.sign) {
            (Some(m), Some(e), None) => {
                (self.status == Status::Ramified) == ((m.rem_euclid(2) + e as i64) % 2 == 1) && !undetermined
            }
            (_, None, Some(s)) => (self.status == Status::Ramified) == (s == -1),
            (Some(_), None, None) if self.theorem == Some(Theorem::Cor6_9) => self.status == Status::MatrixAlgebra,
            (_, None, None) => undetermined,
            _ => false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serialises")
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.status)?;
        let mut parts = Vec::new();
        if let Some(t) = self.theorem {
            parts.push(format!("Thm: {t}"));
        }
        if let Some(s) = self.sign {
            parts.push(format!("sign={s}"));
        } else if let Some(m) = self.m_v {
            parts.push(format!("m_v={m}"));
        }
        if !parts.is_empty() {
            write!(f, " ({}", parts.join(", "))?;
            if !self.missing_inputs.is_empty() {
                write!(f, "; missing: {}", self.missing_inputs.join(", "))?;
            }
            write!(f, ")")?;
        } else if !self.missing_inputs.is_empty() {
            write!(f, " (missing: {})", self.missing_inputs.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
struct AuxPrimes(BTreeMap<String, u64>);

impl AuxPrimes {
    fn record(&mut self, kind: AuxKind, q: u64, trace: &mut Trace) {
        self.0.insert(kind.key().to_string(), q);
        trace.push(kind.to_string(), q.to_string(), Provenance::Sieve);
    }
}

fn metadata(f: &NewformData, local: &PrimeLocalData, place: &Place, err: &ErrorTermData, trace: &mut Trace) {
    let k = f.weight;
    let parity = if k % 2 == 0 {
        "even: totally indefinite"
    } else {
        "odd: totally definite"
    };
    trace.push("weight", format!("{k} ({parity})"), Provenance::Metadata);
    trace.push("place", place.to_string(), Provenance::Metadata);
    trace.push(
        format!("N_{} / N' / C_{}", local.p, local.p),
        format!("{} / {} / {}", local.n_p, local.n_prime, local.c_p),
        Provenance::Fixture,
    );
    let minimal = f.is_p_minimal(local.p).map_or("unknown".to_string(), |b| b.to_string());
    trace.push("p-minimal", minimal, Provenance::Fixture);
    if let Some(u) = &err.uniformizer {
        trace.push("uniformizer", u.clone(), Provenance::ErrorTerms);
    } else if let Ok(sp) = place.symbol_place() {
        trace.push("uniformizer", sp.uniformizer.to_string(), Provenance::Metadata);
    }
}

/// Decides [X_v] at a place v | p of F.
///
/// `bound` caps the auxiliary-prime searches and defaults to the stored
/// coefficient range.
pub fn decide(
    f: &NewformData,
    p: u64,
    place: &Place,
    desc: &InertialDescriptor,
    err: &ErrorTermData,
    bound: Option<u64>,
) -> Result<Verdict> {
    let local = local_decompose(f, p);
    if !is_supercuspidal(&local)? {
        return Err(Error::WrongCase(format!(
            "{p} is not a supercuspidal prime of {}",
            f.label
        )));
    }
    if place.p != p || place.field != f.f_field {
        return Err(Error::InvalidPlace(format!("{place} is not a place of F above {p}")));
    }
    desc.validate(p)?;
    err.validate()?;
    let bound = bound.unwrap_or(f.coeff_bound);
    let mut trace = Trace::default();
    let mut aux = AuxPrimes::default();
    metadata(f, &local, place, err, &mut trace);

    if desc.kind == DescriptorKind::Exceptional {
        return exceptional_inner(f, place, desc, f.weight, aux, trace);
    }
    let mut missing: Vec<String> = Vec::new();
    if desc.k_disc.is_none() {
        missing.push("k_disc".into());
    }
    if p == 2 && desc.a_chi.is_none() {
        missing.push("a_chi".into());
    }

    let p_prime = find_p_prime(f, &local, bound)?;
    aux.record(AuxKind::PPrime, p_prime, &mut trace);
    let slope = companion_slope(f, place, p_prime)?;
    trace.push(
        format!("a_{p_prime}^2 eps({p_prime})^-1"),
        slope.value.to_string(),
        Provenance::Computed,
    );
    trace.push("m_v", slope.m_v.to_string(), Provenance::Computed);
    let m_v = slope.m_v;

    if !missing.is_empty() {
        let residual = "descriptor of the local representation".to_string();
        return Ok(Verdict::undetermined(
            *place,
            None,
            Some(m_v),
            missing,
            residual,
            &aux,
            trace,
        ));
    }
    let k_disc = desc.k_disc.unwrap();
    trace.push("K", format!("Q_{p}(sqrt {k_disc})"), Provenance::Descriptor);

    if p == 2 {
        check_conductor(desc, local.n_p)?;
        trace.push(
            "conductor",
            format!("N_2 = {} matches the descriptor", local.n_p),
            Provenance::Computed,
        );
        return decide_two(f, &local, place, desc, err, bound, m_v, aux, trace);
    }

    let sp = place.symbol_place()?;
    let rel = k_relation(k_disc, &sp)?;
    trace.push("K F_v | F_v", format!("{rel:?}"), Provenance::Computed);
    match desc.kind {
        DescriptorKind::DihedralUnramified => {
            let good = if !desc.level_zero {
                Some(true)
            } else if let Some(g) = is_good_shortcut(p, local.c_p) {
                trace.push(
                    "hypothesis (H)",
                    format!("holds since C_{p} = {}", local.c_p),
                    Provenance::Computed,
                );
                Some(g)
            } else {
                desc.l.map(|l| {
                    let g = is_good(p, l);
                    trace.push(
                        "hypothesis (H)",
                        format!("l = {l}: {}", if g { "good" } else { "bad" }),
                        Provenance::Computed,
                    );
                    g
                })
            };
            match (rel, good) {
                (_, None) => Ok(Verdict::undetermined(
                    *place,
                    None,
                    Some(m_v),
                    vec!["l".into()],
                    "goodness of the level-zero prime".into(),
                    &aux,
                    trace,
                )),
                (KRelation::Contained, Some(true)) => {
                    if m_v % 2 != 0 {
                        return Err(Error::Inconsistent(format!("K is in F_v but m_v = {m_v} is odd")));
                    }
                    Ok(Verdict::matrix_algebra(*place, m_v, &aux, trace))
                }
                (_, Some(true)) => Ok(Verdict::from_parities(
                    *place,
                    Theorem::Thm3_2,
                    m_v,
                    ErrorParity::Known(0),
                    &aux,
                    trace,
                )),
                (_, Some(false)) => {
                    let (e, t) = error_term_odd_bad(&sp, err)?;
                    trace.extend(t);
                    Ok(Verdict::from_parities(*place, Theorem::Thm3_4, m_v, e, &aux, trace))
                }
            }
        }
        DescriptorKind::DihedralRamified => match rel {
            KRelation::Contained if p % 4 == 3 => Ok(Verdict::matrix_algebra(*place, m_v, &aux, trace)),
            KRelation::Contained | KRelation::Unramified => Ok(Verdict::from_parities(
                *place,
                Theorem::Thm3_2,
                m_v,
                ErrorParity::Known(0),
                &aux,
                trace,
            )),
            KRelation::Ramified if p % 4 == 1 => Err(Error::Inconsistent(format!(
                "K F_v | F_v ramified at p = {p} = 1 mod 4"
            ))),
            KRelation::Ramified if place.f_v % 2 == 0 => {
                trace.push("n_v", "0 (f_v even)", Provenance::Computed);
                Ok(Verdict::from_parities(
                    *place,
                    Theorem::Thm3_4,
                    m_v,
                    ErrorParity::Known(0),
                    &aux,
                    trace,
                ))
            }
            KRelation::Ramified => {
                let q = find_p_dprime(f, &local, bound)?;
                aux.record(AuxKind::PDoublePrime, q, &mut trace);
                let (e, t) =
                    error_term_odd_ramified(f, &sp, desc, q, f.weight, slope.parity(), err.pi_squared.as_ref())?;
                trace.extend(t);
                Ok(Verdict::from_parities(*place, Theorem::Thm3_4, m_v, e, &aux, trace))
            }
        },
        DescriptorKind::Exceptional => unreachable!(),
    }
}

#[allow(clippy::too_many_arguments)]
fn decide_two(
    f: &NewformData,
    local: &PrimeLocalData,
    place: &Place,
    desc: &InertialDescriptor,
    err: &ErrorTermData,
    bound: u64,
    m_v: i64,
    mut aux: AuxPrimes,
    mut trace: Trace,
) -> Result<Verdict> {
    let general = |aux: &mut AuxPrimes, trace: &mut Trace| -> Result<ErrorParity> {
        let sp = place.symbol_place()?;
        let k_disc = desc.k_disc.unwrap();
        let ramified = k_relation(k_disc, &sp)? == KRelation::Ramified;
        let p_dagger = if desc.s == 2 {
            let q = find_p_dagger(f, local, bound)?;
            aux.record(AuxKind::PDagger, q, trace);
            Some(q)
        } else {
            None
        };
        let p_tprime = if ramified && err.d0.is_none() && d0_from_p_tprime(f, k_disc) {
            let q = find_p_tprime(f, local, bound)?;
            aux.record(AuxKind::PTriplePrime, q, trace);
            Some(q)
        } else {
            None
        };
        let (e, t) = error_term_p2_dihedral(f, &sp, desc, err, p_dagger, p_tprime)?;
        trace.extend(t);
        Ok(e)
    };

    if local.n_p == 2 {
        // The full error term is trivial here; cross-check it when F_v = Q_2.
        if place.local_degree() == 1 {
            let mut scratch = Trace::default();
            let mut scratch_aux = AuxPrimes::default();
            if let ErrorParity::Known(e) = general(&mut scratch_aux, &mut scratch)? {
                if e != 0 {
                    return Err(Error::Inconsistent(
                        "N_2 = 2 but the full error term is nontrivial".into(),
                    ));
                }
                trace.push("r_v (cross-check)", "0", Provenance::Computed);
            }
        }
        return Ok(Verdict::from_parities(
            *place,
            Theorem::Cor3_6,
            m_v,
            ErrorParity::Known(0),
            &aux,
            trace,
        ));
    }
    let e = general(&mut aux, &mut trace)?;
    Ok(Verdict::from_parities(*place, Theorem::Thm3_5, m_v, e, &aux, trace))
}

/// The exceptional case at 2: Ramified iff D(-1)^[F_v:Q_2] (2, D_K')_v = -1.
pub fn exceptional_verdict(f: &NewformData, place: &Place, desc: &InertialDescriptor, k: u32) -> Result<Verdict> {
    let mut trace = Trace::default();
    metadata(
        f,
        &local_decompose(f, place.p),
        place,
        &ErrorTermData::default(),
        &mut trace,
    );
    exceptional_inner(f, place, desc, k, AuxPrimes::default(), trace)
}

fn exceptional_inner(
    f: &NewformData,
    place: &Place,
    desc: &InertialDescriptor,
    k: u32,
    aux: AuxPrimes,
    mut trace: Trace,
) -> Result<Verdict> {
    desc.validate(2)?;
    let theorem = if k % 2 == 1 { Theorem::Cor3_8 } else { Theorem::Thm3_7 };
    if desc.d_kprime.is_none() {
        return Ok(Verdict::undetermined(
            *place,
            Some(theorem),
            None,
            vec!["d_kprime".into()],
            "D(-1)^[F_v:Q_2] * (2, D_K')_v".into(),
            &aux,
            trace,
        ));
    }
    let sp = place.symbol_place()?;
    let (sign, t) = exceptional_sign(f, &sp, desc, k)?;
    trace.extend(t);
    let Some(sign) = sign else {
        let dk = desc.d_kprime.unwrap();
        return Ok(Verdict::undetermined(
            *place,
            Some(theorem),
            None,
            vec!["d_minus_one".into()],
            format!("D(-1)^{} * (2, {dk})_v", place.local_degree()),
            &aux,
            trace,
        ));
    };
    trace.push("sign", sign.to_string(), Provenance::Computed);
    let mut v = Verdict::base(*place, Some(theorem), &aux, trace);
    v.sign = Some(sign);
    v.status = if sign == -1 {
        Status::Ramified
    } else {
        Status::MatrixAlgebra
    };
    Ok(v)
}
