//! Sieves for the auxiliary primes p', p'', p''' and p-dagger.
//!
//! Every sieve walks the primes up to a bound in increasing order and keeps
//! those satisfying the defining congruences, coprime to the level and with
//! a_q != 0. The bound may not exceed the stored coefficient range.

use crate::arith::primes_up_to;
use crate::dirichlet::{multiplicative_order, RootOfUnity};
use crate::newform::{NewformData, PrimeLocalData};
use crate::{Error, Result};
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxKind {
    PPrime,
    PDoublePrime,
    PTriplePrime,
    PDagger,
}

impl AuxKind {
    pub fn key(self) -> &'static str {
        match self {
            AuxKind::PPrime => "p_prime",
            AuxKind::PDoublePrime => "p_dprime",
            AuxKind::PTriplePrime => "p_tprime",
            AuxKind::PDagger => "p_dagger",
        }
    }
}

impl fmt::Display for AuxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuxKind::PPrime => "p'",
            AuxKind::PDoublePrime => "p''",
            AuxKind::PTriplePrime => "p'''",
            AuxKind::PDagger => "p-dagger",
        })
    }
}

impl FromStr for AuxKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prime" | "p_prime" | "p'" => Ok(AuxKind::PPrime),
            "dprime" | "p_dprime" | "p''" => Ok(AuxKind::PDoublePrime),
            "tprime" | "p_tprime" | "p'''" => Ok(AuxKind::PTriplePrime),
            "dagger" | "p_dagger" => Ok(AuxKind::PDagger),
            _ => Err(Error::parse("kind", format!("unknown auxiliary prime kind {s:?}"))),
        }
    }
}

/// A validated sieve request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxPrimeRequest {
    pub kind: AuxKind,
    pub p: u64,
    pub n_p: u32,
    pub n_prime: u64,
    pub search_bound: u64,
}

impl AuxPrimeRequest {
    pub fn new(f: &NewformData, local: &PrimeLocalData, kind: AuxKind, bound: u64) -> Result<Self> {
        if bound > f.coeff_bound {
            return Err(Error::InsufficientData(format!(
                "search bound {bound} exceeds the coefficient bound {} of {}",
                f.coeff_bound, f.label
            )));
        }
        match kind {
            AuxKind::PDoublePrime if local.p == 2 => {
                return Err(Error::WrongCase("p'' is defined for odd p only".into()))
            }
            AuxKind::PTriplePrime if local.p != 2 => {
                return Err(Error::WrongCase("p''' is defined for p = 2 only".into()))
            }
            _ => {}
        }
        Ok(AuxPrimeRequest {
            kind,
            p: local.p,
            n_p: local.n_p,
            n_prime: local.n_prime,
            search_bound: bound,
        })
    }

    fn p_power(&self) -> u64 {
        self.p.pow(self.n_p)
    }

    /// The defining congruences, without the coefficient condition.
    pub fn congruences_hold(&self, f: &NewformData, q: u64) -> bool {
        if q.gcd(&f.level) != 1 {
            return false;
        }
        let pk = self.p_power();
        let np = self.n_prime;
        match self.kind {
            AuxKind::PPrime => q % pk == 1 % pk && q % np == self.p % np,
            AuxKind::PDoublePrime => q % np == 1 % np && multiplicative_order(q, pk) == Some(self.p - 1),
            AuxKind::PTriplePrime => q % np == 1 % np && multiplicative_order(q, pk) == Some(2),
            AuxKind::PDagger => twist_conditions_hold(f, q),
        }
    }

    /// Whether some residue class can satisfy the congruences at all.
    fn solvable(&self, f: &NewformData) -> Result<()> {
        let pk = self.p_power();
        let has_order = |o: u64| (1..=pk).any(|a| multiplicative_order(a, pk) == Some(o));
        match self.kind {
            AuxKind::PDoublePrime if !has_order(self.p - 1) => Err(Error::NoSolution(format!(
                "(Z/{pk})^x has no element of order {}",
                self.p - 1
            ))),
            AuxKind::PTriplePrime if !has_order(2) => Err(Error::NoSolution(format!(
                "(Z/{pk})^x has no element of order 2 (N_2 = {})",
                self.n_p
            ))),
            AuxKind::PDagger => {
                let m = f.inner_twists.iter().fold(1u64, |acc, t| acc.lcm(&t.chi.modulus()));
                if (1..=m).any(|a| a.gcd(&m) == 1 && twist_conditions_hold(f, a)) {
                    Ok(())
                } else {
                    Err(Error::NoSolution(format!(
                        "no class modulo {m} meets every inner-twist sign condition"
                    )))
                }
            }
            _ => Ok(()),
        }
    }
}

fn twist_conditions_hold(f: &NewformData, q: u64) -> bool {
    f.inner_twists.iter().all(|t| {
        let want = if t.ramified {
            RootOfUnity::minus_one()
        } else {
            RootOfUnity::one()
        };
        t.chi.evaluate(q as i64).map(|v| v == want).unwrap_or(false)
    })
}

/// All qualifying primes up to the request's bound, increasing.
pub fn qualifying_primes(f: &NewformData, req: &AuxPrimeRequest) -> Result<Vec<u64>> {
    req.solvable(f)?;
    let mut out = Vec::new();
    for q in primes_up_to(req.search_bound) {
        if !req.congruences_hold(f, q) {
            continue;
        }
        if !f.require_coefficient(q)?.is_zero() {
            out.push(q);
        }
    }
    Ok(out)
}

/// The n-th (1-based) qualifying prime.
pub fn nth_qualifying(f: &NewformData, local: &PrimeLocalData, kind: AuxKind, bound: u64, n: usize) -> Result<u64> {
    let req = AuxPrimeRequest::new(f, local, kind, bound)?;
    let found = qualifying_primes(f, &req)?;
    let q = *found.get(n.saturating_sub(1)).ok_or(Error::SearchExhausted { bound })?;
    verify(f, &req, q)?;
    Ok(q)
}

/// Re-checks a returned prime against its definition.
pub fn verify(f: &NewformData, req: &AuxPrimeRequest, q: u64) -> Result<()> {
    let ok = crate::arith::is_prime(q)
        && q <= req.search_bound
        && req.congruences_hold(f, q)
        && f.coefficient(q).is_some_and(|a| !a.is_zero());
    if ok {
        Ok(())
    } else {
        Err(Error::Inconsistent(format!(
            "{q} does not satisfy the conditions for {}",
            req.kind
        )))
    }
}

pub fn find_p_prime(f: &NewformData, local: &PrimeLocalData, bound: u64) -> Result<u64> {
    nth_qualifying(f, local, AuxKind::PPrime, bound, 1)
}

pub fn find_p_dprime(f: &NewformData, local: &PrimeLocalData, bound: u64) -> Result<u64> {
    nth_qualifying(f, local, AuxKind::PDoublePrime, bound, 1)
}

pub fn find_p_tprime(f: &NewformData, local: &PrimeLocalData, bound: u64) -> Result<u64> {
    nth_qualifying(f, local, AuxKind::PTriplePrime, bound, 1)
}

pub fn find_p_dagger(f: &NewformData, local: &PrimeLocalData, bound: u64) -> Result<u64> {
    nth_qualifying(f, local, AuxKind::PDagger, bound, 1)
}
