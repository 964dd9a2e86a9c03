//! Local ramification of the endomorphism algebra attached to a non-CM
//! newform at places above a supercuspidal prime.
//!
//! The crate is organised bottom-up: exact arithmetic ([`arith`]), Dirichlet
//! characters ([`dirichlet`]), local quadratic symbols ([`hilbert`]), newform
//! data and fixtures ([`newform`]), auxiliary-prime sieves ([`auxprimes`]) and
//! the dispatching engine ([`verdict`]).

pub mod arith;
pub mod auxprimes;
pub mod dirichlet;
mod error;
pub mod hilbert;
pub mod newform;
pub mod verdict;

pub use error::{Error, Result};
