//! Square classes of Q_p and the quadratic extensions they define.

use super::{legendre_rat, rational_mod, split_unit, Rational};
use num_traits::Zero;

/// The class of a nonzero rational in Q_p^x / (Q_p^x)^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SquareClass {
    pub val_odd: bool,
    /// Odd p: 1 or -1 for the Legendre symbol of the unit part.
    /// p = 2: the unit part mod 8.
    pub unit: i8,
}

pub fn qp_square_class(x: &Rational, p: u64) -> SquareClass {
    assert!(!x.is_zero(), "square class of zero");
    let (v, u) = split_unit(x, p);
    let unit = if p == 2 {
        rational_mod(&u, 8).unwrap() as i8
    } else {
        legendre_rat(&u, p)
    };
    SquareClass {
        val_odd: v % 2 != 0,
        unit,
    }
}

impl SquareClass {
    pub fn is_square(&self) -> bool {
        !self.val_odd && self.unit == 1
    }
}

/// The extension Q_p(sqrt d).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpQuadType {
    /// d is a square in Q_p.
    Trivial,
    Unramified,
    /// Ramified, with the valuation of the discriminant.
    Ramified {
        disc_val: u32,
    },
}

pub fn qp_quadratic_type(d: &Rational, p: u64) -> QpQuadType {
    let c = qp_square_class(d, p);
    if c.is_square() {
        return QpQuadType::Trivial;
    }
    if p != 2 {
        return if c.val_odd {
            QpQuadType::Ramified { disc_val: 1 }
        } else {
            QpQuadType::Unramified
        };
    }
    match (c.val_odd, c.unit) {
        (true, _) => QpQuadType::Ramified { disc_val: 3 },
        (false, 5) => QpQuadType::Unramified,
        _ => QpQuadType::Ramified { disc_val: 2 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat_int;

    #[test]
    fn quadratic_extensions_of_q2() {
        let ty = |d| qp_quadratic_type(&rat_int(d), 2);
        assert_eq!(ty(-3), QpQuadType::Unramified);
        assert_eq!(ty(5), QpQuadType::Unramified);
        assert_eq!(ty(-1), QpQuadType::Ramified { disc_val: 2 });
        assert_eq!(ty(3), QpQuadType::Ramified { disc_val: 2 });
        assert_eq!(ty(2), QpQuadType::Ramified { disc_val: 3 });
        assert_eq!(ty(-6), QpQuadType::Ramified { disc_val: 3 });
        assert_eq!(ty(-7), QpQuadType::Trivial);
        assert_eq!(ty(68), QpQuadType::Trivial);
    }

    #[test]
    fn odd_prime_types() {
        assert_eq!(qp_quadratic_type(&rat_int(2), 3), QpQuadType::Unramified);
        assert_eq!(qp_quadratic_type(&rat_int(-3), 3), QpQuadType::Ramified { disc_val: 1 });
        assert_eq!(qp_quadratic_type(&rat_int(7), 3), QpQuadType::Trivial);
        assert_eq!(qp_quadratic_type(&crate::arith::rat(1, 4), 5), QpQuadType::Trivial);
    }
}
