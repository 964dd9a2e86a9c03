use super::*;
use crate::arith::{rat, rat_int, QuadElem};
use proptest::prelude::*;
use std::collections::HashMap;

// Oracle: (a, b)_p = +1 iff z^2 = a x^2 + b y^2 has a primitive solution.
// a and b are first reduced to have valuation 0 or 1. For odd p a
// primitive solution has x or y a unit, so one of them may be set to 1
// and the search runs mod p^3. For p = 2 the search runs over all x, y mod
// 2^6 against tables of squares of odd and of arbitrary z.
fn reduce_square_part(mut n: i64, p: i64) -> i64 {
    while n % (p * p) == 0 {
        n /= p * p;
    }
    n
}

fn conic_oracle(a: i64, b: i64, p: u64) -> i8 {
    let pi = p as i64;
    let a = reduce_square_part(a, pi);
    let b = reduce_square_part(b, pi);
    let m: i64 = if p == 2 { 64 } else { pi * pi * pi };
    let mut any_square = vec![false; m as usize];
    let mut odd_square = vec![false; m as usize];
    for z in 0..m {
        let s = (z * z % m) as usize;
        any_square[s] = true;
        if z % pi != 0 {
            odd_square[s] = true;
        }
    }
    let rhs = |x: i64, y: i64| (a * x * x + b * y * y).rem_euclid(m) as usize;
    let solvable = if p == 2 {
        (0..m).any(|x| {
            (0..m).any(|y| {
                if x % 2 != 0 || y % 2 != 0 {
                    any_square[rhs(x, y)]
                } else {
                    odd_square[rhs(x, y)]
                }
            })
        })
    } else {
        (0..m).any(|t| any_square[rhs(1, t)] || any_square[rhs(t, 1)])
    };
    if solvable {
        1
    } else {
        -1
    }
}

fn r(n: i64) -> Rational {
    rat_int(n)
}

#[test]
fn spec_examples() {
    assert_eq!(hilbert_symbol(&r(2), &r(5), QPlace::Finite(5)), -1);
    assert_eq!(conic_oracle(2, 5, 5), -1);
    assert_eq!(hilbert_symbol(&r(1), &r(17), QPlace::Finite(17)), 1);
    assert_eq!(symbol_two(&r(-1), &r(-1)), -1);
    assert_eq!(conic_oracle(-1, -1, 2), -1);
    assert_eq!(symbol_two(&r(5), &r(2)), -1);
    assert_eq!(conic_oracle(5, 2, 2), -1);
    assert_eq!(symbol_two(&r(2), &r(64)), 1);
    assert_eq!(symbol_real(&r(-1), &r(-1)), -1);
    assert_eq!(symbol_real(&r(1), &r(-1)), 1);
    assert_eq!(symbol_real(&r(-3), &r(-7)), -1);
}

#[test]
fn norm_symbol_examples() {
    assert_eq!(norm_symbol_qp(&r(-1), &r(-3), 3).unwrap(), -1);
    assert_eq!(norm_symbol_qp(&r(-1), &r(2), 2).unwrap(), 1);
    for d in [-1i64, 2, 3, -3, 5, 6, -6, 7, 10, 11] {
        let y = QuadElem::new(d, r(2), r(1));
        for p in [2u64, 3, 5, 7, 11] {
            if SymbolPlace::rational(p).is_square(&r(d)) {
                assert!(matches!(
                    norm_symbol_qp(&y.norm(), &r(d), p),
                    Err(Error::NotQuadratic(_))
                ));
                continue;
            }
            assert_eq!(norm_symbol_qp(&y.norm(), &r(d), p).unwrap(), 1, "d={d} p={p}");
        }
    }
    assert!(matches!(norm_symbol_qp(&r(3), &r(4), 5), Err(Error::NotQuadratic(_))));
}

#[test]
fn pi_squared_residue() {
    assert_eq!(residue_unit_of_pi_squared(3, 1).unwrap(), -1);
    assert_eq!(residue_unit_of_pi_squared(7, 1).unwrap(), -1);
    assert_eq!(residue_unit_of_pi_squared(3, 2).unwrap(), 1);
    assert!(matches!(residue_unit_of_pi_squared(5, 1), Err(Error::WrongCase(_))));
    // Cross-check: pi = sqrt(-3) over Q_3, pi^2 = -3 = 3 * (-1).
    let place = SymbolPlace::rational(3);
    let le = LocalElem::from_rational(&r(-3), &place).unwrap();
    assert_eq!(residue_symbol_fq(&le.unit, place.residue_field()).unwrap(), -1);
}

#[test]
fn product_formula_examples() {
    assert!(product_formula_check(&r(5), &r(2)));
    assert!(product_formula_check(&r(1), &r(12345)));
    assert!(product_formula_check(&r(-1), &r(-1)));
    assert_eq!(hilbert_symbol(&r(5), &r(2), QPlace::Finite(5)), -1);
}

#[test]
fn oracle_equivalence_small_integers() {
    let primes: Vec<u64> = crate::arith::primes_up_to(50);
    let mut memo: HashMap<(i64, i64, u64), i8> = HashMap::new();
    for &p in &primes {
        for a in -30i64..=30 {
            for b in -30i64..=30 {
                if a == 0 || b == 0 {
                    continue;
                }
                let expect = *memo.entry((a, b, p)).or_insert_with(|| conic_oracle(a, b, p));
                assert_eq!(hilbert_symbol(&r(a), &r(b), QPlace::Finite(p)), expect, "({a},{b})_{p}");
            }
        }
    }
}

#[test]
fn uniformizer_choice_does_not_change_the_symbol() {
    // F = Q(sqrt(3)), v | 3 ramified with pi = sqrt(3). For rationals
    // (a,b)_v = (a,b)_3^2 = 1, and the tame formula must agree.
    let field = FieldDesc::Quadratic(3);
    let place = SymbolPlace::new(field, field.primes_above(3)[0]).unwrap();
    assert_eq!(place.uniformizer, Uniformizer::SqrtD);
    for a in [-6i64, -3, -1, 2, 3, 5, 9, 12] {
        for b in [-3i64, -2, -1, 3, 7, 15] {
            let s = symbol_at(&FieldElem::Rat(r(a)), &FieldElem::Rat(r(b)), &place).unwrap();
            assert_eq!(s, 1, "({a},{b})");
        }
    }
}

fn quadratic_places() -> Vec<SymbolPlace> {
    let mut out = Vec::new();
    for d in [-1i64, 2, -2, 3, 5, -5, 7, 13, -15] {
        let field = FieldDesc::Quadratic(d);
        for p in [3u64, 5, 7, 11, 13] {
            for ideal in field.primes_above(p) {
                if let Ok(place) = SymbolPlace::new(field, ideal) {
                    out.push(place);
                }
            }
        }
    }
    out
}

// Projection formula: for a in Q_p and b in F_v,
// (a, b)_v = (a, N_{F_v/Q_p}(b))_p. At split places F_v = Q_p and the
// norm is the image of b itself, so only non-split places are checked.
#[test]
fn projection_formula_at_quadratic_places() {
    for place in quadratic_places() {
        if place.local_degree() != 2 {
            continue;
        }
        let FieldDesc::Quadratic(d) = place.field else {
            unreachable!()
        };
        for a in [-7i64, -3, -1, 2, 3, 5, 6, 10, 14, 21] {
            for (x, y) in [(1i64, 1i64), (2, 1), (0, 1), (3, -2), (5, 7), (1, 3), (9, 0), (14, 5)] {
                let b = QuadElem::new(d, rat_int(x), rat(y, 1));
                if b.is_zero() {
                    continue;
                }
                let lhs = symbol_at(&FieldElem::Rat(r(a)), &FieldElem::Quad(b.clone()), &place).unwrap();
                let rhs = hilbert_symbol(&r(a), &b.norm(), QPlace::Finite(place.p()));
                assert_eq!(lhs, rhs, "({a}, {b}) at {place}");
            }
        }
    }
}

#[test]
fn split_places_match_the_embedding() {
    // At a split place the symbol of a + b sqrt(d) equals the Q_p symbol of
    // its image under sqrt(d) -> root; checked on elements whose image is
    // recognisable: the two conjugates see the two roots.
    let field = FieldDesc::Quadratic(-1);
    let ideals = field.primes_above(5);
    let two_plus_i = FieldElem::Quad(QuadElem::new(-1, r(2), r(1)));
    let signs: Vec<i8> = ideals
        .iter()
        .map(|i| {
            let place = SymbolPlace::new(field, *i).unwrap();
            symbol_at(&FieldElem::Rat(r(2)), &two_plus_i, &place).unwrap()
        })
        .collect();
    // 2 + i is a uniformizer at one prime and a unit (= 4 mod 5) at the other.
    assert_eq!(signs.iter().filter(|&&s| s == -1).count(), 1);
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (1i64..10_000, 1i64..10_000, any::<bool>()).prop_map(|(n, d, neg)| rat(if neg { -n } else { n }, d))
}

fn place_strategy() -> impl Strategy<Value = QPlace> {
    prop_oneof![
        (0usize..15).prop_map(|i| QPlace::Finite(crate::arith::primes_up_to(50)[i])),
        Just(QPlace::Finite(2)),
        Just(QPlace::Infinity),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bilinear_symmetric_and_a_minus_a(a in nonzero_rational(), a2 in nonzero_rational(),
                                        b in nonzero_rational(), v in place_strategy()) {
        let s = |x: &Rational, y: &Rational| hilbert_symbol(x, y, v);
        prop_assert_eq!(s(&(&a * &a2), &b), s(&a, &b) * s(&a2, &b));
        prop_assert_eq!(s(&a, &b), s(&b, &a));
        prop_assert_eq!(s(&a, &(-a.clone())), 1);
        let one_minus = r(1) - &a;
        if !one_minus.is_zero() {
            prop_assert_eq!(s(&a, &one_minus), 1);
        }
    }

    #[test]
    fn product_formula(a in nonzero_rational(), b in nonzero_rational()) {
        prop_assert!(product_formula_check(&a, &b));
    }

    #[test]
    fn rational_symbol_at_odd_places_matches_tame_formula(a in nonzero_rational(), b in nonzero_rational(),
                                                        pi in 0usize..45) {
        let places = quadratic_places();
        let place = &places[pi % places.len()];
        let direct = symbol_at(&FieldElem::Rat(a.clone()), &FieldElem::Rat(b.clone()), place).unwrap();
        prop_assert_eq!(direct, rational_symbol_at(&a, &b, place));
    }

    #[test]
    fn bilinear_at_quadratic_places(x1 in -40i64..40, y1 in -40i64..40, x2 in -40i64..40, y2 in -40i64..40,
                                    c in nonzero_rational(), pi in 0usize..45) {
        let places = quadratic_places();
        let place = &places[pi % places.len()];
        let FieldDesc::Quadratic(d) = place.field else { unreachable!() };
        let u = FieldElem::Quad(QuadElem::new(d, r(x1), r(y1)));
        let w = FieldElem::Quad(QuadElem::new(d, r(x2), rat(y2, 3)));
        prop_assume!(!u.is_zero() && !w.is_zero());
        let c = FieldElem::Rat(c);
        let uw = u.mul(&w).unwrap();
        let s = |x: &FieldElem, y: &FieldElem| symbol_at(x, y, place).unwrap();
        prop_assert_eq!(s(&uw, &c), s(&u, &c) * s(&w, &c));
        prop_assert_eq!(s(&u, &w), s(&w, &u));
        prop_assert_eq!(s(&u, &u.neg()), 1);
    }
}
