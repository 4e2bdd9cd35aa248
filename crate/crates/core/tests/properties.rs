//! Property tests for the algebra kernel and the linear-algebra substrate.

use nbhd_core::exactlin::{rat, Rat, RatMatrix};
use nbhd_core::gca::{Algebra, BaseRing, GcaElement, GeneratorSpec, Monomial};
use num_traits::Zero;
use proptest::prelude::*;

fn test_algebra() -> Algebra {
    Algebra::new(
        BaseRing::polynomial(&[("x", 1), ("y", 2)]),
        vec![
            GeneratorSpec::new("e1", -1, 1),
            GeneratorSpec::new("e2", -1, 1),
            GeneratorSpec::new("f1", 0, 1),
        ],
    )
}

prop_compose! {
    fn arb_monomial()(xe in 0u32..4, ye in 0u32..3, e1 in 0u32..2, e2 in 0u32..2, f1 in 0u32..3) -> Monomial {
        Monomial { gen_exps: vec![e1, e2, f1], var_exps: vec![xe as i64, ye as i64] }
    }
}

prop_compose! {
    fn arb_element()(terms in prop::collection::vec((arb_monomial(), -6i64..=6), 0..6)) -> GcaElement {
        let mut el = GcaElement::zero();
        for (m, c) in terms {
            el.add_term(m, rat(c));
        }
        el
    }
}

proptest! {
    #[test]
    fn print_parse_round_trip(el in arb_element()) {
        let alg = test_algebra();
        let printed = alg.print(&el);
        let reparsed = nbhd_core::gca::parse_element_or_zero(&alg, &printed).unwrap();
        prop_assert_eq!(reparsed, el);
    }

    #[test]
    fn multiplication_associative(a in arb_element(), b in arb_element(), c in arb_element()) {
        let alg = test_algebra();
        let lhs = alg.mul(&alg.mul(&a, &b), &c);
        let rhs = alg.mul(&a, &alg.mul(&b, &c));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn koszul_sign_rule(m1 in arb_monomial(), m2 in arb_monomial()) {
        let alg = test_algebra();
        let a = GcaElement::from_monomial(m1, rat(1));
        let b = GcaElement::from_monomial(m2, rat(1));
        let da = alg.degree(&a).unwrap();
        let db = alg.degree(&b).unwrap();
        let ab = alg.mul(&a, &b);
        let ba = alg.mul(&b, &a);
        let expected = if (da * db).rem_euclid(2) == 1 { ba.neg() } else { ba };
        prop_assert_eq!(ab, expected);
    }

    #[test]
    fn weight_additive(m1 in arb_monomial(), m2 in arb_monomial()) {
        let alg = test_algebra();
        let a = GcaElement::from_monomial(m1, rat(1));
        let b = GcaElement::from_monomial(m2, rat(1));
        let prod = alg.mul(&a, &b);
        if !prod.is_zero() {
            let w = alg.weight(&prod).unwrap();
            prop_assert_eq!(w, alg.weight(&a).unwrap() + alg.weight(&b).unwrap());
        }
    }
}

prop_compose! {
    fn arb_matrix()(rows in 1usize..6, cols in 1usize..6)
        (entries in prop::collection::vec((-5i64..=5), rows * cols), rows in Just(rows), cols in Just(cols))
    -> RatMatrix {
        let mut m = RatMatrix::zero(rows, cols);
        for (i, v) in entries.into_iter().enumerate() {
            if v != 0 {
                m.set(i / cols, i % cols, rat(v));
            }
        }
        m
    }
}

proptest! {
    #[test]
    fn rank_plus_nullity(m in arb_matrix()) {
        let (rank, kernel) = m.rank_kernel();
        prop_assert_eq!(rank + kernel.len(), m.cols());
        for v in &kernel {
            prop_assert!(m.mul_vec(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn solve_finds_solutions_in_the_column_space(m in arb_matrix(), x in prop::collection::vec(-4i64..=4, 6)) {
        let x: Vec<Rat> = x.into_iter().take(m.cols()).map(rat).collect();
        prop_assume!(x.len() == m.cols());
        let b = m.mul_vec(&x);
        let solved = m.solve(&b).expect("b is in the column space by construction");
        prop_assert_eq!(m.mul_vec(&solved), b);
    }

    #[test]
    fn elimination_is_deterministic(m in arb_matrix()) {
        prop_assert_eq!(m.rank_kernel(), m.rank_kernel());
        prop_assert_eq!(m.rref(), m.rref());
    }
}
