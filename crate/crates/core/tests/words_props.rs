use num_rational::BigRational;
use proptest::prelude::*;

use ncpos::words::{Generator, StarPolynomial, Word};

fn letter(k: u8) -> Generator {
    let g = Generator::plain(["x", "y", "z"][(k % 3) as usize]);
    if k >= 3 {
        g.star()
    } else {
        g
    }
}

fn poly() -> impl Strategy<Value = StarPolynomial> {
    prop::collection::vec((prop::collection::vec(0u8..6, 0..4), -6i64..=6, 1i64..=4), 0..5).prop_map(|terms| {
        StarPolynomial::from_terms(
            terms.into_iter().map(|(w, n, d)| (Word(w.into_iter().map(letter).collect()), BigRational::new(n.into(), d.into()))),
        )
    })
}

proptest! {
    #[test]
    fn norm1_is_submultiplicative(p in poly(), q in poly()) {
        prop_assert!((&p * &q).norm1() <= p.norm1() * q.norm1());
    }

    #[test]
    fn star_preserves_norms(p in poly()) {
        prop_assert_eq!(p.star().norm1(), p.norm1());
        prop_assert_eq!(p.star().norm11(), p.norm11());
        prop_assert_eq!(p.star().star(), p.clone());
    }

    #[test]
    fn ring_axioms(p in poly(), q in poly(), r in poly()) {
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert_eq!(&(&p + &q) * &r, &(&p * &r) + &(&q * &r));
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert!((&p - &p).is_zero());
        prop_assert_eq!((&p * &q).star(), &q.star() * &p.star());
    }

    #[test]
    fn text_round_trip(p in poly()) {
        let back: StarPolynomial = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }
}
