use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ncpos::certificates::rounding::sign_round;
use ncpos::certificates::sos::{sos_search, GramCertificate, Quotient, SosOptions, SosOutcome};
use ncpos::certificates::states::{
    random_near_involution, random_unit_vector, random_unitary, FiniteState, StateKind,
};
use ncpos::presentations::{coset_expectation, CyclicFreeProduct};
use ncpos::selftest::{coset_case, random_star_poly};
use ncpos::words::{Generator, Word};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Certificates for hermitian squares in the free algebra satisfy the
    /// residual and eigenvalue tolerances, survive the text format, and the
    /// squares they list reproduce `f` as matrices.
    #[test]
    fn gram_certificates_check(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_star_poly(&["x", "y"], 2, 3, &mut rng);
        let f = &p.star() * &p;
        let opts = SosOptions::default();
        let cert = match sos_search(&f, &Quotient::Free, 2, &opts).unwrap() {
            SosOutcome::Certified(c) => c,
            SosOutcome::Infeasible(r) => return Err(TestCaseError::fail(format!("floor {}", r.residual_floor))),
        };
        prop_assert!(cert.check(&f, &Quotient::Free) <= opts.tolerance);
        prop_assert!(cert.min_eigenvalue >= -opts.tolerance);
        let parsed = GramCertificate::parse(&cert.to_text()).unwrap();
        prop_assert!(parsed.check(&f, &Quotient::Free) <= 10.0 * opts.tolerance);

        let gens: BTreeMap<Generator, _> =
            ["x", "y"].iter().map(|s| (Generator::plain(s), random_unitary(d, &mut rng))).collect();
        let state = FiniteState::new(gens, d, StateKind::Trace).unwrap();
        let basis: Vec<_> = cert.basis.iter().map(|w| state.eval_word(w).unwrap()).collect();
        let mut sum = DMatrix::<Complex64>::zeros(d, d);
        for col in cert.squares() {
            let mut b = DMatrix::<Complex64>::zeros(d, d);
            for (c, m) in col.iter().zip(&basis) {
                b += m.map(|z| z * *c);
            }
            sum += b.adjoint() * b;
        }
        let fm = state.eval(&f).unwrap();
        prop_assert!((&fm - &sum).norm() <= 1e-6 * (1.0 + fm.norm()));
    }

    #[test]
    fn sign_rounding_bound(seed in any::<u64>(), d in 1usize..7, noise in 0.0f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_near_involution(d, noise, &mut rng);
        let xi = random_unit_vector(d, &mut rng);
        let (r, report) = sign_round(&a, &xi).unwrap();
        prop_assert!(report.bound_holds(1e-9), "{report:?}");
        prop_assert!(report.involution_defect <= 1e-9);
        prop_assert!((&r - r.adjoint()).norm() <= 1e-9);
    }

    /// The coset expectation keeps exactly the subgroup terms, so it keeps
    /// the identity coefficient and commutes with the star.
    #[test]
    fn coset_expectation_keeps_subgroup_terms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CyclicFreeProduct::new([("a".to_string(), 2), ("b".to_string(), 3)]);
        let p = g.reduce_poly(&random_star_poly(&["a", "b"], 3, 4, &mut rng));
        let sq = g.reduce_poly(&(&p.star() * &p));
        let in_h = |w: &Word| -> Result<bool, ()> { Ok(w.letters().iter().all(|l| l.name.as_str() == "a")) };
        let e = coset_expectation(&sq, in_h).unwrap();
        prop_assert_eq!(e.coefficient(&Word::default()), sq.coefficient(&Word::default()));
        prop_assert_eq!(g.reduce_poly(&e.star()), e.clone());
        for (w, c) in e.terms() {
            prop_assert_eq!(c, &sq.coefficient(w));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coset_expectations_of_squares_are_certified(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CyclicFreeProduct::new([("a".to_string(), 2), ("b".to_string(), 3)]);
        let (fails, worst) = coset_case(&g, &["a"], 3, 3, &mut rng);
        prop_assert_eq!(fails, 0, "worst residual {}", worst);
    }
}
