use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ncpos::certificates::inequalities::random_alphabet_state;
use ncpos::certificates::states::{epsilon_of, to_f64, EpsilonMode, StateRef};
use ncpos::compiler::{quotient, ReductionConfig};
use ncpos::decomp::{decompose_key_relation, key_target, KeyDecomposition};
use ncpos::machines::{HaltingOracle, TuringMachine};
use ncpos::presentations::TruncatedGsProvider;
use ncpos::words::StarPolynomial;

fn key(m: i64, n: u64) -> KeyDecomposition {
    let oracle = HaltingOracle::new(TuringMachine::never_halting(), 64);
    let provider = TruncatedGsProvider::new(oracle.clone());
    decompose_key_relation(m, n, &oracle, &provider, &ReductionConfig::default()).unwrap()
}

#[test]
fn halted_indices_are_refused() {
    let oracle = HaltingOracle::new(TuringMachine::halting_after(2), 64);
    let provider = TruncatedGsProvider::new(oracle.clone());
    let cfg = ReductionConfig::default();
    assert!(decompose_key_relation(1, 1, &oracle, &provider, &cfg).is_ok());
    assert!(decompose_key_relation(1, 2, &oracle, &provider, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn key_decompositions_verify(m in 1i64..4, n in 0u64..4) {
        let kd = key(m, n);
        prop_assert_eq!(&kd.decomposition.target, &key_target(n as usize));
        prop_assert!(kd.decomposition.verify(&kd.relations).unwrap().is_valid());
        let size = kd.decomposition.size(&kd.relations).unwrap();
        prop_assert!(size.value >= size.coefficient_sum);
    }

    /// Numerical dual route: the target and the expansion agree as matrices
    /// on involutive representations, and the target norm obeys the
    /// coefficient-sum bound.
    #[test]
    fn key_decomposition_norm_bound(seed in any::<u64>(), m in 1i64..3, n in 0u64..2, d in 1usize..4) {
        let kd = key(m, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = random_alphabet_state(d, &mut rng).unwrap();
        let dec = &kd.decomposition;
        let target = tau.eval(&quotient(&dec.target)).unwrap();
        let expansion = tau.eval(&dec.expansion(&kd.relations).unwrap()).unwrap();
        let scale = 1.0 + to_f64(&dec.target.norm1());
        prop_assert!((&target - &expansion).norm() <= 1e-9 * scale * d as f64);

        let rels: Vec<StarPolynomial> = kd.relations.polys().flat_map(|r| [r.clone(), r.star()]).collect();
        let eps = epsilon_of(StateRef::Single(&tau), EpsilonMode::ErState(&rels)).unwrap();
        let bound = to_f64(&kd.decomposition.size(&kd.relations).unwrap().coefficient_sum) * eps.sqrt();
        prop_assert!(tau.norm(&dec.target).unwrap() <= bound + 1e-9);
    }
}
