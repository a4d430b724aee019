use proptest::prelude::*;

use ncpos::machines::{representative, HaltingProfile, TuringMachine};

fn machine(k: u8) -> TuringMachine {
    match k % 4 {
        0 => TuringMachine::counter(),
        1 => TuringMachine::never_halting(),
        n => TuringMachine::halting_after(n as u64 * 2 - 1),
    }
}

proptest! {
    #[test]
    fn representative_is_congruent_and_no_larger(k in 0u8..4, m in 0i64..6, i in -40i64..40) {
        let tm = machine(k);
        let r = representative(&tm, m, i);
        prop_assert!(r.abs() <= i.abs());
        if let HaltingProfile::HaltedAt(h) = tm.run_bounded(m, 1000) {
            prop_assert_eq!((i - r).rem_euclid(h as i64 + 1), 0);
        } else {
            prop_assert_eq!(r, i);
        }
    }

    #[test]
    fn bounded_runs_are_monotone(k in 0u8..4, m in 0i64..6, n in 0u64..20, extra in 0u64..50) {
        let tm = machine(k);
        if let HaltingProfile::HaltedAt(h) = tm.run_bounded(m, n) {
            prop_assert_eq!(tm.run_bounded(m, n + extra), HaltingProfile::HaltedAt(h));
        }
    }
}
