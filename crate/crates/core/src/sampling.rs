//! Random samplers for the kernel relators, conjugated products of group
//! relators and words with nontrivial image in the free group on `S T W`,
//! together with the trial loops the self-test and acceptance runs share.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::gs::{free_retraction, is_trivial_with, Decision, GTok, GWord, Stable};
use crate::ks::{eta, KLetter, KSym, KWord, KsError};
use crate::machines::{HaltingOracle, MachineError};
use crate::words::Word;

/// Range of first and second indices the kernel samplers draw from.
#[derive(Clone, Copy, Debug)]
pub struct IndexRange {
    pub m: (i64, i64),
    pub i: (i64, i64),
}

impl Default for IndexRange {
    fn default() -> Self {
        IndexRange { m: (-1, 3), i: (-4, 4) }
    }
}

fn letter(sym: KSym, rng: &mut impl Rng) -> KLetter {
    KLetter { sym, inverse: rng.gen_bool(0.5) }
}

fn word(syms: &[KSym], rng: &mut impl Rng) -> KWord {
    KWord(syms.iter().map(|&s| letter(s, rng)).collect())
}

fn rep_index(m: i64, range: &IndexRange, oracle: &HaltingOracle, rng: &mut impl Rng) -> Result<i64, MachineError> {
    oracle.representative(m, rng.gen_range(range.i.0..=range.i.1))
}

/// Random kernel letter with a representative index.
pub fn random_kernel_letter(range: &IndexRange, oracle: &HaltingOracle, rng: &mut impl Rng) -> Result<KLetter, MachineError> {
    let m = rng.gen_range(range.m.0..=range.m.1);
    let sym = match rng.gen_range(0..5) {
        0 => KSym::J,
        1 | 2 => KSym::X(m, rep_index(m, range, oracle, rng)?),
        _ => KSym::Z(m, rep_index(m, range, oracle, rng)?),
    };
    Ok(letter(sym, rng))
}

pub fn random_kernel_word(
    len: usize,
    range: &IndexRange,
    oracle: &HaltingOracle,
    rng: &mut impl Rng,
) -> Result<KWord, MachineError> {
    (0..len).map(|_| random_kernel_letter(range, oracle, rng)).collect::<Result<Vec<_>, _>>().map(KWord)
}

/// A relator of the kernel group: an involution square, a commutator with
/// `J`, the twisted commutator of `x[m,i]` and `z[m,i]`, or a commutator of
/// letters with distinct indices.  Returns the family number with the word.
pub fn random_kernel_relator(
    range: &IndexRange,
    oracle: &HaltingOracle,
    rng: &mut impl Rng,
) -> Result<(u8, KWord), MachineError> {
    let m = rng.gen_range(range.m.0..=range.m.1);
    let i = rep_index(m, range, oracle, rng)?;
    let (x, z) = (KSym::X(m, i), KSym::Z(m, i));
    let fam = rng.gen_range(0..4u8);
    let w = match fam {
        0 => {
            let s = *[KSym::J, x, z].choose(rng).unwrap();
            word(&[s, s], rng)
        }
        1 => {
            let s = if rng.gen_bool(0.5) { x } else { z };
            word(&[s, KSym::J, s, KSym::J], rng)
        }
        2 => {
            let mut syms = vec![x, z, x, z];
            if oracle.representative(m, i + 1)? != 0 {
                syms.push(KSym::J);
            }
            word(&syms, rng)
        }
        _ => {
            let mut j = rep_index(m, range, oracle, rng)?;
            let mut tries = 0;
            while j == i && tries < 50 {
                j = rep_index(m, range, oracle, rng)?;
                tries += 1;
            }
            if j == i {
                // index window of size one; fall back to a square
                word(&[x, x], rng)
            } else {
                let (a, b) = match rng.gen_range(0..3) {
                    0 => (x, KSym::Z(m, j)),
                    1 => (x, KSym::X(m, j)),
                    _ => (z, KSym::Z(m, j)),
                };
                word(&[a, b, a, b], rng)
            }
        }
    };
    Ok((fam, w))
}

/// Outcome of one relator-insertion trial.
#[derive(Clone, Debug)]
pub struct InsertionTrial {
    pub base: KWord,
    pub inserted: KWord,
    pub eta_fixed: bool,
    pub idempotent: bool,
    pub metrics_monotone: bool,
    pub relator_trivial: bool,
}

impl InsertionTrial {
    pub fn passed(&self) -> bool {
        self.eta_fixed && self.idempotent && self.metrics_monotone && self.relator_trivial
    }
}

fn monotone(w: &KWord, oracle: &HaltingOracle) -> Result<bool, KsError> {
    let nf = eta(w, oracle)?;
    let body = nf.body_kword().metrics();
    let full = nf.to_kword().metrics();
    let orig = w.metrics();
    Ok(body.length <= orig.length
        && body.bit_length <= orig.bit_length
        && body.max_index <= orig.max_index
        && full.max_index <= orig.max_index)
}

/// Insert a random relator into a random word and compare normal forms.
pub fn insertion_trial(
    max_len: usize,
    range: &IndexRange,
    oracle: &HaltingOracle,
    rng: &mut impl Rng,
) -> Result<InsertionTrial, KsError> {
    let len = rng.gen_range(0..=max_len);
    let base = random_kernel_word(len, range, oracle, rng)?;
    let (_, rel) = random_kernel_relator(range, oracle, rng)?;
    let pos = rng.gen_range(0..=base.len());
    let mut letters = base.0[..pos].to_vec();
    letters.extend(rel.0.iter().copied());
    letters.extend(base.0[pos..].iter().copied());
    let inserted = KWord(letters);
    let nf = eta(&base, oracle)?;
    let nf2 = eta(&inserted, oracle)?;
    let again = eta(&nf.to_kword(), oracle)?;
    Ok(InsertionTrial {
        eta_fixed: nf == nf2,
        idempotent: again == nf,
        metrics_monotone: monotone(&base, oracle)? && monotone(&inserted, oracle)?,
        relator_trivial: eta(&rel, oracle)?.is_identity(),
        base,
        inserted,
    })
}

/// Random word over `J S T W X Z` with the given length.
pub fn random_group_word(len: usize, rng: &mut impl Rng) -> GWord {
    GWord(
        (0..len)
            .map(|_| match rng.gen_range(0..6) {
                0 => (GTok::K(KSym::J), false),
                1 => (GTok::K(KSym::X(0, 0)), false),
                2 => (GTok::K(KSym::Z(0, 0)), false),
                k => (GTok::St(Stable::ALL[k - 3], rng.gen_bool(0.5)), false),
            })
            .collect(),
    )
}

/// Product of `count` conjugates `u r^{±1} u^-1` of relators from the list.
pub fn conjugated_product(relators: &[Word], count: usize, conj_len: usize, rng: &mut impl Rng) -> GWord {
    let mut out = GWord::default();
    for _ in 0..count {
        let r = relators.choose(rng).expect("nonempty relator list");
        let mut r = GWord::from_word(r).expect("relators use group letters");
        if rng.gen_bool(0.5) {
            r = r.inverse();
        }
        let u = random_group_word(rng.gen_range(0..=conj_len), rng);
        out = out.concat(&u).concat(&r).concat(&u.inverse());
    }
    out
}

/// Random word whose image in the free group on the stable letters is
/// nontrivial, which makes the word itself nontrivial.
pub fn random_retraction_nontrivial(max_len: usize, rng: &mut impl Rng) -> GWord {
    loop {
        let len = rng.gen_range(1..=max_len);
        let w = random_group_word(len, rng);
        if !free_retraction(&w).is_empty() {
            return w;
        }
    }
}

/// Counts from a word-problem sampling run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordProblemTally {
    pub trivial_samples: usize,
    pub nontrivial_samples: usize,
    pub misclassified: usize,
    pub undecided: usize,
}

impl WordProblemTally {
    pub fn passed(&self) -> bool {
        self.misclassified == 0 && self.undecided == 0
    }
}

/// Classify `samples` trivial products and `samples` retraction-nontrivial
/// words.
pub fn word_problem_sampling(
    relators: &[Word],
    samples: usize,
    oracle: &HaltingOracle,
    rng: &mut impl Rng,
) -> WordProblemTally {
    let mut t = WordProblemTally::default();
    for _ in 0..samples {
        let count = rng.gen_range(1..=20);
        let w = conjugated_product(relators, count, 4, rng);
        t.trivial_samples += 1;
        match is_trivial_with(&w, oracle).decision {
            Decision::Trivial => {}
            Decision::Nontrivial => t.misclassified += 1,
            Decision::UndecidedBudget => t.undecided += 1,
        }
    }
    for _ in 0..samples {
        let w = random_retraction_nontrivial(30, rng);
        t.nontrivial_samples += 1;
        match is_trivial_with(&w, oracle).decision {
            Decision::Nontrivial => {}
            Decision::Trivial => t.misclassified += 1,
            Decision::UndecidedBudget => t.undecided += 1,
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::TuringMachine;
    use crate::presentations::truncated_gs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_relators_are_trivial() {
        let oracle = HaltingOracle::new(TuringMachine::counter(), 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 4];
        for _ in 0..300 {
            let (fam, r) = random_kernel_relator(&IndexRange::default(), &oracle, &mut rng).unwrap();
            seen[fam as usize] = true;
            assert!(eta(&r, &oracle).unwrap().is_identity(), "{r}");
        }
        assert_eq!(seen, [true; 4]);
    }

    #[test]
    fn insertion_trials_pass() {
        let oracle = HaltingOracle::new(TuringMachine::counter(), 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let t = insertion_trial(12, &IndexRange::default(), &oracle, &mut rng).unwrap();
            assert!(t.passed(), "{t:?}");
        }
    }

    #[test]
    fn small_word_problem_run() {
        let oracle = HaltingOracle::new(TuringMachine::counter(), 10_000);
        let rels: Vec<Word> = truncated_gs(2, 2, &oracle).labeled.into_iter().map(|(_, w)| w).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = word_problem_sampling(&rels, 40, &oracle, &mut rng);
        assert!(t.passed(), "{t:?}");
        assert_eq!(t.trivial_samples, 40);
    }

    #[test]
    fn retraction_words_have_stable_letters() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            assert!(!free_retraction(&random_retraction_nontrivial(10, &mut rng)).is_empty());
        }
    }
}
