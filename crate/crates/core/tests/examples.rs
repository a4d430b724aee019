//! Worked examples with small hand-checkable answers, each confirmed
//! through a second route where one exists.


use nalgebra::{DMatrix, Matrix2};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncpos::compiler::{alphabet, relations_rm, RelationSet};
use ncpos::decomp::{from_relator_product, RDecomposition, RelatorFactor};
use ncpos::gs::{is_trivial, tau0, Decision, GWord};
use ncpos::ks::{eta, KWord};
use ncpos::machines::{HaltingOracle, HaltingProfile, TuringMachine};
use ncpos::presentations::{embed_free, free_reduce, EmbedTarget, PresentationProvider, TruncatedGsProvider};
use ncpos::words::{Generator, StarPolynomial, Word};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn never(budget: u64) -> HaltingOracle {
    HaltingOracle::new(TuringMachine::never_halting(), budget)
}

fn nf(s: &str) -> String {
    eta(&KWord::parse(s).unwrap(), &never(200)).unwrap().to_string()
}

/// Reverse the token list and toggle a trailing `~` on each token.
fn star_by_strings(word: &str) -> String {
    word.split_whitespace()
        .rev()
        .map(|t| match t.strip_suffix('~') {
            Some(b) => b.to_string(),
            None => format!("{t}~"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn star_of_a_small_polynomial() {
    let p = StarPolynomial::parse("2 : x1\n3 : x2 x1~").unwrap();
    let expected = StarPolynomial::parse("2 : x1~\n3 : x1 x2~").unwrap();
    assert_eq!(p.star(), expected);
    for (w, c) in p.terms() {
        let s = Word::parse(&star_by_strings(&w.to_string())).unwrap();
        assert_eq!(&p.star().coefficient(&s), c);
    }
}

#[test]
fn counter_machine_on_three() {
    assert_eq!(TuringMachine::counter().run_bounded(3, 10), HaltingProfile::HaltedAt(5));
}

/// Left-regular representation of the dihedral group of order eight.
fn regular_rep(gens: &[Matrix2<i32>]) -> (Vec<Matrix2<i32>>, impl Fn(&Matrix2<i32>) -> DMatrix<i32>) {
    let mut elems = vec![Matrix2::identity()];
    let mut k = 0;
    while k < elems.len() {
        for g in gens {
            let e = g * elems[k];
            if !elems.contains(&e) {
                elems.push(e);
            }
        }
        k += 1;
    }
    let table = elems.clone();
    let rep = move |g: &Matrix2<i32>| {
        let n = table.len();
        let mut m = DMatrix::zeros(n, n);
        for (j, e) in table.iter().enumerate() {
            let i = table.iter().position(|f| *f == g * e).unwrap();
            m[(i, j)] = 1;
        }
        m
    };
    (elems, rep)
}

#[test]
fn twisted_commutator_is_j() {
    assert_eq!(nf("x[0,0] z[0,0] x[0,0] z[0,0]"), "J");
    let x = Matrix2::new(1, 0, 0, -1);
    let z = Matrix2::new(0, 1, 1, 0);
    let (elems, rep) = regular_rep(&[x, z]);
    assert_eq!(elems.len(), 8);
    let (px, pz, pj) = (rep(&x), rep(&z), rep(&(-Matrix2::identity())));
    let one = DMatrix::identity(8, 8);
    assert_eq!(&px * &pz * &px * &pz, pj);
    assert_ne!(pj, one);
    for m in [&px, &pz, &pj] {
        assert_eq!(m * m, one);
        assert_eq!(m * &pj, &pj * m);
    }
}

#[test]
fn middle_block_cancels_and_outer_blocks_merge() {
    assert_eq!(nf("x[0,0] x[1,0] x[1,0] z[0,0]"), nf("x[0,0] z[0,0]"));
    assert_eq!(nf("x[0,0] x[1,0] x[1,0] z[0,0]"), "x[0,0] z[0,0]");
}

#[test]
fn normalize_example_from_the_command_line() {
    let mut out = Vec::new();
    let code = ncpos::cli::run(["ncpos", "normalize", "--builtin", "ks", "z[0,0] x[0,0]"], &mut out);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap().lines().next(), Some("J x[0,0] z[0,0]"));
}

#[test]
fn commuting_conjugates_give_a_trivial_word() {
    let decide = |s: &str| is_trivial(&GWord::parse(s).unwrap(), &TuringMachine::never_halting(), None).decision;
    // S X S^-1 = X[0,1] commutes with X = X[0,0]
    assert_eq!(decide("S X S~ X S X~ S~ X~"), Decision::Trivial);
    assert_eq!(decide("T Z T~ Z T Z~ T~ Z~"), Decision::Trivial);
    // W X W^-1 = X[1,0] lies in another free factor of the kernel
    assert_eq!(decide("W X W~ X W X~ W~ X~"), Decision::Nontrivial);
    assert_eq!(nf("x[1,0] x[0,0] x[1,0] x[0,0]"), "x[1,0] x[0,0] x[1,0] x[0,0]");
    assert_eq!(decide("X Z X~ Z~"), Decision::Nontrivial);
}

#[test]
fn trace_of_j_and_of_the_projection() {
    let o = never(200);
    assert_eq!(tau0(&StarPolynomial::parse("1 : J").unwrap(), &o).unwrap(), BigRational::zero());
    for n in 1..=4u64 {
        let o = HaltingOracle::new(TuringMachine::halting_after(n), 200);
        let half = |w: &str| StarPolynomial::parse(&format!("1/2 : 1\n-1/2 : {w}")).unwrap();
        let mut p = half("J");
        for i in 0..n {
            p = &p * &half(&format!("z[0,{i}]"));
        }
        assert_eq!(p.len(), 1 << (n + 1));
        let expected = rat(1, 1 << (n + 1));
        assert_eq!(tau0(&p, &o).unwrap(), expected, "n = {n}");
    }
}

fn random_free_word(letters: &[&str], len: usize, rng: &mut impl Rng) -> Word {
    Word(
        (0..len)
            .map(|_| {
                let g = Generator::plain(letters[rng.gen_range(0..letters.len())]);
                if rng.gen_bool(0.5) {
                    g.star()
                } else {
                    g
                }
            })
            .collect(),
    )
}

#[test]
fn embeddings_commute_with_free_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for target in [EmbedTarget::Free(2), EmbedTarget::Z3(2), EmbedTarget::Z2(3)] {
        let f = embed_free(3, target).unwrap();
        let g = target.group();
        for _ in 0..100 {
            let w = random_free_word(&["x1", "x2", "x3"], rng.gen_range(0..10), &mut rng);
            let via_free = g.normal_form(&f.apply_word(&free_reduce(&w)));
            assert_eq!(via_free, g.normal_form(&f.apply_word(&w)), "{w}");
            // unit preserved, and w w* maps to the identity
            assert!(g.is_identity(&f.apply_word(&w.concat(&w.star()))));
        }
    }
}

fn relation_set() -> RelationSet {
    let p = TruncatedGsProvider::new(never(64));
    relations_rm(1, &p.provide(1, 1))
}

fn random_alphabet_word(len: usize, rng: &mut impl Rng) -> Word {
    let a = alphabet();
    Word((0..len).map(|_| a[rng.gen_range(0..a.len())]).collect())
}

fn random_decomposition(rels: &RelationSet, rng: &mut impl Rng) -> RDecomposition {
    let mut d = RDecomposition::new(StarPolynomial::zero());
    for _ in 0..rng.gen_range(1..5) {
        let c = rat(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        let (u, v) = (random_alphabet_word(rng.gen_range(0..4), rng), random_alphabet_word(rng.gen_range(0..4), rng));
        d.push(c, u, rng.gen_range(0..rels.len()), rng.gen_bool(0.5), v);
    }
    d.target = d.expansion(rels).unwrap();
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decomposition_chains_compose(seed in any::<u64>()) {
        let rels = relation_set();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d1 = random_decomposition(&rels, &mut rng);
        let d2 = random_decomposition(&rels, &mut rng);
        let chain = d1.compose(&d2);
        prop_assert!(chain.verify(&rels).unwrap().is_valid());
        let p = StarPolynomial::monomial(random_alphabet_word(3, &mut rng));
        prop_assert!(chain.lmul(&p).rmul(&p).verify(&rels).unwrap().is_valid());
        prop_assert!(chain.scale(&rat(-3, 2)).verify(&rels).unwrap().is_valid());
        let mut off = chain.clone();
        off.target = &off.target + &StarPolynomial::monomial(Word::parse("Xt").unwrap());
        prop_assert!(!off.verify(&rels).unwrap().is_valid());
    }

    /// Telescoping `k` conjugated relators costs at most `k (1 + 6 L)` for
    /// conjugators of length at most `L`, and exactly `k` with empty ones.
    #[test]
    fn telescope_size_is_linear(seed in any::<u64>(), k in 1usize..8, len in 0usize..8) {
        let rels = relation_set();
        let with_relator: Vec<usize> = (0..rels.len()).filter(|&i| rels.get(i).unwrap().relator.is_some()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factors: Vec<RelatorFactor> = (0..k)
            .map(|_| RelatorFactor {
                conj: random_alphabet_word(len, &mut rng),
                rel: with_relator[rng.gen_range(0..with_relator.len())],
                inverse: rng.gen_bool(0.5),
            })
            .collect();
        let d = from_relator_product(&factors, &rels).unwrap();
        prop_assert!(d.verify(&rels).unwrap().is_valid());
        let size = d.size(&rels).unwrap().value;
        prop_assert!(size <= rat((k * (1 + 6 * len)) as i64, 1));
        if len == 0 {
            prop_assert_eq!(size, rat(k as i64, 1));
        }
        prop_assert_eq!(d.size(&rels).unwrap().coefficient_sum, rat(k as i64, 1));
    }
}

#[test]
fn one_relation_decomposition_has_unit_size() {
    let rels = relation_set();
    let idx = (0..rels.len()).find(|&i| rels.get(i).unwrap().relator.is_some()).unwrap();
    let d = from_relator_product(&[RelatorFactor { conj: Word::empty(), rel: idx, inverse: false }], &rels).unwrap();
    assert_eq!(d.size(&rels).unwrap().value, BigRational::one());
}

/// Weighted norm of `Q U^n P U^-n Q` from its eight expansion terms: each
/// has coefficient of modulus 1/8 and length `4n` plus one for every
/// projection letter taken.
fn ptilde_norm11_by_terms(n: usize) -> BigRational {
    let mut total = BigRational::zero();
    for mask in 0..8u32 {
        total += rat((4 * n as u32 + mask.count_ones()) as i64, 8);
    }
    total
}

#[test]
fn weighted_norm_of_projection_products() {
    use ncpos::compiler::ptilde;
    for n in 1..5 {
        let p = ptilde(n);
        assert_eq!(p.norm11(), ptilde_norm11_by_terms(n), "n = {n}");
        assert_eq!(p.norm11(), rat(8 * n as i64 + 3, 2));
    }
    assert_eq!(ptilde(1).norm11(), rat(11, 2));
    // without conjugation the two `OQ` terms merge and the 3/2 closed form is exact
    assert_eq!(ptilde(0).norm11(), rat(3, 2));
}
