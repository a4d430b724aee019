//! Property suites shared by the `selftest` subcommand and the acceptance
//! run.  Every suite is seeded and returns one line per check.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificates::inequalities::{run_suite, SuiteConfig};
use crate::certificates::rounding::sign_round;
use crate::certificates::sos::{sos_search, Quotient, SosOptions, SosOutcome};
use crate::certificates::states::{random_near_involution, random_unit_vector};
use crate::compiler::ReductionConfig;
use crate::decomp::decompose_key_relation;
use crate::machines::{HaltingOracle, TuringMachine};
use crate::presentations::{coset_expectation, truncated_gs, CyclicFreeProduct, TruncatedGsProvider};
use crate::sampling::{insertion_trial, word_problem_sampling, IndexRange};
use crate::words::{rat, Generator, StarPolynomial, Word};

pub const SUITES: [&str; 5] = ["normalform", "britton", "inequalities", "certificates", "decomposition"];

/// Result of one check inside a suite.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}/{}: {}", self.suite, self.name, self.detail)
    }
}

fn line(suite: &'static str, name: &str, passed: bool, detail: String) -> CheckLine {
    CheckLine { suite, name: name.to_string(), passed, detail }
}

/// Trial counts used by the suites; `quick` is what `selftest` runs.
#[derive(Clone, Copy, Debug)]
pub struct Sizes {
    pub insertions: usize,
    pub word_problem: usize,
    pub inequality_trials: usize,
    pub rounding: usize,
    pub squares: usize,
    pub cosets: usize,
    pub key_horizon: u64,
}

impl Sizes {
    pub fn quick() -> Self {
        Sizes { insertions: 2000, word_problem: 200, inequality_trials: 100, rounding: 200, squares: 10, cosets: 10, key_horizon: 3 }
    }
}

pub fn run(suite: &str, seed: u64, sizes: &Sizes) -> Option<Vec<CheckLine>> {
    Some(match suite {
        "normalform" => normalform(seed, sizes.insertions),
        "britton" => britton(seed, sizes.word_problem),
        "inequalities" => inequalities(seed, sizes.inequality_trials),
        "certificates" => {
            let mut v = vec![rounding(seed, sizes.rounding, 16)];
            v.extend(sos_checks(seed, sizes.squares));
            v.push(cosets(seed, sizes.cosets));
            v
        }
        "decomposition" => decomposition(sizes.key_horizon),
        "all" => {
            let mut v = Vec::new();
            for s in SUITES {
                v.extend(run(s, seed, sizes)?);
            }
            v
        }
        _ => return None,
    })
}

/// Machine used by the kernel and word-problem samplers: it halts at step
/// `m + 2`, so small inputs exercise index periodicity.
fn sampling_oracle() -> HaltingOracle {
    HaltingOracle::new(TuringMachine::counter(), 10_000)
}

pub fn normalform(seed: u64, trials: usize) -> Vec<CheckLine> {
    let oracle = sampling_oracle();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = IndexRange::default();
    let (mut fixed, mut idem, mut mono, mut errors) = (0, 0, 0, 0);
    for _ in 0..trials {
        match insertion_trial(16, &range, &oracle, &mut rng) {
            Ok(t) => {
                fixed += (t.eta_fixed && t.relator_trivial) as usize;
                idem += t.idempotent as usize;
                mono += t.metrics_monotone as usize;
            }
            Err(_) => errors += 1,
        }
    }
    vec![
        line("normalform", "relator-insertion", fixed == trials, format!("{fixed}/{trials} unchanged, {errors} errors")),
        line("normalform", "idempotence", idem == trials, format!("{idem}/{trials}")),
        line("normalform", "metric-monotonicity", mono == trials, format!("{mono}/{trials}")),
    ]
}

pub fn britton(seed: u64, samples: usize) -> Vec<CheckLine> {
    let oracle = sampling_oracle();
    let rels: Vec<Word> = truncated_gs(2, 3, &oracle).labeled.into_iter().map(|(_, w)| w).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = word_problem_sampling(&rels, samples, &oracle, &mut rng);
    vec![line(
        "britton",
        "sampling",
        t.passed(),
        format!(
            "{} trivial + {} nontrivial samples, {} misclassified, {} undecided",
            t.trivial_samples, t.nontrivial_samples, t.misclassified, t.undecided
        ),
    )]
}

pub fn inequalities(seed: u64, trials: usize) -> Vec<CheckLine> {
    let cfg = SuiteConfig { trials, seed, ..SuiteConfig::default() };
    match run_suite(&cfg) {
        Ok(res) => res
            .into_iter()
            .map(|r| {
                line(
                    "inequalities",
                    &format!("({})", r.name),
                    r.passed(),
                    format!("{} trials, {} failures, worst excess {:.3e}", r.trials, r.failures, r.worst),
                )
            })
            .collect(),
        Err(e) => vec![line("inequalities", "suite", false, e.to_string())],
    }
}

pub fn rounding(seed: u64, trials: usize, max_dim: usize) -> CheckLine {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let n = rng.gen_range(1..=max_dim);
        let t = rng.gen_range(0.0..0.3);
        let a = random_near_involution(n, t, &mut rng);
        let xi = random_unit_vector(n, &mut rng);
        match sign_round(&a, &xi) {
            Ok((_, rep)) => {
                worst = worst.max(rep.deviation.max(rep.adjoint_deviation) - 2.0 * rep.epsilon);
                if !rep.bound_holds(1e-9) {
                    bad += 1;
                }
            }
            Err(_) => bad += 1,
        }
    }
    line("certificates", "sign-rounding", bad == 0, format!("{trials} matrices up to {max_dim}x{max_dim}, {bad} violations, worst excess {worst:.3e}"))
}

/// Random polynomial with small rational coefficients on words of length
/// at most `deg` over the given letters and their stars.
pub fn random_star_poly(letters: &[&str], deg: usize, terms: usize, rng: &mut impl Rng) -> StarPolynomial {
    let mut gens: Vec<Generator> = letters.iter().map(|s| Generator::plain(s)).collect();
    gens.extend(letters.iter().map(|s| Generator::plain(s).star()));
    let mut p = StarPolynomial::zero();
    for _ in 0..terms {
        let len = rng.gen_range(0..=deg);
        let w = Word((0..len).map(|_| *gens.choose(rng).unwrap()).collect());
        let c = rat(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        p.add_term(w, c);
    }
    p
}

pub fn motzkin() -> StarPolynomial {
    StarPolynomial::parse("1 : x x x x y y\n1 : x x y y y y\n-3 : x x y y\n1 : 1").expect("fixed polynomial")
}

pub fn sos_checks(seed: u64, squares: usize) -> Vec<CheckLine> {
    let opts = SosOptions::default();
    let mut out = Vec::new();

    let f = StarPolynomial::parse("2 : 1\n1 : x\n1 : x~").expect("fixed polynomial");
    let z2 = Quotient::Group(CyclicFreeProduct::new([("x".to_string(), 2)]));
    let (ok, detail) = match sos_search(&f, &z2, 1, &opts) {
        Ok(SosOutcome::Certified(c)) => {
            let r = c.check(&f, &z2);
            (r <= 1e-8, format!("residual {r:.3e}"))
        }
        Ok(SosOutcome::Infeasible(r)) => (false, format!("no certificate, floor {:.3e}", r.residual_floor)),
        Err(e) => (false, e.to_string()),
    };
    out.push(line("certificates", "two-plus-two-x", ok, detail));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for _ in 0..squares {
        let p = random_star_poly(&["x", "y"], 2, 4, &mut rng);
        let f = &p.star() * &p;
        match sos_search(&f, &Quotient::Free, 2, &opts) {
            Ok(SosOutcome::Certified(c)) => {
                let r = c.check(&f, &Quotient::Free);
                worst = worst.max(r);
                if r > 1e-8 || c.min_eigenvalue < -1e-8 {
                    fails += 1;
                }
            }
            _ => fails += 1,
        }
    }
    out.push(line("certificates", "hermitian-squares", fails == 0, format!("{squares} random p*p, {fails} uncertified, worst residual {worst:.3e}")));

    let (ok, detail) = match sos_search(&motzkin(), &Quotient::CommutativeSelfAdjoint, 3, &opts) {
        Ok(SosOutcome::Infeasible(r)) => (r.residual_floor > 1e-4, format!("infeasible, residual floor {:.3e}", r.residual_floor)),
        Ok(SosOutcome::Certified(c)) => (false, format!("unexpected certificate, residual {:.3e}", c.residual)),
        Err(e) => (false, e.to_string()),
    };
    out.push(line("certificates", "motzkin", ok, detail));
    out
}

/// Coset expectation onto `H` of `alpha* alpha` for random `alpha` in a
/// free product of cyclic groups, certified as a sum of squares in `CH`.
pub fn coset_case(
    group: &CyclicFreeProduct,
    subgroup: &[&str],
    alpha_len: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> (usize, f64) {
    let letters: Vec<&str> = group.orders.keys().map(String::as_str).collect();
    let h = CyclicFreeProduct::new(subgroup.iter().map(|s| (s.to_string(), group.orders[*s])));
    let qh = Quotient::Group(h);
    let opts = SosOptions::default();
    let mut fails = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let alpha = group.reduce_poly(&random_star_poly(&letters, alpha_len, 4, rng));
        let sq = group.reduce_poly(&(&alpha.star() * &alpha));
        let in_h = |w: &Word| -> Result<bool, ()> { Ok(w.letters().iter().all(|l| subgroup.contains(&l.name.as_str()))) };
        let r = coset_expectation(&sq, in_h).expect("infallible membership");
        let deg = r.terms().map(|(w, _)| w.len()).max().unwrap_or(0).div_ceil(2);
        match sos_search(&r, &qh, deg, &opts) {
            Ok(SosOutcome::Certified(c)) => {
                let res = c.check(&r, &qh);
                worst = worst.max(res);
                if res > 1e-8 || c.min_eigenvalue < -1e-8 {
                    fails += 1;
                }
            }
            _ => fails += 1,
        }
    }
    (fails, worst)
}

pub fn cosets(seed: u64, samples: usize) -> CheckLine {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CyclicFreeProduct::new([("a".to_string(), 2), ("b".to_string(), 3)]);
    let (fails, worst) = coset_case(&g, &["a"], 3, samples, &mut rng);
    line("certificates", "coset-expectation", fails == 0, format!("{samples} samples in Z2*Z3 onto <a>, {fails} uncertified, worst residual {worst:.3e}"))
}

pub fn decomposition(horizon: u64) -> Vec<CheckLine> {
    let oracle = HaltingOracle::new(TuringMachine::never_halting(), 64);
    let provider = TruncatedGsProvider::new(oracle.clone());
    let cfg = ReductionConfig::default();
    let mut out = Vec::new();
    for n in 0..=horizon {
        let (ok, detail) = match decompose_key_relation(1, n, &oracle, &provider, &cfg) {
            Ok(k) => match (k.decomposition.verify(&k.relations), k.decomposition.size(&k.relations)) {
                (Ok(v), Ok(s)) => (v.is_valid(), format!("{} entries, size {}", k.decomposition.entries.len(), s.value)),
                (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
            },
            Err(e) => (false, e.to_string()),
        };
        out.push(line("decomposition", &format!("key n={n} m=1"), ok, detail));
    }
    out
}
