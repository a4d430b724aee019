//! Randomized checks of the norm inequalities for approximate states:
//!
//! - (a) tracial states: `|f| <= (sum |λ_i|) sqrt(eps)` for `f = sum λ_i u_i r_i v_i`;
//! - (b) synchronous states: `|u ⊗ 1 - 1 ⊗ omega(u)| <= |u|_{1,1} sqrt(eps)`;
//! - (c) `| |u* a u ⊗ 1| - |a ⊗ 1| | <= |a|_1 deg(u) sqrt(eps)`;
//! - (d) `Re phi(u* a u a ⊗ 1) >= -|u* a u|_{1,1} |a ⊗ 1| sqrt(eps)` for squares `a`;
//! - (e) `|f| <= size sqrt(eps)` under the left restriction of a synchronous state;
//! - (f) `| |f|_rounded - |f| | <= 2 |f|_{1,1} sqrt(eps)` after sign rounding;
//! - (g) sign rounding of a tensor state multiplies the synchronicity defect by at most 25.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::states::{
    epsilon_of, random_hermitian, random_near_involution, random_near_involution_unitary, random_unit_vector,
    random_unitary, exp_i, max_entangled, to_f64, CMat, EpsilonMode, FiniteState, StateError, StateKind, StateRef,
    TensorState,
};
use crate::compiler::wmap;
use crate::words::{omega, rat, Generator, StarPolynomial, TensorPolynomial, Word};

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub trials: usize,
    pub max_dim: usize,
    pub slack: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { trials: 100, max_dim: 8, slack: 1e-9, seed: 0 }
    }
}

/// Outcome of one inequality over all trials.  `worst` is the largest
/// `lhs - rhs` seen; the check passes when it stays below the slack.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: char,
    pub trials: usize,
    pub failures: usize,
    pub worst: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    name: char,
    trials: usize,
    failures: usize,
    worst: f64,
    slack: f64,
}

impl Tally {
    fn new(name: char, slack: f64) -> Self {
        Tally { name, trials: 0, failures: 0, worst: f64::NEG_INFINITY, slack }
    }

    /// Record `lhs <= rhs`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        let gap = lhs - rhs;
        self.worst = self.worst.max(gap);
        // written so that a NaN gap counts as a failure
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(gap <= self.slack) {
            self.failures += 1;
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult { name: self.name, trials: self.trials, failures: self.failures, worst: self.worst }
    }
}

const LETTERS: [&str; 3] = ["x1", "x2", "x3"];

fn letters(k: usize) -> Vec<Generator> {
    LETTERS[..k].iter().map(|s| Generator::plain(s)).collect()
}

fn random_word(gens: &[Generator], max_len: usize, rng: &mut impl Rng) -> Word {
    let len = rng.gen_range(0..=max_len);
    Word(
        (0..len)
            .map(|_| {
                let g = gens[rng.gen_range(0..gens.len())];
                if rng.gen_bool(0.5) {
                    g.star()
                } else {
                    g
                }
            })
            .collect(),
    )
}

fn random_poly(gens: &[Generator], terms: usize, max_len: usize, rng: &mut impl Rng) -> StarPolynomial {
    let mut p = StarPolynomial::zero();
    for _ in 0..terms {
        let c = rat(rng.gen_range(-6..=6), rng.gen_range(1..=4));
        p.add_term(random_word(gens, max_len, rng), c);
    }
    if p.is_zero() {
        p = StarPolynomial::monomial(random_word(gens, max_len, rng));
    }
    p
}

/// A few relations of mixed shape: involution defects, commutators and
/// differences of monomials.
fn random_relations(gens: &[Generator], rng: &mut impl Rng) -> Vec<StarPolynomial> {
    let one = StarPolynomial::one();
    let mut out = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let x = StarPolynomial::letter(gens[rng.gen_range(0..gens.len())]);
        let y = StarPolynomial::letter(gens[rng.gen_range(0..gens.len())]);
        let r = match rng.gen_range(0..3) {
            0 => &(&x * &x) - &one,
            1 => &(&x * &y) - &(&y * &x),
            _ => {
                StarPolynomial::monomial(random_word(gens, 3, rng)) - StarPolynomial::monomial(random_word(gens, 3, rng))
            }
        };
        out.push(r);
    }
    out.retain(|r| !r.is_zero());
    if out.is_empty() {
        out.push(&(&StarPolynomial::letter(gens[0]) * &StarPolynomial::letter(gens[0])) - &one);
    }
    out
}

/// Random decomposition `sum λ u r v` over `rels ∪ rels*`.
struct Decomposition {
    poly: StarPolynomial,
    coefficient_sum: f64,
    size: f64,
}

fn random_decomposition(gens: &[Generator], rels: &[StarPolynomial], rng: &mut impl Rng) -> Decomposition {
    let mut poly = StarPolynomial::zero();
    let mut coefficient_sum = 0.0;
    let mut size = 0.0;
    for _ in 0..rng.gen_range(1..=5) {
        let lambda = rat(rng.gen_range(-5..=5), rng.gen_range(1..=3));
        let r = &rels[rng.gen_range(0..rels.len())];
        let r = if rng.gen_bool(0.5) { r.star() } else { r.clone() };
        let u = random_word(gens, 3, rng);
        let v = random_word(gens, 3, rng);
        poly = poly + r.mul_word_left(&u).mul_word_right(&v).scale(&lambda);
        let l = to_f64(&lambda).abs();
        coefficient_sum += l;
        size += l * (1.0 + to_f64(&r.norm1()) * v.len() as f64);
    }
    Decomposition { poly, coefficient_sum, size }
}

fn with_stars(rels: &[StarPolynomial]) -> Vec<StarPolynomial> {
    rels.iter().flat_map(|r| [r.clone(), r.star()]).collect()
}

fn gen_map(gens: &[Generator], mut f: impl FnMut() -> CMat) -> BTreeMap<Generator, CMat> {
    gens.iter().map(|g| (*g, f())).collect()
}

/// Unitary generators with an approximately synchronous vector: right
/// action `(A e^{i t H})^T`, vector a perturbed maximally entangled state.
fn random_sync_unitary_state(gens: &[Generator], d: usize, rng: &mut ChaCha8Rng) -> Result<TensorState, StateError> {
    let t = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.3) };
    let left = gen_map(gens, || random_unitary(d, rng));
    let right = left.iter().map(|(g, a)| (*g, (a * exp_i(&random_hermitian(d, t, rng))).transpose())).collect();
    let psi = (max_entangled(d) + random_unit_vector(d * d, rng) * num_complex::Complex64::new(t, 0.0)).normalize();
    TensorState::from_pairs(&left, &right, d, psi)
}

fn sync_epsilon(state: &TensorState, gens: &[Generator]) -> Result<f64, StateError> {
    epsilon_of(StateRef::Tensor(state), EpsilonMode::Synchronous(gens))
}

fn norm_left(state: &TensorState, p: &StarPolynomial) -> Result<f64, StateError> {
    state.norm(&TensorPolynomial::left(p))
}

fn check_a(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult, StateError> {
    let mut t = Tally::new('a', cfg.slack);
    for _ in 0..cfg.trials {
        let gens = letters(rng.gen_range(1..=3));
        let d = rng.gen_range(1..=cfg.max_dim);
        let noise = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.3) };
        let mats = gen_map(&gens, || random_near_involution_unitary(d, noise, rng));
        let tau = FiniteState::new(mats, d, StateKind::Trace)?;
        let rels = random_relations(&gens, rng);
        let eps = epsilon_of(StateRef::Single(&tau), EpsilonMode::ErState(&with_stars(&rels)))?;
        let dec = random_decomposition(&gens, &rels, rng);
        t.le(tau.norm(&dec.poly)?, dec.coefficient_sum * eps.sqrt());
        t.trials += 1;
    }
    Ok(t.finish())
}

fn check_b(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult, StateError> {
    let mut t = Tally::new('b', cfg.slack);
    for _ in 0..cfg.trials {
        let gens = letters(rng.gen_range(1..=3));
        let phi = random_sync_unitary_state(&gens, rng.gen_range(1..=cfg.max_dim), rng)?;
        let eps = sync_epsilon(&phi, &gens)?;
        let u = random_poly(&gens, rng.gen_range(1..=4), 4, rng);
        let mut diff = TensorPolynomial::left(&u);
        diff.add_assign(&TensorPolynomial::right(&omega(&u)).scale(&rat(-1, 1)));
        t.le(phi.norm(&diff)?, to_f64(&u.norm11()) * eps.sqrt());
        t.trials += 1;
    }
    Ok(t.finish())
}

fn check_c(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult, StateError> {
    let mut t = Tally::new('c', cfg.slack);
    for _ in 0..cfg.trials {
        let gens = letters(rng.gen_range(1..=3));
        let phi = random_sync_unitary_state(&gens, rng.gen_range(1..=cfg.max_dim), rng)?;
        let eps = sync_epsilon(&phi, &gens)?;
        let u = random_word(&gens, 4, rng);
        let a = random_poly(&gens, rng.gen_range(1..=3), 3, rng);
        let uau = a.mul_word_left(&u.star()).mul_word_right(&u);
        let lhs = (norm_left(&phi, &uau)? - norm_left(&phi, &a)?).abs();
        t.le(lhs, to_f64(&a.norm1()) * u.len() as f64 * eps.sqrt());
        t.trials += 1;
    }
    Ok(t.finish())
}

fn check_d(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult, StateError> {
    let mut t = Tally::new('d', cfg.slack);
    for _ in 0..cfg.trials {
        let gens = letters(rng.gen_range(1..=3));
        let phi = random_sync_unitary_state(&gens, rng.gen_range(1..=cfg.max_dim), rng)?;
        let eps = sync_epsilon(&phi, &gens)?;
        let b = random_poly(&gens, rng.gen_range(1..=3), 2, rng);
        let a = &b.star() * &b;
        let u = random_word(&gens, 3, rng);
        let uau = a.mul_word_left(&u.star()).mul_word_right(&u);
        let lhs = phi.value(&TensorPolynomial::left(&(&uau * &a)))?.re;
        let rhs = -to_f64(&uau.norm11()) * norm_left(&phi, &a)? * eps.sqrt();
        t.le(rhs, lhs);
        t.trials += 1;
    }
    Ok(t.finish())
}

fn check_e(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult, StateError> {
    let mut t = Tally::new('e', cfg.slack);
    for _ in 0..cfg.trials {
        let gens = letters(rng.gen_range(1..=3));
        let phi = random_sync_unitary_state(&gens, rng.gen_range(1..=cfg.max_dim), rng)?;
        let rels = random_relations(&gens, rng);
        let eps = sync_epsilon(&phi, &gens)?
            .max(epsilon_of(StateRef::Tensor(&phi), EpsilonMode::ErState(&with_stars(&rels)))?);
        let dec = random_decomposition(&gens, &rels, rng);
        t.le(norm_left(&phi, &dec.poly)?, dec.size * eps.sqrt());
        t.trials += 1;
    }
    Ok(t.finish())
}

fn wmap_polys(f: &StarPolynomial) -> Vec<StarPolynomial> {
    wmap(f).iter().map(|r| r.poly.clone()).collect()
}

fn check_f(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult, StateError> {
    let mut t = Tally::new('f', cfg.slack);
    for _ in 0..cfg.trials {
        let gens = letters(rng.gen_range(1..=3));
        let d = rng.gen_range(1..=cfg.max_dim);
        let noise = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.2) };
        let mats = gen_map(&gens, || random_near_involution(d, noise, rng));
        let tau = FiniteState::new(mats, d, StateKind::Trace)?;
        let f = random_poly(&gens, rng.gen_range(1..=4), 4, rng);
        let eps = epsilon_of(StateRef::Single(&tau), EpsilonMode::ErState(&wmap_polys(&f)))?;
        let rounded = tau.rounded()?;
        let lhs = (rounded.norm(&f)? - tau.norm(&f)?).abs();
        t.le(lhs, 2.0 * to_f64(&f.norm11()) * eps.sqrt());
        t.trials += 1;
    }
    Ok(t.finish())
}

fn check_g(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<CheckResult, StateError> {
    let mut t = Tally::new('g', cfg.slack);
    for _ in 0..cfg.trials {
        let gens = letters(rng.gen_range(1..=3));
        let d = rng.gen_range(1..=cfg.max_dim);
        let noise = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.2) };
        let left = gen_map(&gens, || random_near_involution(d, noise, rng));
        let right: BTreeMap<Generator, CMat> = left
            .iter()
            .map(|(g, a)| {
                let e = CMat::from_fn(d, d, |_, _| num_complex::Complex64::new(rng.gen_range(-1.0..1.0), 0.0) * noise);
                (*g, a.transpose() + e)
            })
            .collect();
        let psi = (max_entangled(d) + random_unit_vector(d * d, rng) * num_complex::Complex64::new(noise, 0.0)).normalize();
        let phi = TensorState::from_pairs(&left, &right, d, psi)?;
        let mut eps = sync_epsilon(&phi, &gens)?;
        for g in &gens {
            for s in wmap_polys(&StarPolynomial::letter(*g)) {
                eps = eps.max(phi.norm(&TensorPolynomial::left(&s))?.powi(2));
                eps = eps.max(phi.norm(&TensorPolynomial::right(&s))?.powi(2));
            }
        }
        let rounded = phi.rounded()?;
        t.le(sync_epsilon(&rounded, &gens)?, 25.0 * eps);
        let f = random_poly(&gens, rng.gen_range(1..=4), 3, rng);
        let mut eps_f = eps;
        for s in wmap_polys(&f) {
            eps_f = eps_f.max(phi.norm(&TensorPolynomial::left(&s))?.powi(2));
        }
        let lhs = (norm_left(&rounded, &f)? - norm_left(&phi, &f)?).abs();
        t.le(lhs, 2.0 * to_f64(&f.norm11()) * eps_f.sqrt());
        t.trials += 1;
    }
    Ok(t.finish())
}

/// Run (a)-(g), each on its own stream derived from the seed.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>, StateError> {
    type Check = fn(&SuiteConfig, &mut ChaCha8Rng) -> Result<CheckResult, StateError>;
    let checks: [Check; 7] = [check_a, check_b, check_c, check_d, check_e, check_f, check_g];
    checks
        .iter()
        .enumerate()
        .map(|(i, c)| c(cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(31).wrapping_add(i as u64))))
        .collect()
}

/// `|P0|_tau` against `Lambda_tilde m^{k'} sqrt(eps)` for a tracial state on
/// the reduction alphabet, with `eps` taken over the relation set.
#[derive(Clone, Debug, PartialEq)]
pub struct DeskBound {
    pub epsilon: f64,
    pub norm: f64,
    pub bound: f64,
}

impl DeskBound {
    pub fn holds(&self) -> bool {
        self.norm <= self.bound + 1e-9
    }
}

pub fn desk_bound(
    tau: &FiniteState,
    relations: &[StarPolynomial],
    m: i64,
    config: &crate::compiler::ReductionConfig,
) -> Result<DeskBound, StateError> {
    let epsilon = epsilon_of(StateRef::Single(tau), EpsilonMode::ErState(relations))?;
    let norm = tau.norm(&crate::compiler::ptilde(0))?;
    let lt = to_f64(&config.lambda_tilde);
    let bound = lt * (m.unsigned_abs() as f64).powi(config.k_prime as i32) * epsilon.sqrt();
    Ok(DeskBound { epsilon, norm, bound })
}

/// Random involution matrices for every letter of the reduction alphabet.
pub fn random_alphabet_state(d: usize, rng: &mut impl Rng) -> Result<FiniteState, StateError> {
    let mats = crate::compiler::alphabet()
        .into_iter()
        .map(|g| (g, super::states::random_involution(d, rng)))
        .collect();
    FiniteState::new(mats, d, StateKind::Trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_small() {
        let cfg = SuiteConfig { trials: 15, max_dim: 4, ..SuiteConfig::default() };
        for r in run_suite(&cfg).unwrap() {
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.trials, 15);
        }
    }

    #[test]
    fn exact_states_are_tight() {
        // unperturbed synchronous state: (b) has zero left side
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gens = letters(2);
        let mats = gen_map(&gens, || random_unitary(3, &mut rng));
        let phi = TensorState::synchronous(&mats, 3).unwrap();
        assert!(sync_epsilon(&phi, &gens).unwrap() < 1e-20);
        let u = random_poly(&gens, 3, 4, &mut rng);
        let mut diff = TensorPolynomial::left(&u);
        diff.add_assign(&TensorPolynomial::right(&omega(&u)).scale(&rat(-1, 1)));
        assert!(phi.norm(&diff).unwrap() < 1e-10);
    }

    #[test]
    fn suite_is_deterministic() {
        let cfg = SuiteConfig { trials: 5, max_dim: 3, seed: 9, ..SuiteConfig::default() };
        assert_eq!(run_suite(&cfg).unwrap(), run_suite(&cfg).unwrap());
    }

    #[test]
    fn desk_bound_is_computed() {
        use crate::machines::{HaltingOracle, TuringMachine};
        use crate::presentations::{PresentationProvider, TruncatedGsProvider};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let oracle = HaltingOracle::new(TuringMachine::never_halting(), 32);
        let provider = TruncatedGsProvider::new(oracle);
        let rels: Vec<StarPolynomial> =
            crate::compiler::w_set(1, &provider.provide(1, 1)).iter().map(|r| r.poly.clone()).collect();
        let tau = random_alphabet_state(4, &mut rng).unwrap();
        let b = desk_bound(&tau, &rels, 1, &crate::compiler::ReductionConfig::default()).unwrap();
        assert!(b.epsilon > 0.0 && b.norm.is_finite());
        // random involutions are far from the relations, so the bound is loose
        assert!(b.holds());
    }
}
