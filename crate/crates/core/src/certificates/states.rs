//! Finite-dimensional states: a matrix for every generator plus either a
//! unit vector or the normalized trace, and states on the tensor square
//! given by commuting left and right actions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use super::rounding::{sign_of_hermitian_part, RoundingError};
use crate::words::{Generator, StarPolynomial, TensorPolynomial, Word};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("no matrix for generator `{0}`")]
    MissingGenerator(String),
    #[error("generator `{name}` is {rows}x{cols}, state has dimension {dim}")]
    Dimension { name: String, rows: usize, cols: usize, dim: usize },
    #[error("state vector has length {got}, expected {want}")]
    VectorLength { got: usize, want: usize },
    #[error("state vector has norm {0}, expected 1")]
    NotUnit(f64),
    #[error("synchronous mode needs a state on the tensor square")]
    NeedsTensor,
    #[error(transparent)]
    Rounding(#[from] RoundingError),
}

pub fn to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-ish unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| gaussian(rng));
    g.qr().q()
}

/// Random hermitian matrix with entries of size about `scale`.
pub fn random_hermitian(n: usize, scale: f64, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| gaussian(rng));
    (&g + g.adjoint()).scale(scale / 2.0)
}

/// Unitary involution with random eigenvalue signs.
pub fn random_involution(n: usize, rng: &mut impl Rng) -> CMat {
    let u = random_unitary(n, rng);
    let signs = CVec::from_fn(n, |_, _| Complex64::new(if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0));
    &u * CMat::from_diagonal(&signs) * u.adjoint()
}

/// `e^{iH}` for hermitian `H`.
pub fn exp_i(h: &CMat) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|l| Complex64::new(0.0, l).exp());
    &eig.eigenvectors * CMat::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// A unitary close to an involution: `V e^{i t H}` for a random involution `V`.
pub fn random_near_involution_unitary(n: usize, t: f64, rng: &mut impl Rng) -> CMat {
    random_involution(n, rng) * exp_i(&random_hermitian(n, t, rng))
}

/// An involution plus arbitrary noise of size about `t`.
pub fn random_near_involution(n: usize, t: f64, rng: &mut impl Rng) -> CMat {
    let noise = CMat::from_fn(n, n, |_, _| gaussian(rng) * t);
    random_involution(n, rng) + noise
}

pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> CVec {
    CVec::from_fn(n, |_, _| gaussian(rng)).normalize()
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateKind {
    /// `a -> <v, pi(a) v>`.
    Vector(CVec),
    /// Normalized matrix trace.
    Trace,
}

/// Evaluate a word with `left` acting as generator images; stars are adjoints.
fn eval_word_with(gens: &BTreeMap<Generator, CMat>, dim: usize, w: &Word) -> Result<CMat, StateError> {
    let mut acc = CMat::identity(dim, dim);
    for l in w.letters() {
        let m = gens.get(&l.unstarred()).ok_or_else(|| StateError::MissingGenerator(l.unstarred().to_string()))?;
        acc = if l.starred { acc * m.adjoint() } else { acc * m };
    }
    Ok(acc)
}

fn eval_poly_with(gens: &BTreeMap<Generator, CMat>, dim: usize, p: &StarPolynomial) -> Result<CMat, StateError> {
    let mut acc = CMat::zeros(dim, dim);
    for (w, c) in p.terms() {
        acc += eval_word_with(gens, dim, w)? * Complex64::new(to_f64(c), 0.0);
    }
    Ok(acc)
}

fn check_dims(gens: &BTreeMap<Generator, CMat>, dim: usize) -> Result<(), StateError> {
    for (g, m) in gens {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(StateError::Dimension { name: g.to_string(), rows: m.nrows(), cols: m.ncols(), dim });
        }
    }
    Ok(())
}

fn check_unit(v: &CVec, dim: usize) -> Result<(), StateError> {
    if v.len() != dim {
        return Err(StateError::VectorLength { got: v.len(), want: dim });
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(StateError::NotUnit(v.norm()));
    }
    Ok(())
}

fn unitary_defect(m: &CMat) -> f64 {
    let id = CMat::identity(m.nrows(), m.ncols());
    (m.adjoint() * m - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct FiniteState {
    pub dim: usize,
    pub generators: BTreeMap<Generator, CMat>,
    pub kind: StateKind,
}

impl FiniteState {
    pub fn new(generators: BTreeMap<Generator, CMat>, dim: usize, kind: StateKind) -> Result<Self, StateError> {
        check_dims(&generators, dim)?;
        if let StateKind::Vector(v) = &kind {
            check_unit(v, dim)?;
        }
        Ok(FiniteState { dim, generators, kind })
    }

    /// Largest entry of `M*M - 1` over all generators.
    pub fn unitary_defect(&self) -> f64 {
        self.generators.values().map(unitary_defect).fold(0.0, f64::max)
    }

    pub fn eval_word(&self, w: &Word) -> Result<CMat, StateError> {
        eval_word_with(&self.generators, self.dim, w)
    }

    pub fn eval(&self, p: &StarPolynomial) -> Result<CMat, StateError> {
        eval_poly_with(&self.generators, self.dim, p)
    }

    pub fn value_of_matrix(&self, m: &CMat) -> Complex64 {
        match &self.kind {
            StateKind::Vector(v) => v.dotc(&(m * v)),
            StateKind::Trace => m.trace() / Complex64::new(self.dim as f64, 0.0),
        }
    }

    pub fn value(&self, p: &StarPolynomial) -> Result<Complex64, StateError> {
        Ok(self.value_of_matrix(&self.eval(p)?))
    }

    /// `sqrt(psi(M* M))` for `M = pi(p)`.
    pub fn norm_of_matrix(&self, m: &CMat) -> f64 {
        match &self.kind {
            StateKind::Vector(v) => (m * v).norm(),
            StateKind::Trace => m.norm() / (self.dim as f64).sqrt(),
        }
    }

    pub fn norm(&self, p: &StarPolynomial) -> Result<f64, StateError> {
        Ok(self.norm_of_matrix(&self.eval(p)?))
    }

    /// Replace every generator by the sign of its hermitian part.
    pub fn rounded(&self) -> Result<FiniteState, StateError> {
        let generators = self
            .generators
            .iter()
            .map(|(g, m)| Ok((*g, sign_of_hermitian_part(m)?)))
            .collect::<Result<_, StateError>>()?;
        Ok(FiniteState { dim: self.dim, generators, kind: self.kind.clone() })
    }
}

/// State on the tensor square: `pi(a ⊗ b) = L(a) R(b)` with commuting
/// `L`, `R`, evaluated at the unit vector `psi`.
#[derive(Clone, Debug)]
pub struct TensorState {
    pub dim: usize,
    pub left: BTreeMap<Generator, CMat>,
    pub right: BTreeMap<Generator, CMat>,
    pub psi: CVec,
}

impl TensorState {
    pub fn new(
        left: BTreeMap<Generator, CMat>,
        right: BTreeMap<Generator, CMat>,
        psi: CVec,
    ) -> Result<Self, StateError> {
        let dim = psi.len();
        check_dims(&left, dim)?;
        check_dims(&right, dim)?;
        check_unit(&psi, dim)?;
        Ok(TensorState { dim, left, right, psi })
    }

    /// `phi(a ⊗ b) = tr(a omega(b)) / d` on `C^d ⊗ C^d`: left `A ⊗ 1`, right
    /// `1 ⊗ A^T`, maximally entangled vector.
    pub fn synchronous(gens: &BTreeMap<Generator, CMat>, d: usize) -> Result<Self, StateError> {
        check_dims(gens, d)?;
        Self::from_pairs(gens, &gens.iter().map(|(g, m)| (*g, m.transpose())).collect(), d, max_entangled(d))
    }

    /// Left `A ⊗ 1` and right `1 ⊗ B` for the given `A`, `B` on `C^d`.
    pub fn from_pairs(
        left: &BTreeMap<Generator, CMat>,
        right: &BTreeMap<Generator, CMat>,
        d: usize,
        psi: CVec,
    ) -> Result<Self, StateError> {
        let id = CMat::identity(d, d);
        let l = left.iter().map(|(g, m)| (*g, m.kronecker(&id))).collect();
        let r = right.iter().map(|(g, m)| (*g, id.kronecker(m))).collect();
        Self::new(l, r, psi)
    }

    pub fn eval_left(&self, p: &StarPolynomial) -> Result<CMat, StateError> {
        eval_poly_with(&self.left, self.dim, p)
    }

    pub fn eval_right(&self, p: &StarPolynomial) -> Result<CMat, StateError> {
        eval_poly_with(&self.right, self.dim, p)
    }

    pub fn eval(&self, t: &TensorPolynomial) -> Result<CMat, StateError> {
        let mut acc = CMat::zeros(self.dim, self.dim);
        for ((a, b), c) in t.terms() {
            let m = eval_word_with(&self.left, self.dim, a)? * eval_word_with(&self.right, self.dim, b)?;
            acc += m * Complex64::new(to_f64(c), 0.0);
        }
        Ok(acc)
    }

    pub fn value_of_matrix(&self, m: &CMat) -> Complex64 {
        self.psi.dotc(&(m * &self.psi))
    }

    pub fn value(&self, t: &TensorPolynomial) -> Result<Complex64, StateError> {
        Ok(self.value_of_matrix(&self.eval(t)?))
    }

    pub fn norm_of_matrix(&self, m: &CMat) -> f64 {
        (m * &self.psi).norm()
    }

    pub fn norm(&self, t: &TensorPolynomial) -> Result<f64, StateError> {
        Ok(self.norm_of_matrix(&self.eval(t)?))
    }

    /// Restriction to the left factor as a vector state.
    pub fn left_restriction(&self) -> FiniteState {
        FiniteState { dim: self.dim, generators: self.left.clone(), kind: StateKind::Vector(self.psi.clone()) }
    }

    /// Sign-round every left and right generator.
    pub fn rounded(&self) -> Result<TensorState, StateError> {
        let round = |m: &BTreeMap<Generator, CMat>| -> Result<BTreeMap<Generator, CMat>, StateError> {
            m.iter().map(|(g, a)| Ok((*g, sign_of_hermitian_part(a)?))).collect()
        };
        Ok(TensorState { dim: self.dim, left: round(&self.left)?, right: round(&self.right)?, psi: self.psi.clone() })
    }

    /// `|x ⊗ 1 - 1 ⊗ x|_phi`.
    pub fn sync_defect(&self, x: &Generator) -> Result<f64, StateError> {
        let l = eval_word_with(&self.left, self.dim, &Word::letter(*x))?;
        let r = eval_word_with(&self.right, self.dim, &Word::letter(*x))?;
        Ok(self.norm_of_matrix(&(l - r)))
    }
}

pub fn max_entangled(d: usize) -> CVec {
    let mut v = CVec::zeros(d * d);
    let s = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = Complex64::new(s, 0.0);
    }
    v
}

#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Single(&'a FiniteState),
    Tensor(&'a TensorState),
}

#[derive(Clone, Copy, Debug)]
pub enum EpsilonMode<'a> {
    /// `max psi(r* r)` over the relations (left factor for tensor states).
    ErState(&'a [StarPolynomial]),
    /// `max |x ⊗ 1 - 1 ⊗ x|^2` over the generators.
    Synchronous(&'a [Generator]),
    /// `max |psi(uv) - psi(vu)|` over pairs from the word list.
    TracialDefect(&'a [Word]),
}

pub fn epsilon_of(state: StateRef<'_>, mode: EpsilonMode<'_>) -> Result<f64, StateError> {
    let single = match state {
        StateRef::Single(s) => s.clone(),
        StateRef::Tensor(t) => t.left_restriction(),
    };
    let mut eps: f64 = 0.0;
    match mode {
        EpsilonMode::ErState(rels) => {
            for r in rels {
                eps = eps.max(single.norm(r)?.powi(2));
            }
        }
        EpsilonMode::Synchronous(gens) => {
            let StateRef::Tensor(t) = state else {
                return Err(StateError::NeedsTensor);
            };
            for x in gens {
                eps = eps.max(t.sync_defect(x)?.powi(2));
            }
        }
        EpsilonMode::TracialDefect(words) => {
            let mats: Vec<CMat> = words.iter().map(|w| single.eval_word(w)).collect::<Result<_, _>>()?;
            for a in &mats {
                for b in &mats {
                    let d = single.value_of_matrix(&(a * b)) - single.value_of_matrix(&(b * a));
                    eps = eps.max(d.norm());
                }
            }
        }
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{int, rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> Generator {
        Generator::plain(s)
    }

    fn poly(s: &str) -> StarPolynomial {
        StarPolynomial::parse(&s.replace(';', "\n")).unwrap()
    }

    fn paulis() -> BTreeMap<Generator, CMat> {
        let c = |x: f64| Complex64::new(x, 0.0);
        let x = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let z = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        [(g("x"), x), (g("z"), z)].into()
    }

    #[test]
    fn exact_representation_has_zero_epsilon() {
        let s = FiniteState::new(paulis(), 2, StateKind::Trace).unwrap();
        let rels = [poly("1 : x x; -1 : 1"), poly("1 : z z; -1 : 1"), poly("1 : x z; 1 : z x")];
        assert!(epsilon_of(StateRef::Single(&s), EpsilonMode::ErState(&rels)).unwrap() < 1e-24);
        let words: Vec<Word> = ["x", "z", "x z", "z x z"].iter().map(|w| Word::parse(w).unwrap()).collect();
        assert!(epsilon_of(StateRef::Single(&s), EpsilonMode::TracialDefect(&words)).unwrap() < 1e-12);
    }

    #[test]
    fn perturbed_relation_gives_the_perturbation_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut gens = paulis();
        let e = random_hermitian(2, 0.1, &mut rng);
        let z = gens[&g("z")].clone();
        gens.insert(g("y"), &z + &e);
        let v = random_unit_vector(2, &mut rng);
        let s = FiniteState::new(gens, 2, StateKind::Vector(v.clone())).unwrap();
        let eps = epsilon_of(StateRef::Single(&s), EpsilonMode::ErState(&[poly("1 : y; -1 : z")])).unwrap();
        assert!((eps - (&e * &v).norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn synchronous_extension_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gens: BTreeMap<_, _> = [(g("x"), random_unitary(3, &mut rng)), (g("y"), random_involution(3, &mut rng))].into();
        let t = TensorState::synchronous(&gens, 3).unwrap();
        let xs = [g("x"), g("y")];
        assert!(epsilon_of(StateRef::Tensor(&t), EpsilonMode::Synchronous(&xs)).unwrap() < 1e-20);
        assert!((t.value(&TensorPolynomial::tensor(&StarPolynomial::one(), &StarPolynomial::one())).unwrap() - 1.0).norm() < 1e-12);
        // phi(a ⊗ b) = tr(a omega(b)) / d
        let a = poly("1 : x y~");
        let b = poly("1 : x y x~; 2 : y");
        let lhs = t.value(&TensorPolynomial::tensor(&a, &b)).unwrap();
        let single = FiniteState::new(gens, 3, StateKind::Trace).unwrap();
        let rhs = single.value(&(&a * &crate::words::omega(&b))).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn synchronous_needs_tensor() {
        let s = FiniteState::new(paulis(), 2, StateKind::Trace).unwrap();
        assert_eq!(epsilon_of(StateRef::Single(&s), EpsilonMode::Synchronous(&[g("x")])).unwrap_err(), StateError::NeedsTensor);
    }

    #[test]
    fn trace_state_value() {
        let s = FiniteState::new(paulis(), 2, StateKind::Trace).unwrap();
        let p = StarPolynomial::term(rat(1, 2), Word::empty()) + StarPolynomial::term(int(3), Word::parse("x x").unwrap());
        assert!((s.value(&p).unwrap() - Complex64::new(3.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dimension_checked() {
        let mut gens = paulis();
        gens.insert(g("w"), CMat::identity(3, 3));
        assert!(matches!(FiniteState::new(gens, 2, StateKind::Trace), Err(StateError::Dimension { .. })));
    }
}
