//! Relation sets over the fifteen involutive letters, the rounding relations
//! of a polynomial, the elements `P~_n` and `X~_n`, and the compiled
//! reductions `alpha(m)` and `beta(m)`.
//!
//! Letters: the nine involutions `J X Z sS tS sT tT sW tW` of the provided
//! presentation and six more, `U1 U2 Xt Zt OP OQ`.  `U = U1 U2`,
//! `P = (1 - OP)/2`, `Q = (1 - OQ)/2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed};
use thiserror::Error;

use crate::presentations::{involutive_reduce, x_word, z_word, PresentationProvider, ProvidedPresentation};
use crate::words::{int, parse_rational, rat, Generator, StarPolynomial, TensorPolynomial, Word};

pub const H_LETTERS: [&str; 9] = ["J", "X", "Z", "sS", "tS", "sT", "tT", "sW", "tW"];
pub const EXTRA_LETTERS: [&str; 6] = ["U1", "U2", "Xt", "Zt", "OP", "OQ"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("constant `{0}` must be positive")]
    NotPositive(String),
    #[error("m must be at least 1, got {0}")]
    BadM(i64),
}

/// All fifteen letters, `H_LETTERS` first.
pub fn alphabet() -> Vec<Generator> {
    H_LETTERS.iter().chain(EXTRA_LETTERS.iter()).map(|s| Generator::plain(s)).collect()
}

/// Image of a word in the group algebra of the free product of order-two
/// groups: stars dropped, adjacent equal letters cancelled.
pub fn quotient_word(w: &Word) -> Word {
    let mut out: Vec<Generator> = Vec::with_capacity(w.len());
    for g in w.letters() {
        let g = g.unstarred();
        if out.last() == Some(&g) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    Word(out)
}

pub fn quotient(p: &StarPolynomial) -> StarPolynomial {
    p.map_words(quotient_word)
}

fn w(names: &[&str]) -> Word {
    Word(names.iter().map(|s| Generator::plain(s)).collect())
}

fn mono(word: Word) -> StarPolynomial {
    StarPolynomial::monomial(word)
}

fn half() -> BigRational {
    rat(1, 2)
}

pub fn u_word() -> Word {
    w(&["U1", "U2"])
}

/// `U*` in the free star-algebra, `U2* U1*`.
pub fn u_star_word() -> Word {
    u_word().star()
}

fn projection(letter: &str) -> StarPolynomial {
    StarPolynomial::from_terms([(Word::empty(), half()), (w(&[letter]), -half())])
}

pub fn p_proj() -> StarPolynomial {
    projection("OP")
}

pub fn q_proj() -> StarPolynomial {
    projection("OQ")
}

fn comm(a: &StarPolynomial, b: &StarPolynomial) -> StarPolynomial {
    &(a * b) - &(b * a)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Family {
    R0,
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    /// Relations produced by the rounding map.
    Rounding,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::R0 => "R0",
            Family::R1 => "R1",
            Family::R2 => "R2",
            Family::R3 => "R3",
            Family::R4 => "R4",
            Family::R5 => "R5",
            Family::R6 => "R6",
            Family::Rounding => "W",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub label: String,
    pub family: Family,
    pub poly: StarPolynomial,
    /// Declared bound on the operator norm in the involutive group algebra.
    pub norm_bound: BigRational,
    /// The group relator `r` when the relation is `r - 1`.
    pub relator: Option<Word>,
}

impl Relation {
    pub fn norm1(&self) -> BigRational {
        self.poly.norm1()
    }

    pub fn norm11(&self) -> BigRational {
        self.poly.norm11()
    }

    /// Bound used in decomposition sizes: the smaller of the declared bound
    /// and the 1-norm.
    pub fn size_bound(&self) -> BigRational {
        let n1 = self.norm1();
        if n1 < self.norm_bound {
            n1
        } else {
            self.norm_bound.clone()
        }
    }
}

/// Labelled relations with lookup by label and by group relator.
#[derive(Clone, Debug, Default)]
pub struct RelationSet {
    relations: Vec<Relation>,
    by_label: BTreeMap<String, usize>,
    by_relator: BTreeMap<Word, usize>,
    seen: BTreeSet<StarPolynomial>,
}

impl RelationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a relation unless an identical polynomial is already present.
    /// Returns its index either way.
    pub fn push(&mut self, rel: Relation) -> usize {
        if self.seen.contains(&rel.poly) {
            return self.relations.iter().position(|r| r.poly == rel.poly).unwrap_or(0);
        }
        let idx = self.relations.len();
        self.seen.insert(rel.poly.clone());
        self.by_label.entry(rel.label.clone()).or_insert(idx);
        if let Some(r) = &rel.relator {
            self.by_relator.entry(quotient_word(r)).or_insert(idx);
        }
        self.relations.push(rel);
        idx
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Relation> {
        self.relations.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter()
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    /// Index of the relation `r - 1` whose relator reduces to `word`.
    pub fn find_relator(&self, word: &Word) -> Option<usize> {
        self.by_relator.get(&quotient_word(word)).copied()
    }

    pub fn family_count(&self, f: Family) -> usize {
        self.relations.iter().filter(|r| r.family == f).count()
    }

    pub fn polys(&self) -> impl Iterator<Item = &StarPolynomial> {
        self.relations.iter().map(|r| &r.poly)
    }

    pub fn extend(&mut self, other: &RelationSet) {
        for r in other.iter() {
            self.push(r.clone());
        }
    }

    /// Relations file: `label | family | bound` header line then the
    /// polynomial, blocks separated by blank lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.relations.iter().enumerate() {
            out.push_str(&format!("# {i} {} | {} | {}\n{}\n", r.family, r.label, r.norm_bound, r.poly));
        }
        out
    }
}

/// The element words used by the relations at input `m`.
#[derive(Clone, Debug)]
pub struct Designated {
    pub j: Word,
    pub x: Word,
    pub z: Word,
    pub s: Word,
    pub t: Word,
    pub w: Word,
    pub x_m0: Word,
    pub z_m0: Word,
}

impl Designated {
    pub fn new(m: i64, provided: &ProvidedPresentation) -> Self {
        let invs = &provided.involutive.involutions;
        let get = |k: &str| provided.designated.get(k).cloned().unwrap_or_else(|| w(&[k]));
        Designated {
            j: get("J"),
            x: get("X"),
            z: get("Z"),
            s: get("S"),
            t: get("T"),
            w: get("W"),
            x_m0: involutive_reduce(&provided.map.apply(&x_word(m, 0)), invs),
            z_m0: involutive_reduce(&provided.map.apply(&z_word(m, 0)), invs),
        }
    }

    /// `X[m,i]` over the involutive letters.
    pub fn x_mi(&self, m: i64, i: i64) -> Word {
        quotient_word(&conj(&self.s, &self.w, &self.x, m, i))
    }

    pub fn z_mi(&self, m: i64, i: i64) -> Word {
        quotient_word(&conj(&self.t, &self.w, &self.z, m, i))
    }
}

fn wpow(a: &Word, k: i64) -> Word {
    let b = if k < 0 { a.star() } else { a.clone() };
    b.pow(k.unsigned_abs() as usize)
}

fn conj(shift: &Word, w: &Word, base: &Word, m: i64, i: i64) -> Word {
    wpow(shift, i).concat(&wpow(w, m)).concat(base).concat(&wpow(w, -m)).concat(&wpow(shift, -i))
}

fn relation(label: impl Into<String>, family: Family, poly: StarPolynomial) -> Relation {
    Relation { label: label.into(), family, poly, norm_bound: int(6), relator: None }
}

/// The seven relation families at input `m`.
pub fn relations_rm(m: i64, provided: &ProvidedPresentation) -> RelationSet {
    let d = Designated::new(m, provided);
    let mut set = RelationSet::new();
    let one = StarPolynomial::one();
    for g in alphabet() {
        let x = StarPolynomial::letter(g);
        let xs = x.star();
        let name = g.name.as_str().to_string();
        set.push(relation(format!("R0 x*x {name}"), Family::R0, &(&xs * &x) - &one));
        set.push(relation(format!("R0 xx* {name}"), Family::R0, &(&x * &xs) - &one));
        set.push(relation(format!("R0 x^2 {name}"), Family::R0, &(&x * &x) - &one));
    }
    for (k, r) in provided.involutive.relators.iter().enumerate() {
        let mut rel = relation(format!("R1 #{k}"), Family::R1, &mono(r.clone()) - &one);
        rel.relator = Some(r.clone());
        set.push(rel);
    }
    let u = mono(u_word());
    let q = q_proj();
    let p = p_proj();
    let named = [("X", &d.x), ("Z", &d.z), ("S", &d.s), ("T", &d.t), ("J", &d.j)];
    for (name, a) in named {
        set.push(relation(format!("R2 [U,{name}]"), Family::R2, comm(&u, &mono(a.clone()))));
    }
    for (name, a) in named {
        set.push(relation(format!("R2 [Q,{name}]"), Family::R2, comm(&q, &mono(a.clone()))));
    }
    let xt = mono(w(&["Xt"]));
    let zt = mono(w(&["Zt"]));
    set.push(relation("R3 XtQ", Family::R3, &(&xt * &q) - &(&mono(d.x_m0.clone()) * &q)));
    set.push(relation("R3 ZtQ", Family::R3, &(&zt * &q) - &(&mono(d.z_m0.clone()) * &q)));
    set.push(relation("R3 [Xt,Q]", Family::R3, comm(&xt, &q)));
    set.push(relation("R3 [Zt,Q]", Family::R3, comm(&zt, &q)));
    let us = mono(u_star_word());
    let (s, t) = (mono(d.s.clone()), mono(d.t.clone()));
    set.push(relation("R4 X", Family::R4, &(&(&u * &xt) * &us) - &(&(&s * &xt) * &s.star())));
    set.push(relation("R4 Z", Family::R4, &(&(&u * &zt) * &us) - &(&(&t * &zt) * &t.star())));
    set.push(relation("R5", Family::R5, comm(&p, &q)));
    set.push(relation("R6", Family::R6, r6()));
    set
}

/// `(P + Xt P Xt - U P U*)(1 + J Xt Zt Xt Zt)`.
pub fn r6() -> StarPolynomial {
    let p = p_proj();
    let xt = mono(w(&["Xt"]));
    let left = &(&p + &(&(&xt * &p) * &xt)) - &(&(&mono(u_word()) * &p) * &mono(u_star_word()));
    let right = &StarPolynomial::one() + &mono(w(&["J", "Xt", "Zt", "Xt", "Zt"]));
    &left * &right
}

/// Rounding relations of a monomial: for each position `i` the five
/// families `(x x* - 1)s`, `(x* x - 1)s`, `(x^2 - 1)s`, `((x*)^2 - 1)s`,
/// `(x - x*)s` with `s` the suffix after position `i`.
pub fn wmap_monomial(u: &Word, out: &mut RelationSet) {
    let one = StarPolynomial::one();
    for (i, g) in u.letters().iter().enumerate() {
        let suffix = Word(u.letters()[i + 1..].to_vec());
        let x = StarPolynomial::letter(*g);
        let xs = x.star();
        let fams = [
            ("xx*", &(&x * &xs) - &one),
            ("x*x", &(&xs * &x) - &one),
            ("x^2", &(&x * &x) - &one),
            ("x*^2", &(&xs * &xs) - &one),
            ("x-x*", &x - &xs),
        ];
        for (tag, f) in fams {
            let poly = f.mul_word_right(&suffix);
            if poly.is_zero() {
                continue;
            }
            out.push(relation(format!("W {tag} {g} . {suffix}"), Family::Rounding, poly));
        }
    }
}

pub fn wmap(f: &StarPolynomial) -> RelationSet {
    let mut out = RelationSet::new();
    for (u, _) in f.terms() {
        wmap_monomial(u, &mut out);
    }
    out
}

/// `Q U^n P U^-n Q` with `U^-n = (U*)^n`.
pub fn ptilde(n: usize) -> StarPolynomial {
    let q = q_proj();
    let un = mono(u_word().pow(n));
    let uns = mono(u_star_word().pow(n));
    &(&(&(&q * &un) * &p_proj()) * &uns) * &q
}

/// `U^n Xt U^-n`, a single monomial of degree `4n + 1`.
pub fn xtilde(n: usize) -> StarPolynomial {
    mono(u_word().pow(n).concat(&w(&["Xt"])).concat(&u_star_word().pow(n)))
}

/// Constants of the reduction.  The derived constants follow
/// `Lambda~ = 6 D Lambda`, `k' = k + 1`, `Gamma = 2(C + 25)`,
/// `Gamma~ = 8 D Gamma` unless set explicitly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionConfig {
    pub c: BigRational,
    pub k: u32,
    pub lambda: BigRational,
    pub d: BigRational,
    pub lambda_tilde: BigRational,
    pub k_prime: u32,
    pub gamma: BigRational,
    pub gamma_tilde: BigRational,
    /// Isoperimetric polynomial coefficients, constant term first.  Used
    /// for reporting only.
    pub d_s: Vec<BigRational>,
    /// Index window of the provided presentation.
    pub i_bound: u64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self::derived(int(16), 4, int(64), int(8), vec![int(1)], 1)
    }
}

impl ReductionConfig {
    pub fn derived(c: BigRational, k: u32, lambda: BigRational, d: BigRational, d_s: Vec<BigRational>, i_bound: u64) -> Self {
        let lambda_tilde = int(6) * &d * &lambda;
        let gamma = int(2) * (&c + int(25));
        let gamma_tilde = int(8) * &d * &gamma;
        ReductionConfig { c, k, lambda, d, lambda_tilde, k_prime: k + 1, gamma, gamma_tilde, d_s, i_bound }
    }

    /// `name = value` lines; `#` starts a comment.  Unset derived constants
    /// are recomputed from the base ones.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut vals: BTreeMap<String, (usize, BigRational)> = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line: ln + 1, msg: "expected `name = value`".into() })?;
            let v = parse_rational(value.trim())
                .ok_or_else(|| ConfigError::Parse { line: ln + 1, msg: format!("bad rational `{}`", value.trim()) })?;
            vals.insert(name.trim().to_string(), (ln + 1, v));
        }
        let base = Self::default();
        let get = |k: &str, dflt: &BigRational| vals.get(k).map(|(_, v)| v.clone()).unwrap_or_else(|| dflt.clone());
        let get_int = |k: &str, dflt: u64| -> Result<u64, ConfigError> {
            match vals.get(k) {
                None => Ok(dflt),
                Some((line, v)) if v.is_integer() && !v.is_negative() => {
                    u64::try_from(v.to_integer()).map_err(|_| ConfigError::Parse { line: *line, msg: format!("`{k}` too large") })
                }
                Some((line, _)) => Err(ConfigError::Parse { line: *line, msg: format!("`{k}` must be a non-negative integer") }),
            }
        };
        let mut d_s = Vec::new();
        while let Some((_, v)) = vals.get(&format!("d_S_{}", d_s.len())) {
            d_s.push(v.clone());
        }
        if d_s.is_empty() {
            d_s = base.d_s.clone();
        }
        let k = get_int("k", base.k as u64)? as u32;
        let mut cfg = Self::derived(
            get("C", &base.c),
            k,
            get("Lambda", &base.lambda),
            get("D", &base.d),
            d_s,
            get_int("i_bound", base.i_bound)?,
        );
        cfg.lambda_tilde = get("Lambda_tilde", &cfg.lambda_tilde);
        cfg.k_prime = get_int("k_prime", cfg.k_prime as u64)? as u32;
        cfg.gamma = get("Gamma", &cfg.gamma);
        cfg.gamma_tilde = get("Gamma_tilde", &cfg.gamma_tilde);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let named = [
            ("C", &self.c),
            ("Lambda", &self.lambda),
            ("D", &self.d),
            ("Lambda_tilde", &self.lambda_tilde),
            ("Gamma", &self.gamma),
            ("Gamma_tilde", &self.gamma_tilde),
        ];
        for (n, v) in named {
            if !v.is_positive() {
                return Err(ConfigError::NotPositive(n.into()));
            }
        }
        if self.k == 0 {
            return Err(ConfigError::NotPositive("k".into()));
        }
        if self.k_prime == 0 {
            return Err(ConfigError::NotPositive("k_prime".into()));
        }
        Ok(())
    }

    /// `1 / (Lambda~^2 m^(2k'))`.
    pub fn alpha_weight(&self, m: i64) -> BigRational {
        weight(&self.lambda_tilde, m, self.k_prime)
    }

    /// `1 / (Gamma~^2 m^(2k'))`.
    pub fn beta_weight(&self, m: i64) -> BigRational {
        weight(&self.gamma_tilde, m, self.k_prime)
    }
}

fn weight(c: &BigRational, m: i64, kp: u32) -> BigRational {
    let mpow = num_traits::pow(int(m), 2 * kp as usize);
    BigRational::one() / (c * c * mpow)
}

impl fmt::Display for ReductionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "C = {}", self.c)?;
        writeln!(f, "k = {}", self.k)?;
        writeln!(f, "Lambda = {}", self.lambda)?;
        writeln!(f, "D = {}", self.d)?;
        writeln!(f, "Lambda_tilde = {}", self.lambda_tilde)?;
        writeln!(f, "k_prime = {}", self.k_prime)?;
        writeln!(f, "Gamma = {}", self.gamma)?;
        writeln!(f, "Gamma_tilde = {}", self.gamma_tilde)?;
        for (i, c) in self.d_s.iter().enumerate() {
            writeln!(f, "d_S_{i} = {c}")?;
        }
        writeln!(f, "i_bound = {}", self.i_bound)
    }
}

/// The relations whose squares enter `alpha(m)`: the rounding relations of
/// `P~_0` together with the relation families, closed under star.
pub fn w_set(m: i64, provided: &ProvidedPresentation) -> RelationSet {
    let mut base = wmap(&ptilde(0));
    base.extend(&relations_rm(m, provided));
    let mut out = RelationSet::new();
    for r in base.iter() {
        out.push(r.clone());
        let s = r.poly.star();
        if s != r.poly {
            let mut rs = r.clone();
            rs.label = format!("{}*", r.label);
            rs.poly = s;
            rs.relator = r.relator.as_ref().map(Word::star);
            out.push(rs);
        }
    }
    out
}

/// Output of the `alpha` compiler: the polynomial and the pieces it was
/// assembled from.
#[derive(Clone, Debug)]
pub struct CompiledAlpha {
    pub m: i64,
    pub squares: RelationSet,
    pub weight: BigRational,
    pub poly: StarPolynomial,
}

pub struct CompiledBeta {
    pub m: i64,
    pub squares: RelationSet,
    pub weight: BigRational,
    pub poly: TensorPolynomial,
}

fn check_m(m: i64) -> Result<(), ConfigError> {
    if m < 1 {
        return Err(ConfigError::BadM(m));
    }
    Ok(())
}

/// `sum r* r - weight P~_0* P~_0` over the star-closed relation set.
pub fn compile_alpha(
    m: i64,
    config: &ReductionConfig,
    provider: &dyn PresentationProvider,
) -> Result<CompiledAlpha, ConfigError> {
    check_m(m)?;
    let provided = provider.provide(m as u64, config.i_bound);
    let squares = w_set(m, &provided);
    let mut poly = StarPolynomial::zero();
    for r in squares.polys() {
        poly = &poly + &(&r.star() * r);
    }
    let weight = config.alpha_weight(m);
    let p0 = ptilde(0);
    poly = &poly - &(&p0.star() * &p0).scale(&weight);
    Ok(CompiledAlpha { m, squares, weight, poly })
}

/// Tensor version: squares of `s (x) 1`, synchronization squares
/// `(x (x) 1 - 1 (x) x)*(x (x) 1 - 1 (x) x)` for every letter, minus
/// `weight P~_0* P~_0 (x) 1`.
pub fn compile_beta(
    m: i64,
    config: &ReductionConfig,
    provider: &dyn PresentationProvider,
) -> Result<CompiledBeta, ConfigError> {
    check_m(m)?;
    let provided = provider.provide(m as u64, config.i_bound);
    let squares = w_set(m, &provided);
    let mut poly = TensorPolynomial::zero();
    for r in squares.polys() {
        poly.add_assign(&TensorPolynomial::left(&(&r.star() * r)));
    }
    for g in alphabet() {
        poly.add_assign(&sync_square(g));
    }
    let weight = config.beta_weight(m);
    let p0 = ptilde(0);
    poly.add_assign(&TensorPolynomial::left(&(&p0.star() * &p0)).scale(&-weight.clone()));
    Ok(CompiledBeta { m, squares, weight, poly })
}

/// `(x (x) 1 - 1 (x) x)* (x (x) 1 - 1 (x) x)`.
pub fn sync_square(g: Generator) -> TensorPolynomial {
    let x = StarPolynomial::letter(g);
    let mut d = TensorPolynomial::left(&x);
    d.add_assign(&TensorPolynomial::right(&x).scale(&-BigRational::one()));
    d.star().mul(&d)
}

/// Number of synchronization squares in `beta`.
pub fn sync_count() -> usize {
    alphabet().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{HaltingOracle, TuringMachine};
    use crate::presentations::TruncatedGsProvider;

    fn provider() -> TruncatedGsProvider {
        TruncatedGsProvider::new(HaltingOracle::new(TuringMachine::never_halting(), 64))
    }

    #[test]
    fn r2_has_ten_commutators() {
        let set = relations_rm(1, &provider().provide(1, 1));
        assert_eq!(set.family_count(Family::R2), 10);
        assert_eq!(set.family_count(Family::R0), 45);
        assert_eq!(set.family_count(Family::R3), 4);
    }

    #[test]
    fn r5_is_pq_minus_qp() {
        let set = relations_rm(1, &provider().provide(1, 1));
        let r5 = set.get(set.find("R5").unwrap()).unwrap();
        let (p, q) = (p_proj(), q_proj());
        assert_eq!(r5.poly, &(&p * &q) - &(&q * &p));
    }

    #[test]
    fn r3_norm11_exact() {
        // Xt Q - X_m0 Q = (Xt - Xt OQ - X_m0 + X_m0 OQ)/2 with |X_m0| = 4m + 1
        let set = relations_rm(2, &provider().provide(2, 1));
        let mixed = set.get(set.find("R3 XtQ").unwrap()).unwrap();
        assert_eq!(mixed.norm11(), int(4 * 2 + 3));
        let c = set.get(set.find("R3 [Xt,Q]").unwrap()).unwrap();
        assert_eq!(c.norm11(), int(2));
    }

    #[test]
    fn wmap_counts() {
        assert!(wmap(&StarPolynomial::one()).is_empty());
        let x = StarPolynomial::letter(Generator::plain("X"));
        assert_eq!(wmap(&x).len(), 5);
        let u = StarPolynomial::monomial(Word::parse("U1 Xt OQ U2").unwrap());
        assert_eq!(wmap(&u).len(), 20);
    }

    #[test]
    fn wmap_relations_vanish_in_quotient() {
        let set = wmap(&ptilde(1));
        assert!(!set.is_empty());
        for r in set.iter() {
            assert!(quotient(&r.poly).is_zero(), "{}", r.label);
        }
    }

    #[test]
    fn ptilde_and_xtilde_shapes() {
        for n in 0..4 {
            let p = ptilde(n);
            assert_eq!(p.norm1(), int(1));
            if n == 0 {
                // `OQ` arises twice, from either projection
                assert_eq!(p.len(), 7);
                assert_eq!(p.coefficient(&Word::parse("OQ").unwrap()), rat(-1, 4));
                continue;
            }
            assert_eq!(p.len(), 8);
            for (_, c) in p.terms() {
                assert_eq!(c.abs(), rat(1, 8));
            }
            assert_eq!(xtilde(n).degree(), 4 * n + 1);
        }
        assert_eq!(xtilde(0), StarPolynomial::letter(Generator::plain("Xt")));
    }

    #[test]
    fn config_defaults_and_round_trip() {
        let c = ReductionConfig::default();
        assert_eq!(c.lambda_tilde, int(6 * 8 * 64));
        assert_eq!(c.k_prime, 5);
        assert_eq!(c.gamma, int(82));
        assert_eq!(c.gamma_tilde, int(8 * 8 * 82));
        let back = ReductionConfig::parse(&c.to_string()).unwrap();
        assert_eq!(back, c);
        let e = ReductionConfig::parse("C = -1").unwrap_err();
        assert_eq!(e, ConfigError::NotPositive("C".into()));
        let custom = ReductionConfig::parse("D = 1\nLambda = 2").unwrap();
        assert_eq!(custom.lambda_tilde, int(12));
    }

    #[test]
    fn alpha_and_beta_are_self_adjoint() {
        let cfg = ReductionConfig::default();
        let a = compile_alpha(1, &cfg, &provider()).unwrap();
        assert!(a.poly.is_self_adjoint());
        let b = compile_beta(1, &cfg, &provider()).unwrap();
        assert_eq!(b.poly.star(), b.poly);
        assert!(compile_alpha(0, &cfg, &provider()).is_err());
    }
}
