//! Finite presentations: involutionization, the truncated presentation of
//! the HNN group used in place of a finitely presented overgroup, free-group
//! embeddings into small free products, and the coset expectation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::machines::HaltingOracle;
use crate::words::{Generator, ParseError, StarPolynomial, Word};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresentationError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("embedding target needs at least {need} generators, got {got}")]
    TooFewGenerators { need: usize, got: usize },
    #[error(transparent)]
    Word(#[from] ParseError),
}

/// Cancel adjacent `g g~` pairs.
pub fn free_reduce(w: &Word) -> Word {
    let mut out: Vec<Generator> = Vec::with_capacity(w.len());
    for g in w.letters() {
        if out.last() == Some(&g.star()) {
            out.pop();
        } else {
            out.push(*g);
        }
    }
    Word(out)
}

/// Cancel `g g~`, and `g g` for the listed involutions, normalizing stars away
/// on involutions.
pub fn involutive_reduce(w: &Word, involutions: &BTreeSet<String>) -> Word {
    let mut out: Vec<Generator> = Vec::with_capacity(w.len());
    for g in w.letters() {
        let inv = involutions.contains(g.name.as_str());
        let g = if inv { g.unstarred() } else { *g };
        let cancels = if inv { out.last() == Some(&g) } else { out.last() == Some(&g.star()) };
        if cancels {
            out.pop();
        } else {
            out.push(g);
        }
    }
    Word(out)
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct GroupPresentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
    pub involutions: BTreeSet<String>,
}

impl GroupPresentation {
    /// Build with freely reduced relators and `g g` relators for involutions.
    pub fn new(generators: Vec<String>, relators: Vec<Word>, involutions: BTreeSet<String>) -> Self {
        let mut rels: Vec<Word> = Vec::new();
        for g in &involutions {
            let sq = Word(vec![Generator::plain(g), Generator::plain(g)]);
            if !relators.contains(&sq) {
                rels.push(sq);
            }
        }
        rels.extend(relators.iter().map(free_reduce).filter(|r| !r.is_empty()));
        GroupPresentation { generators, relators: rels, involutions }
    }

    /// `[gens]` one token per line, `[rels]` one word per line,
    /// `[involutions]` a token list.
    pub fn parse(text: &str) -> Result<Self, PresentationError> {
        let mut section = String::new();
        let mut gens = Vec::new();
        let mut rels = Vec::new();
        let mut invs = BTreeSet::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                continue;
            }
            let err = |msg: String| PresentationError::Parse { line: k + 1, msg };
            match section.as_str() {
                "gens" => {
                    for t in line.split_whitespace() {
                        Generator::from_str_checked(t).map_err(|e| err(e.msg))?;
                        gens.push(t.to_string());
                    }
                }
                "rels" => {
                    let w = Word::parse(line).map_err(|e| err(e.to_string()))?;
                    for g in w.letters() {
                        if !gens.iter().any(|n| n == g.name.as_str()) {
                            return Err(err(format!("unknown generator `{}`", g.name)));
                        }
                    }
                    rels.push(w);
                }
                "involutions" => {
                    for t in line.split_whitespace() {
                        if !gens.iter().any(|n| n == t) {
                            return Err(err(format!("unknown generator `{t}`")));
                        }
                        invs.insert(t.to_string());
                    }
                }
                _ => return Err(err("content outside a section".into())),
            }
        }
        Ok(GroupPresentation::new(gens, rels, invs))
    }
}

impl fmt::Display for GroupPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[gens]")?;
        for g in &self.generators {
            writeln!(f, "{g}")?;
        }
        writeln!(f, "[involutions]")?;
        writeln!(f, "{}", self.involutions.iter().cloned().collect::<Vec<_>>().join(" "))?;
        writeln!(f, "[rels]")?;
        for r in &self.relators {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

trait CheckedGenerator {
    fn from_str_checked(s: &str) -> Result<Generator, ParseError>;
}

impl CheckedGenerator for Generator {
    fn from_str_checked(s: &str) -> Result<Generator, ParseError> {
        let g: Generator = s.parse()?;
        if g.starred || g.indices.is_some() {
            return Err(ParseError::new(0, format!("`{s}` must be a bare generator name")));
        }
        Ok(g)
    }
}

/// Letter substitution extended to words, inverses going to reversed images.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct GeneratorMap {
    pub images: BTreeMap<String, Word>,
}

impl GeneratorMap {
    pub fn apply(&self, w: &Word) -> Word {
        let mut out = Vec::new();
        for g in w.letters() {
            match self.images.get(g.name.as_str()) {
                Some(img) if g.starred => out.extend(img.star().0),
                Some(img) => out.extend(img.0.iter().copied()),
                None => out.push(*g),
            }
        }
        Word(out)
    }
}

/// Replace every non-involutive generator `y` by `s_y t_y` with `s_y`, `t_y`
/// involutions.  Inverses map to `t_y s_y`.
pub fn involutionize(p: &GroupPresentation) -> (GroupPresentation, GeneratorMap) {
    let mut gens = Vec::new();
    let mut invs = BTreeSet::new();
    let mut map = GeneratorMap::default();
    for g in &p.generators {
        if p.involutions.contains(g) {
            gens.push(g.clone());
            invs.insert(g.clone());
            map.images.insert(g.clone(), Word::letter(Generator::plain(g)));
        } else {
            let (s, t) = (format!("s{g}"), format!("t{g}"));
            gens.push(s.clone());
            gens.push(t.clone());
            invs.insert(s.clone());
            invs.insert(t.clone());
            map.images.insert(g.clone(), Word(vec![Generator::plain(&s), Generator::plain(&t)]));
        }
    }
    let rels: Vec<Word> = p.relators.iter().map(|r| involutive_reduce(&map.apply(r), &invs)).collect();
    (GroupPresentation::new(gens, rels, invs), map)
}

fn g(name: &str) -> Generator {
    Generator::plain(name)
}

fn power(name: &str, k: i64) -> Word {
    let l = if k < 0 { g(name).star() } else { g(name) };
    Word(vec![l; k.unsigned_abs() as usize])
}

/// `X[m,i] = S^i W^m X W^-m S^-i` over the letters `J S T W X Z`.
pub fn x_word(m: i64, i: i64) -> Word {
    conj_word("S", "X", m, i)
}

/// `Z[m,i] = T^i W^m Z W^-m T^-i`.
pub fn z_word(m: i64, i: i64) -> Word {
    conj_word("T", "Z", m, i)
}

fn conj_word(shift: &str, base: &str, m: i64, i: i64) -> Word {
    power(shift, i)
        .concat(&power("W", m))
        .concat(&Word::letter(g(base)))
        .concat(&power("W", -m))
        .concat(&power(shift, -i))
}

/// `a b a^-1 b^-1`.
pub fn commutator(a: &Word, b: &Word) -> Word {
    free_reduce(&a.concat(b).concat(&a.star()).concat(&b.star()))
}

/// Output of a presentation provider.
#[derive(Clone, Debug)]
pub struct ProvidedPresentation {
    /// Relators over `J S T W X Z` with family labels.
    pub labeled: Vec<(String, Word)>,
    pub group: GroupPresentation,
    /// The involutionized presentation over `J X Z sS tS sT tT sW tW`.
    pub involutive: GroupPresentation,
    pub map: GeneratorMap,
    /// Words for `J X Z S T W` over the involutive alphabet.
    pub designated: BTreeMap<String, Word>,
    /// Relators skipped because the budget could not decide their form.
    pub skipped: Vec<String>,
}

/// Source of presentations for the group the relation compiler works over.
pub trait PresentationProvider {
    fn provide(&self, m_bound: u64, i_bound: u64) -> ProvidedPresentation;
    /// Coefficients of the configured isoperimetric polynomial, constant term first.
    fn isoperimetric(&self) -> &[BigRational];
}

/// Truncation of the direct presentation of the HNN group.
#[derive(Clone, Debug)]
pub struct TruncatedGsProvider {
    pub oracle: HaltingOracle,
    pub d_s: Vec<BigRational>,
}

impl TruncatedGsProvider {
    pub fn new(oracle: HaltingOracle) -> Self {
        TruncatedGsProvider { oracle, d_s: vec![crate::words::int(1)] }
    }
}

impl PresentationProvider for TruncatedGsProvider {
    fn provide(&self, m_bound: u64, i_bound: u64) -> ProvidedPresentation {
        truncated_gs(m_bound, i_bound, &self.oracle)
    }

    fn isoperimetric(&self) -> &[BigRational] {
        &self.d_s
    }
}

/// Relators of the HNN group with `|m| <= m_bound`, `|i| <= i_bound`, plus
/// periodicity relators for inputs whose halting time the oracle verifies.
pub fn truncated_gs(m_bound: u64, i_bound: u64, oracle: &HaltingOracle) -> ProvidedPresentation {
    let (mb, ib) = (m_bound as i64, i_bound as i64);
    let mut labeled: Vec<(String, Word)> = Vec::new();
    let mut skipped = Vec::new();
    for x in ["J", "X", "Z"] {
        labeled.push((format!("G0 {x}^2"), Word(vec![g(x), g(x)])));
    }
    for a in ["S", "T", "W", "X", "Z"] {
        labeled.push((format!("G1 [{a},J]"), commutator(&Word::letter(g(a)), &Word::letter(g("J")))));
    }
    for m in -mb..=mb {
        for i in -ib..=ib {
            let c = commutator(&x_word(m, i), &z_word(m, i));
            match oracle.representative(m, i + 1) {
                Ok(0) => labeled.push((format!("G2 [X{m},{i} Z{m},{i}]"), c)),
                Ok(_) => labeled.push((format!("G2 J[X{m},{i} Z{m},{i}]"), Word::letter(g("J").star()).concat(&c))),
                Err(_) => skipped.push(format!("G2 m={m} i={i}")),
            }
        }
        for i in -ib..=ib {
            for j in -ib..=ib {
                if i == j {
                    continue;
                }
                let distinct = match (oracle.representative(m, i), oracle.representative(m, j)) {
                    (Ok(a), Ok(b)) => a != b,
                    _ => {
                        skipped.push(format!("G3 m={m} i={i} j={j}"));
                        continue;
                    }
                };
                if !distinct {
                    continue;
                }
                labeled.push((format!("G3 [X{m},{i} Z{m},{j}]"), commutator(&x_word(m, i), &z_word(m, j))));
                if i < j {
                    labeled.push((format!("G3 [X{m},{i} X{m},{j}]"), commutator(&x_word(m, i), &x_word(m, j))));
                    labeled.push((format!("G3 [Z{m},{i} Z{m},{j}]"), commutator(&z_word(m, i), &z_word(m, j))));
                }
            }
        }
    }
    for m in 0..=mb {
        if let Some(h) = oracle.halting_time(m) {
            let h = h as i64;
            labeled.push((format!("G4 X{m},{}", h + 1), free_reduce(&x_word(m, h + 1).concat(&x_word(m, 0).star()))));
            labeled.push((format!("G4 Z{m},{}", h + 1), free_reduce(&z_word(m, h + 1).concat(&z_word(m, 0).star()))));
        }
    }
    let gens: Vec<String> = ["J", "S", "T", "W", "X", "Z"].iter().map(|s| s.to_string()).collect();
    let invs: BTreeSet<String> = ["J", "X", "Z"].iter().map(|s| s.to_string()).collect();
    // the G0 squares are added by the constructor
    let rels: Vec<Word> = labeled.iter().skip(3).map(|(_, w)| w.clone()).collect();
    let group = GroupPresentation::new(gens, rels, invs);
    let (involutive, map) = involutionize(&group);
    let mut designated = BTreeMap::new();
    for x in ["J", "X", "Z", "S", "T", "W"] {
        designated.insert(x.to_string(), map.apply(&Word::letter(g(x))));
    }
    ProvidedPresentation { labeled, group, involutive, map, designated, skipped }
}

/// Free product of cyclic groups given by generator orders, `0` meaning
/// infinite order.  Stars denote inverses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicFreeProduct {
    pub orders: BTreeMap<String, u32>,
}

impl CyclicFreeProduct {
    pub fn new(orders: impl IntoIterator<Item = (String, u32)>) -> Self {
        CyclicFreeProduct { orders: orders.into_iter().collect() }
    }

    /// Read off a presentation whose relators are all powers of single
    /// generators.
    pub fn from_presentation(p: &GroupPresentation) -> Option<Self> {
        let mut orders: BTreeMap<String, u32> = p.generators.iter().map(|g| (g.clone(), 0)).collect();
        for r in &p.relators {
            let first = r.letters().first()?;
            if !r.letters().iter().all(|l| l.name == first.name && l.indices.is_none() && l.starred == first.starred) {
                return None;
            }
            let o = orders.get_mut(first.name.as_str())?;
            *o = if *o == 0 { r.len() as u32 } else { num_integer_gcd(*o, r.len() as u32) };
        }
        Some(CyclicFreeProduct { orders })
    }

    fn order(&self, g: &Generator) -> u32 {
        self.orders.get(g.name.as_str()).copied().unwrap_or(0)
    }

    /// Syllables `(generator, exponent)` of the normal form.
    pub fn syllables(&self, w: &Word) -> Vec<(Generator, i64)> {
        let mut out: Vec<(Generator, i64)> = Vec::new();
        for l in w.letters() {
            let base = l.unstarred();
            let e = if l.starred { -1 } else { 1 };
            match out.last_mut() {
                Some((b, x)) if *b == base => {
                    *x += e;
                    let k = self.order(&base);
                    if k > 0 {
                        *x = x.rem_euclid(k as i64);
                    }
                    if *x == 0 {
                        out.pop();
                    }
                }
                _ => {
                    let k = self.order(&base);
                    let x = if k > 0 { e.rem_euclid(k as i64) } else { e };
                    if x != 0 {
                        out.push((base, x));
                    }
                }
            }
        }
        out
    }

    /// Canonical word: exponents in `(-k/2, k/2]`, negative powers written with stars.
    pub fn normal_form(&self, w: &Word) -> Word {
        let mut out = Vec::new();
        for (b, x) in self.syllables(w) {
            let k = self.order(&b) as i64;
            let mut e = x;
            if k > 0 && e > k / 2 {
                e -= k;
            }
            let l = if e < 0 { b.star() } else { b };
            out.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
        }
        Word(out)
    }

    /// Collect a polynomial in the group algebra.
    pub fn reduce_poly(&self, p: &StarPolynomial) -> StarPolynomial {
        p.map_words(|w| self.normal_form(w))
    }

    pub fn is_identity(&self, w: &Word) -> bool {
        self.syllables(w).is_empty()
    }
}

fn num_integer_gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        num_integer_gcd(b, a % b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedTarget {
    /// Free group of rank `K`, letters `y1..yK`.
    Free(usize),
    /// Free product of `K` copies of the group of order three, letters `w1..wK`.
    Z3(usize),
    /// Free product of `K` copies of the group of order two, letters `z1..zK`.
    Z2(usize),
}

impl EmbedTarget {
    pub fn group(&self) -> CyclicFreeProduct {
        let (p, k, o) = match *self {
            EmbedTarget::Free(k) => ("y", k, 0),
            EmbedTarget::Z3(k) => ("w", k, 3),
            EmbedTarget::Z2(k) => ("z", k, 2),
        };
        CyclicFreeProduct::new((1..=k).map(|j| (format!("{p}{j}"), o)))
    }
}

/// Star-homomorphism sending `x1..xN` to the given monomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeEmbedding {
    pub images: BTreeMap<String, Word>,
}

impl FreeEmbedding {
    pub fn apply_word(&self, w: &Word) -> Word {
        let mut out = Vec::new();
        for l in w.letters() {
            let img = &self.images[l.name.as_str()];
            if l.starred {
                out.extend(img.star().0);
            } else {
                out.extend(img.0.iter().copied());
            }
        }
        Word(out)
    }

    pub fn apply(&self, p: &StarPolynomial) -> StarPolynomial {
        p.map_words(|w| self.apply_word(w))
    }
}

/// Embed the free group on `x1..xN` into the target.
pub fn embed_free(n: usize, target: EmbedTarget) -> Result<FreeEmbedding, PresentationError> {
    let need = if matches!(target, EmbedTarget::Z2(_)) { 3 } else { 2 };
    let k = match target {
        EmbedTarget::Free(k) | EmbedTarget::Z3(k) | EmbedTarget::Z2(k) => k,
    };
    if k < need {
        return Err(PresentationError::TooFewGenerators { need, got: k });
    }
    let w = |s: &str| Word::parse(s).expect("fixed word");
    let mut images = BTreeMap::new();
    for i in 1..=n {
        let img = match target {
            EmbedTarget::Free(_) => w("y1").pow(i).concat(&w("y2")).concat(&w("y1~").pow(i)),
            EmbedTarget::Z3(_) => w("w1 w2~").pow(i).concat(&w("w1~ w2")).concat(&w("w2 w1~").pow(i)),
            EmbedTarget::Z2(_) => w("z2 z3").pow(i).concat(&w("z1 z2 z3 z1")).concat(&w("z3~ z2~").pow(i)),
        };
        images.insert(format!("x{i}"), img);
    }
    Ok(FreeEmbedding { images })
}

/// Keep the terms whose group element lies in the subgroup.
pub fn coset_expectation<E>(
    p: &StarPolynomial,
    mut in_subgroup: impl FnMut(&Word) -> Result<bool, E>,
) -> Result<StarPolynomial, E> {
    let mut out = StarPolynomial::zero();
    for (w, c) in p.terms() {
        if in_subgroup(w)? {
            out.add_term(w.clone(), c.clone());
        }
    }
    Ok(out)
}
