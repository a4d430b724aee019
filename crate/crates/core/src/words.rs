//! Words over indexed generator alphabets and exact star-polynomials.
//!
//! A [`Generator`] is a short name with an optional `[m,i]` index pair and a
//! star flag.  Monomials are [`Word`]s ordered degree-lexicographically, and
//! [`StarPolynomial`] / [`TensorPolynomial`] map monomials to nonzero
//! rationals.  The star involution reverses a word and toggles every star.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

const NAME_CAP: usize = 15;

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{msg} at column {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: usize, msg: impl Into<String>) -> Self {
        ParseError { pos, msg: msg.into() }
    }

    /// Render the error under the offending input with a caret.
    pub fn render(&self, input: &str) -> String {
        let col = self.pos.min(input.len());
        format!("{input}\n{}^\n{}", " ".repeat(col), self)
    }
}

/// Inline ASCII name, compared bytewise so that ordering is stable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    bytes: [u8; NAME_CAP],
    len: u8,
}

impl Name {
    pub fn new(s: &str) -> Result<Name, ParseError> {
        if s.is_empty() || s.len() > NAME_CAP {
            return Err(ParseError::new(0, format!("generator name `{s}` must have 1..={NAME_CAP} bytes")));
        }
        if !s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            return Err(ParseError::new(0, format!("generator name `{s}` has an illegal character")));
        }
        if s == "1" {
            return Err(ParseError::new(0, "`1` is reserved for the empty word"));
        }
        let mut bytes = [0u8; NAME_CAP];
        bytes[..s.len()].copy_from_slice(s.as_bytes());
        Ok(Name { bytes, len: s.len() as u8 })
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.bytes[..self.len as usize]).expect("ascii name")
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One letter: name, optional `(m, i)` indices, star flag.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Generator {
    pub name: Name,
    pub indices: Option<(i64, i64)>,
    pub starred: bool,
}

impl Generator {
    /// Panics on an invalid name; use [`Generator::from_str`] for user input.
    pub fn plain(name: &str) -> Generator {
        Generator { name: Name::new(name).expect("valid generator name"), indices: None, starred: false }
    }

    pub fn indexed(name: &str, m: i64, i: i64) -> Generator {
        Generator { indices: Some((m, i)), ..Generator::plain(name) }
    }

    pub fn star(&self) -> Generator {
        Generator { starred: !self.starred, ..*self }
    }

    pub fn unstarred(&self) -> Generator {
        Generator { starred: false, ..*self }
    }

    pub fn is(&self, name: &str) -> bool {
        self.name.as_str() == name
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if let Some((m, i)) = self.indices {
            write!(f, "[{m},{i}]")?;
        }
        if self.starred {
            write!(f, "~")?;
        }
        Ok(())
    }
}

fn parse_generator_at(tok: &str, offset: usize) -> Result<Generator, ParseError> {
    let (body, starred) = match tok.strip_suffix('~') {
        Some(b) => (b, true),
        None => (tok, false),
    };
    let (name, indices) = match body.find('[') {
        None => (body, None),
        Some(open) => {
            let inner = body[open + 1..]
                .strip_suffix(']')
                .ok_or_else(|| ParseError::new(offset + body.len(), "expected `]`"))?;
            let mut parts = inner.split(',');
            let mut next = |what: &str| -> Result<i64, ParseError> {
                let p = parts.next().ok_or_else(|| ParseError::new(offset + open, format!("missing index {what}")))?;
                p.trim().parse::<i64>().map_err(|_| ParseError::new(offset + open + 1, format!("bad index `{p}`")))
            };
            let m = next("m")?;
            let i = next("i")?;
            if parts.next().is_some() {
                return Err(ParseError::new(offset + open, "expected exactly two indices"));
            }
            (&body[..open], Some((m, i)))
        }
    };
    let name = Name::new(name).map_err(|e| ParseError::new(offset, e.msg))?;
    Ok(Generator { name, indices, starred })
}

impl FromStr for Generator {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_generator_at(s.trim(), 0)
    }
}

/// A monomial.  Ordered by length first, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Word(pub Vec<Generator>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn letter(g: Generator) -> Word {
        Word(vec![g])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Generator] {
        &self.0
    }

    /// Reverse the letters and toggle every star.
    pub fn star(&self) -> Word {
        Word(self.0.iter().rev().map(Generator::star).collect())
    }

    /// Reverse the letters, keeping stars.
    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn pow(&self, k: usize) -> Word {
        Word(self.0.iter().copied().cycle().take(self.len() * k).collect())
    }

    /// Whitespace separated tokens; `1` denotes the empty word.
    pub fn parse(s: &str) -> Result<Word, ParseError> {
        Self::parse_at(s, 0)
    }

    pub(crate) fn parse_at(s: &str, base: usize) -> Result<Word, ParseError> {
        let mut out = Vec::new();
        let mut saw_one = false;
        for (off, tok) in tokens(s) {
            if tok == "1" {
                saw_one = true;
                continue;
            }
            out.push(parse_generator_at(tok, base + off)?);
        }
        if saw_one && !out.is_empty() {
            return Err(ParseError::new(base, "`1` may only stand alone"));
        }
        Ok(Word(out))
    }
}

fn tokens(s: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut res = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some(b) = start.take() {
                res.push((b, &s[b..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(b) = start {
        res.push((b, &s[b..]));
    }
    res.into_iter()
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, g) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        Word::parse(s)
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Finite rational combination of words with no zero coefficients.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default, Debug)]
pub struct StarPolynomial {
    terms: BTreeMap<Word, BigRational>,
}

impl StarPolynomial {
    pub fn zero() -> Self {
        StarPolynomial { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::monomial(Word::empty())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::term(c, Word::empty())
    }

    pub fn monomial(w: Word) -> Self {
        Self::term(BigRational::one(), w)
    }

    pub fn letter(g: Generator) -> Self {
        Self::monomial(Word::letter(g))
    }

    pub fn term(c: BigRational, w: Word) -> Self {
        let mut p = Self::zero();
        p.add_term(w, c);
        p
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Word, BigRational)>) -> Self {
        let mut p = Self::zero();
        for (w, c) in it {
            p.add_term(w, c);
        }
        p
    }

    pub fn add_term(&mut self, w: Word, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &BigRational)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<Word, BigRational> {
        self.terms
    }

    pub fn coefficient(&self, w: &Word) -> BigRational {
        self.terms.get(w).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Number of terms; emptiness is [`Self::is_zero`].
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn star(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.star(), c.clone())))
    }

    pub fn is_self_adjoint(&self) -> bool {
        *self == self.star()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        StarPolynomial { terms: self.terms.iter().map(|(w, x)| (w.clone(), x * c)).collect() }
    }

    /// Sum of absolute coefficients.
    pub fn norm1(&self) -> BigRational {
        self.terms.values().fold(BigRational::zero(), |acc, c| acc + c.abs())
    }

    /// Sum of absolute coefficients weighted by monomial degree.
    pub fn norm11(&self) -> BigRational {
        self.terms
            .iter()
            .fold(BigRational::zero(), |acc, (w, c)| acc + c.abs() * int(w.len() as i64))
    }

    pub fn mul_word_left(&self, u: &Word) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (u.concat(w), c.clone())))
    }

    pub fn mul_word_right(&self, v: &Word) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.concat(v), c.clone())))
    }

    /// Apply a word map termwise and recollect.
    pub fn map_words(&self, f: impl Fn(&Word) -> Word) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (f(w), c.clone())))
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Every generator occurring, without stars.
    pub fn generators(&self) -> std::collections::BTreeSet<Generator> {
        self.terms.keys().flat_map(|w| w.0.iter().map(Generator::unstarred)).collect()
    }

    /// Text format: one `p/q : word` line per term.
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let mut p = Self::zero();
        let mut base = 0usize;
        for line in s.split_inclusive('\n') {
            let body = line.trim_end_matches(['\n', '\r']);
            let content = body.split('#').next().unwrap_or("");
            if !content.trim().is_empty() {
                let (c, w) = content
                    .split_once(':')
                    .ok_or_else(|| ParseError::new(base, "expected `coefficient : word`"))?;
                let coef = parse_rational(c).ok_or_else(|| ParseError::new(base, format!("bad coefficient `{}`", c.trim())))?;
                let word = Word::parse_at(w, base + c.len() + 1)?;
                p.add_term(word, coef);
            }
            base += line.len();
        }
        Ok(p)
    }
}

impl fmt::Display for StarPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, c) in &self.terms {
            writeln!(f, "{c} : {w}")?;
        }
        Ok(())
    }
}

impl FromStr for StarPolynomial {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        StarPolynomial::parse(s)
    }
}

impl<'a> Add<&'a StarPolynomial> for &'a StarPolynomial {
    type Output = StarPolynomial;
    fn add(self, rhs: &StarPolynomial) -> StarPolynomial {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a StarPolynomial> for &'a StarPolynomial {
    type Output = StarPolynomial;
    fn sub(self, rhs: &StarPolynomial) -> StarPolynomial {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a StarPolynomial> for &'a StarPolynomial {
    type Output = StarPolynomial;
    fn mul(self, rhs: &StarPolynomial) -> StarPolynomial {
        let mut out = StarPolynomial::zero();
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                out.add_term(a.concat(b), x * y);
            }
        }
        out
    }
}

impl Neg for &StarPolynomial {
    type Output = StarPolynomial;
    fn neg(self) -> StarPolynomial {
        self.scale(&-BigRational::one())
    }
}

impl Add for StarPolynomial {
    type Output = StarPolynomial;
    fn add(self, rhs: StarPolynomial) -> StarPolynomial {
        &self + &rhs
    }
}

impl Sub for StarPolynomial {
    type Output = StarPolynomial;
    fn sub(self, rhs: StarPolynomial) -> StarPolynomial {
        &self - &rhs
    }
}

impl Mul for StarPolynomial {
    type Output = StarPolynomial;
    fn mul(self, rhs: StarPolynomial) -> StarPolynomial {
        &self * &rhs
    }
}

/// Reverse each monomial without starring.  Anti-multiplicative.
pub fn omega(p: &StarPolynomial) -> StarPolynomial {
    p.map_words(Word::reversed)
}

/// `omega` restricted to polynomials over a given generating set.
pub fn omega_checked(
    p: &StarPolynomial,
    allowed: &std::collections::BTreeSet<Generator>,
) -> Result<StarPolynomial, ParseError> {
    for g in p.generators() {
        if !allowed.contains(&g) {
            return Err(ParseError::new(0, format!("generator {g} is outside the generating set")));
        }
    }
    Ok(omega(p))
}

/// Element of the algebraic tensor square, keyed by `(left, right)` words.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct TensorPolynomial {
    terms: BTreeMap<(Word, Word), BigRational>,
}

impl TensorPolynomial {
    pub fn zero() -> Self {
        TensorPolynomial { terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, a: Word, b: Word, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let key = (a, b);
        let e = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// `p ⊗ q`.
    pub fn tensor(p: &StarPolynomial, q: &StarPolynomial) -> Self {
        let mut t = Self::zero();
        for (a, x) in p.terms() {
            for (b, y) in q.terms() {
                t.add_term(a.clone(), b.clone(), x * y);
            }
        }
        t
    }

    pub fn left(p: &StarPolynomial) -> Self {
        Self::tensor(p, &StarPolynomial::one())
    }

    pub fn right(p: &StarPolynomial) -> Self {
        Self::tensor(&StarPolynomial::one(), p)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Word, Word), &BigRational)> {
        self.terms.iter()
    }

    /// Number of terms; emptiness is [`Self::is_zero`].
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn star(&self) -> Self {
        let mut t = Self::zero();
        for ((a, b), c) in &self.terms {
            t.add_term(a.star(), b.star(), c.clone());
        }
        t
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut t = Self::zero();
        for ((a, b), x) in &self.terms {
            t.add_term(a.clone(), b.clone(), x * c);
        }
        t
    }

    pub fn add_assign(&mut self, rhs: &TensorPolynomial) {
        for ((a, b), c) in &rhs.terms {
            self.add_term(a.clone(), b.clone(), c.clone());
        }
    }

    pub fn mul(&self, rhs: &TensorPolynomial) -> Self {
        let mut t = Self::zero();
        for ((a, b), x) in &self.terms {
            for ((c, d), y) in &rhs.terms {
                t.add_term(a.concat(c), b.concat(d), x * y);
            }
        }
        t
    }

    /// Text format: one `p/q : left | right` line per term.
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let mut t = Self::zero();
        let mut base = 0usize;
        for line in s.split_inclusive('\n') {
            let content = line.trim_end_matches(['\n', '\r']).split('#').next().unwrap_or("");
            if !content.trim().is_empty() {
                let (c, rest) = content
                    .split_once(':')
                    .ok_or_else(|| ParseError::new(base, "expected `coefficient : left | right`"))?;
                let coef = parse_rational(c).ok_or_else(|| ParseError::new(base, "bad coefficient"))?;
                let (l, r) = rest
                    .split_once('|')
                    .ok_or_else(|| ParseError::new(base + c.len() + 1, "expected `|`"))?;
                let a = Word::parse_at(l, base + c.len() + 1)?;
                let b = Word::parse_at(r, base + c.len() + l.len() + 2)?;
                t.add_term(a, b, coef);
            }
            base += line.len();
        }
        Ok(t)
    }
}

impl fmt::Display for TensorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((a, b), c) in &self.terms {
            writeln!(f, "{c} : {a} | {b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn star_reverses_and_toggles() {
        assert_eq!(w("a b~ c[1,2]").star(), w("c[1,2]~ b a~"));
        assert_eq!(w("1").star(), Word::empty());
    }

    #[test]
    fn deg_lex_order() {
        assert!(w("b") < w("a a"));
        assert!(w("a b") < w("b a"));
        assert!(Word::empty() < w("a"));
    }

    #[test]
    fn norms_hand_counted() {
        let p = StarPolynomial::parse("2 : x y\n-1/2 : 1\n3 : x~").unwrap();
        assert_eq!(p.norm1(), rat(11, 2));
        assert_eq!(p.norm11(), int(7));
    }

    #[test]
    fn add_cancels_to_zero() {
        let p = StarPolynomial::parse("1 : x\n1/3 : y").unwrap();
        assert!((&p - &p).is_zero());
        assert_eq!((&p - &p).len(), 0);
    }

    #[test]
    fn round_trip_text() {
        let p = StarPolynomial::parse("1/8 : OQ U1 U2\n-3 : 1\n2 : x[3,-1]~").unwrap();
        assert_eq!(StarPolynomial::parse(&p.to_string()).unwrap(), p);
        let t = TensorPolynomial::parse("1 : a | b~\n-1 : 1 | a b").unwrap();
        assert_eq!(TensorPolynomial::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn parse_error_has_position() {
        let e = Word::parse("a b[1 c").unwrap_err();
        assert_eq!(e.pos, 5);
        let e = StarPolynomial::parse("1 : a\nzz : b").unwrap_err();
        assert_eq!(e.pos, 6);
    }

    #[test]
    fn omega_reverses_without_star() {
        let p = StarPolynomial::parse("1 : a b~ c").unwrap();
        assert_eq!(omega(&p), StarPolynomial::parse("1 : c b~ a").unwrap());
    }
}
