//! Relation decompositions `f = sum_i c_i u_i r_i v_i`, checked exactly in
//! the group algebra of the free product of order-two groups, their size,
//! the telescoping decomposition of a product of conjugated relators, and a
//! replayed rewriting chain for the key relation
//! `P~_n + X~_n P~_n X~_n - P~_(n+1)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::compiler::{
    p_proj, ptilde, q_proj, quotient, quotient_word, r6, relations_rm, u_star_word, u_word, xtilde, Designated,
    ReductionConfig, RelationSet,
};
use crate::machines::HaltingOracle;
use crate::presentations::PresentationProvider;
use crate::words::{int, parse_rational, rat, Generator, ParseError, StarPolynomial, Word};

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("entry {entry} refers to missing relation {rel}")]
    Dangling { entry: usize, rel: usize },
    #[error("relation {0} is not of the form r - 1")]
    NotRelator(usize),
    #[error("no relation `{0}` in the relation set")]
    MissingRelation(String),
    #[error("input {m} halts at step {h}, so the key relation at n = {n} fails")]
    Halted { m: i64, n: u64, h: u64 },
    #[error("rewrite mismatch: {0}")]
    Rewrite(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Word(#[from] ParseError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub coeff: BigRational,
    pub u: Word,
    pub rel: usize,
    /// Use `r*` instead of `r`.
    pub star: bool,
    pub v: Word,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verification {
    Valid,
    /// Target minus expansion, reduced in the group algebra.
    Invalid(StarPolynomial),
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verification::Valid)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionSize {
    pub value: BigRational,
    pub coefficient_sum: BigRational,
    pub contributions: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RDecomposition {
    pub target: StarPolynomial,
    pub entries: Vec<Entry>,
}

fn acc_add(acc: &mut HashMap<Word, BigRational>, w: Word, c: BigRational) {
    let slot = acc.entry(w).or_insert_with(BigRational::zero);
    *slot += c;
}

impl RDecomposition {
    pub fn new(target: StarPolynomial) -> Self {
        RDecomposition { target, entries: Vec::new() }
    }

    pub fn push(&mut self, coeff: BigRational, u: Word, rel: usize, star: bool, v: Word) {
        if !coeff.is_zero() {
            self.entries.push(Entry { coeff, u, rel, star, v });
        }
    }

    /// `sum c_i u_i r_i v_i` reduced in the group algebra.
    pub fn expansion(&self, rels: &RelationSet) -> Result<StarPolynomial, DecompError> {
        let mut acc: HashMap<Word, BigRational> = HashMap::new();
        let mut starred: BTreeMap<usize, StarPolynomial> = BTreeMap::new();
        for (k, e) in self.entries.iter().enumerate() {
            let r = rels.get(e.rel).ok_or(DecompError::Dangling { entry: k, rel: e.rel })?;
            let poly = if e.star { starred.entry(e.rel).or_insert_with(|| r.poly.star()) } else { &r.poly };
            for (w, c) in poly.terms() {
                let word = quotient_word(&e.u.concat(w).concat(&e.v));
                acc_add(&mut acc, word, &e.coeff * c);
            }
        }
        Ok(StarPolynomial::from_terms(acc))
    }

    pub fn verify(&self, rels: &RelationSet) -> Result<Verification, DecompError> {
        let diff = &quotient(&self.target) - &self.expansion(rels)?;
        Ok(if diff.is_zero() { Verification::Valid } else { Verification::Invalid(diff) })
    }

    /// `sum |c_i| (1 + bound(r_i) deg(v_i))` with `bound = min(6, |r|_1)`
    /// and degrees taken in the group algebra.
    pub fn size(&self, rels: &RelationSet) -> Result<DecompositionSize, DecompError> {
        let mut value = BigRational::zero();
        let mut coefficient_sum = BigRational::zero();
        let mut contributions = Vec::with_capacity(self.entries.len());
        let mut bounds: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (k, e) in self.entries.iter().enumerate() {
            let r = rels.get(e.rel).ok_or(DecompError::Dangling { entry: k, rel: e.rel })?;
            let b = bounds.entry(e.rel).or_insert_with(|| r.size_bound());
            let deg = int(quotient_word(&e.v).len() as i64);
            let c = e.coeff.abs() * (BigRational::one() + &*b * deg);
            coefficient_sum += e.coeff.abs();
            value += &c;
            contributions.push(c);
        }
        Ok(DecompositionSize { value, coefficient_sum, contributions })
    }

    /// Sum of decompositions: for `f - g` and `g - h` this decomposes `f - h`.
    pub fn compose(&self, other: &RDecomposition) -> RDecomposition {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        RDecomposition { target: &self.target + &other.target, entries }
    }

    pub fn scale(&self, c: &BigRational) -> RDecomposition {
        let entries = self
            .entries
            .iter()
            .filter(|_| !c.is_zero())
            .map(|e| Entry { coeff: &e.coeff * c, ..e.clone() })
            .collect();
        RDecomposition { target: self.target.scale(c), entries }
    }

    /// Decomposition of `p f`.
    pub fn lmul(&self, p: &StarPolynomial) -> RDecomposition {
        let mut entries = Vec::with_capacity(self.entries.len() * p.len());
        for (w, c) in p.terms() {
            for e in &self.entries {
                entries.push(Entry { coeff: c * &e.coeff, u: w.concat(&e.u), ..e.clone() });
            }
        }
        RDecomposition { target: p * &self.target, entries }
    }

    /// Decomposition of `f p`.
    pub fn rmul(&self, p: &StarPolynomial) -> RDecomposition {
        let mut entries = Vec::with_capacity(self.entries.len() * p.len());
        for (w, c) in p.terms() {
            for e in &self.entries {
                entries.push(Entry { coeff: &e.coeff * c, v: e.v.concat(w), ..e.clone() });
            }
        }
        RDecomposition { target: &self.target * p, entries }
    }

    /// Entry lines `p/q : u : rel[*] : v` after a header of `key = value`
    /// lines and an `entries` line.
    pub fn to_text(&self, header: &[(&str, String)]) -> String {
        let mut out = String::new();
        for (k, v) in header {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str("entries\n");
        for e in &self.entries {
            out.push_str(&format!("{} : {} : {}{} : {}\n", e.coeff, e.u, e.rel, if e.star { "*" } else { "" }, e.v));
        }
        out
    }
}

/// Header and entries of a decomposition file.
pub fn parse_decomposition(text: &str) -> Result<(BTreeMap<String, String>, Vec<Entry>), DecompError> {
    let mut header = BTreeMap::new();
    let mut entries = Vec::new();
    let mut in_entries = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let perr = |msg: &str| DecompError::Parse { line: ln + 1, msg: msg.to_string() };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !in_entries {
            if line == "entries" {
                in_entries = true;
            } else {
                let (k, v) = line.split_once('=').ok_or_else(|| perr("expected `key = value` or `entries`"))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let parts: Vec<&str> = line.split(':').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(perr("expected `coeff : u : rel : v`"));
        }
        let coeff = parse_rational(parts[0]).ok_or_else(|| perr("bad coefficient"))?;
        let (idx, star) = match parts[2].strip_suffix('*') {
            Some(s) => (s, true),
            None => (parts[2], false),
        };
        let rel = idx.parse::<usize>().map_err(|_| perr("bad relation index"))?;
        let u = Word::parse(parts[1]).map_err(|e| perr(&e.msg))?;
        let v = Word::parse(parts[3]).map_err(|e| perr(&e.msg))?;
        entries.push(Entry { coeff, u, rel, star, v });
    }
    Ok((header, entries))
}

/// One factor `z r^(+-1) z^-1` of a product of conjugated relators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelatorFactor {
    pub conj: Word,
    pub rel: usize,
    pub inverse: bool,
}

/// The word `z_1 r_1 z_1^-1 ... z_k r_k z_k^-1`.
pub fn relator_product(factors: &[RelatorFactor], rels: &RelationSet) -> Result<Word, DecompError> {
    let mut out = Word::empty();
    for f in factors {
        let r = rels.get(f.rel).and_then(|r| r.relator.clone()).ok_or(DecompError::NotRelator(f.rel))?;
        let r = if f.inverse { r.star() } else { r };
        out = out.concat(&f.conj).concat(&r).concat(&f.conj.star());
    }
    Ok(out)
}

/// Telescoping decomposition of `w - 1`:
/// `w - 1 = sum_i p_(i-1) z_i (r_i - 1) z_i^-1` with `p_i` the product of
/// the first `i` factors.
pub fn from_relator_product(factors: &[RelatorFactor], rels: &RelationSet) -> Result<RDecomposition, DecompError> {
    let w = relator_product(factors, rels)?;
    let mut d = RDecomposition::new(&StarPolynomial::monomial(w) - &StarPolynomial::one());
    let mut prefix = Word::empty();
    for f in factors {
        let r = rels.get(f.rel).and_then(|r| r.relator.clone()).ok_or(DecompError::NotRelator(f.rel))?;
        let u = quotient_word(&prefix.concat(&f.conj));
        d.push(BigRational::one(), u, f.rel, f.inverse, f.conj.star());
        let r = if f.inverse { r.star() } else { r };
        prefix = quotient_word(&prefix.concat(&f.conj).concat(&r).concat(&f.conj.star()));
    }
    Ok(d)
}

/// Factor of a word in the rewriting chain: a letter or one of the two
/// projections, kept unexpanded until an entry is recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fac {
    L(Generator),
    P,
    Q,
}

fn facs(names: &[&str]) -> Vec<Fac> {
    names.iter().map(|s| Fac::L(Generator::plain(s))).collect()
}

fn word_facs(w: &Word) -> Vec<Fac> {
    quotient_word(w).letters().iter().map(|g| Fac::L(*g)).collect()
}

fn expand(fs: &[Fac]) -> StarPolynomial {
    let mut acc = StarPolynomial::one();
    for f in fs {
        let p = match f {
            Fac::L(g) => StarPolynomial::letter(*g),
            Fac::P => p_proj(),
            Fac::Q => q_proj(),
        };
        acc = &acc * &p;
    }
    acc
}

/// A rewrite `lhs -> rhs` justified by `lhs - rhs = kappa r` (or `kappa r*`)
/// in the group algebra.
#[derive(Clone, Debug)]
struct Move {
    lhs: Vec<Fac>,
    rhs: Vec<Fac>,
    kappa: BigRational,
    rel: usize,
    star: bool,
}

impl Move {
    fn reversed(&self) -> Move {
        Move { lhs: self.rhs.clone(), rhs: self.lhs.clone(), kappa: -self.kappa.clone(), ..self.clone() }
    }
}

/// Current factor string together with a decomposition of
/// `start - current`.
struct Chain {
    cur: Vec<Fac>,
    entries: Vec<Entry>,
}

impl Chain {
    fn new(start: Vec<Fac>) -> Self {
        Chain { cur: start, entries: Vec::new() }
    }

    fn apply(&mut self, pos: usize, mv: &Move) -> Result<(), DecompError> {
        let end = pos + mv.lhs.len();
        if end > self.cur.len() || self.cur[pos..end] != mv.lhs[..] {
            return Err(DecompError::Rewrite(format!("pattern not found at {pos}")));
        }
        let left = expand(&self.cur[..pos]);
        let right = expand(&self.cur[end..]);
        for (u, cu) in left.terms() {
            for (v, cv) in right.terms() {
                let coeff = &mv.kappa * cu * cv;
                self.entries.push(Entry { coeff, u: u.clone(), rel: mv.rel, star: mv.star, v: v.clone() });
            }
        }
        self.cur.splice(pos..end, mv.rhs.iter().copied());
        Ok(())
    }

    /// Cancel adjacent equal letters; exact in the group algebra.
    fn cancel(&mut self) {
        let mut out: Vec<Fac> = Vec::with_capacity(self.cur.len());
        for f in self.cur.drain(..) {
            match (out.last(), f) {
                (Some(Fac::L(a)), Fac::L(b)) if *a == b => {
                    out.pop();
                }
                _ => out.push(f),
            }
        }
        self.cur = out;
    }

    fn rfind(&self, f: Fac) -> Option<usize> {
        self.cur.iter().rposition(|x| *x == f)
    }
}

/// Moves available to the key-relation chain at a fixed input.
struct Moves {
    u: Vec<Fac>,
    ubar: Vec<Fac>,
    s: Vec<Fac>,
    sbar: Vec<Fac>,
    t: Vec<Fac>,
    tbar: Vec<Fac>,
    /// `U Xt U* -> S Xt S*` and the `Zt`, `T` analogue.
    r4x: Move,
    r4z: Move,
    /// `U S -> S U`, `S* U* -> U* S*`, same for `T`.
    us: Move,
    us_bar: Move,
    ut: Move,
    ut_bar: Move,
    uj: Move,
    /// `Q A -> A Q` for `A` in `S S* T T* J`.
    qs: Move,
    qs_bar: Move,
    qt: Move,
    qt_bar: Move,
    qj: Move,
    /// `Q Xt -> Xt Q` and `Q Zt -> Zt Q`.
    qx: Move,
    qz: Move,
    /// `Q Xt -> Q X_m0`, `Q Zt -> Q Z_m0`.
    qx_abs: Move,
    qz_abs: Move,
}

fn lookup(rels: &RelationSet, label: &str) -> Result<usize, DecompError> {
    rels.find(label).ok_or_else(|| DecompError::MissingRelation(label.to_string()))
}

fn concat(parts: &[&[Fac]]) -> Vec<Fac> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

impl Moves {
    fn new(d: &Designated, rels: &RelationSet) -> Result<Self, DecompError> {
        let one = BigRational::one();
        let mone = -BigRational::one();
        let mv = |lhs: Vec<Fac>, rhs: Vec<Fac>, kappa: &BigRational, label: &str, star: bool| -> Result<Move, DecompError> {
            Ok(Move { lhs, rhs, kappa: kappa.clone(), rel: lookup(rels, label)?, star })
        };
        let u = facs(&["U1", "U2"]);
        let ubar = facs(&["U2", "U1"]);
        let s = word_facs(&d.s);
        let sbar = word_facs(&d.s.star());
        let t = word_facs(&d.t);
        let tbar = word_facs(&d.t.star());
        let j = word_facs(&d.j);
        let xt = facs(&["Xt"]);
        let zt = facs(&["Zt"]);
        let q = vec![Fac::Q];
        let comm_move = |a: &[Fac], b: &[Fac], kappa: &BigRational, label: &str, star: bool| {
            mv(concat(&[a, b]), concat(&[b, a]), kappa, label, star)
        };
        Ok(Moves {
            r4x: mv(concat(&[&u, &xt, &ubar]), concat(&[&s, &xt, &sbar]), &one, "R4 X", false)?,
            r4z: mv(concat(&[&u, &zt, &ubar]), concat(&[&t, &zt, &tbar]), &one, "R4 Z", false)?,
            us: comm_move(&u, &s, &one, "R2 [U,S]", false)?,
            us_bar: comm_move(&sbar, &ubar, &one, "R2 [U,S]", true)?,
            ut: comm_move(&u, &t, &one, "R2 [U,T]", false)?,
            ut_bar: comm_move(&tbar, &ubar, &one, "R2 [U,T]", true)?,
            uj: comm_move(&u, &j, &one, "R2 [U,J]", false)?,
            qs: comm_move(&q, &s, &one, "R2 [Q,S]", false)?,
            qs_bar: comm_move(&q, &sbar, &mone, "R2 [Q,S]", true)?,
            qt: comm_move(&q, &t, &one, "R2 [Q,T]", false)?,
            qt_bar: comm_move(&q, &tbar, &mone, "R2 [Q,T]", true)?,
            qj: comm_move(&q, &j, &one, "R2 [Q,J]", false)?,
            qx: comm_move(&q, &xt, &mone, "R3 [Xt,Q]", false)?,
            qz: comm_move(&q, &zt, &mone, "R3 [Zt,Q]", false)?,
            qx_abs: mv(concat(&[&q, &xt]), concat(&[&q, &word_facs(&d.x_m0)]), &one, "R3 XtQ", true)?,
            qz_abs: mv(concat(&[&q, &zt]), concat(&[&q, &word_facs(&d.z_m0)]), &one, "R3 ZtQ", true)?,
            u,
            ubar,
            s,
            sbar,
            t,
            tbar,
        })
    }

    /// Rewrite `U^k Y U^-k` at `pos` into `A^k Y A^-k`, where `(Y, A)` is
    /// `(Xt, S)` or `(Zt, T)`.
    fn conj_push(&self, ch: &mut Chain, pos: usize, k: usize, on_x: bool) -> Result<(), DecompError> {
        let (r4, ua, ua_bar, a) = if on_x {
            (&self.r4x, &self.us, &self.us_bar, &self.s)
        } else {
            (&self.r4z, &self.ut, &self.ut_bar, &self.t)
        };
        let (lu, la) = (self.u.len(), a.len());
        let mut pos = pos;
        for k in (1..=k).rev() {
            // innermost conjugation sits after k - 1 copies of U
            let inner = pos + (k - 1) * lu;
            ch.apply(inner, r4)?;
            for j in (0..k - 1).rev() {
                ch.apply(pos + j * lu, ua)?;
            }
            // A* now sits right after Y at pos + la + (k-1) lu + 1
            let mut bar = pos + la + (k - 1) * lu + 1;
            for _ in 0..k - 1 {
                ch.apply(bar, ua_bar)?;
                bar += lu;
            }
            pos += la;
        }
        Ok(())
    }

    /// Same as `conj_push` but in the opposite direction: entries of the
    /// forward chain run on the target string, negated.
    fn conj_pull(&self, ch: &mut Chain, pos: usize, k: usize, on_x: bool) -> Result<(), DecompError> {
        let (a, abar, y) = if on_x { (&self.s, &self.sbar, "Xt") } else { (&self.t, &self.tbar, "Zt") };
        let span = k * a.len() + 1 + k * abar.len();
        let block = concat(&[&self.u.repeat(k), &facs(&[y]), &self.ubar.repeat(k)]);
        let mut target = ch.cur.clone();
        target.splice(pos..pos + span, block.iter().copied());
        let mut fwd = Chain::new(target.clone());
        self.conj_push(&mut fwd, pos, k, on_x)?;
        if fwd.cur != ch.cur {
            return Err(DecompError::Rewrite("conjugation pull did not reproduce the string".into()));
        }
        ch.entries.extend(fwd.entries.into_iter().map(|e| Entry { coeff: -e.coeff, ..e }));
        ch.cur = target;
        Ok(())
    }

    /// Move the `Q` at `qpos` left across a block: the block is `A^n Y A^-n`
    /// with `Y` absorbed into its `m,0` word on the way.
    fn q_absorb_left(&self, ch: &mut Chain, qpos: usize, n: usize, on_x: bool) -> Result<usize, DecompError> {
        let (a, abar, q_a, q_abar, q_y, q_abs) = if on_x {
            (&self.s, &self.sbar, &self.qs, &self.qs_bar, &self.qx, &self.qx_abs)
        } else {
            (&self.t, &self.tbar, &self.qt, &self.qt_bar, &self.qz, &self.qz_abs)
        };
        let mut q = qpos;
        for _ in 0..n {
            q -= abar.len();
            ch.apply(q, &q_abar.reversed())?;
        }
        q -= 1;
        ch.apply(q, &q_y.reversed())?;
        ch.apply(q, q_abs)?;
        for _ in 0..n {
            q -= a.len();
            ch.apply(q, &q_a.reversed())?;
        }
        Ok(q)
    }
}

/// Decomposition of `P~_n + X~_n P~_n X~_n - P~_(n+1)` over the relations
/// at input `m`, by replaying the rewriting argument:
///
/// with `f = Q U^n (P + Xt P Xt - U P U*) U^-n` and
/// `g = U^n (1 + J Xt Zt Xt Zt) U^-n Q`, the product `f g` is a conjugate
/// of the last relation, `g = 2Q` modulo the relations, and `f Q` differs
/// from the target by moving `Q` across `X~_n`.  Then
/// `target = fg/2 - f (g - 2Q)/2 - (fQ - target)`.
pub struct KeyDecomposition {
    pub m: i64,
    pub n: u64,
    pub relations: RelationSet,
    pub decomposition: RDecomposition,
    /// The single-relation decomposition of `f g`.
    pub fg: RDecomposition,
}

pub fn key_target(n: usize) -> StarPolynomial {
    let xn = xtilde(n);
    let pn = ptilde(n);
    &(&pn + &(&(&xn * &pn) * &xn)) - &ptilde(n + 1)
}

pub fn decompose_key_relation(
    m: i64,
    n: u64,
    oracle: &HaltingOracle,
    provider: &dyn PresentationProvider,
    config: &ReductionConfig,
) -> Result<KeyDecomposition, DecompError> {
    if let Some(h) = oracle.halting_time(m) {
        if n >= h {
            return Err(DecompError::Halted { m, n, h });
        }
    }
    let provided = provider.provide(m.unsigned_abs(), config.i_bound.max(n));
    let rels = relations_rm(m, &provided);
    let d = Designated::new(m, &provided);
    let moves = Moves::new(&d, &rels)?;
    let nn = n as usize;
    let un = u_word().pow(nn);
    let uns = u_star_word().pow(nn);
    let qp = q_proj();
    let pp = p_proj();
    let mono = StarPolynomial::monomial;
    let xt = mono(Word::parse("Xt")?);

    // f g is Q U^n (R6) U^-n Q
    let f = &(&(&qp * &mono(un.clone())) * &(&(&pp + &(&(&xt * &pp) * &xt)) - &(&(&mono(u_word()) * &pp) * &mono(u_star_word())))) * &mono(uns.clone());
    let g = &(&(&mono(un.clone()) * &(&StarPolynomial::one() + &mono(Word::parse("J Xt Zt Xt Zt")?))) * &mono(uns.clone())) * &qp;
    let r6_idx = lookup(&rels, "R6")?;
    debug_assert_eq!(rels.get(r6_idx).map(|r| r.poly.clone()), Some(r6()));
    let mut d0 = RDecomposition::new(&f * &g);
    let left = &qp * &mono(un.clone());
    let right = &mono(uns.clone()) * &qp;
    for (u, cu) in left.terms() {
        for (v, cv) in right.terms() {
            d0.push(cu * cv, u.clone(), r6_idx, false, v.clone());
        }
    }

    // g - 2Q: rewrite U^n J Xt Zt Xt Zt U^-n Q down to Q
    let dg = {
        let (u, ub) = (&moves.u, &moves.ubar);
        let mut start = Vec::new();
        start.extend(u.repeat(nn));
        start.extend(facs(&["J"]));
        start.extend(ub.repeat(nn));
        for y in ["Xt", "Zt", "Xt", "Zt"] {
            start.extend(u.repeat(nn));
            start.extend(facs(&[y]));
            start.extend(ub.repeat(nn));
        }
        start.push(Fac::Q);
        let mut ch = Chain::new(start);
        // conjugates of Xt and Zt, right to left so positions stay valid
        let block = 2 * nn * u.len() + 1;
        let j_block = block;
        for (k, on_x) in [(3usize, false), (2, true), (1, false), (0, true)] {
            moves.conj_push(&mut ch, j_block + k * block, nn, on_x)?;
        }
        for j in (0..nn).rev() {
            ch.apply(j * u.len(), &moves.uj)?;
        }
        ch.cancel();
        // Q leftwards through the four conjugates
        let mut qpos = ch.rfind(Fac::Q).ok_or_else(|| DecompError::Rewrite("no Q".into()))?;
        for on_x in [false, true, false, true] {
            qpos = moves.q_absorb_left(&mut ch, qpos, nn, on_x)?;
        }
        ch.apply(qpos - 1, &moves.qj.reversed())?;
        // Q J X Z X Z with the group relator J~ [X_mn, Z_mn]
        let word = Word(
            ch.cur[1..]
                .iter()
                .map(|f| match f {
                    Fac::L(g) => Ok(*g),
                    _ => Err(DecompError::Rewrite("unexpected projection".into())),
                })
                .collect::<Result<Vec<_>, _>>()?,
        );
        let rel = rels
            .find_relator(&word)
            .ok_or_else(|| DecompError::MissingRelation(format!("relator {}", quotient_word(&word))))?;
        let len = ch.cur.len();
        let mv = Move { lhs: ch.cur[1..len].to_vec(), rhs: vec![], kappa: BigRational::one(), rel, star: false };
        ch.apply(1, &mv)?;
        if ch.cur != vec![Fac::Q] {
            return Err(DecompError::Rewrite("chain for g did not end at Q".into()));
        }
        RDecomposition { target: &g - &qp.scale(&int(2)), entries: ch.entries }
    };

    // fQ - target: Q X~_n M X~_n Q -> X~_n Q M Q X~_n with M = U^n P U^-n
    let df = {
        let (u, ub) = (&moves.u, &moves.ubar);
        let conj_x = concat(&[&u.repeat(nn), &facs(&["Xt"]), &ub.repeat(nn)]);
        let mid = concat(&[&u.repeat(nn), &[Fac::P], &ub.repeat(nn)]);
        let start = concat(&[&[Fac::Q], &conj_x, &mid, &conj_x, &[Fac::Q]]);
        let mut ch = Chain::new(start);
        let (ls, lsb) = (moves.s.len(), moves.sbar.len());
        // left Q moves right
        moves.conj_push(&mut ch, 1, nn, true)?;
        let mut q = 0;
        for _ in 0..nn {
            ch.apply(q, &moves.qs)?;
            q += ls;
        }
        ch.apply(q, &moves.qx)?;
        q += 1;
        for _ in 0..nn {
            ch.apply(q, &moves.qs_bar)?;
            q += lsb;
        }
        moves.conj_pull(&mut ch, 0, nn, true)?;
        // right Q moves left
        let last = ch.cur.len() - 1 - conj_x.len();
        moves.conj_push(&mut ch, last, nn, true)?;
        let mut q = ch.cur.len() - 1;
        for _ in 0..nn {
            q -= lsb;
            ch.apply(q, &moves.qs_bar.reversed())?;
        }
        q -= 1;
        ch.apply(q, &moves.qx.reversed())?;
        for _ in 0..nn {
            q -= ls;
            ch.apply(q, &moves.qs.reversed())?;
        }
        moves.conj_pull(&mut ch, last + 1, nn, true)?;
        let goal = concat(&[&conj_x, &[Fac::Q], &mid, &[Fac::Q], &conj_x]);
        if ch.cur != goal {
            return Err(DecompError::Rewrite("chain for fQ did not reach the target".into()));
        }
        RDecomposition { target: &(&f * &qp) - &key_target(nn), entries: ch.entries }
    };

    let h = rat(1, 2);
    let total = d0.clone().scale(&h).compose(&dg.lmul(&f).scale(&-h.clone())).compose(&df.scale(&-BigRational::one()));
    let decomposition = RDecomposition { target: key_target(nn), entries: total.entries };
    Ok(KeyDecomposition { m, n, relations: rels, decomposition, fg: d0 })
}

impl fmt::Display for DecompositionSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "size {} (coefficient sum {}, {} entries)", self.value, self.coefficient_sum, self.contributions.len())
    }
}
