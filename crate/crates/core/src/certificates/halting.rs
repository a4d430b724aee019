//! The explicit representation of the relation algebra at a halting input
//! `m` with halting time `n`: operators on `2(n+1)` copies of the group
//! algebra, with the normalized trace tensored with the canonical trace.
//!
//! Coordinates are `(b, k)` with `b` in `{0, 1}` and `k` mod `n + 1`.
//! `U = U1 U2` shifts `k` up in block 0 and down in block 1; `Xt`, `Zt`
//! act at `(0, k)` by `X[m,-k]`, `Z[m,-k]` and at `(1, k)` by `X[m,k]`,
//! `Z[m,k]`; `Q` projects onto `k = 0`; `P` acts by
//! `P_i = (1 - J)/2 prod_(j >= i) (1 - Z[m,j])/2`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::compiler::{compile_alpha, compile_beta, ptilde, ConfigError, ReductionConfig, RelationSet};
use crate::gs::extended::{inverse_tokens, involutive_letter, is_trivial_extended, reduce_key, GroupAlgebra};
use crate::gs::{conjugated_letter, GTok, Stable};
use crate::ks::KSym;
use crate::machines::{HaltingOracle, MachineError};
use crate::presentations::PresentationProvider;
use crate::words::{int, omega, rat, Generator, StarPolynomial, TensorPolynomial, Word};

#[derive(Debug, Error)]
pub enum HaltingError {
    #[error("input {m} does not halt within {budget} steps")]
    NotHalting { m: i64, budget: u64 },
    #[error("letter `{0}` has no image")]
    Letter(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn accumulate(map: &mut HashMap<Vec<GTok>, BigRational>, k: Vec<GTok>, c: BigRational) {
    use std::collections::hash_map::Entry;
    match map.entry(k) {
        Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
        Entry::Vacant(e) => {
            if !c.is_zero() {
                e.insert(c);
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Piece {
    Elem(Vec<GTok>),
    Alg(usize),
}

#[derive(Debug)]
pub struct BlockRep {
    pub m: i64,
    pub n: u64,
    oracle: HaltingOracle,
    h_letters: BTreeMap<String, GroupAlgebra>,
    x: Vec<GroupAlgebra>,
    z: Vec<GroupAlgebra>,
    p: Vec<GroupAlgebra>,
    op: Vec<GroupAlgebra>,
    h_keys: BTreeMap<String, Vec<GTok>>,
    x_keys: Vec<Vec<GTok>>,
    z_keys: Vec<Vec<GTok>>,
    cache: Mutex<HashMap<Word, BigRational>>,
}

fn key_of(toks: &[GTok], oracle: &HaltingOracle) -> Result<GroupAlgebra, MachineError> {
    Ok(GroupAlgebra::element(reduce_key(toks, oracle)?))
}

fn conj_elem(shift: Stable, base: KSym, m: i64, i: i64, oracle: &HaltingOracle) -> Result<GroupAlgebra, MachineError> {
    let toks: Vec<GTok> = conjugated_letter(shift, base, m, i, false).0.into_iter().map(|(t, _)| t).collect();
    key_of(&toks, oracle)
}

/// `(1 - g)/2`.
fn half_minus(g: &GroupAlgebra) -> GroupAlgebra {
    GroupAlgebra::one().scale(&rat(1, 2)).add(&g.scale(&rat(-1, 2)))
}

impl BlockRep {
    pub fn new(oracle: &HaltingOracle, m: i64) -> Result<Self, HaltingError> {
        let n = oracle.halting_time(m).ok_or(HaltingError::NotHalting { m, budget: oracle.budget() })?;
        let mut h_letters = BTreeMap::new();
        for name in crate::compiler::H_LETTERS {
            let toks = involutive_letter(name).ok_or_else(|| HaltingError::Letter(name.into()))?;
            h_letters.insert(name.to_string(), key_of(&toks, oracle)?);
        }
        let x: Vec<GroupAlgebra> = (0..=n as i64)
            .map(|i| conj_elem(Stable::S, KSym::X(0, 0), m, i, oracle))
            .collect::<Result<_, _>>()?;
        let z: Vec<GroupAlgebra> = (0..=n as i64)
            .map(|i| conj_elem(Stable::T, KSym::Z(0, 0), m, i, oracle))
            .collect::<Result<_, _>>()?;
        let j_half = half_minus(&h_letters["J"]);
        let mut p = vec![GroupAlgebra::zero(); n as usize + 1];
        p[n as usize] = j_half;
        for i in (0..n as usize).rev() {
            p[i] = half_minus(&z[i]).mul(&p[i + 1], oracle)?;
        }
        let op = p.iter().map(|pi| GroupAlgebra::one().add(&pi.scale(&int(-2)))).collect();
        let single = |g: &GroupAlgebra| g.terms.keys().next().cloned().unwrap_or_default();
        let h_keys = h_letters.iter().map(|(k, g)| (k.clone(), single(g))).collect();
        let x_keys = x.iter().map(single).collect();
        let z_keys = z.iter().map(single).collect();
        Ok(BlockRep {
            m,
            n,
            oracle: oracle.clone(),
            h_letters,
            x,
            z,
            p,
            op,
            h_keys,
            x_keys,
            z_keys,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn oracle(&self) -> &HaltingOracle {
        &self.oracle
    }

    /// `2(n + 1)`.
    pub fn dim(&self) -> usize {
        2 * (self.n as usize + 1)
    }

    fn period(&self) -> usize {
        self.n as usize + 1
    }

    fn split(&self, row: usize) -> (usize, usize) {
        (row / self.period(), row % self.period())
    }

    fn join(&self, b: usize, k: usize) -> usize {
        b * self.period() + k
    }

    /// Index `i` with `(b, k)` carrying `X[m,i]`.
    fn site(&self, row: usize) -> usize {
        let (b, k) = self.split(row);
        if b == 0 {
            (self.period() - k) % self.period()
        } else {
            k
        }
    }

    /// The `P_i`.
    pub fn p_blocks(&self) -> &[GroupAlgebra] {
        &self.p
    }

    /// Image of the basis vector `row` scaled on the left by `c` under one
    /// letter: the new row and coefficient.
    fn step(&self, g: &Generator, row: usize, c: &GroupAlgebra) -> Result<(usize, GroupAlgebra), HaltingError> {
        let name = g.name.as_str();
        let per = self.period();
        let lmul = |a: &GroupAlgebra| a.mul(c, &self.oracle);
        Ok(match name {
            "U1" => {
                let (b, k) = self.split(row);
                if b == 1 {
                    (self.join(0, (k + 1) % per), c.clone())
                } else {
                    (self.join(1, (k + per - 1) % per), c.clone())
                }
            }
            "U2" => {
                let (b, k) = self.split(row);
                (self.join(1 - b, k), c.clone())
            }
            "Xt" => (row, lmul(&self.x[self.site(row)])?),
            "Zt" => (row, lmul(&self.z[self.site(row)])?),
            "OQ" => {
                let (_, k) = self.split(row);
                (row, if k == 0 { c.scale(&-BigRational::one()) } else { c.clone() })
            }
            "OP" => (row, lmul(&self.op[self.site(row)])?),
            _ => match self.h_letters.get(name) {
                Some(a) => (row, lmul(a)?),
                None => return Err(HaltingError::Letter(name.into())),
            },
        })
    }

    /// `pi(w) e_col = c e_row`.
    pub fn column(&self, w: &Word, col: usize) -> Result<(usize, GroupAlgebra), HaltingError> {
        let mut row = col;
        let mut c = GroupAlgebra::one();
        for g in w.letters().iter().rev() {
            let (r, nc) = self.step(g, row, &c)?;
            row = r;
            c = nc;
        }
        Ok((row, c))
    }

    /// Path of `pi(w)` from `col`: the end row, a sign and the coefficient
    /// as an unexpanded product of group elements and `OP` blocks.
    fn path(&self, w: &Word, col: usize) -> Result<(usize, bool, Vec<Piece>), HaltingError> {
        let mut row = col;
        let mut neg = false;
        let mut rev: Vec<Piece> = Vec::new();
        let per = self.period();
        for g in w.letters().iter().rev() {
            let (b, k) = self.split(row);
            let elem = match g.name.as_str() {
                "U1" => {
                    row = if b == 1 { self.join(0, (k + 1) % per) } else { self.join(1, (k + per - 1) % per) };
                    None
                }
                "U2" => {
                    row = self.join(1 - b, k);
                    None
                }
                "Xt" => Some(&self.x_keys[self.site(row)]),
                "Zt" => Some(&self.z_keys[self.site(row)]),
                "OQ" => {
                    neg ^= k == 0;
                    None
                }
                "OP" => {
                    rev.push(Piece::Alg(self.site(row)));
                    None
                }
                name => Some(self.h_keys.get(name).ok_or_else(|| HaltingError::Letter(name.into()))?),
            };
            if let Some(toks) = elem {
                match rev.last_mut() {
                    Some(Piece::Elem(t)) => t.extend(toks.iter().rev()),
                    _ => rev.push(Piece::Elem(toks.iter().rev().copied().collect())),
                }
            }
        }
        // pieces were collected right to left with reversed token order
        let pieces = rev
            .into_iter()
            .rev()
            .map(|p| match p {
                Piece::Elem(t) => Piece::Elem(t.into_iter().rev().collect()),
                a => a,
            })
            .collect();
        Ok((row, neg, pieces))
    }

    /// Canonical trace of a product of pieces.  The trace is cyclic, so the
    /// product is rotated to start at an `OP` block; the remaining blocks
    /// are expanded and the first one is read off at the inverse.
    fn tau0_pieces(&self, pieces: &[Piece]) -> Result<BigRational, HaltingError> {
        let first = match pieces.iter().position(|p| matches!(p, Piece::Alg(_))) {
            None => {
                let toks: Vec<GTok> = pieces
                    .iter()
                    .flat_map(|p| match p {
                        Piece::Elem(t) => t.clone(),
                        Piece::Alg(_) => Vec::new(),
                    })
                    .collect();
                return Ok(if is_trivial_extended(&toks, &self.oracle)? { BigRational::one() } else { BigRational::zero() });
            }
            Some(i) => i,
        };
        let rotated: Vec<&Piece> = pieces[first..].iter().chain(pieces[..first].iter()).collect();
        let head = match rotated[0] {
            Piece::Alg(i) => &self.op[*i],
            Piece::Elem(_) => unreachable!(),
        };
        // partial sums keyed by reduced element; pending tokens are appended
        // lazily and reduced only when an `OP` block is multiplied in
        let mut partial: HashMap<Vec<GTok>, BigRational> = HashMap::new();
        partial.insert(Vec::new(), BigRational::one());
        let mut pending: Vec<GTok> = Vec::new();
        for p in &rotated[1..] {
            match p {
                Piece::Elem(t) => pending.extend_from_slice(t),
                Piece::Alg(i) => {
                    let mut base: HashMap<Vec<GTok>, BigRational> = HashMap::new();
                    for (toks, c) in partial {
                        let mut t = toks;
                        t.extend_from_slice(&pending);
                        accumulate(&mut base, reduce_key(&t, &self.oracle)?, c);
                    }
                    pending.clear();
                    // OP = 1 - 2 prod (1 - g)/2 over the kernel factors of the site
                    let mut proj = base.clone();
                    for g in self.p_factors(*i) {
                        let mut next = HashMap::new();
                        for (toks, c) in proj {
                            let mut t = toks.clone();
                            t.extend_from_slice(g);
                            accumulate(&mut next, reduce_key(&t, &self.oracle)?, -(&c / int(2)));
                            accumulate(&mut next, toks, c / int(2));
                        }
                        proj = next;
                    }
                    partial = base;
                    for (k, c) in proj {
                        accumulate(&mut partial, k, c * int(-2));
                    }
                }
            }
        }
        if !pending.is_empty() {
            partial = partial
                .into_iter()
                .map(|(mut t, c)| {
                    t.extend_from_slice(&pending);
                    (t, c)
                })
                .collect();
        }
        let mut acc = BigRational::zero();
        for (toks, c) in partial {
            let inv = reduce_key(&inverse_tokens(&toks), &self.oracle)?;
            if let Some(d) = head.terms.get(&inv) {
                acc += c * d;
            }
        }
        Ok(acc)
    }

    /// Kernel letters whose half-projections multiply to `P_i`.
    fn p_factors(&self, i: usize) -> impl Iterator<Item = &Vec<GTok>> {
        self.z_keys[i..self.n as usize].iter().chain(std::iter::once(&self.h_keys["J"]))
    }

    /// Same value as [`Self::trace_word`], computed by multiplying the
    /// coefficients out in the group algebra along each column.
    pub fn trace_word_expanded(&self, w: &Word) -> Result<BigRational, HaltingError> {
        let mut acc = BigRational::zero();
        for col in 0..self.dim() {
            let (row, c) = self.column(w, col)?;
            if row == col {
                acc += c.trace();
            }
        }
        Ok(acc / int(self.dim() as i64))
    }

    /// Normalized trace of `pi(w)` followed by the canonical trace.
    pub fn trace_word(&self, w: &Word) -> Result<BigRational, HaltingError> {
        if let Some(v) = self.cache.lock().expect("trace cache").get(w) {
            return Ok(v.clone());
        }
        let mut acc = BigRational::zero();
        for col in 0..self.dim() {
            let (row, neg, pieces) = self.path(w, col)?;
            if row == col {
                let t = self.tau0_pieces(&pieces)?;
                acc += if neg { -t } else { t };
            }
        }
        let v = acc / int(self.dim() as i64);
        self.cache.lock().expect("trace cache").insert(w.clone(), v.clone());
        Ok(v)
    }

    pub fn trace(&self, p: &StarPolynomial) -> Result<BigRational, HaltingError> {
        let mut acc = BigRational::zero();
        for (w, c) in p.terms() {
            acc += c * self.trace_word(w)?;
        }
        Ok(acc)
    }

    /// Columns of `pi(p)` as sparse maps from row to entry, canonicalized.
    pub fn image(&self, p: &StarPolynomial) -> Result<Vec<BTreeMap<usize, GroupAlgebra>>, HaltingError> {
        let mut cols = vec![BTreeMap::<usize, GroupAlgebra>::new(); self.dim()];
        for (col, out) in cols.iter_mut().enumerate() {
            for (w, c) in p.terms() {
                let (row, e) = self.column(w, col)?;
                let slot = out.entry(row).or_insert_with(GroupAlgebra::zero);
                *slot = slot.add(&e.scale(c));
            }
            let keys: Vec<usize> = out.keys().copied().collect();
            for k in keys {
                let e = out[&k].canonicalize(&self.oracle)?;
                if e.is_syntactically_zero() {
                    out.remove(&k);
                } else {
                    out.insert(k, e);
                }
            }
        }
        Ok(cols)
    }

    /// Whether `pi(p) = 0`.
    pub fn annihilates(&self, p: &StarPolynomial) -> Result<bool, HaltingError> {
        Ok(self.image(p)?.iter().all(BTreeMap::is_empty))
    }

    /// Labels of relations not sent to zero.
    pub fn failing_relations(&self, rels: &RelationSet) -> Result<Vec<String>, HaltingError> {
        let mut bad = Vec::new();
        for r in rels.iter() {
            if !self.annihilates(&r.poly)? {
                bad.push(r.label.clone());
            }
        }
        Ok(bad)
    }

    /// `phi(a (x) b) = tau(a omega(b))`.
    pub fn sync_trace(&self, t: &TensorPolynomial) -> Result<BigRational, HaltingError> {
        let mut acc = BigRational::zero();
        for ((a, b), c) in t.terms() {
            let rb = omega(&StarPolynomial::monomial(b.clone()));
            for (wb, cb) in rb.terms() {
                acc += c * cb * self.trace_word(&a.concat(wb))?;
            }
        }
        Ok(acc)
    }
}

/// `1 / (2^(n+1) (n+1))`.
pub fn expected_pq_trace(n: u64) -> BigRational {
    BigRational::one() / (num_traits::pow(int(2), n as usize + 1) * int(n as i64 + 1))
}

pub fn pq_trace(rep: &BlockRep) -> Result<BigRational, HaltingError> {
    rep.trace(&(&crate::compiler::p_proj() * &crate::compiler::q_proj()))
}

/// Evaluation of a compiled reduction at a halting input.
#[derive(Clone, Debug)]
pub struct HaltingEvaluation {
    pub m: i64,
    pub n: u64,
    pub value: BigRational,
    /// `tau(P~_0* P~_0)`.
    pub p0_square: BigRational,
    pub weight: BigRational,
    /// Label and trace of each square term.
    pub squares: Vec<(String, BigRational)>,
    /// Relations not annihilated by the representation.
    pub failing: Vec<String>,
}

impl HaltingEvaluation {
    pub fn squares_vanish(&self) -> bool {
        self.failing.is_empty() && self.squares.iter().all(|(_, v)| v.is_zero())
    }
}

/// `tau(alpha(m))` in the halting representation.
pub fn eval_state_alpha(
    oracle: &HaltingOracle,
    m: i64,
    config: &ReductionConfig,
    provider: &dyn PresentationProvider,
) -> Result<HaltingEvaluation, HaltingError> {
    let rep = BlockRep::new(oracle, m)?;
    let alpha = compile_alpha(m, config, provider)?;
    let mut squares = Vec::new();
    for r in alpha.squares.iter() {
        squares.push((r.label.clone(), rep.trace(&(&r.poly.star() * &r.poly))?));
    }
    let failing = rep.failing_relations(&alpha.squares)?;
    let p0 = ptilde(0);
    let p0_square = rep.trace(&(&p0.star() * &p0))?;
    let value = rep.trace(&alpha.poly)?;
    Ok(HaltingEvaluation { m, n: rep.n, value, p0_square, weight: alpha.weight, squares, failing })
}

/// `phi(beta(m))` for the synchronous extension `phi(a (x) b) = tau(a omega(b))`.
pub fn eval_sync_state_beta(
    oracle: &HaltingOracle,
    m: i64,
    config: &ReductionConfig,
    provider: &dyn PresentationProvider,
) -> Result<(HaltingEvaluation, Vec<(String, BigRational)>), HaltingError> {
    let rep = BlockRep::new(oracle, m)?;
    let beta = compile_beta(m, config, provider)?;
    let mut squares = Vec::new();
    for r in beta.squares.iter() {
        let sq = TensorPolynomial::left(&(&r.poly.star() * &r.poly));
        squares.push((r.label.clone(), rep.sync_trace(&sq)?));
    }
    let mut sync = Vec::new();
    for g in crate::compiler::alphabet() {
        sync.push((g.to_string(), rep.sync_trace(&crate::compiler::sync_square(g))?));
    }
    let failing = rep.failing_relations(&beta.squares)?;
    let p0 = ptilde(0);
    let p0_square = rep.trace(&(&p0.star() * &p0))?;
    let value = rep.sync_trace(&beta.poly)?;
    Ok((HaltingEvaluation { m, n: rep.n, value, p0_square, weight: beta.weight, squares, failing }, sync))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::relations_rm;
    use crate::machines::TuringMachine;
    use crate::presentations::TruncatedGsProvider;

    fn oracle(n: u64) -> HaltingOracle {
        HaltingOracle::new(TuringMachine::halting_after(n), 64)
    }

    #[test]
    fn pq_trace_small() {
        for n in 1..4 {
            let rep = BlockRep::new(&oracle(n), 1).unwrap();
            assert_eq!(pq_trace(&rep).unwrap(), expected_pq_trace(n));
        }
        assert_eq!(expected_pq_trace(1), rat(1, 8));
    }

    #[test]
    fn relations_vanish() {
        let o = oracle(2);
        let provider = TruncatedGsProvider::new(o.clone());
        let rep = BlockRep::new(&o, 1).unwrap();
        let rels = relations_rm(1, &provider.provide(1, 1));
        assert_eq!(rep.failing_relations(&rels).unwrap(), Vec::<String>::new());
    }

    #[test]
    fn non_halting_is_refused() {
        let o = HaltingOracle::new(TuringMachine::never_halting(), 32);
        assert!(matches!(BlockRep::new(&o, 1), Err(HaltingError::NotHalting { .. })));
    }

    #[test]
    fn key_relation_fails_at_the_halting_step() {
        // the last step of the chain is the one the representation violates
        let o = oracle(2);
        let rep = BlockRep::new(&o, 1).unwrap();
        let target = crate::decomp::key_target(2);
        assert!(!rep.annihilates(&target).unwrap());
        assert!(rep.annihilates(&crate::decomp::key_target(0)).unwrap());
    }

    #[test]
    fn factored_trace_matches_expanded() {
        let cfg = crate::compiler::ReductionConfig::default();
        for n in 1..3 {
            let o = oracle(n);
            let provider = TruncatedGsProvider::new(o.clone());
            let rep = BlockRep::new(&o, 1).unwrap();
            let alpha = crate::compiler::compile_alpha(1, &cfg, &provider).unwrap();
            for (w, _) in alpha.poly.terms() {
                assert_eq!(rep.trace_word(w).unwrap(), rep.trace_word_expanded(w).unwrap(), "{w}");
            }
        }
    }
}
