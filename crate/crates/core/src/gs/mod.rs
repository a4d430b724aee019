//! Word problem for the HNN extension of the kernel group by `S`, `T`, `W`.
//!
//! `S` shifts `x[m,i]` to `x[m,i+1]`, `T` shifts `z[m,i]` likewise and `W`
//! shifts `x[m,0]`, `z[m,0]` to the next `m`.  [`is_trivial`] splits a word
//! into kernel segments and stable letters, normalizes segments with
//! [`eta_syms`](crate::ks::eta_syms) and removes pinches until none remain.
//! Index arithmetic goes through a [`HaltingOracle`] with an explicit budget.

pub mod extended;

use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::ks::{eta_syms, KLetter, KNormalForm, KSym, KWord, WordMetrics};
use crate::machines::{HaltingOracle, MachineError, TuringMachine};
use crate::words::{Generator, ParseError, StarPolynomial, Word};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GsError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Stable {
    S,
    T,
    W,
}

impl Stable {
    pub const ALL: [Stable; 3] = [Stable::S, Stable::T, Stable::W];

    pub fn name(&self) -> &'static str {
        match self {
            Stable::S => "S",
            Stable::T => "T",
            Stable::W => "W",
        }
    }

    fn from_name(s: &str) -> Option<Stable> {
        match s {
            "S" => Some(Stable::S),
            "T" => Some(Stable::T),
            "W" => Some(Stable::W),
            _ => None,
        }
    }

    /// Whether a kernel element lies in the subgroup this letter conjugates.
    pub fn admits(&self, g: &KNormalForm) -> bool {
        match self {
            Stable::S => g.in_x_subgroup(),
            Stable::T => g.in_z_subgroup(),
            Stable::W => g.in_zero_subgroup(),
        }
    }

    /// Image of a letter under conjugation by this stable letter to the power `e`.
    fn shift(&self, s: KSym, e: i64) -> KSym {
        match (self, s) {
            (_, KSym::J) => KSym::J,
            (Stable::S, KSym::X(m, i)) => KSym::X(m, i + e),
            (Stable::T, KSym::Z(m, i)) => KSym::Z(m, i + e),
            (Stable::W, KSym::X(m, i)) => KSym::X(m + e, i),
            (Stable::W, KSym::Z(m, i)) => KSym::Z(m + e, i),
            _ => unreachable!("shift applied outside the associated subgroup"),
        }
    }
}

/// Token of a group word: kernel letter, stable letter (with inverse flag),
/// or one of the extra involutions used by the extended group.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum GTok {
    K(KSym),
    St(Stable, bool),
    Inv(Stable),
}

/// A word over the stable letters and kernel letters, with inverse marks on
/// kernel letters kept for metrics.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct GWord(pub Vec<(GTok, bool)>);

impl GWord {
    /// Accepts `J S T W X Z`, macros `X[m,i]`, `Z[m,i]` and raw `x[m,i]`,
    /// `z[m,i]`; `~` marks an inverse.
    pub fn from_word(w: &Word) -> Result<GWord, ParseError> {
        let mut out = Vec::new();
        for (k, g) in w.letters().iter().enumerate() {
            let inv = g.starred;
            match (g.name.as_str(), g.indices) {
                (s @ ("S" | "T" | "W"), None) => out.push((GTok::St(Stable::from_name(s).unwrap(), inv), false)),
                ("J", None) => out.push((GTok::K(KSym::J), inv)),
                ("X", None) => out.push((GTok::K(KSym::X(0, 0)), inv)),
                ("Z", None) => out.push((GTok::K(KSym::Z(0, 0)), inv)),
                ("X", Some((m, i))) => out.extend(conjugated_letter(Stable::S, KSym::X(0, 0), m, i, inv).0),
                ("Z", Some((m, i))) => out.extend(conjugated_letter(Stable::T, KSym::Z(0, 0), m, i, inv).0),
                ("x", Some((m, i))) => out.push((GTok::K(KSym::X(m, i)), inv)),
                ("z", Some((m, i))) => out.push((GTok::K(KSym::Z(m, i)), inv)),
                _ => return Err(ParseError::new(k, format!("`{g}` is not a letter of the group"))),
            }
        }
        Ok(GWord(out))
    }

    pub fn parse(s: &str) -> Result<GWord, ParseError> {
        let w = Word::parse(s)?;
        GWord::from_word(&w).map_err(|e| {
            // map the token index back to a byte offset
            let offs: Vec<usize> = token_offsets(s);
            ParseError::new(offs.get(e.pos).copied().unwrap_or(0), e.msg)
        })
    }

    pub fn to_word(&self) -> Word {
        Word(
            self.0
                .iter()
                .map(|&(t, inv)| match t {
                    GTok::K(s) => s.to_generator(inv),
                    GTok::St(st, i) => {
                        let g = Generator::plain(st.name());
                        if i {
                            g.star()
                        } else {
                            g
                        }
                    }
                    GTok::Inv(st) => Generator::plain(&format!("s{}", st.name())),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &GWord) -> GWord {
        GWord(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn inverse(&self) -> GWord {
        GWord(
            self.0
                .iter()
                .rev()
                .map(|&(t, inv)| match t {
                    GTok::St(s, i) => (GTok::St(s, !i), false),
                    other => (other, !inv),
                })
                .collect(),
        )
    }

    pub fn metrics(&self) -> WordMetrics {
        let tagged: Vec<(u8, Option<(i64, i64)>)> = self
            .0
            .iter()
            .map(|&(t, inv)| match t {
                GTok::K(s) => {
                    let base = match s {
                        KSym::J => 0,
                        KSym::X(..) => 2,
                        KSym::Z(..) => 4,
                    };
                    (base + inv as u8, s.indices())
                }
                GTok::St(st, i) => (6 + 2 * st as u8 + i as u8, None),
                GTok::Inv(st) => (12 + st as u8, None),
            })
            .collect();
        WordMetrics::of_tagged(&tagged)
    }
}

impl fmt::Display for GWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_word())
    }
}

fn token_offsets(s: &str) -> Vec<usize> {
    let mut offs = Vec::new();
    let mut prev_ws = true;
    for (i, c) in s.char_indices() {
        if !c.is_whitespace() && prev_ws {
            offs.push(i);
        }
        prev_ws = c.is_whitespace();
    }
    offs
}

fn stable_power(st: Stable, k: i64) -> Vec<(GTok, bool)> {
    (0..k.unsigned_abs()).map(|_| (GTok::St(st, k < 0), false)).collect()
}

/// `t^i W^m base W^-m t^-i` as a word.
pub fn conjugated_letter(shift: Stable, base: KSym, m: i64, i: i64, inv: bool) -> GWord {
    let mut v = stable_power(shift, i);
    v.extend(stable_power(Stable::W, m));
    v.push((GTok::K(base), inv));
    v.extend(stable_power(Stable::W, -m));
    v.extend(stable_power(shift, -i));
    GWord(v)
}

/// Image in the free group on `S`, `T`, `W`, freely reduced.
pub fn free_retraction(w: &GWord) -> Vec<(Stable, bool)> {
    let mut out: Vec<(Stable, bool)> = Vec::new();
    for &(t, _) in &w.0 {
        if let GTok::St(s, i) = t {
            if out.last() == Some(&(s, !i)) {
                out.pop();
            } else {
                out.push((s, i));
            }
        }
    }
    out
}

/// Alternating kernel segments and stable letters, `J` collected in front.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct GReduced {
    pub parts: Vec<KNormalForm>,
    pub letters: Vec<(Stable, bool)>,
}

impl GReduced {
    pub fn is_identity(&self) -> bool {
        self.letters.is_empty() && self.parts.iter().all(KNormalForm::is_identity)
    }

    pub fn len(&self) -> usize {
        self.letters.len() + self.parts.iter().map(KNormalForm::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn max_index(&self) -> u64 {
        self.parts.iter().map(KNormalForm::max_index).max().unwrap_or(0)
    }

    pub fn kernel_part(&self) -> Option<&KNormalForm> {
        if self.letters.is_empty() {
            self.parts.first()
        } else {
            None
        }
    }

    pub fn tokens(&self) -> Vec<GTok> {
        let mut out = Vec::new();
        for (k, p) in self.parts.iter().enumerate() {
            out.extend(p.letters().into_iter().map(GTok::K));
            if let Some(&(s, i)) = self.letters.get(k) {
                out.push(GTok::St(s, i));
            }
        }
        out
    }

    pub fn to_gword(&self) -> GWord {
        GWord(self.tokens().into_iter().map(|t| (t, false)).collect())
    }
}

impl fmt::Display for GReduced {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_gword())
    }
}

/// One applied pinch `t^e g t^-e -> phi^e(g)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PinchRecord {
    pub letter: Stable,
    pub position: usize,
    pub exponent: i64,
    pub before: KNormalForm,
    pub image: KNormalForm,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Decision {
    Trivial,
    Nontrivial,
    UndecidedBudget,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Trivial => "trivial",
            Decision::Nontrivial => "nontrivial",
            Decision::UndecidedBudget => "undecided-budget",
        })
    }
}

#[derive(Clone, Debug)]
pub struct PinchReport {
    pub decision: Decision,
    pub pinches: Vec<PinchRecord>,
    /// Length of the reduced word after splitting and after each pinch.
    pub lengths: Vec<usize>,
    pub max_indices: Vec<u64>,
    pub reduced: GReduced,
}

/// Budget used when none is given: `2 (I + ceil(N/2)) + 1`.
pub fn default_budget(w: &GWord) -> u64 {
    let m = w.metrics();
    2 * (m.max_index + (m.length as u64).div_ceil(2)) + 1
}

fn canonical_sym(s: KSym, oracle: &HaltingOracle) -> Result<KSym, MachineError> {
    Ok(match s {
        KSym::J => KSym::J,
        KSym::X(m, i) => KSym::X(m, oracle.representative(m, i)?),
        KSym::Z(m, i) => KSym::Z(m, oracle.representative(m, i)?),
    })
}

/// Split into segments, normalize them and pull `J` to the front.
fn split(tokens: &[GTok], oracle: &HaltingOracle) -> Result<GReduced, MachineError> {
    let mut parts = Vec::new();
    let mut letters = Vec::new();
    let mut seg: Vec<KSym> = Vec::new();
    for t in tokens {
        match *t {
            GTok::K(s) => seg.push(canonical_sym(s, oracle)?),
            GTok::St(s, i) => {
                parts.push(eta_syms(&seg));
                seg.clear();
                letters.push((s, i));
            }
            GTok::Inv(_) => unreachable!("extra involutions are handled by the extended reducer"),
        }
    }
    parts.push(eta_syms(&seg));
    let mut r = GReduced { parts, letters };
    collect_j(&mut r);
    Ok(r)
}

fn collect_j(r: &mut GReduced) {
    let mut c = false;
    for p in r.parts.iter_mut() {
        c ^= p.c;
        p.c = false;
    }
    r.parts[0].c = c;
}

fn find_pinch(r: &GReduced) -> Option<(Stable, usize)> {
    for fam in Stable::ALL {
        for j in 0..r.letters.len().saturating_sub(1) {
            let (a, ia) = r.letters[j];
            let (b, ib) = r.letters[j + 1];
            if a == fam && b == fam && ia != ib && fam.admits(&r.parts[j + 1]) {
                return Some((fam, j));
            }
        }
    }
    None
}

/// Run the reduction loop, recording pinches.  Budget failures abort with
/// the partial record.
fn reduce_loop(
    mut r: GReduced,
    oracle: &HaltingOracle,
    record: &mut Vec<PinchRecord>,
    lengths: &mut Vec<usize>,
    max_indices: &mut Vec<u64>,
) -> Result<GReduced, (GReduced, MachineError)> {
    lengths.push(r.len());
    max_indices.push(r.max_index());
    while let Some((fam, j)) = find_pinch(&r) {
        let e: i64 = if r.letters[j].1 { -1 } else { 1 };
        let g = &r.parts[j + 1];
        let mut image = Vec::new();
        for s in g.letters() {
            match canonical_sym(fam.shift(s, e), oracle) {
                Ok(t) => image.push(t),
                Err(err) => return Err((r, err)),
            }
        }
        let image = eta_syms(&image);
        record.push(PinchRecord { letter: fam, position: j, exponent: e, before: g.clone(), image: image.clone() });
        let merged = r.parts[j].mul(&image).mul(&r.parts[j + 2]);
        r.parts.splice(j..=j + 2, [merged]);
        r.letters.drain(j..=j + 1);
        collect_j(&mut r);
        lengths.push(r.len());
        max_indices.push(r.max_index());
    }
    Ok(r)
}

/// Britton-reduced form of a token sequence without extra involutions.
pub fn britton_reduce(tokens: &[GTok], oracle: &HaltingOracle) -> Result<GReduced, MachineError> {
    let r = split(tokens, oracle)?;
    reduce_loop(r, oracle, &mut Vec::new(), &mut Vec::new(), &mut Vec::new()).map_err(|(_, e)| e)
}

/// Decide triviality with the given oracle, whose budget bounds every
/// representative computation.
pub fn is_trivial_with(w: &GWord, oracle: &HaltingOracle) -> PinchReport {
    let tokens: Vec<GTok> = w.0.iter().map(|&(t, _)| t).collect();
    let mut pinches = Vec::new();
    let mut lengths = Vec::new();
    let mut max_indices = Vec::new();
    let undecided = |reduced, pinches, lengths, max_indices| PinchReport {
        decision: Decision::UndecidedBudget,
        pinches,
        lengths,
        max_indices,
        reduced,
    };
    let r = match split(&tokens, oracle) {
        Ok(r) => r,
        Err(_) => return undecided(GReduced::default(), pinches, lengths, max_indices),
    };
    match reduce_loop(r, oracle, &mut pinches, &mut lengths, &mut max_indices) {
        Ok(r) => {
            let decision = if r.is_identity() { Decision::Trivial } else { Decision::Nontrivial };
            PinchReport { decision, pinches, lengths, max_indices, reduced: r }
        }
        Err((r, _)) => undecided(r, pinches, lengths, max_indices),
    }
}

/// Decide triviality; `budget` defaults to [`default_budget`].
pub fn is_trivial(w: &GWord, tm: &TuringMachine, budget: Option<u64>) -> PinchReport {
    let b = budget.unwrap_or_else(|| default_budget(w));
    is_trivial_with(w, &HaltingOracle::new(tm.clone(), b))
}

/// Sum of coefficients over words that are trivial in the group.
pub fn tau0(p: &StarPolynomial, oracle: &HaltingOracle) -> Result<BigRational, GsError> {
    let mut acc = BigRational::zero();
    for (w, c) in p.terms() {
        let gw = GWord::from_word(w)?;
        let rep = is_trivial_with(&gw, oracle);
        match rep.decision {
            Decision::Trivial => acc += c,
            Decision::Nontrivial => {}
            Decision::UndecidedBudget => {
                return Err(GsError::Machine(MachineError::Budget { m: 0, needed: 0, budget: oracle.budget() }))
            }
        }
    }
    Ok(acc)
}

/// `KWord` view of a kernel-only group word.
pub fn kernel_word(w: &GWord) -> Option<KWord> {
    w.0.iter()
        .map(|&(t, inv)| match t {
            GTok::K(sym) => Some(KLetter { sym, inverse: inv }),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()
        .map(KWord)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decide(s: &str, tm: &TuringMachine) -> Decision {
        is_trivial(&GWord::parse(s).unwrap(), tm, Some(200)).decision
    }

    #[test]
    fn macros_have_expected_length() {
        let w = GWord::parse("X[2,-3]").unwrap();
        assert_eq!(w.len(), 2 * 2 + 2 * 3 + 1);
    }

    #[test]
    fn conjugation_relations_hold() {
        let tm = TuringMachine::never_halting();
        assert_eq!(decide("S x[0,0] S~ x[0,1]", &tm), Decision::Trivial);
        assert_eq!(decide("W x[0,0] W~ x[1,0]", &tm), Decision::Trivial);
        assert_eq!(decide("X[1,2] x[1,2]", &tm), Decision::Trivial);
        assert_eq!(decide("S z[0,0] S~ z[0,0]", &tm), Decision::Nontrivial);
        assert_eq!(decide("S J S~ J", &tm), Decision::Trivial);
    }

    #[test]
    fn commutator_relation_depends_on_index() {
        let tm = TuringMachine::never_halting();
        assert_eq!(decide("X[0,3] Z[0,3] X[0,3]~ Z[0,3]~ J", &tm), Decision::Trivial);
        assert_eq!(decide("X[0,-1] Z[0,-1] X[0,-1]~ Z[0,-1]~", &tm), Decision::Trivial);
        assert_eq!(decide("X[0,-1] Z[0,-1] X[0,-1]~ Z[0,-1]~ J", &tm), Decision::Nontrivial);
    }

    #[test]
    fn periodicity_from_halting() {
        let tm = TuringMachine::halting_after(3);
        // X[m,4] = X[m,0] when the machine halts at step 3
        assert_eq!(decide("X[0,4] X[0,0]~", &tm), Decision::Trivial);
        assert_eq!(decide("X[0,3] X[0,0]~", &tm), Decision::Nontrivial);
        let never = TuringMachine::never_halting();
        assert_eq!(decide("X[0,4] X[0,0]~", &never), Decision::Nontrivial);
    }

    #[test]
    fn small_budget_is_undecided() {
        let w = GWord::parse("x[0,40]").unwrap();
        let rep = is_trivial(&w, &TuringMachine::never_halting(), Some(3));
        assert_eq!(rep.decision, Decision::UndecidedBudget);
    }

    #[test]
    fn free_retraction_cancels() {
        let w = GWord::parse("S x[0,0] T T~ S~ W").unwrap();
        assert_eq!(free_retraction(&w), vec![(Stable::W, false)]);
    }
}
