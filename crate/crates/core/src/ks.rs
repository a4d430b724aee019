//! The kernel group generated by `J`, `x[m,i]`, `z[m,i]`.
//!
//! Every generator is an involution and `J` is central.  Within one first
//! index `m`, letters with different second index commute and `x[m,i]`,
//! `z[m,i]` commute up to `J`, except at `i = -1` where they commute
//! outright.  Different `m` form a free product amalgamated over `J`.
//! Indices must be representatives for the machine input `m`.  [`eta`]
//! computes the unique normal form: `J^c` times alternating blocks of sorted
//! `x^a z^b` factors.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::machines::{HaltingOracle, MachineError};
use crate::words::{Generator, ParseError, Word};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KsError {
    #[error("index {i} is not a representative for input {m} (representative {rep})")]
    NonRepresentative { m: i64, i: i64, rep: i64 },
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum KSym {
    J,
    X(i64, i64),
    Z(i64, i64),
}

impl KSym {
    pub fn block(&self) -> Option<i64> {
        match *self {
            KSym::J => None,
            KSym::X(m, _) | KSym::Z(m, _) => Some(m),
        }
    }

    pub fn indices(&self) -> Option<(i64, i64)> {
        match *self {
            KSym::J => None,
            KSym::X(m, i) | KSym::Z(m, i) => Some((m, i)),
        }
    }

    pub fn to_generator(self, inverse: bool) -> Generator {
        let g = match self {
            KSym::J => Generator::plain("J"),
            KSym::X(m, i) => Generator::indexed("x", m, i),
            KSym::Z(m, i) => Generator::indexed("z", m, i),
        };
        if inverse {
            g.star()
        } else {
            g
        }
    }

    pub fn from_generator(g: &Generator) -> Option<KSym> {
        match (g.name.as_str(), g.indices) {
            ("J", None) => Some(KSym::J),
            ("x", Some((m, i))) => Some(KSym::X(m, i)),
            ("z", Some((m, i))) => Some(KSym::Z(m, i)),
            _ => None,
        }
    }
}

/// A letter of a kernel word; inverses only matter for metrics.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct KLetter {
    pub sym: KSym,
    pub inverse: bool,
}

impl KLetter {
    pub fn new(sym: KSym) -> Self {
        KLetter { sym, inverse: false }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct KWord(pub Vec<KLetter>);

impl KWord {
    pub fn from_word(w: &Word) -> Result<KWord, ParseError> {
        w.letters()
            .iter()
            .enumerate()
            .map(|(k, g)| {
                KSym::from_generator(g)
                    .map(|sym| KLetter { sym, inverse: g.starred })
                    .ok_or_else(|| ParseError::new(k, format!("`{g}` is not a kernel letter")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(KWord)
    }

    pub fn parse(s: &str) -> Result<KWord, ParseError> {
        KWord::from_word(&Word::parse(s)?)
    }

    pub fn to_word(&self) -> Word {
        Word(self.0.iter().map(|l| l.sym.to_generator(l.inverse)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> KWord {
        KWord(self.0.iter().rev().map(|l| KLetter { sym: l.sym, inverse: !l.inverse }).collect())
    }

    pub fn concat(&self, other: &KWord) -> KWord {
        KWord(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn metrics(&self) -> WordMetrics {
        let letters: Vec<(u8, Option<(i64, i64)>)> = self
            .0
            .iter()
            .map(|l| {
                let base = match l.sym {
                    KSym::J => 0,
                    KSym::X(..) => 2,
                    KSym::Z(..) => 4,
                };
                (base + l.inverse as u8, l.sym.indices())
            })
            .collect();
        WordMetrics::of_tagged(&letters)
    }
}

impl fmt::Display for KWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_word())
    }
}

/// One factor `x[m,i]^a z[m,i]^b` of a block.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct KEntry {
    pub i: i64,
    pub x: bool,
    pub z: bool,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct KBlock {
    pub m: i64,
    pub entries: Vec<KEntry>,
}

/// `J^c` followed by blocks with pairwise distinct neighbouring `m`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct KNormalForm {
    pub c: bool,
    pub blocks: Vec<KBlock>,
}

impl KNormalForm {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        !self.c && self.blocks.is_empty()
    }

    /// Letters of the normal form, `J` first.
    pub fn letters(&self) -> Vec<KSym> {
        let mut out = Vec::new();
        if self.c {
            out.push(KSym::J);
        }
        out.extend(self.body_letters());
        out
    }

    /// Letters without the `J` part.
    pub fn body_letters(&self) -> Vec<KSym> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for e in &b.entries {
                if e.x {
                    out.push(KSym::X(b.m, e.i));
                }
                if e.z {
                    out.push(KSym::Z(b.m, e.i));
                }
            }
        }
        out
    }

    pub fn to_kword(&self) -> KWord {
        KWord(self.letters().into_iter().map(KLetter::new).collect())
    }

    pub fn body_kword(&self) -> KWord {
        KWord(self.body_letters().into_iter().map(KLetter::new).collect())
    }

    pub fn len(&self) -> usize {
        self.c as usize + self.blocks.iter().flat_map(|b| &b.entries).map(|e| e.x as usize + e.z as usize).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn max_index(&self) -> u64 {
        self.blocks.iter().flat_map(|b| &b.entries).map(|e| e.i.unsigned_abs()).max().unwrap_or(0)
    }

    /// Product of two normal forms.
    pub fn mul(&self, other: &KNormalForm) -> KNormalForm {
        let mut letters = self.letters();
        letters.extend(other.letters());
        eta_syms(&letters)
    }

    /// Inverse: the same letters reversed, renormalized.
    pub fn inverse(&self) -> KNormalForm {
        let mut letters = self.letters();
        letters.reverse();
        eta_syms(&letters)
    }

    /// Every letter is `J` or an `x`.
    pub fn in_x_subgroup(&self) -> bool {
        self.blocks.iter().flat_map(|b| &b.entries).all(|e| !e.z)
    }

    pub fn in_z_subgroup(&self) -> bool {
        self.blocks.iter().flat_map(|b| &b.entries).all(|e| !e.x)
    }

    /// Every letter is `J` or has second index zero.
    pub fn in_zero_subgroup(&self) -> bool {
        self.blocks.iter().flat_map(|b| &b.entries).all(|e| e.i == 0)
    }
}

impl fmt::Display for KNormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_kword())
    }
}

/// Length, bit length under the fixed-width encoding, and largest `|i|`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct WordMetrics {
    pub length: usize,
    pub bit_length: u64,
    pub max_index: u64,
}

/// Width of a letter tag.
pub const TAG_BITS: u64 = 4;

/// Bits used to write one index: sign, each magnitude bit prefixed by `1`,
/// then a terminating `0`.
pub fn index_bits(v: i64) -> u64 {
    let mag = v.unsigned_abs();
    let digits = if mag == 0 { 1 } else { 64 - mag.leading_zeros() as u64 };
    1 + 2 * digits + 1
}

/// Explicit bit string for a tagged word; the metrics count its length.
pub fn encode_bits(letters: &[(u8, Option<(i64, i64)>)]) -> Vec<bool> {
    let mut out = Vec::new();
    for &(tag, idx) in letters {
        for k in (0..TAG_BITS).rev() {
            out.push((tag >> k) & 1 == 1);
        }
        if let Some((m, i)) = idx {
            for v in [m, i] {
                out.push(v < 0);
                let mag = v.unsigned_abs();
                let digits = if mag == 0 { 1 } else { 64 - mag.leading_zeros() };
                for k in (0..digits).rev() {
                    out.push(true);
                    out.push((mag >> k) & 1 == 1);
                }
                out.push(false);
            }
        }
    }
    out
}

impl WordMetrics {
    pub(crate) fn of_tagged(letters: &[(u8, Option<(i64, i64)>)]) -> WordMetrics {
        let mut bits = 0;
        let mut max_index = 0;
        for &(_, idx) in letters {
            bits += TAG_BITS;
            if let Some((m, i)) = idx {
                bits += index_bits(m) + index_bits(i);
                max_index = max_index.max(i.unsigned_abs());
            }
        }
        WordMetrics { length: letters.len(), bit_length: bits, max_index }
    }
}

/// Normal form of a run of letters sharing one first index.
fn normalize_block(syms: &[KSym]) -> (bool, Vec<KEntry>) {
    // per second index: letter sequence as x=false, z=true
    let mut per_i: BTreeMap<i64, (u32, u32, u32)> = BTreeMap::new();
    for s in syms {
        let (i, is_z) = match *s {
            KSym::X(_, i) => (i, false),
            KSym::Z(_, i) => (i, true),
            KSym::J => unreachable!("J is pulled out before blocking"),
        };
        let e = per_i.entry(i).or_insert((0, 0, 0));
        if is_z {
            e.1 += 1;
        } else {
            // every earlier z must pass this x
            e.2 += e.1;
            e.0 += 1;
        }
    }
    let mut c = false;
    let mut entries = Vec::new();
    for (i, (nx, nz, swaps)) in per_i {
        if i != -1 && swaps % 2 == 1 {
            c = !c;
        }
        let e = KEntry { i, x: nx % 2 == 1, z: nz % 2 == 1 };
        if e.x || e.z {
            entries.push(e);
        }
    }
    (c, entries)
}

/// Normal form of a symbol sequence, assuming representative indices.
pub fn eta_syms(syms: &[KSym]) -> KNormalForm {
    let mut c = false;
    let mut stack: Vec<(i64, Vec<KSym>, Vec<KEntry>)> = Vec::new();
    let mut run: Vec<KSym> = Vec::new();
    let mut run_m: Option<i64> = None;
    let push_run = |stack: &mut Vec<(i64, Vec<KSym>, Vec<KEntry>)>, c: &mut bool, m: i64, run: Vec<KSym>| {
        let (dc, entries) = normalize_block(&run);
        *c ^= dc;
        if entries.is_empty() {
            return;
        }
        let mut syms = block_syms(m, &entries);
        let mut entries = entries;
        while let Some((top_m, top_syms, _)) = stack.last() {
            if *top_m != m {
                break;
            }
            let mut merged = top_syms.clone();
            merged.extend(syms.iter().copied());
            stack.pop();
            let (dc2, e2) = normalize_block(&merged);
            *c ^= dc2;
            entries = e2;
            syms = block_syms(m, &entries);
            if entries.is_empty() {
                return;
            }
        }
        stack.push((m, syms, entries));
    };
    for s in syms {
        match s.block() {
            None => c = !c,
            Some(m) => {
                if run_m != Some(m) {
                    if let Some(prev) = run_m {
                        push_run(&mut stack, &mut c, prev, std::mem::take(&mut run));
                    }
                    run_m = Some(m);
                }
                run.push(*s);
            }
        }
    }
    if let Some(prev) = run_m {
        push_run(&mut stack, &mut c, prev, run);
    }
    KNormalForm { c, blocks: stack.into_iter().map(|(m, _, entries)| KBlock { m, entries }).collect() }
}

fn block_syms(m: i64, entries: &[KEntry]) -> Vec<KSym> {
    let mut out = Vec::new();
    for e in entries {
        if e.x {
            out.push(KSym::X(m, e.i));
        }
        if e.z {
            out.push(KSym::Z(m, e.i));
        }
    }
    out
}

/// Check that every index is a representative.
pub fn check_representatives(w: &KWord, oracle: &HaltingOracle) -> Result<(), KsError> {
    for l in &w.0 {
        if let Some((m, i)) = l.sym.indices() {
            let rep = oracle.representative(m, i)?;
            if rep != i {
                return Err(KsError::NonRepresentative { m, i, rep });
            }
        }
    }
    Ok(())
}

/// Normal form of a kernel word.
pub fn eta(w: &KWord, oracle: &HaltingOracle) -> Result<KNormalForm, KsError> {
    check_representatives(w, oracle)?;
    Ok(eta_syms(&w.0.iter().map(|l| l.sym).collect::<Vec<_>>()))
}

/// Normal form of a run of letters that all share the first index `m`.
pub fn eta_m(m: i64, w: &KWord, oracle: &HaltingOracle) -> Result<KNormalForm, KsError> {
    for l in &w.0 {
        if let Some(mm) = l.sym.block() {
            if mm != m {
                return Err(KsError::Parse(ParseError::new(0, format!("letter from block {mm} in a block-{m} word"))));
            }
        }
    }
    eta(w, oracle)
}

/// Image in the abelianization that kills `J`; a nonzero image certifies
/// nontriviality.
pub fn abelianize(w: &KWord) -> BTreeMap<KSym, bool> {
    let mut out: BTreeMap<KSym, bool> = BTreeMap::new();
    for l in &w.0 {
        if l.sym != KSym::J {
            let e = out.entry(l.sym).or_insert(false);
            *e = !*e;
        }
    }
    out.retain(|_, v| *v);
    out
}

pub fn word_metrics(w: &KWord) -> WordMetrics {
    w.metrics()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::TuringMachine;

    fn oracle() -> HaltingOracle {
        HaltingOracle::new(TuringMachine::never_halting(), 1000)
    }

    fn nf(s: &str) -> String {
        eta(&KWord::parse(s).unwrap(), &oracle()).unwrap().to_string()
    }

    #[test]
    fn swapping_costs_j() {
        assert_eq!(nf("z[0,0] x[0,0]"), "J x[0,0] z[0,0]");
        assert_eq!(nf("x[0,0] z[0,0] x[0,0] z[0,0]"), "J");
        assert_eq!(nf("x[0,-1] z[0,-1] x[0,-1] z[0,-1]"), "1");
        assert_eq!(nf("1"), "1");
    }

    #[test]
    fn blocks_merge_and_vanish() {
        assert_eq!(nf("x[1,0] x[2,0] x[2,0] x[1,0]"), "1");
        assert_eq!(nf("x[1,0] z[2,3] z[2,3] z[1,0]"), "x[1,0] z[1,0]");
        assert_eq!(nf("x[1,2] x[2,0] x[1,1]"), "x[1,2] x[2,0] x[1,1]");
    }

    #[test]
    fn different_indices_commute() {
        assert_eq!(nf("z[0,2] x[0,1]"), "x[0,1] z[0,2]");
        assert_eq!(nf("J x[0,1] J"), "x[0,1]");
    }

    #[test]
    fn rejects_non_representatives() {
        let o = HaltingOracle::new(TuringMachine::halting_after(3), 100);
        let e = eta(&KWord::parse("x[0,3]").unwrap(), &o).unwrap_err();
        assert_eq!(e, KsError::NonRepresentative { m: 0, i: 3, rep: -1 });
    }

    #[test]
    fn metrics_hand_counted() {
        // tag 4 + m=5 (1+2*3+1) + i=2 (1+2*2+1) per letter
        let w = KWord::parse("x[5,2] z[5,2]").unwrap();
        let m = w.metrics();
        assert_eq!(m, WordMetrics { length: 2, bit_length: 36, max_index: 2 });
    }

    #[test]
    fn encode_matches_metrics() {
        let w = KWord::parse("J x[-3,0]~ z[7,-12]").unwrap();
        let tagged: Vec<_> = w
            .0
            .iter()
            .map(|l| {
                let t = match l.sym {
                    KSym::J => 0,
                    KSym::X(..) => 2,
                    KSym::Z(..) => 4,
                };
                (t + l.inverse as u8, l.sym.indices())
            })
            .collect();
        assert_eq!(encode_bits(&tagged).len() as u64, w.metrics().bit_length);
    }
}
