//! The group obtained from the HNN group by writing each stable letter as a
//! product of two involutions `s_y t_y`, and its rational group algebra.
//!
//! With `t_y = s_y y` the extra relations say `s_y y s_y = y^-1`, so the group
//! is a tree of groups around the HNN group with one infinite dihedral group
//! per stable letter.  A word reduces by Britton reduction inside the
//! segments between extra involutions, then by removing `s_y g s_y` with `g`
//! a power of `y`.  A reduced word with an extra involution left is
//! nontrivial.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{britton_reduce, free_retraction, GReduced, GTok, Stable};
use crate::ks::{eta_syms, KSym};
use crate::machines::{HaltingOracle, MachineError};
use crate::words::{ParseError, Word};

/// Tokens of one letter of the involutive alphabet
/// `J X Z sS tS sT tT sW tW`.
pub fn involutive_letter(name: &str) -> Option<Vec<GTok>> {
    let st = |c: char| match c {
        'S' => Some(Stable::S),
        'T' => Some(Stable::T),
        'W' => Some(Stable::W),
        _ => None,
    };
    Some(match name {
        "J" => vec![GTok::K(KSym::J)],
        "X" => vec![GTok::K(KSym::X(0, 0))],
        "Z" => vec![GTok::K(KSym::Z(0, 0))],
        _ => {
            let mut cs = name.chars();
            let (a, b) = (cs.next()?, cs.next()?);
            if cs.next().is_some() {
                return None;
            }
            let y = st(b)?;
            match a {
                's' => vec![GTok::Inv(y)],
                't' => vec![GTok::Inv(y), GTok::St(y, false)],
                _ => return None,
            }
        }
    })
}

/// Tokens of a word over the involutive alphabet; stars are ignored since
/// every letter is an involution.
pub fn tokens_of_word(w: &Word) -> Result<Vec<GTok>, ParseError> {
    let mut out = Vec::new();
    for (k, g) in w.letters().iter().enumerate() {
        if g.indices.is_some() {
            return Err(ParseError::new(k, format!("`{g}` is not an involutive letter")));
        }
        out.extend(
            involutive_letter(g.name.as_str())
                .ok_or_else(|| ParseError::new(k, format!("`{g}` is not an involutive letter")))?,
        );
    }
    Ok(out)
}

/// Inverse of a token sequence, not reduced.
pub fn inverse_tokens(t: &[GTok]) -> Vec<GTok> {
    t.iter()
        .rev()
        .map(|&x| match x {
            GTok::St(s, i) => GTok::St(s, !i),
            other => other,
        })
        .collect()
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ExtendedReduced {
    pub segments: Vec<GReduced>,
    pub involutions: Vec<Stable>,
}

impl ExtendedReduced {
    pub fn is_identity(&self) -> bool {
        self.involutions.is_empty() && self.segments.iter().all(GReduced::is_identity)
    }

    pub fn tokens(&self) -> Vec<GTok> {
        let mut out = Vec::new();
        for (k, seg) in self.segments.iter().enumerate() {
            out.extend(seg.tokens());
            if let Some(&s) = self.involutions.get(k) {
                out.push(GTok::Inv(s));
            }
        }
        out
    }
}

fn stable_tok(y: Stable, k: i64) -> Vec<GTok> {
    (0..k.unsigned_abs()).map(|_| GTok::St(y, k < 0)).collect()
}

/// `Some(k)` when the segment equals `y^k`.
fn power_of(seg: &GReduced, y: Stable, oracle: &HaltingOracle) -> Result<Option<i64>, MachineError> {
    let toks = seg.tokens();
    let gw = super::GWord(toks.iter().map(|&t| (t, false)).collect());
    let rho = free_retraction(&gw);
    if rho.iter().any(|&(s, _)| s != y) || rho.windows(2).any(|p| p[0].1 != p[1].1) {
        return Ok(None);
    }
    let k = if rho.first().map(|p| p.1).unwrap_or(false) { -(rho.len() as i64) } else { rho.len() as i64 };
    let mut check = toks;
    check.extend(stable_tok(y, -k));
    Ok(britton_reduce(&check, oracle)?.is_identity().then_some(k))
}

/// Reduce a token sequence in the extended group.
pub fn reduce_extended(tokens: &[GTok], oracle: &HaltingOracle) -> Result<ExtendedReduced, MachineError> {
    let mut raw: Vec<Vec<GTok>> = vec![Vec::new()];
    let mut invs = Vec::new();
    for &t in tokens {
        match t {
            GTok::Inv(s) => {
                invs.push(s);
                raw.push(Vec::new());
            }
            other => raw.last_mut().unwrap().push(other),
        }
    }
    let mut segs: Vec<GReduced> = raw.iter().map(|r| britton_reduce(r, oracle)).collect::<Result<_, _>>()?;
    'outer: loop {
        for j in 0..invs.len().saturating_sub(1) {
            if invs[j] != invs[j + 1] {
                continue;
            }
            if let Some(k) = power_of(&segs[j + 1], invs[j], oracle)? {
                let mut merged = segs[j].tokens();
                merged.extend(stable_tok(invs[j], -k));
                merged.extend(segs[j + 2].tokens());
                let r = britton_reduce(&merged, oracle)?;
                segs.splice(j..=j + 2, [r]);
                invs.drain(j..=j + 1);
                continue 'outer;
            }
        }
        break;
    }
    Ok(ExtendedReduced { segments: segs, involutions: invs })
}

/// Reduced key; kernel-only inputs take the fast path.
pub fn reduce_key(tokens: &[GTok], oracle: &HaltingOracle) -> Result<Vec<GTok>, MachineError> {
    if tokens.iter().all(|t| matches!(t, GTok::K(_))) {
        let syms: Vec<KSym> = tokens
            .iter()
            .map(|t| match t {
                GTok::K(s) => *s,
                _ => unreachable!(),
            })
            .collect();
        return Ok(eta_syms(&syms).letters().into_iter().map(GTok::K).collect());
    }
    Ok(reduce_extended(tokens, oracle)?.tokens())
}

pub fn is_trivial_extended(tokens: &[GTok], oracle: &HaltingOracle) -> Result<bool, MachineError> {
    Ok(reduce_extended(tokens, oracle)?.is_identity())
}

fn skeleton(key: &[GTok]) -> Vec<GTok> {
    key.iter().copied().filter(|t| !matches!(t, GTok::K(_))).collect()
}

/// Rational group algebra element keyed by reduced tokens.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct GroupAlgebra {
    pub terms: BTreeMap<Vec<GTok>, BigRational>,
}

impl GroupAlgebra {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::element(Vec::new())
    }

    /// A reduced group element with coefficient one.
    pub fn element(key: Vec<GTok>) -> Self {
        let mut g = Self::zero();
        g.add_term(key, BigRational::one());
        g
    }

    pub fn add_term(&mut self, key: Vec<GTok>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero();
        for (k, x) in &self.terms {
            out.add_term(k.clone(), x * c);
        }
        out
    }

    pub fn is_syntactically_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &Self, oracle: &HaltingOracle) -> Result<Self, MachineError> {
        let mut out = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let mut t = a.clone();
                t.extend_from_slice(b);
                out.add_term(reduce_key(&t, oracle)?, x * y);
            }
        }
        Ok(out)
    }

    /// Adjoint: inverse keys with the same coefficients.
    pub fn star(&self, oracle: &HaltingOracle) -> Result<Self, MachineError> {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.add_term(reduce_key(&inverse_tokens(k), oracle)?, c.clone());
        }
        Ok(out)
    }

    /// Coefficient sum over the identity.
    pub fn trace(&self) -> BigRational {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Merge keys that name the same group element.  Keys without stable
    /// letters are already unique; the rest are compared with the word
    /// problem inside classes sharing a skeleton.
    pub fn canonicalize(&self, oracle: &HaltingOracle) -> Result<Self, MachineError> {
        let mut classes: BTreeMap<Vec<GTok>, Vec<(Vec<GTok>, BigRational)>> = BTreeMap::new();
        for (k, c) in &self.terms {
            classes.entry(skeleton(k)).or_default().push((k.clone(), c.clone()));
        }
        let mut out = Self::zero();
        for (sk, members) in classes {
            if sk.is_empty() {
                for (k, c) in members {
                    out.add_term(k, c);
                }
                continue;
            }
            let mut reps: Vec<(Vec<GTok>, BigRational)> = Vec::new();
            for (k, c) in members {
                let inv = inverse_tokens(&k);
                let mut found = false;
                for (r, acc) in reps.iter_mut() {
                    let mut t = r.clone();
                    t.extend_from_slice(&inv);
                    if is_trivial_extended(&t, oracle)? {
                        *acc += &c;
                        found = true;
                        break;
                    }
                }
                if !found {
                    reps.push((k, c));
                }
            }
            for (k, c) in reps {
                out.add_term(k, c);
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self, oracle: &HaltingOracle) -> Result<bool, MachineError> {
        Ok(self.canonicalize(oracle)?.terms.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::TuringMachine;

    fn oracle() -> HaltingOracle {
        HaltingOracle::new(TuringMachine::never_halting(), 200)
    }

    fn toks(s: &str) -> Vec<GTok> {
        tokens_of_word(&Word::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn involutions_square_to_one() {
        let o = oracle();
        for l in ["J", "X", "Z", "sS", "tS", "sT", "tT", "sW", "tW"] {
            assert!(is_trivial_extended(&toks(&format!("{l} {l}")), &o).unwrap(), "{l}");
        }
    }

    #[test]
    fn dihedral_relation() {
        let o = oracle();
        // s S s = S^-1, so tS sS X sS tS = S^-1 X S = x[0,-1]
        let mut t = toks("tS sS X sS tS");
        t.push(GTok::K(KSym::X(0, -1)));
        assert!(is_trivial_extended(&t, &o).unwrap());
        assert!(!is_trivial_extended(&toks("sS sT"), &o).unwrap());
        assert!(!is_trivial_extended(&toks("sS X sS X"), &o).unwrap());
    }

    #[test]
    fn zero_test_merges_equal_keys() {
        let o = oracle();
        let a = reduce_key(&toks("sS X sS"), &o).unwrap();
        let mut b = toks("tS X tS");
        b = reduce_key(&b, &o).unwrap();
        let mut g = GroupAlgebra::zero();
        g.add_term(a, BigRational::one());
        g.add_term(b, -BigRational::one());
        // sS X sS = x[0,0] conjugated by s, tS X tS = S^-1 s X s S; not equal
        assert!(!g.is_zero(&o).unwrap());
        let mut h = GroupAlgebra::zero();
        h.add_term(reduce_key(&toks("sS tS X"), &o).unwrap(), BigRational::one());
        let mut k = toks("X");
        k.insert(0, GTok::St(Stable::S, false));
        h.add_term(reduce_key(&k, &o).unwrap(), -BigRational::one());
        assert!(h.is_zero(&o).unwrap());
    }
}
