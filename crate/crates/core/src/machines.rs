//! Deterministic single-tape Turing machines with bounded runs.
//!
//! Machines read a unary input and never run unbounded: every query carries
//! a step budget.  Negative inputs are treated as non-halting.  The
//! [`HaltingOracle`] caches one bounded run per input and answers index
//! canonicalization queries for the kernel and word-problem modules.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("undecided within budget {budget}: input {m} needs {needed} steps")]
    Budget { m: i64, needed: u64, budget: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuringMachine {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub blank: String,
    pub start: String,
    pub halt: BTreeSet<String>,
    pub delta: BTreeMap<(String, String), (String, String, Move)>,
}

/// Outcome of a bounded run.  Step counts start at one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaltingProfile {
    HaltedAt(u64),
    RunningPast(u64),
}

impl TuringMachine {
    /// The symbol used for unary input: the first non-blank alphabet symbol.
    pub fn input_symbol(&self) -> &str {
        self.alphabet.iter().find(|s| **s != self.blank).map(String::as_str).unwrap_or(&self.blank)
    }

    /// Parse the sectioned text format.
    pub fn parse(text: &str) -> Result<TuringMachine, MachineError> {
        let mut section = String::new();
        let mut sections: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        let mut transitions = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            if line.contains("->") {
                transitions.push((k + 1, line.to_string()));
            } else if section.is_empty() {
                return Err(MachineError::Parse { line: k + 1, msg: "content outside a section".into() });
            } else {
                sections.entry(section.clone()).or_default().push((k + 1, line.to_string()));
            }
        }
        let list = |name: &str| -> Result<Vec<String>, MachineError> {
            let lines = sections
                .get(name)
                .ok_or(MachineError::Parse { line: 0, msg: format!("missing [{name}] section") })?;
            Ok(lines
                .iter()
                .flat_map(|(_, l)| l.split(|c: char| c == ',' || c.is_whitespace()))
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect())
        };
        let states = list("states")?;
        let alphabet = list("alphabet")?;
        let single = |name: &str| -> Result<String, MachineError> {
            let v = list(name)?;
            if v.len() != 1 {
                return Err(MachineError::Parse { line: 0, msg: format!("[{name}] needs exactly one entry") });
            }
            Ok(v[0].clone())
        };
        let blank = single("blank")?;
        let start = single("start")?;
        let halt: BTreeSet<String> = list("halt")?.into_iter().collect();
        let state_set: BTreeSet<&String> = states.iter().collect();
        let sym_set: BTreeSet<&String> = alphabet.iter().collect();
        let err = |line: usize, msg: String| MachineError::Parse { line, msg };
        if !sym_set.contains(&blank) {
            return Err(err(0, format!("blank `{blank}` is not in the alphabet")));
        }
        if !state_set.contains(&start) {
            return Err(err(0, format!("start `{start}` is not a state")));
        }
        if halt.contains(&start) {
            return Err(err(0, "the start state may not be halting".into()));
        }
        for h in &halt {
            if !state_set.contains(h) {
                return Err(err(0, format!("halting state `{h}` is not a state")));
            }
        }
        let mut delta = BTreeMap::new();
        for (line, t) in transitions {
            let (lhs, rhs) = t.split_once("->").expect("arrow present");
            let l: Vec<&str> = lhs.split(',').map(str::trim).collect();
            let r: Vec<&str> = rhs.split(',').map(str::trim).collect();
            if l.len() != 2 || r.len() != 3 {
                return Err(err(line, "expected `q,s -> q',s',L|R`".into()));
            }
            for q in [l[0], r[0]] {
                if !state_set.contains(&q.to_string()) {
                    return Err(err(line, format!("unknown state `{q}`")));
                }
            }
            for s in [l[1], r[1]] {
                if !sym_set.contains(&s.to_string()) {
                    return Err(err(line, format!("unknown symbol `{s}`")));
                }
            }
            if halt.contains(l[0]) {
                return Err(err(line, format!("transition out of halting state `{}`", l[0])));
            }
            let mv = match r[2] {
                "L" => Move::Left,
                "R" => Move::Right,
                other => return Err(err(line, format!("bad move `{other}`"))),
            };
            if delta
                .insert((l[0].to_string(), l[1].to_string()), (r[0].to_string(), r[1].to_string(), mv))
                .is_some()
            {
                return Err(err(line, "duplicate transition".into()));
            }
        }
        for q in &states {
            if halt.contains(q) {
                continue;
            }
            for s in &alphabet {
                if !delta.contains_key(&(q.clone(), s.clone())) {
                    return Err(err(0, format!("no transition for ({q},{s})")));
                }
            }
        }
        Ok(TuringMachine { states, alphabet, blank, start, halt, delta })
    }

    /// Run on input `m` for at most `budget` steps.
    pub fn run_bounded(&self, m: i64, budget: u64) -> HaltingProfile {
        if m < 0 {
            return HaltingProfile::RunningPast(budget);
        }
        let input = self.input_symbol();
        let mut tape: HashMap<i64, &str> = (0..m).map(|k| (k, input)).collect();
        let mut head = 0i64;
        let mut state = self.start.as_str();
        for step in 1..=budget {
            let sym = tape.get(&head).copied().unwrap_or(self.blank.as_str());
            let (q, s, mv) = &self.delta[&(state.to_string(), sym.to_string())];
            tape.insert(head, s.as_str());
            head += match mv {
                Move::Left => -1,
                Move::Right => 1,
            };
            state = q.as_str();
            if self.halt.contains(state) {
                return HaltingProfile::HaltedAt(step);
            }
        }
        HaltingProfile::RunningPast(budget)
    }

    /// Machine that ignores its input and halts at step `n >= 1`.
    pub fn halting_after(n: u64) -> TuringMachine {
        assert!(n >= 1);
        let mut text = String::from("[states]\n");
        for k in 0..n {
            text.push_str(&format!("q{k} "));
        }
        text.push_str("h\n[alphabet]\n_ 1\n[blank]\n_\n[start]\nq0\n[halt]\nh\n");
        for k in 0..n {
            let next = if k + 1 == n { "h".to_string() } else { format!("q{}", k + 1) };
            for s in ["_", "1"] {
                text.push_str(&format!("q{k},{s} -> {next},{s},R\n"));
            }
        }
        TuringMachine::parse(&text).expect("generated machine")
    }

    /// Machine that scans its unary input and halts at step `m + 2`.
    pub fn counter() -> TuringMachine {
        TuringMachine::parse(
            "[states]\nscan back h\n[alphabet]\n_ 1\n[blank]\n_\n[start]\nscan\n[halt]\nh\n\
             scan,1 -> scan,1,R\nscan,_ -> back,_,L\nback,1 -> h,1,R\nback,_ -> h,_,R\n",
        )
        .expect("counter machine")
    }

    /// Machine that never halts.
    pub fn never_halting() -> TuringMachine {
        TuringMachine::parse(
            "[states]\nq h\n[alphabet]\n_ 1\n[blank]\n_\n[start]\nq\n[halt]\nh\nq,_ -> q,_,R\nq,1 -> q,1,R\n",
        )
        .expect("looping machine")
    }
}

impl fmt::Display for TuringMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[states]\n{}", self.states.join(" "))?;
        writeln!(f, "[alphabet]\n{}", self.alphabet.join(" "))?;
        writeln!(f, "[blank]\n{}\n[start]\n{}", self.blank, self.start)?;
        writeln!(f, "[halt]\n{}", self.halt.iter().cloned().collect::<Vec<_>>().join(" "))?;
        for ((q, s), (q2, s2, mv)) in &self.delta {
            let d = if *mv == Move::Left { "L" } else { "R" };
            writeln!(f, "{q},{s} -> {q2},{s2},{d}")?;
        }
        Ok(())
    }
}

/// Canonical residue of `i` modulo `h + 1` in the window
/// `-floor((h+3)/2) < r < floor((h+2)/2)`.
pub fn window_residue(h: u64, i: i64) -> i64 {
    let modulus = h as i64 + 1;
    let lo = -((h as i64 + 3) / 2) + 1;
    lo + (i - lo).rem_euclid(modulus)
}

/// Representative of index `i` for machine input `m`.
pub fn representative(tm: &TuringMachine, m: i64, i: i64) -> i64 {
    if i == 0 {
        return 0;
    }
    let steps = 2 * i.unsigned_abs() - 1;
    match tm.run_bounded(m, steps) {
        HaltingProfile::HaltedAt(h) => window_residue(h, i),
        HaltingProfile::RunningPast(_) => i,
    }
}

/// Cached bounded runs, one per input, shared by the solvers.
#[derive(Debug)]
pub struct HaltingOracle {
    tm: TuringMachine,
    budget: u64,
    cache: Mutex<HashMap<i64, HaltingProfile>>,
}

impl Clone for HaltingOracle {
    fn clone(&self) -> Self {
        let cache = self.cache.lock().expect("oracle cache").clone();
        HaltingOracle { tm: self.tm.clone(), budget: self.budget, cache: Mutex::new(cache) }
    }
}

impl HaltingOracle {
    pub fn new(tm: TuringMachine, budget: u64) -> Self {
        HaltingOracle { tm, budget, cache: Mutex::new(HashMap::new()) }
    }

    pub fn machine(&self) -> &TuringMachine {
        &self.tm
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn with_budget(&self, budget: u64) -> Self {
        HaltingOracle::new(self.tm.clone(), budget)
    }

    pub fn profile(&self, m: i64) -> HaltingProfile {
        let mut cache = self.cache.lock().expect("oracle cache");
        *cache.entry(m).or_insert_with(|| self.tm.run_bounded(m, self.budget))
    }

    /// Halting time when it is known within the budget.
    pub fn halting_time(&self, m: i64) -> Option<u64> {
        match self.profile(m) {
            HaltingProfile::HaltedAt(h) => Some(h),
            HaltingProfile::RunningPast(_) => None,
        }
    }

    /// Representative of `i`, or a budget error when `2|i|-1` steps exceed it.
    pub fn representative(&self, m: i64, i: i64) -> Result<i64, MachineError> {
        if i == 0 {
            return Ok(0);
        }
        let needed = 2 * i.unsigned_abs() - 1;
        match self.profile(m) {
            HaltingProfile::HaltedAt(h) if h <= needed => Ok(window_residue(h, i)),
            HaltingProfile::HaltedAt(_) => Ok(i),
            HaltingProfile::RunningPast(b) if needed <= b => Ok(i),
            HaltingProfile::RunningPast(_) => {
                if m < 0 {
                    Ok(i)
                } else {
                    Err(MachineError::Budget { m, needed, budget: self.budget })
                }
            }
        }
    }

    pub fn is_representative(&self, m: i64, i: i64) -> Result<bool, MachineError> {
        Ok(self.representative(m, i)? == i)
    }
}
