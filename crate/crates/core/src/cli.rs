//! Command-line front end.  [`run`] parses arguments, writes the report to
//! the given sink and returns the process exit code: 0 success, 1 failed
//! verification or suite, 2 usage or parse error, 3 budget exhausted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;

use crate::certificates::halting::{eval_state_alpha, eval_sync_state_beta, expected_pq_trace, pq_trace, BlockRep, HaltingError};
use crate::certificates::sos::{sos_search, trace_sos_search, Quotient, SosOptions, SosOutcome, TraceOutcome};
use crate::compiler::{compile_alpha, compile_beta, relations_rm, ReductionConfig};
use crate::decomp::{decompose_key_relation, key_target, parse_decomposition, DecompError, RDecomposition};
use crate::gs::{is_trivial_with, Decision, GWord};
use crate::ks::{eta, KWord, KsError};
use crate::machines::{HaltingOracle, MachineError, TuringMachine};
use crate::presentations::{free_reduce, involutive_reduce, CyclicFreeProduct, GroupPresentation, PresentationProvider, TruncatedGsProvider};
use crate::selftest::{self, Sizes};
use crate::words::{ParseError, StarPolynomial, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ncpos", version, about = "Word problems, relation compiler and positivity certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Machine and budget shared by most subcommands.
#[derive(Args, Debug, Clone)]
pub struct MachineArgs {
    /// Machine file, or `builtin:never`, `builtin:counter`, `builtin:halting-after-N`.
    #[arg(long, default_value = "builtin:never")]
    pub tm: String,
    /// Step budget for every bounded run.
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Ks,
    Gs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Alpha,
    Beta,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuotientArg {
    Free,
    Involutive,
    Commutative,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normal form of a word in a built-in group or a given presentation.
    Normalize {
        word: String,
        #[arg(long, value_enum, conflicts_with = "presentation")]
        builtin: Option<Builtin>,
        #[arg(long)]
        presentation: Option<PathBuf>,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Decide triviality in the HNN group and print the pinch trace.
    Wp {
        word: String,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Compile `alpha(m)` or `beta(m)`.
    Compile {
        #[arg(value_enum)]
        which: Which,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Check a decomposition file against the relation set it names.
    VerifyDecomp {
        file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Decompose the key relation at step `n` for input `m`.
    DecomposeKey {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Search for a sum of hermitian squares.
    Sos(SosArgs),
    /// Search for squares plus commutators.
    TraceSos(SosArgs),
    /// Exact trace values in the halting representation.
    EvalHalting {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Only report the trace of `PQ`.
        #[arg(long)]
        pq_only: bool,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Halting status, trace values or key decompositions in one report.
    Pipeline {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of key steps to decompose when the input has not halted.
        #[arg(long, default_value_t = 4)]
        horizon: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Run seeded property suites.
    Selftest {
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
pub struct SosArgs {
    /// Polynomial file with `coeff : word` lines.
    pub file: PathBuf,
    #[arg(long)]
    pub degree: usize,
    #[arg(long, value_enum, default_value = "free", conflicts_with = "presentation")]
    pub quotient: QuotientArg,
    /// Free product of cyclic groups to reduce in.
    #[arg(long)]
    pub presentation: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Fail {
    code: i32,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: EXIT_USAGE, msg: msg.into() }
}

fn failure(msg: impl Into<String>) -> Fail {
    Fail { code: EXIT_FAILURE, msg: msg.into() }
}

fn budget(msg: impl Into<String>) -> Fail {
    Fail { code: EXIT_BUDGET, msg: msg.into() }
}

impl From<MachineError> for Fail {
    fn from(e: MachineError) -> Self {
        match e {
            MachineError::Budget { .. } => budget(e.to_string()),
            MachineError::Parse { .. } => usage(e.to_string()),
        }
    }
}

impl From<HaltingError> for Fail {
    fn from(e: HaltingError) -> Self {
        match e {
            HaltingError::NotHalting { .. } => budget(e.to_string()),
            HaltingError::Machine(m) => m.into(),
            other => usage(other.to_string()),
        }
    }
}

impl From<DecompError> for Fail {
    fn from(e: DecompError) -> Self {
        match e {
            DecompError::Parse { .. } | DecompError::Word(_) => usage(e.to_string()),
            other => failure(other.to_string()),
        }
    }
}

/// Parse and run; clap errors become exit code 2 (help and version exit 0).
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(out, "error: {}", f.msg);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, dest: &Option<PathBuf>, out: &mut dyn Write) -> Result<(), Fail> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| failure(e.to_string())),
    }
}

/// Resolve `--tm`.
pub fn load_machine(source: &str) -> Result<TuringMachine, String> {
    if let Some(b) = source.strip_prefix("builtin:") {
        return match b {
            "never" => Ok(TuringMachine::never_halting()),
            "counter" => Ok(TuringMachine::counter()),
            _ => match b.strip_prefix("halting-after-").and_then(|n| n.parse::<u64>().ok()) {
                Some(n) if n >= 1 => Ok(TuringMachine::halting_after(n)),
                _ => Err(format!("unknown builtin machine `{b}`")),
            },
        };
    }
    let text = fs::read_to_string(source).map_err(|e| format!("{source}: {e}"))?;
    TuringMachine::parse(&text).map_err(|e| format!("{source}: {e}"))
}

fn oracle(m: &MachineArgs) -> Result<HaltingOracle, Fail> {
    Ok(HaltingOracle::new(load_machine(&m.tm).map_err(usage)?, m.budget))
}

fn config(path: &Option<PathBuf>) -> Result<ReductionConfig, Fail> {
    match path {
        None => Ok(ReductionConfig::default()),
        Some(p) => ReductionConfig::parse(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display()))),
    }
}

/// Byte offset of each whitespace-separated token.
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

fn parse_fail(e: &ParseError, input: &str) -> Fail {
    usage(e.render(input))
}

fn parse_kword(s: &str) -> Result<KWord, Fail> {
    let w = Word::parse(s).map_err(|e| parse_fail(&e, s))?;
    KWord::from_word(&w).map_err(|e| {
        let pos = token_offsets(s).get(e.pos).copied().unwrap_or(0);
        parse_fail(&ParseError::new(pos, e.msg), s)
    })
}

fn parse_poly(path: &Path) -> Result<StarPolynomial, Fail> {
    let text = read(path)?;
    StarPolynomial::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, Fail> {
    let mut text = String::new();
    let code = match cmd {
        Command::Normalize { word, builtin, presentation, machine } => {
            normalize(&word, builtin, presentation.as_deref(), &machine, &mut text)?
        }
        Command::Wp { word, machine } => wp(&word, &machine, &mut text)?,
        Command::Compile { which, m, config: c, out: dest, machine } => {
            let cfg = config(&c)?;
            let provider = TruncatedGsProvider::new(oracle(&machine)?);
            let body = match which {
                Which::Alpha => {
                    let a = compile_alpha(m, &cfg, &provider).map_err(|e| usage(e.to_string()))?;
                    format!("# alpha(m), m = {m}, weight {}, {} relations\n{}", a.weight, a.squares.len(), a.poly)
                }
                Which::Beta => {
                    let b = compile_beta(m, &cfg, &provider).map_err(|e| usage(e.to_string()))?;
                    format!("# beta(m), m = {m}, weight {}, {} relations\n{}", b.weight, b.squares.len(), b.poly)
                }
            };
            emit(&body, &dest, out)?;
            EXIT_OK
        }
        Command::VerifyDecomp { file, config: c, machine } => verify_decomp(&file, &c, &machine, &mut text)?,
        Command::DecomposeKey { m, n, config: c, out: dest, machine } => {
            let cfg = config(&c)?;
            let o = oracle(&machine)?;
            let provider = TruncatedGsProvider::new(o.clone());
            let k = decompose_key_relation(m, n, &o, &provider, &cfg)?;
            let size = k.decomposition.size(&k.relations)?;
            let header = [
                ("m", m.to_string()),
                ("n", n.to_string()),
                ("target", "key".to_string()),
                ("i_bound", cfg.i_bound.to_string()),
                ("size", size.value.to_string()),
            ];
            emit(&k.decomposition.to_text(&header), &dest, out)?;
            EXIT_OK
        }
        Command::Sos(a) => sos(&a, false, out)?,
        Command::TraceSos(a) => sos(&a, true, out)?,
        Command::EvalHalting { m, config: c, pq_only, machine } => {
            let o = oracle(&machine)?;
            let cfg = config(&c)?;
            halting_report(&o, m, &cfg, pq_only, &mut text)?;
            EXIT_OK
        }
        Command::Pipeline { m, config: c, horizon, out: dest, machine } => {
            let cfg = config(&c)?;
            let mut report = String::new();
            let code = pipeline(&machine, m, &cfg, horizon, &mut report)?;
            emit(&report, &dest, out)?;
            code
        }
        Command::Selftest { suite, seed } => {
            let Some(lines) = selftest::run(&suite, seed, &Sizes::quick()) else {
                return Err(usage(format!(
                    "unknown suite `{suite}`; expected one of {}, all",
                    selftest::SUITES.join(", ")
                )));
            };
            text.push_str(&format!("seed = {seed}\n"));
            let failed = lines.iter().filter(|l| !l.passed).count();
            for l in &lines {
                text.push_str(&format!("{l}\n"));
            }
            text.push_str(&format!("{} checks, {failed} failed\n", lines.len()));
            if failed == 0 {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| failure(e.to_string()))?;
    Ok(code)
}

fn normalize(
    word: &str,
    builtin: Option<Builtin>,
    presentation: Option<&Path>,
    machine: &MachineArgs,
    text: &mut String,
) -> Result<i32, Fail> {
    if let Some(p) = presentation {
        let pres = GroupPresentation::parse(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        let w = Word::parse(word).map_err(|e| parse_fail(&e, word))?;
        let nf = match CyclicFreeProduct::from_presentation(&pres) {
            Some(g) => g.normal_form(&w),
            None => {
                // no solver for general relators: reduce freely only
                text.push_str("# free reduction only\n");
                free_reduce(&involutive_reduce(&w, &pres.involutions))
            }
        };
        text.push_str(&format!("{nf}\n"));
        return Ok(EXIT_OK);
    }
    let o = oracle(machine)?;
    match builtin.unwrap_or(Builtin::Ks) {
        Builtin::Ks => {
            let w = parse_kword(word)?;
            let nf = eta(&w, &o).map_err(|e| match e {
                KsError::Machine(m) => Fail::from(m),
                other => usage(other.to_string()),
            })?;
            let m = nf.body_kword().metrics();
            text.push_str(&format!("{nf}\n"));
            text.push_str(&format!("length {} bit_length {} max_index {}\n", m.length, m.bit_length, m.max_index));
        }
        Builtin::Gs => {
            let w = GWord::parse(word).map_err(|e| parse_fail(&e, word))?;
            let rep = is_trivial_with(&w, &o);
            if rep.decision == Decision::UndecidedBudget {
                return Err(budget(format!("budget {} too small to normalize", o.budget())));
            }
            let m = rep.reduced.to_gword().metrics();
            text.push_str(&format!("{}\n", rep.reduced));
            text.push_str(&format!("length {} bit_length {} max_index {}\n", m.length, m.bit_length, m.max_index));
        }
    }
    Ok(EXIT_OK)
}

fn wp(word: &str, machine: &MachineArgs, text: &mut String) -> Result<i32, Fail> {
    let w = GWord::parse(word).map_err(|e| parse_fail(&e, word))?;
    let o = oracle(machine)?;
    let rep = is_trivial_with(&w, &o);
    text.push_str(&format!("{}\n", rep.decision));
    for p in &rep.pinches {
        let e = if p.exponent < 0 { "~" } else { "" };
        text.push_str(&format!("pinch {}{e} at {}: {} -> {}\n", p.letter.name(), p.position, p.before, p.image));
    }
    text.push_str(&format!("reduced {}\n", rep.reduced));
    Ok(match rep.decision {
        Decision::Trivial | Decision::Nontrivial => EXIT_OK,
        Decision::UndecidedBudget => EXIT_BUDGET,
    })
}

fn header_int<T: std::str::FromStr>(h: &std::collections::BTreeMap<String, String>, k: &str) -> Result<Option<T>, Fail> {
    match h.get(k) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| usage(format!("header `{k}` is not an integer: `{v}`"))),
    }
}

fn verify_decomp(file: &Path, c: &Option<PathBuf>, machine: &MachineArgs, text: &mut String) -> Result<i32, Fail> {
    let (header, entries) = parse_decomposition(&read(file)?)?;
    let mut cfg = config(c)?;
    let m: i64 = header_int(&header, "m")?.ok_or_else(|| usage("header needs `m`"))?;
    let n: u64 = header_int(&header, "n")?.ok_or_else(|| usage("header needs `n`"))?;
    if let Some(ib) = header_int(&header, "i_bound")? {
        cfg.i_bound = ib;
    }
    match header.get("target").map(String::as_str) {
        Some("key") | None => {}
        Some(t) => return Err(usage(format!("unknown target `{t}`"))),
    }
    let o = oracle(machine)?;
    let provider = TruncatedGsProvider::new(o);
    let provided = provider.provide(m.unsigned_abs(), cfg.i_bound.max(n));
    if !provided.skipped.is_empty() {
        return Err(budget(format!("{} relators undecided within the budget", provided.skipped.len())));
    }
    let rels = relations_rm(m, &provided);
    let d = RDecomposition { target: key_target(n as usize), entries };
    match d.verify(&rels)? {
        crate::decomp::Verification::Valid => {
            let size = d.size(&rels)?;
            text.push_str(&format!("valid: {size}\n"));
            Ok(EXIT_OK)
        }
        crate::decomp::Verification::Invalid(diff) => {
            text.push_str(&format!("invalid: target minus expansion has {} terms\n{diff}", diff.len()));
            Ok(EXIT_FAILURE)
        }
    }
}

fn quotient_of(a: &SosArgs) -> Result<Quotient, Fail> {
    match &a.presentation {
        Some(p) => {
            let pres = GroupPresentation::parse(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Quotient::from_presentation(&pres).map_err(|e| usage(e.to_string()))
        }
        None => Ok(match a.quotient {
            QuotientArg::Free => Quotient::Free,
            QuotientArg::Involutive => Quotient::Involutive,
            QuotientArg::Commutative => Quotient::CommutativeSelfAdjoint,
        }),
    }
}

fn sos(a: &SosArgs, trace: bool, out: &mut dyn Write) -> Result<i32, Fail> {
    let f = parse_poly(&a.file)?;
    let q = quotient_of(a)?;
    let opts = SosOptions::default();
    let err = |e: crate::certificates::sos::SosError| usage(e.to_string());
    let (body, code) = if trace {
        match trace_sos_search(&f, &q, a.degree, &opts).map_err(err)? {
            TraceOutcome::Certified(c) => (format!("certified\n{c}"), EXIT_OK),
            TraceOutcome::Infeasible(r) => (no_certificate(a.degree, &r.to_text()), EXIT_FAILURE),
        }
    } else {
        match sos_search(&f, &q, a.degree, &opts).map_err(err)? {
            SosOutcome::Certified(c) => (format!("certified\n{}", c.to_text()), EXIT_OK),
            SosOutcome::Infeasible(r) => (no_certificate(a.degree, &r.to_text()), EXIT_FAILURE),
        }
    };
    emit(&body, &a.out, out)?;
    Ok(code)
}

fn no_certificate(degree: usize, report: &str) -> String {
    format!("no certificate at degree {degree} with this solver and tolerance\n{report}")
}

fn halting_report(o: &HaltingOracle, m: i64, cfg: &ReductionConfig, pq_only: bool, text: &mut String) -> Result<(), Fail> {
    let rep = BlockRep::new(o, m)?;
    let n = rep.n;
    let pq = pq_trace(&rep)?;
    text.push_str(&format!("h(m) = {n}\n"));
    text.push_str(&format!("tau(PQ) = {pq}\n"));
    text.push_str(&format!("expected tau(PQ) = {}\n", expected_pq_trace(n)));
    if pq_only {
        return Ok(());
    }
    let provider = TruncatedGsProvider::new(o.clone());
    let a = eval_state_alpha(o, m, cfg, &provider)?;
    text.push_str(&format!("tau(alpha(m)) = {}\n", a.value));
    text.push_str(&format!("alpha weight = {}\n", a.weight));
    text.push_str(&format!("alpha square terms = {}, all zero: {}\n", a.squares.len(), yes(a.squares_vanish())));
    let (b, sync) = eval_sync_state_beta(o, m, cfg, &provider)?;
    text.push_str(&format!("tau(P0* P0) = {}\n", b.p0_square));
    text.push_str(&format!("phi(beta(m)) = {}\n", b.value));
    text.push_str(&format!("beta weight = {}\n", b.weight));
    let sync_zero = sync.iter().all(|(_, v)| v.is_zero());
    text.push_str(&format!("synchronization terms = {}, all zero: {}\n", sync.len(), yes(sync_zero && b.squares_vanish())));
    Ok(())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn pipeline(machine: &MachineArgs, m: i64, cfg: &ReductionConfig, horizon: u64, text: &mut String) -> Result<i32, Fail> {
    let o = oracle(machine)?;
    text.push_str(&format!("machine = {}\nm = {m}\nbudget = {}\n", machine.tm, machine.budget));
    for l in cfg.to_string().lines() {
        text.push_str(&format!("config {l}\n"));
    }
    if m < 1 {
        return Err(usage(format!("m must be at least 1, got {m}")));
    }
    match o.halting_time(m) {
        Some(h) => {
            text.push_str(&format!("status = halts at step {h}\n"));
            halting_report(&o, m, cfg, false, text)?;
            Ok(EXIT_OK)
        }
        None => {
            text.push_str(&format!("status = not halted within {} steps\n", o.budget()));
            let provider = TruncatedGsProvider::new(o.clone());
            let mut all_valid = true;
            for n in 0..horizon {
                // the relation set needs representatives up to index n
                if 2 * n + 1 > o.budget() {
                    text.push_str(&format!("key n={n}: BUDGET EXHAUSTED\n"));
                    return Ok(EXIT_BUDGET);
                }
                let k = decompose_key_relation(m, n, &o, &provider, cfg)?;
                let valid = k.decomposition.verify(&k.relations)?.is_valid();
                let size = k.decomposition.size(&k.relations)?;
                all_valid &= valid;
                text.push_str(&format!(
                    "key n={n}: {} entries, size {}, {}\n",
                    k.decomposition.entries.len(),
                    size.value,
                    if valid { "verified" } else { "INVALID" }
                ));
            }
            Ok(if all_valid { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}
