//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ncpos::certificates::halting::{eval_state_alpha, eval_sync_state_beta, pq_trace, BlockRep};
use ncpos::compiler::{p_proj, q_proj, relations_rm, ReductionConfig};
use ncpos::decomp::{decompose_key_relation, key_target, parse_decomposition, RDecomposition};
use ncpos::machines::{HaltingOracle, TuringMachine};
use ncpos::presentations::{truncated_gs, CyclicFreeProduct, PresentationProvider, TruncatedGsProvider};
use ncpos::sampling::{insertion_trial, word_problem_sampling, IndexRange};
use ncpos::selftest;
use ncpos::words::Word;

type Outcome = Result<String, String>;

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `1 / (2^(n+1) (n+1))`, written out here rather than taken from the library.
fn pq_value(n: u64) -> BigRational {
    let mut den = int(n as i64 + 1);
    for _ in 0..=n {
        den *= int(2);
    }
    BigRational::one() / den
}

fn weight(c: &BigRational, m: i64, kp: u32) -> BigRational {
    let mut den = c * c;
    for _ in 0..2 * kp {
        den *= int(m);
    }
    BigRational::one() / den
}

fn halting_oracle(n: u64) -> HaltingOracle {
    HaltingOracle::new(TuringMachine::halting_after(n), 256)
}

fn timed(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let e = start.elapsed();
    if e > limit {
        Err(format!("{what} took {:.1}s, limit {}s", e.as_secs_f64(), limit.as_secs()))
    } else {
        Ok(())
    }
}

fn criterion_1() -> Outcome {
    let mut shown = Vec::new();
    for n in 1..=6u64 {
        let start = Instant::now();
        let rep = BlockRep::new(&halting_oracle(n), 1).map_err(|e| e.to_string())?;
        let v = pq_trace(&rep).map_err(|e| e.to_string())?;
        if v != pq_value(n) {
            return Err(format!("n={n}: tau(PQ) = {v}, expected {}", pq_value(n)));
        }
        if n <= 3 {
            // second route: expand every column into the group algebra
            let pq = &p_proj() * &q_proj();
            let mut alt = BigRational::zero();
            for (w, c) in pq.terms() {
                alt += c * rep.trace_word_expanded(w).map_err(|e| e.to_string())?;
            }
            if alt != v {
                return Err(format!("n={n}: expanded route gives {alt}"));
            }
        }
        timed(Duration::from_secs(30), start, &format!("n={n}"))?;
        shown.push(v.to_string());
    }
    Ok(format!("tau(PQ) for n=1..6: {}", shown.join(", ")))
}

fn criterion_2() -> Outcome {
    let cfg = ReductionConfig::default();
    for n in 1..=6u64 {
        let o = halting_oracle(n);
        let provider = TruncatedGsProvider::new(o.clone());
        let ev = eval_state_alpha(&o, 1, &cfg, &provider).map_err(|e| e.to_string())?;
        let expected = -(weight(&int(3072), 1, 5) * pq_value(n));
        if ev.value != expected {
            return Err(format!("n={n}: tau(alpha) = {}, expected {expected}", ev.value));
        }
        if !ev.squares_vanish() {
            return Err(format!("n={n}: nonzero square terms or failing relations {:?}", ev.failing));
        }
    }
    Ok("tau(alpha(1)) exact for n=1..6, every square term 0".into())
}

fn criterion_3() -> Outcome {
    let cfg = ReductionConfig::default();
    for n in 1..=6u64 {
        let o = halting_oracle(n);
        let provider = TruncatedGsProvider::new(o.clone());
        let (ev, sync) = eval_sync_state_beta(&o, 1, &cfg, &provider).map_err(|e| e.to_string())?;
        let expected = -(weight(&int(5248), 1, 5) * &ev.p0_square);
        if ev.value != expected {
            return Err(format!("n={n}: phi(beta) = {}, expected {expected}", ev.value));
        }
        // P~_0 is the projection P Q, so its square has the same trace
        if ev.p0_square != pq_value(n) {
            return Err(format!("n={n}: tau(P0* P0) = {}", ev.p0_square));
        }
        if let Some((g, v)) = sync.iter().find(|(_, v)| !v.is_zero()) {
            return Err(format!("n={n}: synchronization term for {g} is {v}"));
        }
        if !ev.squares_vanish() {
            return Err(format!("n={n}: nonzero square terms"));
        }
    }
    Ok("phi(beta(1)) exact for n=1..6, synchronization terms 0".into())
}

/// Least-squares polynomial of degree `k`; returns the largest residual
/// relative to the largest value.
fn poly_fit_residual(ts: &[f64], ys: &[f64], k: usize) -> f64 {
    let a = DMatrix::from_fn(ts.len(), k + 1, |i, j| ts[i].powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let coef = a.clone().svd(true, true).solve(&b, 1e-12).expect("least squares");
    let fit = a * coef;
    let scale = ys.iter().copied().fold(0.0, f64::max);
    ys.iter().zip(fit.iter()).map(|(y, f)| (y - f).abs() / scale).fold(0.0, f64::max)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let cfg = ReductionConfig::default();
    let oracle = HaltingOracle::new(TuringMachine::never_halting(), 256);
    let provider = TruncatedGsProvider::new(oracle.clone());
    let k = cfg.k as usize;
    let mut c_fit: f64 = 0.0;
    let mut worst_fit: f64 = 0.0;
    for m in 1..=3i64 {
        let mut ts = Vec::new();
        let mut sizes = Vec::new();
        for n in 0..=8u64 {
            let kd = decompose_key_relation(m, n, &oracle, &provider, &cfg).map_err(|e| e.to_string())?;
            // round trip through the file format and a fresh relation set
            let text = kd.decomposition.to_text(&[("m", m.to_string()), ("n", n.to_string()), ("target", "key".into())]);
            let (header, entries) = parse_decomposition(&text).map_err(|e| e.to_string())?;
            let (hm, hn): (i64, usize) = (header["m"].parse().unwrap(), header["n"].parse().unwrap());
            let rels = relations_rm(hm, &provider.provide(hm as u64, cfg.i_bound.max(hn as u64)));
            let d = RDecomposition { target: key_target(hn), entries };
            if !d.verify(&rels).map_err(|e| e.to_string())?.is_valid() {
                return Err(format!("m={m} n={n}: decomposition rejected"));
            }
            let size: f64 = d.size(&rels).map_err(|e| e.to_string())?.value.to_string().parse().unwrap_or(f64::NAN);
            let t = ((n + 1) as i64 * m) as f64;
            c_fit = c_fit.max(size / t.powi(k as i32));
            ts.push(t);
            sizes.push(size);
        }
        let r = poly_fit_residual(&ts, &sizes, k);
        worst_fit = worst_fit.max(r);
        if r > 0.01 {
            return Err(format!("m={m}: degree-{k} fit in (n+1)m leaves relative residual {r:.3e}"));
        }
        // growth exponent between n = 3 and n = 8
        let (t1, s1) = (ts[3], sizes[3]);
        let (t2, s2) = (ts[8], sizes[8]);
        let slope = (s2 / s1).ln() / (t2 / t1).ln();
        if slope > k as f64 {
            return Err(format!("m={m}: log-log slope {slope:.2} exceeds {k}"));
        }
    }
    timed(Duration::from_secs(300), start, "decompositions")?;
    Ok(format!(
        "27 decompositions verified; degree-{k} fits within {:.2e}; size <= {c_fit:.1} ((n+1)m)^{k} (configured C = {})",
        worst_fit, cfg.c
    ))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let oracle = HaltingOracle::new(TuringMachine::counter(), 10_000);
    let provided = truncated_gs(2, 3, &oracle);
    for fam in ["G0", "G1", "G2", "G3", "G4"] {
        if !provided.labeled.iter().any(|(l, _)| l.starts_with(fam)) {
            return Err(format!("no {fam} relators in the sample pool"));
        }
    }
    let rels: Vec<Word> = provided.labeled.into_iter().map(|(_, w)| w).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = word_problem_sampling(&rels, 1000, &oracle, &mut rng);
    if !t.passed() {
        return Err(format!("{t:?}"));
    }
    timed(Duration::from_secs(300), start, "sampling")?;
    Ok(format!("{} trivial and {} nontrivial samples classified correctly", t.trivial_samples, t.nontrivial_samples))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let oracle = HaltingOracle::new(TuringMachine::counter(), 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..10_000 {
        let t = insertion_trial(16, &IndexRange::default(), &oracle, &mut rng).map_err(|e| e.to_string())?;
        if !t.passed() {
            return Err(format!("trial {k}: {t:?}"));
        }
    }
    timed(Duration::from_secs(120), start, "insertions")?;
    Ok("10000 relator insertions: eta fixed, idempotent, metrics monotone".into())
}

fn lines_outcome(lines: Vec<selftest::CheckLine>, limit: Duration, start: Instant) -> Outcome {
    let bad: Vec<String> = lines.iter().filter(|l| !l.passed).map(|l| l.to_string()).collect();
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    timed(limit, start, "suite")?;
    Ok(lines.iter().map(|l| format!("{}: {}", l.name, l.detail)).collect::<Vec<_>>().join("; "))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    lines_outcome(selftest::inequalities(0, 100), Duration::from_secs(300), start)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    lines_outcome(vec![selftest::rounding(8, 1000, 16)], Duration::from_secs(60), start)
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    lines_outcome(selftest::sos_checks(9, 50), Duration::from_secs(120), start)
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut lines = vec![selftest::cosets(10, 50)];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = CyclicFreeProduct::new([("a".to_string(), 2), ("b".to_string(), 3), ("c".to_string(), 2)]);
    let (fails, worst) = selftest::coset_case(&g, &["a", "c"], 2, 20, &mut rng);
    lines.push(selftest::CheckLine {
        suite: "certificates",
        name: "coset-expectation-two-involutions".into(),
        passed: fails == 0,
        detail: format!("20 samples in Z2*Z3*Z2 onto <a,c>, {fails} uncertified, worst residual {worst:.3e}"),
    });
    lines_outcome(lines, Duration::from_secs(120), start)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("halting trace value", criterion_1),
        ("end-to-end alpha", criterion_2),
        ("end-to-end beta", criterion_3),
        ("key-relation decomposition", criterion_4),
        ("word-problem sampling", criterion_5),
        ("normal-form invariance", criterion_6),
        ("inequality suite", criterion_7),
        ("sign rounding", criterion_8),
        ("SOS solver", criterion_9),
        ("coset expectation", criterion_10),
    ];
    let results: Vec<(usize, &str, Outcome, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .enumerate()
            .map(|(i, &(name, f))| {
                s.spawn(move || {
                    let start = Instant::now();
                    (i + 1, name, f(), start.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut failed = 0;
    for (i, name, out, dt) in &results {
        match out {
            Ok(d) => println!("criterion {i:>2} PASS  {name} [{:.1}s]: {d}", dt.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("criterion {i:>2} FAIL  {name} [{:.1}s]: {d}", dt.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
