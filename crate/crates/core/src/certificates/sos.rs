//! Bounded-degree Gram searches: sums of hermitian squares, and sums of
//! squares plus commutators.
//!
//! The Gram matrix is indexed by normal forms of the monomials of degree at
//! most `d`.  Every entry `(i, j)` contributes to exactly one coefficient
//! class (the normal form of `b_i* b_j`, or its cyclic class), so the affine
//! projection is a per-class shift.  The search alternates that projection
//! with the projection onto the PSD cone and then polishes a low-rank factor
//! by damped Gauss-Newton.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::states::to_f64;
use crate::presentations::{CyclicFreeProduct, GroupPresentation};
use crate::words::{Generator, StarPolynomial, Word};

#[derive(Debug, Error, PartialEq)]
pub enum SosError {
    #[error("basis of {size} monomials exceeds the cap of {cap}")]
    BasisTooLarge { size: usize, cap: usize },
    #[error("polynomial is not self-adjoint in the quotient")]
    NotSelfAdjoint,
    #[error("presentation is not a free product of cyclic groups")]
    UnsupportedPresentation,
    #[error("certificate parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The algebra in which coefficients are compared.
#[derive(Clone, Debug, PartialEq)]
pub enum Quotient {
    /// Free star-algebra: `x` and `x*` are unrelated letters.
    Free,
    /// Every letter is a self-adjoint involution.
    Involutive,
    /// Commuting self-adjoint letters (ordinary real polynomials).
    CommutativeSelfAdjoint,
    /// Group algebra of a free product of cyclic groups; stars are inverses.
    Group(CyclicFreeProduct),
}

impl Quotient {
    pub fn from_presentation(p: &GroupPresentation) -> Result<Quotient, SosError> {
        CyclicFreeProduct::from_presentation(p).map(Quotient::Group).ok_or(SosError::UnsupportedPresentation)
    }

    pub fn normal_form(&self, w: &Word) -> Word {
        match self {
            Quotient::Free => w.clone(),
            Quotient::Involutive => {
                let mut out: Vec<Generator> = Vec::new();
                for l in w.letters() {
                    let u = l.unstarred();
                    if out.last() == Some(&u) {
                        out.pop();
                    } else {
                        out.push(u);
                    }
                }
                Word(out)
            }
            Quotient::CommutativeSelfAdjoint => {
                let mut out: Vec<Generator> = w.letters().iter().map(Generator::unstarred).collect();
                out.sort();
                Word(out)
            }
            Quotient::Group(g) => g.normal_form(w),
        }
    }

    pub fn reduce(&self, p: &StarPolynomial) -> StarPolynomial {
        p.map_words(|w| self.normal_form(w))
    }

    /// Letters available for basis monomials.
    fn letters(&self, f: &StarPolynomial) -> Vec<Generator> {
        let base: BTreeSet<Generator> = f.generators().iter().map(Generator::unstarred).collect();
        let mut out = Vec::new();
        for g in base {
            out.push(g);
            let starred_needed = match self {
                Quotient::Free => true,
                Quotient::Group(c) => c.orders.get(g.name.as_str()).copied().unwrap_or(0) != 2,
                _ => false,
            };
            if starred_needed {
                out.push(g.star());
            }
        }
        out
    }

    /// Normal forms of all monomials of degree at most `d`, sorted.
    pub fn basis(&self, f: &StarPolynomial, d: usize) -> Vec<Word> {
        let letters = self.letters(f);
        let mut seen: BTreeSet<Word> = BTreeSet::new();
        let mut layer = vec![Word::empty()];
        seen.insert(Word::empty());
        for _ in 0..d {
            let mut next = Vec::new();
            for w in &layer {
                for l in &letters {
                    let nf = self.normal_form(&w.concat(&Word::letter(*l)));
                    if seen.insert(nf.clone()) {
                        next.push(nf);
                    }
                }
            }
            layer = next;
        }
        seen.into_iter().collect()
    }

    /// Walk of single-letter rotations from `w` to the least word of its
    /// cyclic class.  Each step `(a, v)` records `a v - v a = w_t - w_{t+1}`.
    pub fn cyclic_walk(&self, w: &Word) -> (Word, Vec<(Word, Word)>) {
        let mut seq = vec![self.normal_form(w)];
        let mut steps = Vec::new();
        let mut index: HashMap<Word, usize> = HashMap::new();
        index.insert(seq[0].clone(), 0);
        let cycle_start = loop {
            let cur = seq.last().expect("nonempty").clone();
            if cur.is_empty() {
                break seq.len() - 1;
            }
            let a = Word(vec![cur.letters()[0]]);
            let v = Word(cur.letters()[1..].to_vec());
            let next = self.normal_form(&v.concat(&a));
            steps.push((a, v));
            if let Some(&i) = index.get(&next) {
                break i;
            }
            index.insert(next.clone(), seq.len());
            seq.push(next);
        };
        let rep = seq[cycle_start..].iter().min().expect("nonempty cycle").clone();
        let pos = seq.iter().position(|x| *x == rep).expect("rep on the walk");
        steps.truncate(pos);
        (rep, steps)
    }
}

#[derive(Clone, Debug)]
pub struct SosOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub stall_window: usize,
    pub stall_floor: f64,
    pub max_basis: usize,
    pub polish_iterations: usize,
}

impl Default for SosOptions {
    fn default() -> Self {
        SosOptions {
            tolerance: 1e-8,
            max_iterations: 3000,
            stall_window: 200,
            stall_floor: 1e-4,
            max_basis: 300,
            polish_iterations: 300,
        }
    }
}

/// `f = sum_i b_i* b_i` with `b_i = sum_j factor[(j, i)] basis[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramCertificate {
    pub basis: Vec<Word>,
    /// Lower triangular, `G = factor factor^T`.
    pub factor: DMatrix<f64>,
    pub residual: f64,
    pub min_eigenvalue: f64,
}

impl GramCertificate {
    pub fn gram(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    /// Coefficients of the `b_i` over the basis, dropping zero columns.
    pub fn squares(&self) -> Vec<Vec<f64>> {
        (0..self.factor.ncols())
            .map(|c| self.factor.column(c).iter().copied().collect::<Vec<f64>>())
            .filter(|col| col.iter().any(|x| x.abs() > 1e-14))
            .collect()
    }

    /// `sum_i b_i* b_i` collected in the quotient.
    pub fn expand(&self, q: &Quotient) -> BTreeMap<Word, f64> {
        let g = self.gram();
        let mut out = BTreeMap::new();
        for (i, bi) in self.basis.iter().enumerate() {
            for (j, bj) in self.basis.iter().enumerate() {
                if g[(i, j)] != 0.0 {
                    *out.entry(q.normal_form(&bi.star().concat(bj))).or_insert(0.0) += g[(i, j)];
                }
            }
        }
        out
    }

    /// Max coefficient mismatch against `f`, recomputed from scratch.
    pub fn check(&self, f: &StarPolynomial, q: &Quotient) -> f64 {
        max_mismatch(&reduce_f64(f, q), &self.expand(q))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("basis\n");
        for w in &self.basis {
            s += &format!("{w}\n");
        }
        s += "factor\n";
        for r in 0..self.factor.nrows() {
            let row: Vec<String> = (0..self.factor.ncols()).map(|c| format!("{:e}", self.factor[(r, c)])).collect();
            s += &row.join(" ");
            s.push('\n');
        }
        s += &format!("residual = {:e}\nmin_eigenvalue = {:e}\n", self.residual, self.min_eigenvalue);
        s
    }

    pub fn parse(text: &str) -> Result<GramCertificate, SosError> {
        let err = |line: usize, msg: &str| SosError::Parse { line: line + 1, msg: msg.into() };
        let mut basis = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut residual = None;
        let mut min_eigenvalue = None;
        let mut section = "";
        for (n, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if t == "basis" || t == "factor" {
                section = if t == "basis" { "basis" } else { "factor" };
                continue;
            }
            if let Some((k, v)) = t.split_once('=') {
                let x: f64 = v.trim().parse().map_err(|_| err(n, "bad number"))?;
                match k.trim() {
                    "residual" => residual = Some(x),
                    "min_eigenvalue" => min_eigenvalue = Some(x),
                    _ => return Err(err(n, "unknown footer key")),
                }
                continue;
            }
            match section {
                "basis" => basis.push(Word::parse(t).map_err(|e| err(n, &e.msg))?),
                "factor" => rows.push(
                    t.split_whitespace()
                        .map(|x| x.parse::<f64>().map_err(|_| err(n, "bad factor entry")))
                        .collect::<Result<_, _>>()?,
                ),
                _ => return Err(err(n, "expected `basis`")),
            }
        }
        let k = basis.len();
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(err(0, "factor dimensions do not match basis"));
        }
        let factor = DMatrix::from_fn(k, k, |r, c| rows[r][c]);
        Ok(GramCertificate {
            basis,
            factor,
            residual: residual.ok_or_else(|| err(0, "missing residual"))?,
            min_eigenvalue: min_eigenvalue.ok_or_else(|| err(0, "missing min_eigenvalue"))?,
        })
    }
}

/// Best attempt when no certificate was found.
#[derive(Clone, Debug, PartialEq)]
pub struct InfeasibilityReport {
    pub basis: Vec<Word>,
    pub residual_floor: f64,
    pub iterations: usize,
    pub best: GramCertificate,
}

impl InfeasibilityReport {
    pub fn to_text(&self) -> String {
        let mut s = self.best.to_text();
        s += &format!("residual_floor = {:e}\niterations = {}\n", self.residual_floor, self.iterations);
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SosOutcome {
    Certified(GramCertificate),
    Infeasible(InfeasibilityReport),
}

/// `coeff (left right - right left)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Commutator {
    pub coeff: f64,
    pub left: Word,
    pub right: Word,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceCertificate {
    pub squares: GramCertificate,
    pub commutators: Vec<Commutator>,
    /// Max coefficient mismatch of `f - squares - commutators`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceOutcome {
    Certified(TraceCertificate),
    Infeasible(InfeasibilityReport),
}

fn reduce_f64(f: &StarPolynomial, q: &Quotient) -> BTreeMap<Word, f64> {
    let mut out = BTreeMap::new();
    for (w, c) in q.reduce(f).terms() {
        out.insert(w.clone(), to_f64(c));
    }
    out
}

fn max_mismatch(a: &BTreeMap<Word, f64>, b: &BTreeMap<Word, f64>) -> f64 {
    let keys: BTreeSet<&Word> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Gram entries grouped by coefficient class.
struct GramProblem {
    basis: Vec<Word>,
    class_of: Vec<usize>,
    class_size: Vec<usize>,
    targets: Vec<f64>,
    /// Mass of `f` on classes no Gram entry reaches.
    unreachable: f64,
}

impl GramProblem {
    fn new(basis: Vec<Word>, f: &BTreeMap<Word, f64>, mut key: impl FnMut(&Word) -> Word) -> GramProblem {
        let n = basis.len();
        let mut ids: HashMap<Word, usize> = HashMap::new();
        let mut class_of = vec![0; n * n];
        let mut class_size = Vec::new();
        for i in 0..n {
            let left = basis[i].star();
            for j in 0..n {
                let k = key(&left.concat(&basis[j]));
                let next = ids.len();
                let id = *ids.entry(k).or_insert(next);
                if id == class_size.len() {
                    class_size.push(0);
                }
                class_size[id] += 1;
                class_of[i * n + j] = id;
            }
        }
        let mut targets = vec![0.0; class_size.len()];
        let mut missing: BTreeMap<Word, f64> = BTreeMap::new();
        for (w, c) in f {
            let k = key(w);
            match ids.get(&k) {
                Some(&id) => targets[id] += c,
                None => *missing.entry(k).or_insert(0.0) += c,
            }
        }
        let unreachable = missing.values().map(|c| c.abs()).fold(0.0, f64::max);
        GramProblem { basis, class_of, class_size, targets, unreachable }
    }

    fn n(&self) -> usize {
        self.basis.len()
    }

    fn class_residuals(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let n = self.n();
        let mut r: Vec<f64> = self.targets.iter().map(|t| -t).collect();
        for i in 0..n {
            for j in 0..n {
                r[self.class_of[i * n + j]] += g[(i, j)];
            }
        }
        r
    }

    fn residual(&self, g: &DMatrix<f64>) -> f64 {
        self.class_residuals(g).iter().map(|x| x.abs()).fold(self.unreachable, f64::max)
    }

    fn project_affine(&self, g: &mut DMatrix<f64>) {
        let n = self.n();
        let r = self.class_residuals(g);
        for i in 0..n {
            for j in 0..n {
                let k = self.class_of[i * n + j];
                g[(i, j)] -= r[k] / self.class_size[k] as f64;
            }
        }
    }

    fn project_psd(g: &DMatrix<f64>) -> DMatrix<f64> {
        let sym = (g + g.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
    }

    fn alternating(&self, opts: &SosOptions) -> (DMatrix<f64>, f64, usize) {
        let n = self.n();
        let mut g = DMatrix::<f64>::zeros(n, n);
        let mut best = (g.clone(), self.residual(&g));
        let mut window_best = best.1;
        let mut it = 0;
        while it < opts.max_iterations && best.1 > opts.tolerance {
            it += 1;
            self.project_affine(&mut g);
            g = Self::project_psd(&g);
            let res = self.residual(&g);
            if res < best.1 {
                best = (g.clone(), res);
            }
            if it % opts.stall_window == 0 {
                if best.1 > opts.stall_floor && best.1 > 0.99 * window_best {
                    break;
                }
                window_best = best.1;
            }
        }
        (best.0, best.1, it)
    }

    /// Candidate factor ranks: numerical ranks of the start at several
    /// relative thresholds, each also plus one.
    fn candidate_ranks(eigenvalues: &DVector<f64>) -> Vec<usize> {
        let n = eigenvalues.len();
        let top = eigenvalues.iter().copied().fold(0.0, f64::max);
        let mut ranks = BTreeSet::new();
        for thr in [1e-1, 1e-2, 1e-3, 1e-6, 1e-9] {
            let k = eigenvalues.iter().filter(|l| **l > thr * top.max(1e-300)).count();
            ranks.insert(k.clamp(1, n));
            ranks.insert((k + 1).clamp(1, n));
        }
        ranks.into_iter().collect()
    }

    /// Damped Gauss-Newton on `G = L L^T` with `L` of rank `r`, started from
    /// the top `r` eigenpairs of `start`.
    fn polish(&self, start: &DMatrix<f64>, r: usize, opts: &SosOptions) -> Option<DMatrix<f64>> {
        let n = self.n();
        if n * r > 2500 {
            return None;
        }
        let eig = ((start + start.transpose()) * 0.5).symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
        let mut l = DMatrix::from_fn(n, r, |i, c| {
            let k = order[c];
            eig.eigenvectors[(i, k)] * eig.eigenvalues[k].max(0.0).sqrt()
        });
        // a small perturbation so columns with zero weight still have a gradient
        for i in 0..n {
            for c in 0..r {
                l[(i, c)] += 1e-6 * ((((i + 1) * (c + 3) * 7) % 11) as f64 - 5.0) / 5.0;
            }
        }
        let classes = self.targets.len();
        let cost = |l: &DMatrix<f64>| -> (Vec<f64>, f64) {
            let r = self.class_residuals(&(l * l.transpose()));
            let c = r.iter().map(|x| x * x).sum();
            (r, c)
        };
        let (mut res, mut c) = cost(&l);
        let mut mu = 1e-3;
        for _ in 0..opts.polish_iterations {
            if res.iter().map(|x| x.abs()).fold(0.0, f64::max) <= opts.tolerance * 1e-2 {
                break;
            }
            let vars = n * r;
            let mut jac = DMatrix::<f64>::zeros(classes, vars);
            for i in 0..n {
                for j in 0..n {
                    let k = self.class_of[i * n + j];
                    for b in 0..r {
                        jac[(k, i * r + b)] += l[(j, b)];
                        jac[(k, j * r + b)] += l[(i, b)];
                    }
                }
            }
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let grad = &jt * DVector::from_vec(res.clone());
            let mut improved = false;
            for _ in 0..12 {
                let mut a = jtj.clone();
                for d in 0..vars {
                    a[(d, d)] += mu * (1.0 + jtj[(d, d)]);
                }
                let Some(ch) = a.cholesky() else {
                    mu *= 10.0;
                    continue;
                };
                let step = ch.solve(&(-&grad));
                let trial = DMatrix::from_fn(n, r, |i, b| l[(i, b)] + step[i * r + b]);
                let (tres, tc) = cost(&trial);
                if tc < c {
                    l = trial;
                    res = tres;
                    c = tc;
                    mu = (mu / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
                mu *= 4.0;
            }
            if !improved {
                break;
            }
        }
        Some(&l * l.transpose())
    }

    fn certificate(&self, g: &DMatrix<f64>) -> GramCertificate {
        let n = self.n();
        let eig = ((g + g.transpose()) * 0.5).symmetric_eigen();
        let root = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, c)] * eig.eigenvalues[c].max(0.0).sqrt());
        // root = R^T Q^T from the QR of root^T, so R^T is a lower triangular factor
        let factor = if n == 0 { root } else { root.transpose().qr().r().transpose() };
        let gram = &factor * factor.transpose();
        let min_eigenvalue = if n == 0 { 0.0 } else { gram.clone().symmetric_eigen().eigenvalues.min() };
        GramCertificate { basis: self.basis.clone(), factor, residual: self.residual(&gram), min_eigenvalue }
    }

    fn solve(&self, opts: &SosOptions) -> (GramCertificate, usize) {
        let (g, res, it) = self.alternating(opts);
        let target = opts.tolerance * 1e-2;
        if res <= target {
            return (self.certificate(&g), it);
        }
        // the projections converge slowly when the solution sits on the
        // boundary of the cone; finish with low-rank Gauss-Newton
        let mut best = self.certificate(&g);
        let eig = ((&g + g.transpose()) * 0.5).symmetric_eigen();
        for r in Self::candidate_ranks(&eig.eigenvalues) {
            if let Some(p) = self.polish(&g, r, opts) {
                let c = self.certificate(&p);
                if c.residual < best.residual {
                    best = c;
                }
                if best.residual <= target {
                    break;
                }
            }
        }
        (best, it)
    }
}

fn outcome(cert: GramCertificate, it: usize, opts: &SosOptions) -> SosOutcome {
    if cert.residual <= opts.tolerance && cert.min_eigenvalue >= -opts.tolerance {
        SosOutcome::Certified(cert)
    } else {
        SosOutcome::Infeasible(InfeasibilityReport {
            basis: cert.basis.clone(),
            residual_floor: cert.residual,
            iterations: it,
            best: cert,
        })
    }
}

fn checked_basis(f: &StarPolynomial, q: &Quotient, degree: usize, opts: &SosOptions) -> Result<Vec<Word>, SosError> {
    let basis = q.basis(f, degree);
    if basis.len() > opts.max_basis {
        return Err(SosError::BasisTooLarge { size: basis.len(), cap: opts.max_basis });
    }
    Ok(basis)
}

pub fn sos_search(f: &StarPolynomial, q: &Quotient, degree: usize, opts: &SosOptions) -> Result<SosOutcome, SosError> {
    let reduced = q.reduce(f);
    if q.reduce(&reduced.star()) != reduced {
        return Err(SosError::NotSelfAdjoint);
    }
    let basis = checked_basis(f, q, degree, opts)?;
    let problem = GramProblem::new(basis, &reduce_f64(f, q), |w| q.normal_form(w));
    let (cert, it) = problem.solve(opts);
    Ok(outcome(cert, it, opts))
}

/// Squares first; if that fails, match coefficients up to cyclic
/// equivalence and return the difference as explicit commutators.
pub fn trace_sos_search(
    f: &StarPolynomial,
    q: &Quotient,
    degree: usize,
    opts: &SosOptions,
) -> Result<TraceOutcome, SosError> {
    let reduced = q.reduce(f);
    if q.reduce(&reduced.star()) == reduced {
        if let SosOutcome::Certified(c) = sos_search(f, q, degree, opts)? {
            let residual = c.residual;
            return Ok(TraceOutcome::Certified(TraceCertificate { squares: c, commutators: Vec::new(), residual }));
        }
    }
    let basis = checked_basis(f, q, degree, opts)?;
    let target = reduce_f64(f, q);
    let mut walks: HashMap<Word, (Word, Vec<(Word, Word)>)> = HashMap::new();
    let mut walk = |w: &Word| walks.entry(w.clone()).or_insert_with(|| q.cyclic_walk(w)).clone();
    let problem = GramProblem::new(basis, &target, |w| walk(w).0);
    let (squares, it) = problem.solve(opts);
    let mut diff = target.clone();
    for (w, c) in squares.expand(q) {
        *diff.entry(w).or_insert(0.0) -= c;
    }
    let mut commutators = Vec::new();
    for (w, d) in &diff {
        if d.abs() < 1e-15 {
            continue;
        }
        for (a, v) in walk(w).1 {
            commutators.push(Commutator { coeff: *d, left: a, right: v });
        }
    }
    let cert = TraceCertificate { residual: trace_residual(f, q, &squares, &commutators), squares, commutators };
    if cert.residual <= opts.tolerance && cert.squares.min_eigenvalue >= -opts.tolerance {
        Ok(TraceOutcome::Certified(cert))
    } else {
        Ok(TraceOutcome::Infeasible(InfeasibilityReport {
            basis: cert.squares.basis.clone(),
            residual_floor: cert.residual,
            iterations: it,
            best: cert.squares,
        }))
    }
}

/// Max coefficient of `f - sum b_i* b_i - sum c [g, h]` in the quotient.
pub fn trace_residual(f: &StarPolynomial, q: &Quotient, squares: &GramCertificate, comms: &[Commutator]) -> f64 {
    let mut total = squares.expand(q);
    for c in comms {
        *total.entry(q.normal_form(&c.left.concat(&c.right))).or_insert(0.0) += c.coeff;
        *total.entry(q.normal_form(&c.right.concat(&c.left))).or_insert(0.0) -= c.coeff;
    }
    max_mismatch(&reduce_f64(f, q), &total)
}

impl fmt::Display for TraceCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.squares.to_text())?;
        writeln!(f, "commutators")?;
        for c in &self.commutators {
            writeln!(f, "{:e} : {} : {}", c.coeff, c.left, c.right)?;
        }
        writeln!(f, "trace_residual = {:e}", self.residual)
    }
}
