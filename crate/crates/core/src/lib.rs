//! Exact tooling for a reduction from non-halting to a question about
//! positivity in group algebras: words and star-polynomials, bounded Turing
//! machines, the kernel normal form, the HNN word problem, presentations,
//! the relation compiler, relation decompositions and numerical
//! certificates.

pub mod certificates;
pub mod cli;
pub mod compiler;
pub mod decomp;
pub mod gs;
pub mod ks;
pub mod machines;
pub mod presentations;
pub mod sampling;
pub mod selftest;
pub mod words;
