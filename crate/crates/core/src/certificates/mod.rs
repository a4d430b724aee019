//! Exact and numerical state machinery: the halting representation, Gram
//! searches for sums of squares, sign rounding, finite-dimensional states
//! and the inequality suite.

pub mod halting;
pub mod rounding;
pub mod states;
pub mod sos;
pub mod inequalities;
