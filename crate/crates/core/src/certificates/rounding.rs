//! Rounding a near-involution to an exact unitary involution by taking the
//! sign of its hermitian part.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RoundingError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("vector has length {got}, expected {want}")]
    VectorLength { got: usize, want: usize },
    #[error("eigen-solver did not converge")]
    Eigen,
}

/// The five residuals on `xi` and the deviations of the rounded matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingReport {
    /// `|(A^2-1)xi|, |(A*^2-1)xi|, |(AA*-1)xi|, |(A*A-1)xi|, |(A-A*)xi|`.
    pub residuals: [f64; 5],
    pub epsilon: f64,
    /// `|(A - Ã)xi|`.
    pub deviation: f64,
    /// `|(A* - Ã)xi|`.
    pub adjoint_deviation: f64,
    /// Max entry of `Ã^2 - 1`.
    pub involution_defect: f64,
}

impl RoundingReport {
    /// Both deviations within `2 epsilon + slack`.
    pub fn bound_holds(&self, slack: f64) -> bool {
        self.deviation <= 2.0 * self.epsilon + slack && self.adjoint_deviation <= 2.0 * self.epsilon + slack
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `sgn((A + A*)/2)` with `sgn(0) = 1`.
pub fn sign_of_hermitian_part(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, RoundingError> {
    if !a.is_square() {
        return Err(RoundingError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    let h = (a + a.adjoint()).scale(0.5);
    let eig = h.try_symmetric_eigen(1e-14, 10_000).ok_or(RoundingError::Eigen)?;
    let signs = eig.eigenvalues.map(|l| if l >= 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::new(-1.0, 0.0) });
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&signs) * v.adjoint())
}

pub fn sign_round(
    a: &DMatrix<Complex64>,
    xi: &DVector<Complex64>,
) -> Result<(DMatrix<Complex64>, RoundingReport), RoundingError> {
    let rounded = sign_of_hermitian_part(a)?;
    let n = a.nrows();
    if xi.len() != n {
        return Err(RoundingError::VectorLength { got: xi.len(), want: n });
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    let ad = a.adjoint();
    let res = |m: DMatrix<Complex64>| (m * xi).norm();
    let residuals = [
        res(a * a - &id),
        res(&ad * &ad - &id),
        res(a * &ad - &id),
        res(&ad * a - &id),
        res(a - &ad),
    ];
    let epsilon = residuals.iter().copied().fold(0.0, f64::max);
    let report = RoundingReport {
        residuals,
        epsilon,
        deviation: ((a - &rounded) * xi).norm(),
        adjoint_deviation: ((&ad - &rounded) * xi).norm(),
        involution_defect: max_abs(&(&rounded * &rounded - &id)),
    };
    Ok((rounded, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::states::random_unitary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn exact_involution_is_fixed() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let xi = DVector::from_vec(vec![c(0.6), c(0.8)]);
        let (r, rep) = sign_round(&a, &xi).unwrap();
        assert!(max_abs(&(r - &a)) < 1e-12);
        assert!(rep.epsilon < 1e-12);
    }

    #[test]
    fn diagonal_example() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.9), c(-1.1)]));
        let xi = DVector::from_vec(vec![c(1.0), c(0.0)]);
        let (r, rep) = sign_round(&a, &xi).unwrap();
        assert!((r[(0, 0)] - c(1.0)).norm() < 1e-12 && (r[(1, 1)] - c(-1.0)).norm() < 1e-12);
        assert!((rep.deviation - 0.1).abs() < 1e-12);
        // |0.81 - 1| from (i)-(iv), zero from (v)
        assert!((rep.epsilon - 0.19).abs() < 1e-12);
        assert_eq!(rep.residuals[4], 0.0);
        assert!(rep.bound_holds(0.0));
    }

    #[test]
    fn near_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let u = random_unitary(n, &mut rng);
            let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| c(if rng.gen_bool(0.5) { 1.0 } else { -1.0 })));
            let noise = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)));
            let a = &u * d * u.adjoint() + noise;
            let xi = DVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).normalize();
            let (_, rep) = sign_round(&a, &xi).unwrap();
            assert!(rep.bound_holds(1e-9), "{rep:?}");
            assert!(rep.involution_defect < 1e-9);
        }
    }

    #[test]
    fn rejects_rectangular() {
        let a = DMatrix::<Complex64>::zeros(2, 3);
        let xi = DVector::zeros(2);
        assert_eq!(sign_round(&a, &xi).unwrap_err(), RoundingError::NotSquare { rows: 2, cols: 3 });
    }
}
