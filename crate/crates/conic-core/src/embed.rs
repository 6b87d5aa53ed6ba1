//! Complex Hermitian to real symmetric embedding.
//!
//! The solver kernel is real-valued, so complex linear matrix inequalities are
//! lowered through the standard block embedding
//!
//! ```text
//!              [ Re(H)  -Im(H) ]
//!     T(H)  =  [               ]
//!              [ Im(H)   Re(H) ]
//! ```
//!
//! which maps a Hermitian `n x n` matrix to a symmetric `2n x 2n` one. The
//! embedding is spectrum-faithful: every eigenvalue of `H` appears twice in
//! `T(H)`, so `H` is positive semidefinite exactly when `T(H)` is. That
//! equivalence is what lets one real cone program express complex-valued
//! robustness certificates without a separate complex code path.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Default relative tolerance for the Hermitian-input validation.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Rejected inputs for [`embed_hermitian`].
#[derive(Debug, Error)]
pub enum EmbedError {
    /// The input matrix is not square.
    #[error("embedding requires a square matrix, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    /// The input deviates from its own conjugate transpose beyond tolerance.
    #[error("matrix is not Hermitian: max |H - H^H| entry {max_dev:.3e} exceeds {tol:.3e}")]
    NotHermitian { max_dev: f64, tol: f64 },
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

/// Embed a complex Hermitian matrix as a real symmetric matrix of twice the
/// side, preserving positive semidefiniteness and doubling every eigenvalue's
/// multiplicity.
///
/// The input is validated to be Hermitian within `tol` relative to its
/// largest entry magnitude (clamped at 1), then symmetrized exactly before
/// embedding so the output is bit-symmetric.
///
/// # Example
///
/// ```
/// use conic_core::{embed_hermitian, HERMITIAN_TOL};
/// use nalgebra::DMatrix;
/// use num_complex::Complex64;
///
/// let h = DMatrix::from_element(1, 1, Complex64::new(2.0, 0.0));
/// let t = embed_hermitian(&h, HERMITIAN_TOL).unwrap();
/// assert_eq!(t, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
/// ```
pub fn embed_hermitian(
    h: &DMatrix<Complex64>,
    tol: f64,
) -> Result<DMatrix<f64>, EmbedError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(EmbedError::NotSquare { rows: h.nrows(), cols: h.ncols() });
    }

    let mut max_abs: f64 = 0.0;
    let mut max_dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            max_abs = max_abs.max(h[(i, j)].norm());
            max_dev = max_dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    let scale = max_abs.max(1.0);
    if max_dev > tol * scale {
        return Err(EmbedError::NotHermitian { max_dev, tol: tol * scale });
    }

    // Exact symmetrization: embed (H + H^H) / 2 so rounding in the input
    // cannot leak asymmetry into the real matrix.
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let avg = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            out[(i, j)] = avg.re;
            out[(n + i, n + j)] = avg.re;
            out[(i, n + j)] = -avg.im;
            out[(n + i, j)] = avg.im;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // 1. Scalar case: [[2]] embeds to diag(2, 2).
    #[test]
    fn scalar_embeds_to_doubled_diagonal() {
        let h = DMatrix::from_element(1, 1, c(2.0, 0.0));
        let t = embed_hermitian(&h, HERMITIAN_TOL).unwrap();
        assert_eq!(t, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
    }

    // 2. The pure-imaginary Pauli-like matrix has eigenvalues {1, -1}; its
    //    embedding must carry {1, 1, -1, -1}.
    #[test]
    fn imaginary_offdiagonal_eigenvalues_double() {
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]);
        let t = embed_hermitian(&h, HERMITIAN_TOL).unwrap();
        let mut eigs: Vec<f64> = t.symmetric_eigen().eigenvalues.iter().cloned().collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (got, want) in eigs.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12, "eigenvalues {eigs:?} != {expected:?}");
        }
    }

    // 3. Non-Hermitian input is rejected with the observed deviation.
    #[test]
    fn non_hermitian_is_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        match embed_hermitian(&h, HERMITIAN_TOL) {
            Err(EmbedError::NotHermitian { max_dev, .. }) => {
                assert!((max_dev - 0.5).abs() < 1e-15);
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    // 4. Non-square input is rejected.
    #[test]
    fn non_square_is_rejected() {
        let h = DMatrix::from_element(1, 2, c(0.0, 0.0));
        assert!(matches!(
            embed_hermitian(&h, HERMITIAN_TOL),
            Err(EmbedError::NotSquare { rows: 1, cols: 2 })
        ));
    }

    // 5. A diagonal within-tolerance perturbation still embeds (validation is
    //    relative to the matrix scale).
    #[test]
    fn tolerance_is_relative_to_scale() {
        let big = 1e6;
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[c(big, 0.0), c(big, big * 0.5e-10), c(big, -big * 0.5e-10), c(big, 0.0)],
        );
        assert!(embed_hermitian(&h, HERMITIAN_TOL).is_ok());
    }
}
