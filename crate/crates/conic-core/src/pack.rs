//! Scaled triangular packing (`svec`) for symmetric matrices.
//!
//! PSD blocks travel through the solver as vectors over the upper triangle in
//! column-major order, with off-diagonal entries scaled by `sqrt(2)`:
//!
//! ```text
//! svec(S) = [ S11, sqrt(2) S12, S22, sqrt(2) S13, sqrt(2) S23, S33, ... ]
//! ```
//!
//! The scaling makes the packing an isometry, `<svec(A), svec(B)> =
//! trace(A B)`, which is the convention the interior-point backend expects for
//! its PSD triangle cone. [`svec`] and [`smat`] are exact inverses of each
//! other up to floating-point rounding of the `sqrt(2)` factors.

use nalgebra::{DMatrix, DVector};

/// `sqrt(2)` scaling applied to packed off-diagonal entries.
pub const SVEC_OFF_DIAG_SCALE: f64 = std::f64::consts::SQRT_2;

// ---------------------------------------------------------------------------
// Index arithmetic
// ---------------------------------------------------------------------------

/// Length of the packed vector for a symmetric matrix of side `n`.
#[inline]
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packed slot of entry `(i, j)` with `i <= j` (upper triangle, column-major).
///
/// Column `j` of the upper triangle occupies slots `j (j + 1) / 2 ..=
/// j (j + 1) / 2 + j`.
#[inline]
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j, "svec_index expects an upper-triangle entry (i <= j)");
    j * (j + 1) / 2 + i
}

// ---------------------------------------------------------------------------
// Packing and unpacking
// ---------------------------------------------------------------------------

/// Pack a symmetric matrix into its scaled upper-triangle vector.
///
/// Only the upper triangle is read; the caller is responsible for symmetry.
pub fn svec(s: &DMatrix<f64>) -> DVector<f64> {
    let n = s.nrows();
    debug_assert_eq!(s.ncols(), n, "svec expects a square matrix");
    let mut out = DVector::zeros(svec_len(n));
    for j in 0..n {
        for i in 0..=j {
            let scale = if i == j { 1.0 } else { SVEC_OFF_DIAG_SCALE };
            out[svec_index(i, j)] = scale * s[(i, j)];
        }
    }
    out
}

/// Unpack a scaled upper-triangle vector into the full symmetric matrix.
pub fn smat(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(n), "packed length must match side n");
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let raw = v[svec_index(i, j)];
            let val = if i == j { raw } else { raw / SVEC_OFF_DIAG_SCALE };
            out[(i, j)] = val;
            out[(j, i)] = val;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    // 1. Slot arithmetic walks the upper triangle column by column.
    #[test]
    fn index_order_is_column_major_upper() {
        // n = 3 order: (0,0) (0,1) (1,1) (0,2) (1,2) (2,2)
        assert_eq!(svec_index(0, 0), 0);
        assert_eq!(svec_index(0, 1), 1);
        assert_eq!(svec_index(1, 1), 2);
        assert_eq!(svec_index(0, 2), 3);
        assert_eq!(svec_index(1, 2), 4);
        assert_eq!(svec_index(2, 2), 5);
    }

    // 2. Round trip: smat(svec(S)) == S.
    #[test]
    fn pack_unpack_round_trip() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, 4.0, 0.5, 4.0, 1.0]);
        let back = smat(&svec(&s), 3);
        assert!((&back - &s).abs().max() < 1e-15, "round trip must be exact");
    }

    // 3. The scaling preserves the trace inner product.
    #[test]
    fn packing_is_an_isometry() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, -1.0, 2.0]);
        let dot = svec(&a).dot(&svec(&b));
        let tr = (&a * &b).trace();
        assert!((dot - tr).abs() < 1e-12, "svec dot {dot} vs trace {tr}");
    }
}
