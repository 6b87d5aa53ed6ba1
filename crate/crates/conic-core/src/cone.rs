//! Cone descriptors and per-cone membership residuals.
//!
//! Every constraint block in a [`crate::ConicProgram`] pins an affine
//! expression `v(x) = constants + coeffs * x` inside one cone. The cones here
//! are the four symmetric cones the interior-point backend supports; positive
//! semidefinite blocks are stored in scaled-vector (`svec`) packing, so their
//! row count is `n (n + 1) / 2` for a matrix of side `n`.
//!
//! Residuals are computed with plain dense linear algebra, independently of
//! the solver, so a claimed-optimal point can be re-certified without trusting
//! the backend's own termination criteria.

use nalgebra::DVector;

use crate::pack::{smat, svec_len};

// ---------------------------------------------------------------------------
// Cone descriptor
// ---------------------------------------------------------------------------

/// One cone in the ordered cone product of a program.
///
/// The `usize` payload is the natural dimension of the cone: number of rows
/// for equality/inequality/second-order cones, and the matrix *side* for
/// positive semidefinite cones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// `v = 0` componentwise (equality constraints), `n` rows.
    Zero(usize),
    /// `v >= 0` componentwise, `n` rows.
    Nonneg(usize),
    /// Second-order cone `v[0] >= ||v[1..]||_2`, `n` rows total (`n >= 2`).
    Soc(usize),
    /// Real symmetric positive semidefinite cone for a matrix of side `n`,
    /// packed as an `svec` of length `n (n + 1) / 2`.
    Psd(usize),
}

impl Cone {
    /// Number of rows this cone occupies in the stacked constraint system.
    #[inline]
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::Nonneg(n) | Cone::Soc(n) => n,
            Cone::Psd(n) => svec_len(n),
        }
    }

    /// Matrix side for PSD cones, `None` otherwise.
    #[inline]
    pub fn psd_side(&self) -> Option<usize> {
        match *self {
            Cone::Psd(n) => Some(n),
            _ => None,
        }
    }

    /// Membership violation of a value vector: `0.0` means `v` lies in the
    /// cone, positive values measure the distance-like defect below.
    ///
    /// * zero cone: `max_i |v_i|`
    /// * nonnegative cone: `max(0, -min_i v_i)`
    /// * second-order cone: `max(0, ||v[1..]|| - v[0])`
    /// * PSD cone: `max(0, -lambda_min(smat(v)))` via a dense symmetric
    ///   eigensolve.
    pub fn violation(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.rows(), "value length must match cone rows");
        match *self {
            Cone::Zero(_) => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
            Cone::Nonneg(_) => v.iter().fold(0.0f64, |acc, x| acc.max(-x)).max(0.0),
            Cone::Soc(_) => {
                let tail: f64 = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                (tail - v[0]).max(0.0)
            }
            Cone::Psd(n) => {
                let mat = smat(&DVector::from_column_slice(v), n);
                let eig = mat.symmetric_eigen();
                let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                (-lambda_min).max(0.0)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pack::svec;
    use nalgebra::DMatrix;

    // 1. Row accounting, including the triangular PSD packing.
    #[test]
    fn rows_match_cone_dimension() {
        assert_eq!(Cone::Zero(3).rows(), 3);
        assert_eq!(Cone::Nonneg(5).rows(), 5);
        assert_eq!(Cone::Soc(4).rows(), 4);
        assert_eq!(Cone::Psd(1).rows(), 1);
        assert_eq!(Cone::Psd(4).rows(), 10);
        assert_eq!(Cone::Psd(56).rows(), 56 * 57 / 2);
    }

    // 2. Componentwise cones report the worst single-row defect.
    #[test]
    fn zero_and_nonneg_violations() {
        assert_eq!(Cone::Zero(2).violation(&[0.0, 0.0]), 0.0);
        assert_eq!(Cone::Zero(2).violation(&[1e-3, -2e-3]), 2e-3);
        assert_eq!(Cone::Nonneg(3).violation(&[0.5, 0.0, 1.0]), 0.0);
        assert_eq!(Cone::Nonneg(3).violation(&[0.5, -0.25, 1.0]), 0.25);
    }

    // 3. Second-order cone defect is the norm excess of the tail.
    #[test]
    fn soc_violation() {
        assert_eq!(Cone::Soc(3).violation(&[5.0, 3.0, 4.0]), 0.0);
        let v = Cone::Soc(3).violation(&[4.0, 3.0, 4.0]);
        assert!((v - 1.0).abs() < 1e-12, "expected defect 1, got {v}");
    }

    // 4. PSD defect equals the magnitude of the most negative eigenvalue.
    #[test]
    fn psd_violation_is_negative_eigenvalue() {
        // diag(2, -0.5) has lambda_min = -0.5.
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -0.5]);
        let v = Cone::Psd(2).violation(svec(&m).as_slice());
        assert!((v - 0.5).abs() < 1e-12, "expected defect 0.5, got {v}");
        // Identity is interior.
        let eye = DMatrix::identity(3, 3);
        assert_eq!(Cone::Psd(3).violation(svec(&eye).as_slice()), 0.0);
    }
}
