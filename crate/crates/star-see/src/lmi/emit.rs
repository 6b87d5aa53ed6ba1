//! Lowering of complex-affine constraints to real conic blocks.
//!
//! A Hermitian matrix-inequality `M(x) >= 0` over complex-affine entries is
//! lowered through the real embedding `[[Re M, -Im M], [Im M, Re M]]`, which
//! is positive semidefinite exactly when `M` is. The embedded matrix is
//! symmetric-affine in the same real variables, so each scaled-triangle
//! (`svec`) row is one sparse affine row of a PSD block. Scalar inequalities
//! and norm bounds lower through the same [`LinC`] expressions by splitting
//! real and imaginary parts.
//!
//! Every lowering validates Hermitian symmetry at the coefficient level
//! first; a defect means the caller built a malformed certificate, which must
//! fail loudly rather than produce a subtly wrong cone.

use conic_core::{svec_index, svec_len, Cone, ConicProgram, ConstraintBlock, ProgramError};
use thiserror::Error;

use super::affine::{CMat, LinC};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Tolerance on coefficient-level Hermitian symmetry and realness checks,
/// relative to the largest coefficient magnitude in the expression.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Rejections raised while lowering expression-level constraints.
#[derive(Debug, Error)]
pub enum EmitError {
    /// A matrix claimed Hermitian has asymmetric coefficients.
    #[error("block '{name}': Hermitian defect {defect:.3e} exceeds tolerance")]
    NotHermitian { name: String, defect: f64 },
    /// A scalar expression required to be real-valued has imaginary
    /// coefficients.
    #[error("block '{name}': imaginary coefficient {magnitude:.3e} on a real row")]
    NotReal { name: String, magnitude: f64 },
    /// The underlying program rejected the assembled block.
    #[error("block lowering failed: {0}")]
    Program(#[from] ProgramError),
}

// ---------------------------------------------------------------------------
// Real rows
// ---------------------------------------------------------------------------

/// Extract the real part of an expression as a sparse row, rejecting
/// expressions with genuinely complex value.
fn real_row(name: &str, e: &LinC) -> Result<(Vec<(usize, f64)>, f64), EmitError> {
    let scale = 1.0f64.max(e.max_coeff());
    let (im_terms, im_const) = e.im_parts();
    let worst = im_terms.iter().fold(im_const.abs(), |acc, &(_, c)| acc.max(c.abs()));
    if worst > SYMMETRY_TOL * scale {
        return Err(EmitError::NotReal { name: name.to_string(), magnitude: worst });
    }
    Ok(e.re_parts())
}

/// Append one `expr >= 0` row (the expression must be real-valued).
///
/// An empty expression list is a no-op: a sign group with nothing in it
/// constrains nothing, so no block is emitted.
pub fn add_nonneg(prog: &mut ConicProgram, name: &str, exprs: &[LinC]) -> Result<(), EmitError> {
    if exprs.is_empty() {
        return Ok(());
    }
    let mut coeffs = Vec::new();
    let mut constants = Vec::with_capacity(exprs.len());
    for (row, e) in exprs.iter().enumerate() {
        let (terms, constant) = real_row(name, e)?;
        constants.push(constant);
        coeffs.extend(terms.into_iter().map(|(var, c)| (row, var, c)));
    }
    prog.add_block(ConstraintBlock {
        name: name.to_string(),
        cone: Cone::Nonneg(exprs.len()),
        coeffs,
        constants,
    })?;
    Ok(())
}

/// Append `expr == 0` rows (each expression must be real-valued).
///
/// An empty expression list is a no-op, matching [`add_nonneg`].
pub fn add_zero(prog: &mut ConicProgram, name: &str, exprs: &[LinC]) -> Result<(), EmitError> {
    if exprs.is_empty() {
        return Ok(());
    }
    let mut coeffs = Vec::new();
    let mut constants = Vec::with_capacity(exprs.len());
    for (row, e) in exprs.iter().enumerate() {
        let (terms, constant) = real_row(name, e)?;
        constants.push(constant);
        coeffs.extend(terms.into_iter().map(|(var, c)| (row, var, c)));
    }
    prog.add_block(ConstraintBlock {
        name: name.to_string(),
        cone: Cone::Zero(exprs.len()),
        coeffs,
        constants,
    })?;
    Ok(())
}

/// Append a second-order cone constraint `head >= || stack ||_2`.
///
/// `head` must be real-valued; each entry of `stack` contributes its real and
/// imaginary parts as separate rows, so complex entries are measured in
/// modulus.
pub fn add_soc(
    prog: &mut ConicProgram,
    name: &str,
    head: &LinC,
    stack: &[LinC],
) -> Result<(), EmitError> {
    let mut coeffs = Vec::new();
    let mut constants = Vec::new();
    let (terms, constant) = real_row(name, head)?;
    constants.push(constant);
    coeffs.extend(terms.into_iter().map(|(var, c)| (0usize, var, c)));
    for e in stack {
        for (terms, constant) in [e.re_parts(), e.im_parts()] {
            let row = constants.len();
            constants.push(constant);
            coeffs.extend(terms.into_iter().map(|(var, c)| (row, var, c)));
        }
    }
    prog.add_block(ConstraintBlock {
        name: name.to_string(),
        cone: Cone::Soc(constants.len()),
        coeffs,
        constants,
    })?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Hermitian matrix inequalities
// ---------------------------------------------------------------------------

/// Append a PSD block enforcing `M(x) >= 0` for a Hermitian-affine `M`.
///
/// The complex `n x n` matrix is validated for coefficient-level Hermitian
/// symmetry, exactly symmetrized, and embedded as the real `2n x 2n` matrix
/// `[[Re M, -Im M], [Im M, Re M]]`, whose scaled upper triangle forms the
/// block rows.
pub fn add_psd(prog: &mut ConicProgram, name: &str, m: &CMat) -> Result<(), EmitError> {
    let (nr, nc) = m.shape();
    assert_eq!(nr, nc, "PSD block requires a square matrix");
    let n = nr;

    let scale_ref = {
        let mut worst = 1.0f64;
        for c in 0..n {
            for r in 0..n {
                worst = worst.max(m.get(r, c).max_coeff());
            }
        }
        worst
    };
    let defect = m.hermitian_defect();
    if defect > SYMMETRY_TOL * scale_ref {
        return Err(EmitError::NotHermitian { name: name.to_string(), defect });
    }
    let m = m.hermitian_part();

    let side = 2 * n;
    let rows = svec_len(side);
    let mut coeffs = Vec::new();
    let mut constants = vec![0.0; rows];

    // Real-embedding entry at (i, j), i <= j, by quadrant. The lower-left
    // quadrant (i >= n, j < n) never appears in the upper triangle.
    for j in 0..side {
        for i in 0..=j {
            let slot = svec_index(i, j);
            let scale =
                if i == j { 1.0 } else { conic_core::SVEC_OFF_DIAG_SCALE };
            let (entry, take_im, sign) = match (i < n, j < n) {
                (true, true) => (m.get(i, j), false, 1.0),
                (true, false) => (m.get(i, j - n), true, -1.0),
                (false, false) => (m.get(i - n, j - n), false, 1.0),
                (false, true) => unreachable!("lower-left quadrant in upper triangle"),
            };
            let (terms, constant) = if take_im { entry.im_parts() } else { entry.re_parts() };
            constants[slot] = sign * scale * constant;
            coeffs.extend(terms.into_iter().map(|(var, c)| (slot, var, sign * scale * c)));
        }
    }

    prog.add_block(ConstraintBlock {
        name: name.to_string(),
        cone: Cone::Psd(side),
        coeffs,
        constants,
    })?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use conic_core::{embed_hermitian, smat, solve, SolveStatus, SolverTolerances, HERMITIAN_TOL};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // 1. Constant Hermitian matrices lower to exactly their real embedding.
    #[test]
    fn psd_lowering_matches_direct_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..5usize);
            let raw = DMatrix::from_fn(n, n, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let herm = (&raw + raw.adjoint()) * c(0.5, 0.0);

            let mut cm = CMat::zeros(n, n);
            for j in 0..n {
                for i in 0..n {
                    cm.set(i, j, LinC::constant(herm[(i, j)]));
                }
            }
            let mut prog = ConicProgram::new();
            add_psd(&mut prog, "embed", &cm).expect("lowering should succeed");

            let block = &prog.blocks()[0];
            let packed = block.value(&[]);
            let direct = embed_hermitian(&herm, HERMITIAN_TOL).expect("numeric embedding");
            let unpacked = smat(&nalgebra::DVector::from_vec(packed), 2 * n);
            assert!(
                (unpacked - direct).norm() < 1e-12,
                "svec lowering must reproduce the numeric real embedding"
            );
        }
    }

    // 2. Asymmetric coefficients are rejected, not silently symmetrized past
    //    tolerance.
    #[test]
    fn asymmetric_matrix_is_rejected() {
        let mut cm = CMat::zeros(2, 2);
        cm.set(0, 1, LinC::constant(c(1.0, 0.0)));
        cm.set(1, 0, LinC::constant(c(0.0, 0.0)));
        let mut prog = ConicProgram::new();
        let err = add_psd(&mut prog, "bad", &cm);
        assert!(matches!(err, Err(EmitError::NotHermitian { .. })));
    }

    // 3. End-to-end variable LMI: min t with [[t, 1+i], [1-i, t]] >= 0 has
    //    optimum t = |1 + i| = sqrt(2).
    #[test]
    fn complex_lmi_solves_to_known_optimum() {
        let mut prog = ConicProgram::new();
        let t = prog.add_var("t");
        prog.set_objective(vec![(t, 1.0)], false).unwrap();

        let mut m = CMat::zeros(2, 2);
        m.set(0, 0, LinC::var(t));
        m.set(1, 1, LinC::var(t));
        m.set(0, 1, LinC::constant(c(1.0, 1.0)));
        m.set(1, 0, LinC::constant(c(1.0, -1.0)));
        add_psd(&mut prog, "lmi", &m).unwrap();

        let sol = solve(&prog, &SolverTolerances::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            (sol.objective_value - 2.0f64.sqrt()).abs() < 1e-6,
            "expected sqrt(2), got {}",
            sol.objective_value
        );
    }

    // 4. Complex SOC rows measure modulus: min s with s >= |z|, z = 3 + 4i
    //    fixed, gives s = 5.
    #[test]
    fn soc_rows_measure_complex_modulus() {
        let mut prog = ConicProgram::new();
        let s = prog.add_var("s");
        prog.set_objective(vec![(s, 1.0)], false).unwrap();
        add_soc(&mut prog, "modulus", &LinC::var(s), &[LinC::constant(c(3.0, 4.0))]).unwrap();
        let sol = solve(&prog, &SolverTolerances::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 5.0).abs() < 1e-6);
    }

    // 5. Real rows with stray imaginary coefficients are rejected.
    #[test]
    fn complex_valued_scalar_rows_are_rejected() {
        let mut prog = ConicProgram::new();
        let x = prog.add_var("x");
        let e = LinC { terms: vec![(x, c(1.0, 0.5))], constant: c(0.0, 0.0) };
        assert!(matches!(
            add_nonneg(&mut prog, "bad-real", &[e]),
            Err(EmitError::NotReal { .. })
        ));
    }

    // 6. Equality rows pin values exactly: x == 2 via zero cone.
    #[test]
    fn zero_cone_rows_enforce_equality() {
        let mut prog = ConicProgram::new();
        let x = prog.add_var("x");
        prog.set_objective(vec![(x, 1.0)], false).unwrap();
        add_zero(&mut prog, "pin", &[LinC::var(x).sub(&LinC::real_constant(2.0))]).unwrap();
        add_nonneg(&mut prog, "floor", &[LinC::var(x)]).unwrap();
        let sol = solve(&prog, &SolverTolerances::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-7);
    }
}
