//! Robustness certificates for bounded channel uncertainty.
//!
//! # Overview
//!
//! The optimizer never trusts an estimated channel: every rate, leakage, and
//! interference constraint must hold for all errors in two norm balls (direct
//! channel, cascaded surface channel). This module turns each such
//! semi-infinite constraint into finitely many conic blocks:
//!
//! * [`affine`] — complex-affine expressions ([`LinC`], [`CMat`]) over the
//!   real solver variables, closed under conjugation;
//! * [`emit`] — lowering of Hermitian matrix inequalities (through the real
//!   embedding) and scalar rows onto [`conic_core::ConicProgram`] blocks;
//! * [`linearize`] — the anchored expansion of beam powers
//!   ([`quadratic_lower_bound`]) and the scalar convex surrogates used by the
//!   successive convex approximation loop;
//! * [`blocks`] — the S-procedure and norm-bounded sign-definiteness
//!   assemblers plus the four specialized robust-block families;
//! * [`oracle`] — a seeded sampling attacker that independently audits any
//!   certified bound against the true nonlinear constraint.
//!
//! # Example
//!
//! Certify a robust lower bound on a beam's received power and audit it:
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use star_see::lmi::{
//!     audit_semi_infinite, quadratic_lower_bound, s_procedure_psd, add_nonneg, add_psd,
//!     lift_vec, ErrorRadii, LinC, SemiInfiniteCheck,
//! };
//! use conic_core::{solve, ConicProgram, SolveStatus, SolverTolerances};
//! use star_see::C64;
//!
//! let hhat = DVector::from_vec(vec![C64::new(1.0, 0.2), C64::new(-0.3, 0.5)]);
//! let ghat = DMatrix::from_vec(2, 2, vec![
//!     C64::new(0.2, 0.0), C64::new(0.0, 0.1),
//!     C64::new(-0.1, 0.1), C64::new(0.3, -0.2),
//! ]);
//! let w = DVector::from_vec(vec![C64::new(0.7, 0.0), C64::new(0.0, -0.4)]);
//! let u = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
//! let radii = ErrorRadii { direct: 0.1, cascade: 0.05 };
//!
//! // Anchoring at the evaluation point makes the expansion exact, so the
//! // certificate covers the true constraint.
//! let bound = quadratic_lower_bound(&hhat, &ghat, &w, &u, &lift_vec(&w), &lift_vec(&u));
//! let mut prog = ConicProgram::new();
//! let rhs = prog.add_var("rhs");
//! let mh = prog.add_var("mult_direct");
//! let mg = prog.add_var("mult_cascade");
//! prog.set_objective(vec![(rhs, 1.0)], true).unwrap();
//! add_nonneg(&mut prog, "multiplier-signs", &[LinC::var(mh), LinC::var(mg)]).unwrap();
//! add_psd(&mut prog, "power-lower", &s_procedure_psd(&bound, &LinC::var(rhs), radii, mh, mg))
//!     .unwrap();
//!
//! let sol = solve(&prog, &SolverTolerances::default());
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! let certified = sol.objective_value;
//!
//! let audit = audit_semi_infinite(
//!     &hhat, &ghat, &u, std::slice::from_ref(&w), radii,
//!     SemiInfiniteCheck::PowerLower { rhs: certified }, 2000, 1e-6, 0,
//! );
//! assert_eq!(audit.violations, 0, "certified bound must survive the attack");
//! ```

pub mod affine;
pub mod blocks;
pub mod emit;
pub mod linearize;
pub mod oracle;

pub use affine::{
    conj_vec, eval_vec, inner_cc, inner_nc, kron, lift_vec, mat_vec, CMat, LinC,
};
pub use blocks::{
    interference_upper_block, leakage_upper_block, power_sum_lower_block, s_procedure_psd,
    sign_definiteness_psd, ErrorRadii, RobustBorder,
};
pub use emit::{add_nonneg, add_psd, add_soc, add_zero, EmitError, SYMMETRY_TOL};
pub use linearize::{
    beam_error_stack, beam_error_stack_num, bilinear_product_upper, combined_scalar,
    combined_scalar_num, product_upper_soc_rows, quadratic_lower_bound, rate_product_tangent,
    ErrorLayout, QuadraticLowerBound,
};
pub use oracle::{
    audit_semi_infinite, for_each_error, perturbed_power_sum, AuditOutcome, SemiInfiniteCheck,
};
