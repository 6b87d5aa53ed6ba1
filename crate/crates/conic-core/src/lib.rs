//! Real symmetric-cone programming with self-certifying solves.
//!
//! # Overview
//!
//! This crate is the numerical substrate for the robust-beamforming stack
//! above it. It deliberately exposes a *small* contract:
//!
//! * [`ConicProgram`] — a sparse container for a linear objective (with its
//!   maximize/minimize orientation recorded) and an ordered list of
//!   cone-membership blocks over the four supported cones ([`Cone`]).
//! * [`embed_hermitian`] — the `[[Re, -Im], [Im, Re]]` lowering of complex
//!   Hermitian matrices onto real symmetric ones, so LMIs over complex data
//!   reach the solver through a single real-valued kernel.
//! * [`svec`]/[`smat`] — the scaled upper-triangle packing used for PSD
//!   blocks.
//! * [`solve`] — an interior-point solve whose "optimal" status is only
//!   granted after an independent dense residual re-check of the returned
//!   point against the original blocks.
//!
//! Everything downstream (robustness certificates, alternating optimization,
//! experiment campaigns) builds programs through this API and never touches
//! the backend directly.
//!
//! # Example
//!
//! Minimize `t` subject to `[[t, 1], [1, t]]` being positive semidefinite;
//! the optimum is `t = 1`:
//!
//! ```
//! use conic_core::{pack, solve, Cone, ConicProgram, ConstraintBlock, SolveStatus,
//!                  SolverTolerances};
//!
//! let mut p = ConicProgram::new();
//! let t = p.add_var("t");
//! p.set_objective(vec![(t, 1.0)], false).unwrap();
//!
//! // svec packing of [[t, 1], [1, t]]: rows (0,0), (0,1), (1,1).
//! p.add_block(ConstraintBlock {
//!     name: "correlation".into(),
//!     cone: Cone::Psd(2),
//!     coeffs: vec![(0, t, 1.0), (2, t, 1.0)],
//!     constants: vec![0.0, pack::SVEC_OFF_DIAG_SCALE, 0.0],
//! })
//! .unwrap();
//!
//! let sol = solve(&p, &SolverTolerances::default());
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! assert!((sol.objective_value - 1.0).abs() < 1e-6);
//! ```

// Force the system BLAS/LAPACK link for the backend's PSD cone kernels.
extern crate openblas_src;

pub mod cone;
pub mod embed;
pub mod pack;
pub mod program;
pub mod solve;

pub use cone::Cone;
pub use embed::{embed_hermitian, EmbedError, HERMITIAN_TOL};
pub use pack::{smat, svec, svec_index, svec_len, SVEC_OFF_DIAG_SCALE};
pub use program::{ConicProgram, ConstraintBlock, ProgramError};
pub use solve::{solve, ConicSolution, SolveStatus, SolverTolerances};
