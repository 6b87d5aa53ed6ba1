//! Interior-point solve with independent post-solve certification.
//!
//! [`solve`] lowers a [`ConicProgram`] into the backend's `A x + s = b,
//! s in K` form, runs the interior-point method, then re-checks the returned
//! point against the *original* blocks with dense linear algebra before
//! reporting it optimal. A point the backend calls solved but that fails the
//! independent residual check is downgraded to a numerical failure rather
//! than silently accepted — downstream robustness claims lean on solver
//! output, so "optimal" here always means "re-certified".

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::collections::BTreeMap;

use crate::cone::Cone;
use crate::program::ConicProgram;

// ---------------------------------------------------------------------------
// Tolerances and status
// ---------------------------------------------------------------------------

/// Termination tolerances for [`solve`].
#[derive(Clone, Copy, Debug)]
pub struct SolverTolerances {
    /// Feasibility tolerance: both the backend target and the acceptance
    /// threshold for the independent scaled-residual re-check.
    pub feas: f64,
    /// Relative duality-gap tolerance.
    pub relgap: f64,
    /// Interior-point iteration cap.
    pub max_iters: u32,
    /// Forward backend progress logging to stdout.
    pub verbose: bool,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self { feas: 1e-7, relgap: 1e-8, max_iters: 200, verbose: false }
    }
}

/// Certified outcome of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Backend converged and the point passed the independent residual check.
    Optimal,
    /// A certificate of primal infeasibility was found.
    Infeasible,
    /// A certificate of dual infeasibility was found (objective unbounded in
    /// its recorded orientation).
    Unbounded,
    /// No trustworthy conclusion: iteration limit, numerical trouble, or a
    /// claimed-optimal point that failed re-certification.
    NumericalFailure,
}

/// Solve result. `objective_value` is reported in the program's recorded
/// orientation and is `NaN` unless the status is [`SolveStatus::Optimal`].
#[derive(Clone, Debug)]
pub struct ConicSolution {
    /// Certified status.
    pub status: SolveStatus,
    /// Primal point; always present when optimal, and kept for diagnosis when
    /// a claimed-optimal point failed re-certification.
    pub primal: Option<Vec<f64>>,
    /// `c^T x` in the recorded orientation (`NaN` unless optimal).
    pub objective_value: f64,
    /// Worst scaled cone violation from the independent re-check (`NaN` when
    /// no primal point is available).
    pub max_constraint_residual: f64,
}

// ---------------------------------------------------------------------------
// Lowering and solve
// ---------------------------------------------------------------------------

fn lower_cones(prog: &ConicProgram) -> Vec<SupportedConeT<f64>> {
    prog.blocks()
        .iter()
        .map(|b| match b.cone {
            Cone::Zero(n) => SupportedConeT::ZeroConeT(n),
            Cone::Nonneg(n) => SupportedConeT::NonnegativeConeT(n),
            Cone::Soc(n) => SupportedConeT::SecondOrderConeT(n),
            Cone::Psd(n) => SupportedConeT::PSDTriangleConeT(n),
        })
        .collect()
}

/// Build the backend constraint matrix and offset for `A x + s = b`,
/// `s in K`, from blocks stating `constants + coeffs * x in K`
/// (so `A = -coeffs`, `b = constants`).
fn lower_constraints(prog: &ConicProgram) -> (CscMatrix<f64>, Vec<f64>) {
    let num_rows = prog.num_rows();
    let num_vars = prog.num_vars();

    let mut b = Vec::with_capacity(num_rows);
    // Aggregate duplicate (col, row) entries: the backend requires strictly
    // increasing row indices within each CSC column.
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut offset = 0;
    for block in prog.blocks() {
        b.extend_from_slice(&block.constants);
        for &(row, var, coeff) in &block.coeffs {
            *entries.entry((var, offset + row)).or_insert(0.0) -= coeff;
        }
        offset += block.cone.rows();
    }

    let mut colptr = Vec::with_capacity(num_vars + 1);
    let mut rowval = Vec::with_capacity(entries.len());
    let mut nzval = Vec::with_capacity(entries.len());
    let mut col = 0;
    colptr.push(0);
    for (&(c, r), &v) in &entries {
        while col < c {
            colptr.push(rowval.len());
            col += 1;
        }
        rowval.push(r);
        nzval.push(v);
    }
    while col < num_vars {
        colptr.push(rowval.len());
        col += 1;
    }

    (CscMatrix::new(num_rows, num_vars, colptr, rowval, nzval), b)
}

/// Solve a program and certify the result.
///
/// # Example
///
/// ```
/// use conic_core::{solve, Cone, ConicProgram, ConstraintBlock, SolveStatus, SolverTolerances};
///
/// // maximize -x subject to x >= 1: optimum -1 at x = 1.
/// let mut p = ConicProgram::new();
/// let x = p.add_var("x");
/// p.set_objective(vec![(x, -1.0)], true).unwrap();
/// p.add_block(ConstraintBlock {
///     name: "x >= 1".into(),
///     cone: Cone::Nonneg(1),
///     coeffs: vec![(0, x, 1.0)],
///     constants: vec![-1.0],
/// })
/// .unwrap();
/// let sol = solve(&p, &SolverTolerances::default());
/// assert_eq!(sol.status, SolveStatus::Optimal);
/// assert!((sol.objective_value + 1.0).abs() < 1e-6);
/// ```
pub fn solve(prog: &ConicProgram, tol: &SolverTolerances) -> ConicSolution {
    debug_assert!(prog.num_vars() > 0, "programs must declare at least one variable");

    let (a, b) = lower_constraints(prog);
    let cones = lower_cones(prog);

    // No quadratic cost term: the objective is linear.
    let p = CscMatrix::<f64>::zeros((prog.num_vars(), prog.num_vars()));
    let mut q = vec![0.0; prog.num_vars()];
    let sign = if prog.is_maximize() { -1.0 } else { 1.0 };
    for &(var, coeff) in prog.objective() {
        q[var] += sign * coeff;
    }

    let mut settings = DefaultSettings::default();
    settings.verbose = tol.verbose;
    settings.max_iter = tol.max_iters;
    // Ask the backend for one digit more than the acceptance threshold so the
    // independent re-check below rarely trips on rounding.
    settings.tol_feas = tol.feas * 0.1;
    settings.tol_gap_rel = tol.relgap;
    settings.tol_gap_abs = tol.relgap;

    let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, settings) {
        Ok(s) => s,
        Err(_) => {
            return ConicSolution {
                status: SolveStatus::NumericalFailure,
                primal: None,
                objective_value: f64::NAN,
                max_constraint_residual: f64::NAN,
            }
        }
    };
    solver.solve();

    let backend_status = solver.solution.status;
    match backend_status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let x = solver.solution.x.clone();
            let residual = prog.max_scaled_violation(&x);
            if residual <= tol.feas {
                ConicSolution {
                    status: SolveStatus::Optimal,
                    objective_value: prog.objective_value(&x),
                    primal: Some(x),
                    max_constraint_residual: residual,
                }
            } else {
                // Claimed solved, failed independent certification.
                ConicSolution {
                    status: SolveStatus::NumericalFailure,
                    objective_value: f64::NAN,
                    primal: Some(x),
                    max_constraint_residual: residual,
                }
            }
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => ConicSolution {
            status: SolveStatus::Infeasible,
            primal: None,
            objective_value: f64::NAN,
            max_constraint_residual: f64::NAN,
        },
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => ConicSolution {
            status: SolveStatus::Unbounded,
            primal: None,
            objective_value: f64::NAN,
            max_constraint_residual: f64::NAN,
        },
        _ => ConicSolution {
            status: SolveStatus::NumericalFailure,
            primal: None,
            objective_value: f64::NAN,
            max_constraint_residual: f64::NAN,
        },
    }
}

// ---------------------------------------------------------------------------
// Tests (tiny direct solves; contract-level tests live in tests/)
// ---------------------------------------------------------------------------
