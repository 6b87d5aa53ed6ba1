//! Sparse conic program container.
//!
//! A [`ConicProgram`] is a linear objective over named real variables plus an
//! ordered list of constraint blocks. Each block pins an affine expression
//!
//! ```text
//!     v(x) = constants + coeffs * x
//! ```
//!
//! inside one [`Cone`]. The container owns no solver state: it can be built,
//! evaluated, residual-checked, and dumped to text entirely independently of
//! the interior-point backend, which is what makes post-solve certification
//! and cross-implementation diffing possible.

use std::fmt;

use thiserror::Error;

use crate::cone::Cone;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Structural rejections raised while assembling a program.
#[derive(Debug, Error)]
pub enum ProgramError {
    /// A coefficient or objective entry referenced a variable that does not
    /// exist.
    #[error("variable index {var} out of range ({num_vars} variables declared)")]
    VarOutOfRange { var: usize, num_vars: usize },
    /// A coefficient row lies outside the block's cone.
    #[error("row {row} out of range for a cone with {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    /// The constants vector does not match the cone's row count.
    #[error("constants length {got} does not match cone rows {expected}")]
    ConstantsLen { got: usize, expected: usize },
    /// Cones must have at least one row; second-order cones at least two.
    #[error("cone {cone:?} has an unusable dimension")]
    BadConeDim { cone: Cone },
}

// ---------------------------------------------------------------------------
// Constraint block
// ---------------------------------------------------------------------------

/// One cone-membership constraint `constants + coeffs * x  in  cone`.
///
/// Coefficients are sparse `(row, var, value)` triplets; duplicate
/// `(row, var)` entries are summed. PSD blocks store rows in `svec` packing
/// (see [`crate::pack`]).
#[derive(Clone, Debug)]
pub struct ConstraintBlock {
    /// Human-readable block label carried into dumps and error reports.
    pub name: String,
    /// Cone this block's value must live in.
    pub cone: Cone,
    /// Sparse affine coefficients as `(row, var, value)` triplets.
    pub coeffs: Vec<(usize, usize, f64)>,
    /// Constant offset, one entry per cone row.
    pub constants: Vec<f64>,
}

impl ConstraintBlock {
    /// Evaluate the block's affine value at a variable assignment.
    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.constants.clone();
        for &(row, var, coeff) in &self.coeffs {
            v[row] += coeff * x[var];
        }
        v
    }

    /// Cone-membership violation at `x`, scaled by the block's constant
    /// magnitude (`1 + max |constants|`) so the measure is comparable across
    /// differently scaled blocks.
    pub fn scaled_violation(&self, x: &[f64]) -> f64 {
        let scale = 1.0 + self.constants.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        self.cone.violation(&self.value(x)) / scale
    }
}

// ---------------------------------------------------------------------------
// Program
// ---------------------------------------------------------------------------

/// Sparse conic program: named variables, a linear objective with explicit
/// orientation, and ordered cone-membership blocks.
#[derive(Clone, Debug, Default)]
pub struct ConicProgram {
    var_names: Vec<String>,
    objective: Vec<(usize, f64)>,
    maximize: bool,
    blocks: Vec<ConstraintBlock>,
}

impl ConicProgram {
    /// Empty program with no variables.
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare one variable and return its index.
    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.var_names.push(name.into());
        self.var_names.len() - 1
    }

    /// Declare `n` variables named `prefix[0] .. prefix[n-1]`; returns the
    /// index of the first.
    pub fn add_vars(&mut self, prefix: &str, n: usize) -> usize {
        let base = self.var_names.len();
        for i in 0..n {
            self.var_names.push(format!("{prefix}[{i}]"));
        }
        base
    }

    /// Number of declared variables.
    #[inline]
    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    /// Variable names, in declaration order.
    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// Set the linear objective and its orientation. Entries are
    /// `(var, coeff)` pairs; unspecified variables have zero weight.
    pub fn set_objective(
        &mut self,
        terms: Vec<(usize, f64)>,
        maximize: bool,
    ) -> Result<(), ProgramError> {
        for &(var, _) in &terms {
            if var >= self.num_vars() {
                return Err(ProgramError::VarOutOfRange { var, num_vars: self.num_vars() });
            }
        }
        self.objective = terms;
        self.maximize = maximize;
        Ok(())
    }

    /// Objective terms as `(var, coeff)` pairs.
    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    /// `true` when the recorded orientation is maximization.
    #[inline]
    pub fn is_maximize(&self) -> bool {
        self.maximize
    }

    /// Objective value `c^T x` at an assignment, in the program's recorded
    /// orientation.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(var, coeff)| coeff * x[var]).sum()
    }

    /// Append a constraint block after validating its shape.
    pub fn add_block(&mut self, block: ConstraintBlock) -> Result<usize, ProgramError> {
        let rows = block.cone.rows();
        match block.cone {
            Cone::Zero(n) | Cone::Nonneg(n) | Cone::Psd(n) if n == 0 => {
                return Err(ProgramError::BadConeDim { cone: block.cone });
            }
            Cone::Soc(n) if n < 2 => {
                return Err(ProgramError::BadConeDim { cone: block.cone });
            }
            _ => {}
        }
        if block.constants.len() != rows {
            return Err(ProgramError::ConstantsLen { got: block.constants.len(), expected: rows });
        }
        for &(row, var, _) in &block.coeffs {
            if row >= rows {
                return Err(ProgramError::RowOutOfRange { row, rows });
            }
            if var >= self.num_vars() {
                return Err(ProgramError::VarOutOfRange { var, num_vars: self.num_vars() });
            }
        }
        self.blocks.push(block);
        Ok(self.blocks.len() - 1)
    }

    /// Constraint blocks in insertion order.
    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    /// Total stacked constraint rows across all blocks.
    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.cone.rows()).sum()
    }

    /// Worst scaled cone violation over all blocks at `x`; `0.0` for a
    /// feasible point.
    pub fn max_scaled_violation(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|b| b.scaled_violation(x)).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Debug dump
// ---------------------------------------------------------------------------

impl fmt::Display for ConicProgram {
    /// Deterministic structured dump: variables, objective, then every block
    /// with sorted coefficients. Intended for debugging small programs and
    /// diffing constructions across implementations.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "conic-program vars={} rows={}", self.num_vars(), self.num_rows())?;
        let sense = if self.maximize { "maximize" } else { "minimize" };
        write!(f, "{sense}:")?;
        let mut obj = self.objective.clone();
        obj.sort_by_key(|&(var, _)| var);
        for (var, coeff) in obj {
            write!(f, " {coeff:+.12e}*{}", self.var_names[var])?;
        }
        writeln!(f)?;
        for (idx, block) in self.blocks.iter().enumerate() {
            writeln!(f, "block[{idx}] {:?} name={}", block.cone, block.name)?;
            let mut coeffs = block.coeffs.clone();
            coeffs.sort_by_key(|&(row, var, _)| (row, var));
            for (row, constant) in block.constants.iter().enumerate() {
                write!(f, "  row[{row}] {constant:+.12e}")?;
                for &(r, var, coeff) in coeffs.iter().filter(|&&(r, _, _)| r == row) {
                    debug_assert_eq!(r, row);
                    write!(f, " {coeff:+.12e}*{}", self.var_names[var])?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
